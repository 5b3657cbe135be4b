"""Pulse propagation through the lambda medium.

Solves the one-dimensional comoving-frame equations for the probe envelope E,
the optical coherence P and the spin coherence S on z in [0, 1]:

    dE/dz = i sqrt(d) P,          d = od/2
    dP/dt = -(1 + i delta_p) P + i sqrt(d) E + i (Omega_c(t)/2) S
    dS/dt = -gamma12 S + i (Omega_c(t)/2) P

with time in 1/gamma13 units and rates in gamma13. (P, S) advance with RK4
vectorized over z; E is slaved to P through the boundary condition by
trapezoidal z-integration, coupled with a two-pass predictor-corrector per
step. Amplitudes are scaled so z-integrals of |P|^2 and |S|^2 are photon
numbers, directly comparable to waveform energies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .medium import MediumParams
from .waveforms import ControlProfile, TimeGrid, Waveform


class NumericsError(RuntimeError):
    """The march produced a non-finite field; carries the failing step."""

    def __init__(self, message: str, step: int = -1):
        super().__init__(message)
        self.step = step


@njit(cache=True)
def _field_from_p(P, bc, sqrt_d, dz, E):
    # dE/dz = i sqrt(d) P integrated by trapezoid from E(0) = bc
    E[0] = bc
    acc = 0.0 + 0.0j
    for j in range(1, P.shape[0]):
        acc += 0.5 * (P[j - 1] + P[j]) * dz
        E[j] = bc + 1j * sqrt_d * acc


@njit(cache=True)
def _rk4_pass(P, S, Ea, Eb, Ec, om_a, om_b, om_c, dtau, c1, gamma12, sqrt_d,
              tP, tS, accP, accS, outP, outS):
    nz = P.shape[0]
    for j in range(nz):
        kP = c1 * P[j] + 1j * sqrt_d * Ea[j] + 0.5j * om_a * S[j]
        kS = -gamma12 * S[j] + 0.5j * om_a * P[j]
        accP[j] = kP
        accS[j] = kS
        tP[j] = P[j] + 0.5 * dtau * kP
        tS[j] = S[j] + 0.5 * dtau * kS
    for j in range(nz):
        kP = c1 * tP[j] + 1j * sqrt_d * Eb[j] + 0.5j * om_b * tS[j]
        kS = -gamma12 * tS[j] + 0.5j * om_b * tP[j]
        accP[j] += 2.0 * kP
        accS[j] += 2.0 * kS
        tP[j] = P[j] + 0.5 * dtau * kP
        tS[j] = S[j] + 0.5 * dtau * kS
    for j in range(nz):
        kP = c1 * tP[j] + 1j * sqrt_d * Eb[j] + 0.5j * om_b * tS[j]
        kS = -gamma12 * tS[j] + 0.5j * om_b * tP[j]
        accP[j] += 2.0 * kP
        accS[j] += 2.0 * kS
        tP[j] = P[j] + dtau * kP
        tS[j] = S[j] + dtau * kS
    for j in range(nz):
        kP = c1 * tP[j] + 1j * sqrt_d * Ec[j] + 0.5j * om_c * tS[j]
        kS = -gamma12 * tS[j] + 0.5j * om_c * tP[j]
        outP[j] = P[j] + dtau / 6.0 * (accP[j] + kP)
        outS[j] = S[j] + dtau / 6.0 * (accS[j] + kS)


@njit(cache=True)
def _trapz_abs2(A, dz):
    nz = A.shape[0]
    total = 0.5 * (A[0].real * A[0].real + A[0].imag * A[0].imag)
    for j in range(1, nz - 1):
        total += A[j].real * A[j].real + A[j].imag * A[j].imag
    total += 0.5 * (A[nz - 1].real * A[nz - 1].real
                    + A[nz - 1].imag * A[nz - 1].imag)
    return total * dz


@njit(cache=True)
def _march(e_in, om, om_mid, dtau, nz, dz, sqrt_d, gamma12, delta_p,
           snap_stride):
    n_t = e_in.shape[0]
    c1 = -(1.0 + 1j * delta_p)

    P = np.zeros(nz, np.complex128)
    S = np.zeros(nz, np.complex128)
    Pn = np.empty(nz, np.complex128)
    Sn = np.empty(nz, np.complex128)
    E0 = np.empty(nz, np.complex128)
    Em = np.empty(nz, np.complex128)
    E1 = np.empty(nz, np.complex128)
    tP = np.empty(nz, np.complex128)
    tS = np.empty(nz, np.complex128)
    accP = np.empty(nz, np.complex128)
    accS = np.empty(nz, np.complex128)

    e_out = np.zeros(n_t, np.complex128)
    spin = np.zeros(n_t)
    coh = np.zeros(n_t)
    diss = np.zeros(n_t)
    flux_in = np.zeros(n_t)
    flux_out = np.zeros(n_t)

    n_snap = 0 if snap_stride <= 0 else (n_t - 1) // snap_stride + 1
    snaps = np.zeros((n_snap, nz), np.complex128)

    _field_from_p(P, e_in[0], sqrt_d, dz, E0)
    e_out[0] = E0[nz - 1]
    f_prev = 0.0
    status = 0
    bad_step = -1

    for n in range(n_t - 1):
        om_a = om[n]
        om_b = om_mid[n]
        om_c = om[n + 1]
        # predictor: field frozen at the current level
        _rk4_pass(P, S, E0, E0, E0, om_a, om_b, om_c, dtau, c1, gamma12,
                  sqrt_d, tP, tS, accP, accS, Pn, Sn)
        _field_from_p(Pn, e_in[n + 1], sqrt_d, dz, E1)
        # corrector: field linear in time across the step
        for j in range(nz):
            Em[j] = 0.5 * (E0[j] + E1[j])
        _rk4_pass(P, S, E0, Em, E1, om_a, om_b, om_c, dtau, c1, gamma12,
                  sqrt_d, tP, tS, accP, accS, Pn, Sn)
        _field_from_p(Pn, e_in[n + 1], sqrt_d, dz, E1)

        P, Pn = Pn, P
        S, Sn = Sn, S
        E0, E1 = E1, E0
        e_out[n + 1] = E0[nz - 1]

        sp = _trapz_abs2(S, dz)
        ch = _trapz_abs2(P, dz)
        spin[n + 1] = sp
        coh[n + 1] = ch
        f_cur = 2.0 * ch + 2.0 * gamma12 * sp
        diss[n + 1] = diss[n] + 0.5 * dtau * (f_prev + f_cur)
        f_prev = f_cur
        a_in0 = e_in[n].real * e_in[n].real + e_in[n].imag * e_in[n].imag
        a_in1 = (e_in[n + 1].real * e_in[n + 1].real
                 + e_in[n + 1].imag * e_in[n + 1].imag)
        flux_in[n + 1] = flux_in[n] + 0.5 * dtau * (a_in0 + a_in1)
        a_o0 = e_out[n].real * e_out[n].real + e_out[n].imag * e_out[n].imag
        a_o1 = (e_out[n + 1].real * e_out[n + 1].real
                + e_out[n + 1].imag * e_out[n + 1].imag)
        flux_out[n + 1] = flux_out[n] + 0.5 * dtau * (a_o0 + a_o1)

        if snap_stride > 0 and (n + 1) % snap_stride == 0:
            k = (n + 1) // snap_stride
            if k < n_snap:
                for j in range(nz):
                    snaps[k, j] = S[j]

        if not np.isfinite(sp + ch + a_o1):
            status = 1
            bad_step = n + 1
            break

    return (e_out, spin, coh, diss, flux_in, flux_out, E0, P, S, snaps,
            status, bad_step)


@dataclass
class MediumState:
    """Internal medium record produced by `propagate`.

    Final z-profiles are kept in full; the time axis carries rolling scalars
    (z-integrated spin and coherence energy, cumulative dissipation and
    boundary fluxes, all in photon-number units). Optional spin snapshots
    (stride-decimated S(z) slices) support visualisation without storing the
    full space-time cube.
    """

    z: np.ndarray
    times: np.ndarray
    field_final: np.ndarray
    coherence_final: np.ndarray
    spinwave_final: np.ndarray
    spinwave_series: np.ndarray
    coherence_series: np.ndarray
    dissipated_series: np.ndarray
    flux_in_series: np.ndarray
    flux_out_series: np.ndarray
    snapshot_times: np.ndarray
    snapshots: np.ndarray

    def save_spinwave_csv(self, path) -> None:
        """Write the final spin-coherence profile as z,re_S,im_S."""
        data = np.column_stack([self.z, self.spinwave_final.real,
                                self.spinwave_final.imag])
        np.savetxt(path, data, delimiter=",", fmt="%.9g",
                   header="z,re_S,im_S", comments="")


def spinwave_energy(state: MediumState, at: float) -> float:
    """z-integrated |S|^2 at time `at` (seconds), linear between steps."""
    t = state.times
    if at < t[0] or at > t[-1]:
        raise ValueError("requested time lies outside the propagation grid")
    return float(np.interp(at, t, state.spinwave_series))


@dataclass(frozen=True)
class AuditReport:
    """Energy bookkeeping at the end of a run, photon-number units."""

    input_energy: float
    output_energy: float
    coherence_energy: float
    spinwave_energy: float
    dissipated_energy: float
    max_defect: float  # worst relative closure error over the run


def energy_audit(state: MediumState) -> AuditReport:
    """Check input = output + stored + dissipated at every step.

    The relative defect is normalized by the total input energy of the run.
    """
    total_in = state.flux_in_series[-1]
    scale = max(total_in, 1e-300)
    defect = np.abs(state.flux_in_series - state.flux_out_series
                    - state.coherence_series - state.spinwave_series
                    - state.dissipated_series) / scale
    return AuditReport(
        input_energy=float(total_in),
        output_energy=float(state.flux_out_series[-1]),
        coherence_energy=float(state.coherence_series[-1]),
        spinwave_energy=float(state.spinwave_series[-1]),
        dissipated_energy=float(state.dissipated_series[-1]),
        max_defect=float(defect.max()),
    )


def _validate_step(grid: TimeGrid, control: ControlProfile,
                   params: MediumParams, n_z: int) -> None:
    if n_z < 50:
        raise ValueError("n_z must be >= 50")
    dtau = grid.dt * params.gamma13
    if dtau > 0.1:
        raise ValueError(
            f"dt too coarse to resolve the optical coherence: "
            f"dt*gamma13 = {dtau:.3g} > 0.1")
    if dtau * params.od / 2.0 > 0.5:
        raise ValueError(
            f"dt too coarse for this optical depth: "
            f"dt*gamma13*od/2 = {dtau * params.od / 2:.3g} > 0.5")
    for ev in control.events:
        if grid.dt > ev.ramp / 10.0:
            raise ValueError(
                f"dt = {grid.dt:.3g} s does not resolve the {ev.ramp:.3g} s "
                f"switch ramp (need dt <= ramp/10)")


def propagate(psi_in: Waveform, control: ControlProfile, params: MediumParams,
              n_z: int = 200, snapshot_stride: int = 0):
    """March the medium equations; returns (psi_out, MediumState).

    psi_in and control must share one grid. The output waveform is the
    boundary field at z = 1 over the full window, ungated. delta_p is taken
    from params as the carrier detuning of the envelope.
    """
    if psi_in.grid != control.grid:
        raise ValueError("waveform and control profile grids differ")
    _validate_step(psi_in.grid, control, params, n_z)

    g13 = params.gamma13
    times = psi_in.grid.times()
    e_in = np.ascontiguousarray(psi_in.samples / np.sqrt(g13))
    om = np.ascontiguousarray(control.omega_c)
    om_mid = np.ascontiguousarray(
        control.levels_at(times[:-1] + psi_in.grid.dt / 2.0))
    dtau = psi_in.grid.dt * g13
    dz = 1.0 / (n_z - 1)
    sqrt_d = np.sqrt(params.od / 2.0)

    (e_out, spin, coh, diss, flux_in, flux_out, E_f, P_f, S_f, snaps,
     status, bad_step) = _march(e_in, om, om_mid, dtau, n_z, dz, sqrt_d,
                                params.gamma12, params.delta_p,
                                snapshot_stride)
    if status != 0:
        raise NumericsError(
            f"propagation produced a non-finite field at step {bad_step} "
            f"(t = {times[bad_step]:.4g} s)", step=bad_step)

    psi_out = Waveform(psi_in.grid, e_out * np.sqrt(g13))
    snap_times = times[::snapshot_stride] if snapshot_stride > 0 else times[:0]
    state = MediumState(
        z=np.linspace(0.0, 1.0, n_z),
        times=times,
        field_final=E_f,
        coherence_final=P_f,
        spinwave_final=S_f,
        spinwave_series=spin,
        coherence_series=coh,
        dissipated_series=diss,
        flux_in_series=flux_in,
        flux_out_series=flux_out,
        snapshot_times=snap_times,
        snapshots=snaps,
    )
    return psi_out, state


def spectral_oracle(psi_in: Waveform, params: MediumParams) -> Waveform:
    """Constant-coupling reference: filter the input spectrum by the medium.

    Each spectral component at envelope detuning delta picks up
    exp(-od/2 * chi(delta_p + delta)). Valid only for time-independent
    coupling; used to cross-check the time-domain march.
    """
    from .medium import susceptibility

    n = psi_in.grid.n_t
    m = 1 << max(int(np.ceil(np.log2(4 * n))), 4)
    dtau = psi_in.grid.dt * params.gamma13
    spec = np.fft.fft(psi_in.samples, n=m)
    # bins rotate as exp(+i w t); the envelope convention is exp(-i delta t)
    delta = -2.0 * np.pi * np.fft.fftfreq(m, d=dtau)
    chi = susceptibility(params.delta_p + delta, params)
    out = np.fft.ifft(spec * np.exp(-(params.od / 2.0) * chi))[:n]
    return Waveform(psi_in.grid, out)


def peak_delay(psi_in: Waveform, psi_out: Waveform) -> float:
    """Delay between intensity peaks, quadratically interpolated, seconds."""

    def peak_time(wf: Waveform) -> float:
        w = np.abs(wf.samples) ** 2
        i = int(np.argmax(w))
        if i == 0 or i == w.size - 1:
            return wf.grid.times()[i]
        denom = w[i - 1] - 2.0 * w[i] + w[i + 1]
        shift = 0.0 if denom == 0 else 0.5 * (w[i - 1] - w[i + 1]) / denom
        return wf.grid.times()[i] + shift * wf.grid.dt

    return peak_time(psi_out) - peak_time(psi_in)
