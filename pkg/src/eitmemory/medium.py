"""Steady-state optical response of a cold-atom lambda medium.

Detunings and rates are expressed in units of the excited-state coherence
decay rate gamma13; lengths are absorbed into the optical depth. Transmission
uses the intensity convention T = exp(-od) on bare resonance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

# 1/e coherence decay rate of the reference cold-atom line, rad/s.
GAMMA13_DEFAULT = 2 * np.pi * 3e6


class FitConvergenceError(RuntimeError):
    """Dephasing fit failed to converge; carries the best iterate."""

    def __init__(self, message: str, best_gamma12: float):
        super().__init__(message)
        self.best_gamma12 = best_gamma12


@dataclass(frozen=True)
class MediumParams:
    """Medium operating point.

    od is the resonant optical depth (intensity convention). gamma12 is the
    ground-state coherence decay rate and omega_c the full coupling Rabi
    frequency, both in units of gamma13. delta_p is the probe carrier detuning
    in the same units. gamma13 itself is in rad/s and only matters when
    converting to laboratory time.
    """

    od: float
    gamma13: float = GAMMA13_DEFAULT
    gamma12: float = 0.0
    omega_c: float = 0.0
    delta_p: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.od) or self.od < 0:
            raise ValueError("od must be finite and >= 0")
        if not np.isfinite(self.gamma13) or self.gamma13 <= 0:
            raise ValueError("gamma13 must be finite and > 0")
        if not np.isfinite(self.gamma12) or self.gamma12 < 0:
            raise ValueError("gamma12 must be finite and >= 0")
        if not np.isfinite(self.omega_c) or self.omega_c < 0:
            raise ValueError("omega_c must be finite and >= 0")
        if not np.isfinite(self.delta_p):
            raise ValueError("delta_p must be finite")


def susceptibility(delta, params: MediumParams):
    """Dimensionless probe susceptibility at detuning delta (gamma13 units).

    chi(delta) = (gamma12 - i*delta) /
                 ((1 - i*delta) * (gamma12 - i*delta) + (omega_c/2)**2)

    Scalar in, scalar out; array in, array out. The removable 0/0 point
    (omega_c = 0, gamma12 = 0, delta = 0) is filled with its limit 1, the bare
    two-level resonance value.
    """
    delta = np.asarray(delta, dtype=float)
    g12 = params.gamma12
    num = g12 - 1j * delta
    den = (1.0 - 1j * delta) * num + (params.omega_c / 2.0) ** 2
    singular = den == 0
    if np.any(singular):
        den = np.where(singular, 1.0, den)
        chi = num / den
        chi = np.where(singular, 1.0 + 0j, chi)
    else:
        chi = num / den
    return chi if chi.ndim else complex(chi)


def transmission(delta, params: MediumParams):
    """Intensity transmission exp(-od * Re chi) at detuning delta."""
    return np.exp(-params.od * np.real(susceptibility(delta, params)))


def phase_shift(delta, params: MediumParams):
    """Dispersive phase -od/2 * Im chi accumulated across the medium, rad."""
    return -(params.od / 2.0) * np.imag(susceptibility(delta, params))


@dataclass(frozen=True)
class Spectrum:
    """Sampled transmission spectrum: detuning axis, |t|^2 and phase."""

    deltas: np.ndarray
    transmission: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        deltas = np.asarray(self.deltas, dtype=float)
        trans = np.asarray(self.transmission, dtype=float)
        phase = np.asarray(self.phase, dtype=float)
        if deltas.ndim != 1 or deltas.size == 0:
            raise ValueError("deltas must be a nonempty 1-d array")
        if trans.shape != deltas.shape or phase.shape != deltas.shape:
            raise ValueError("transmission and phase must match deltas in shape")
        if not (np.all(np.isfinite(deltas)) and np.all(np.isfinite(trans))
                and np.all(np.isfinite(phase))):
            raise ValueError("spectrum samples must be finite")
        if np.any(trans < 0) or np.any(trans > 1 + 1e-9):
            raise ValueError("transmission must lie in [0, 1] (passive medium)")
        object.__setattr__(self, "deltas", deltas)
        object.__setattr__(self, "transmission", trans)
        object.__setattr__(self, "phase", phase)

    def to_csv(self, path) -> None:
        data = np.column_stack([self.deltas, self.transmission, self.phase])
        np.savetxt(path, data, delimiter=",", fmt="%.9g",
                   header="delta_gamma13,transmission,phase_rad", comments="")

    @classmethod
    def from_csv(cls, path) -> "Spectrum":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 3:
            raise ValueError(f"{path}: expected 3 columns, got {data.shape[1]}")
        return cls(data[:, 0], data[:, 1], data[:, 2])


def transmission_spectrum(params: MediumParams, deltas) -> Spectrum:
    """Evaluate the medium response on a detuning grid (gamma13 units)."""
    deltas = np.asarray(deltas, dtype=float)
    if deltas.size == 0:
        raise ValueError("deltas must be nonempty")
    return Spectrum(deltas, transmission(deltas, params),
                    phase_shift(deltas, params))


def group_delay(params: MediumParams, step: float = 1e-4) -> float:
    """Group delay of the transparency window in seconds.

    Central finite difference of the dispersive phase at delta = 0, converted
    with gamma13. Requires an open transparency window (omega_c > 0).
    """
    if params.omega_c <= 0:
        raise ValueError("group delay needs omega_c > 0 (no transparency window)")
    dphi = phase_shift(step, params) - phase_shift(-step, params)
    return float(dphi / (2.0 * step) / params.gamma13)


def eit_bandwidth(params: MediumParams) -> float:
    """Full width at half maximum of the transparency peak, gamma13 units.

    The peak transmission T(0) must rise above the absorption doublet and the
    half level T(0)/2 must be reached inside the window, otherwise there is no
    width to measure and a ValueError is raised. The half crossing is located
    by bisection.
    """
    if params.od <= 0:
        raise ValueError("eit_bandwidth needs od > 0")
    if params.omega_c <= 0:
        raise ValueError("eit_bandwidth needs omega_c > 0")
    t0 = transmission(0.0, params)
    # absorption doublet sits near |delta| = omega_c/2; scan out to omega_c
    scan = np.linspace(0.0, params.omega_c, 2001)[1:]
    t_scan = transmission(scan, params)
    i_min = int(np.argmin(t_scan))
    t_min = t_scan[i_min]
    if t0 <= t_min:
        raise ValueError("no transparency peak above the absorption background")
    half = t0 / 2.0
    if t_min > half:
        raise ValueError("transparency contrast below one half, width undefined")
    lo, hi = 0.0, scan[i_min]
    f = lambda d: transmission(d, params) - half
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, params.omega_c):
            break
    return float(lo + hi)  # half width times two


@dataclass(frozen=True)
class DephasingFit:
    """Result of a ground-state dephasing fit: estimate and residual norm."""

    gamma12: float
    residual: float


def fit_dephasing(measured: Spectrum, params: MediumParams,
                  bounds: tuple = (0.0, 1.0)) -> DephasingFit:
    """Least-squares estimate of gamma12 from a measured transmission spectrum.

    All other medium parameters are taken from `params` (its gamma12 is
    ignored). Squared residuals of the transmission samples are minimized by
    bounded Brent search on `bounds`. The spectrum must have at least 5 points
    and span the transparency window (points inside and outside
    |delta| = omega_c/2).
    """
    if measured.deltas.size < 5:
        raise ValueError("need >= 5 spectrum points to fit dephasing")
    if params.omega_c <= 0:
        raise ValueError("fit needs omega_c > 0")
    half_split = params.omega_c / 2.0
    inside = np.abs(measured.deltas) < half_split
    if not inside.any() or inside.all():
        raise ValueError("spectrum must span the transparency window")

    def objective(g12: float) -> float:
        trial = MediumParams(od=params.od, gamma13=params.gamma13,
                             gamma12=g12, omega_c=params.omega_c,
                             delta_p=params.delta_p)
        r = transmission(measured.deltas, trial) - measured.transmission
        return float(np.dot(r, r))

    res = minimize_scalar(objective, bounds=bounds, method="bounded",
                          options={"xatol": 1e-9})
    if not res.success:
        raise FitConvergenceError(
            f"dephasing fit did not converge: {res.message}",
            best_gamma12=float(res.x))
    return DephasingFit(gamma12=float(res.x), residual=float(np.sqrt(res.fun)))


def fit_grid(params: MediumParams, n_points: int = 201,
             span: float = 3.0) -> np.ndarray:
    """Default detuning grid for dephasing fits: |delta| <= span * omega_c."""
    if params.omega_c <= 0:
        raise ValueError("fit grid needs omega_c > 0")
    half = span * params.omega_c
    return np.linspace(-half, half, n_points)
