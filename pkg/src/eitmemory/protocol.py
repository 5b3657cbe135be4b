"""Storage and retrieval protocol on top of the propagation solver.

A storage run switches the coupling field off at t_off (writing the probe
into the spin wave), holds it dark for storage_time = t_on - t_off, and
switches back on at t_on to read the excitation out. Switch times are the
ramp start times. The retrieved waveform is the boundary field gated to
t >= t_on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .medium import MediumParams, eit_bandwidth, group_delay
from .propagation import MediumState, propagate
from .waveforms import ControlProfile, SwitchEvent, TimeGrid, Waveform, trapezoid

DEFAULT_RAMP = 50e-9


@dataclass(frozen=True)
class StorageSchedule:
    """Coupling switch timing, seconds. storage_time = t_on - t_off."""

    t_off: float
    t_on: float
    ramp: float = DEFAULT_RAMP

    def __post_init__(self):
        if not (np.isfinite(self.t_off) and np.isfinite(self.t_on)
                and np.isfinite(self.ramp)):
            raise ValueError("schedule times must be finite")
        if self.ramp <= 0:
            raise ValueError("ramp must be > 0")
        if self.t_on <= self.t_off:
            raise ValueError("t_on must exceed t_off")
        if self.t_on < self.t_off + self.ramp:
            raise ValueError(
                "storage_time is shorter than the switch ramp; the coupling "
                "never reaches zero")

    @property
    def storage_time(self) -> float:
        return self.t_on - self.t_off


@dataclass
class StorageResult:
    """Outcome of one storage/retrieval run.

    psi_out is the gated retrieved waveform; transmitted is the full ungated
    boundary field (leakage plus retrieval); state carries the medium record.
    """

    psi_out: Waveform
    efficiency: float
    likeness: float
    spinwave_peak: float
    leaked_energy: float
    schedule: StorageSchedule
    transmitted: Waveform
    state: MediumState

    def to_json(self, path) -> None:
        payload = {
            "efficiency": self.efficiency,
            "likeness": self.likeness,
            "leaked_energy": self.leaked_energy,
            "spinwave_peak": self.spinwave_peak,
            "storage_time_ns": self.schedule.storage_time * 1e9,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def storage_efficiency(psi_in: Waveform, psi_out: Waveform) -> float:
    """Energy ratio of retrieved to input waveform."""
    e_in = psi_in.energy()
    if e_in <= 0:
        raise ValueError("input waveform has zero energy")
    return psi_out.energy() / e_in


def _reversed_overlap(psi_in: Waveform, psi_out: Waveform,
                      pivot: float) -> float:
    t = psi_in.grid.times()
    t_rev = 2.0 * pivot - t
    t_out = psi_out.grid.times()
    s = psi_out.samples
    rev = (np.interp(t_rev, t_out, s.real, left=0.0, right=0.0)
           + 1j * np.interp(t_rev, t_out, s.imag, left=0.0, right=0.0))
    overlap = trapezoid(psi_in.samples * rev, dx=psi_in.grid.dt)
    return float(np.abs(overlap) ** 2)


def likeness(psi_in: Waveform, psi_out: Waveform, pivot: float | None = None,
             optimize: bool = False, search_width: float | None = None) -> float:
    """Overlap of the input with the time-reversed output about a pivot.

    L = |integral psi_in(t) psi_out(2*pivot - t) dt|^2 / (E_in * E_out),
    no conjugation. pivot defaults to the midpoint of the two centroids;
    optimize=True refines the pivot by bounded search over search_width
    (default: one input FWHM) each side. Zero-energy output gives 0.
    """
    e_in = psi_in.energy()
    e_out = psi_out.energy()
    if e_in <= 0:
        raise ValueError("input waveform has zero energy")
    if e_out <= 0:
        return 0.0
    if pivot is None:
        pivot = 0.5 * (psi_in.centroid() + psi_out.centroid())
    norm = e_in * e_out
    if not optimize:
        return _reversed_overlap(psi_in, psi_out, pivot) / norm
    width = search_width if search_width is not None else psi_in.fwhm()
    res = minimize_scalar(
        lambda p: -_reversed_overlap(psi_in, psi_out, p),
        bounds=(pivot - width, pivot + width), method="bounded",
        options={"xatol": 1e-13})
    return float(-res.fun) / norm


def shape_overlap(a: Waveform, b: Waveform, shift: float | None = None,
                  optimize: bool = False,
                  search_width: float | None = None) -> float:
    """Same-orientation similarity |<a|b shifted>|^2 / (E_a E_b) in [0, 1].

    shift defaults to the centroid difference so the envelopes are aligned;
    optimize=True refines it. Uses the conjugated inner product.
    """
    e_a = a.energy()
    e_b = b.energy()
    if e_a <= 0 or e_b <= 0:
        raise ValueError("cannot compare zero-energy waveforms")
    if shift is None:
        shift = b.centroid() - a.centroid()
    t = a.grid.times()
    t_b = b.grid.times()

    def overlap(s: float) -> float:
        moved = (np.interp(t + s, t_b, b.samples.real, left=0.0, right=0.0)
                 + 1j * np.interp(t + s, t_b, b.samples.imag,
                                  left=0.0, right=0.0))
        val = trapezoid(np.conj(a.samples) * moved, dx=a.grid.dt)
        return float(np.abs(val) ** 2)

    norm = e_a * e_b
    if not optimize:
        return overlap(shift) / norm
    width = search_width if search_width is not None else a.fwhm()
    res = minimize_scalar(lambda s: -overlap(s),
                          bounds=(shift - width, shift + width),
                          method="bounded", options={"xatol": 1e-13})
    return float(-res.fun) / norm


def apply_mask(psi: Waveform, mask) -> Waveform:
    """Amplitude mask (modulator model): psi * m(t), 0 <= m <= 1.

    mask may be an array on the waveform grid or a callable of time.
    """
    m = mask(psi.grid.times()) if callable(mask) else np.asarray(mask,
                                                                 dtype=float)
    if m.shape != psi.samples.shape:
        raise ValueError("mask shape does not match the waveform grid")
    if np.any(m < 0) or np.any(m > 1 + 1e-12):
        raise ValueError("mask values must lie in [0, 1]")
    return Waveform(psi.grid, psi.samples * m)


def waveform_from_histogram(hist, floor_window: tuple) -> Waveform:
    """Rebuild a sqrt-intensity waveform from a coincidence histogram.

    The mean count over floor_window (a (lo, hi) interval on the offset axis,
    seconds) is subtracted, negatives are clamped, and the square root is
    normalized to unit energy. Needs any object with offsets, counts and
    bin_width attributes.
    """
    offsets = np.asarray(hist.offsets, dtype=float)
    counts = np.asarray(hist.counts, dtype=float)
    lo, hi = floor_window
    sel = (offsets >= lo) & (offsets <= hi)
    if not sel.any():
        raise ValueError("floor window selects no histogram bins")
    floor = counts[sel].mean()
    amp = np.sqrt(np.clip(counts - floor, 0.0, None))
    if not np.any(amp > 0):
        raise ValueError("histogram carries no signal above the floor")
    grid = TimeGrid(offsets[0], offsets[-1], hist.bin_width)
    if grid.n_t != offsets.size:
        raise ValueError("histogram offsets are not uniform at bin_width")
    return Waveform(grid, amp.astype(complex)).normalized()


def make_schedule(psi_in: Waveform, params: MediumParams,
                  storage_time: float, t_off: float | None = None,
                  ramp: float = DEFAULT_RAMP, n_z: int = 200) -> StorageSchedule:
    """Pick the switch-off time; explicit t_off passes through.

    Auto mode runs the constant-coupling propagation and puts t_off where the
    spin-wave energy peaks (coarse argmax refined on the continuous
    interpolant).
    """
    if storage_time <= 0:
        raise ValueError("storage_time must be > 0")
    if t_off is not None:
        return StorageSchedule(t_off, t_off + storage_time, ramp)
    if psi_in.energy() <= 0:
        raise ValueError("cannot time the switch against a zero waveform")
    control = ControlProfile.constant(psi_in.grid, params.omega_c)
    _, state = propagate(psi_in, control, params, n_z=n_z)
    series = state.spinwave_series
    if series.max() <= 1e-12 * psi_in.energy():
        raise ValueError("no spin-wave excitation to time the switch against")
    times = state.times
    i = int(np.argmax(series))
    lo = times[max(i - 16, 0)]
    hi = times[min(i + 16, times.size - 1)]
    if hi > lo:
        res = minimize_scalar(lambda t: -np.interp(t, times, series),
                              bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        best = float(res.x)
    else:
        best = float(times[i])
    return StorageSchedule(best, best + storage_time, ramp)


def store_retrieve(psi_in: Waveform, schedule: StorageSchedule,
                   params: MediumParams, spin_decay: float = 0.0,
                   n_z: int = 200, ramp_shape: str = "smoothstep",
                   snapshot_stride: int = 0) -> StorageResult:
    """Run one storage/retrieval cycle and score it.

    spin_decay is an extra phenomenological ground-state decay rate (1/s)
    applied to the retrieved amplitude as exp(-spin_decay*storage_time/2), so
    the efficiency decays as exp(-spin_decay*storage_time). The reported
    likeness uses the pivot-optimized time-reversed overlap. Raises if the
    retrieved pulse is truncated by the grid end.
    """
    grid = psi_in.grid
    if spin_decay < 0:
        raise ValueError("spin_decay must be >= 0")
    e_in = psi_in.energy()
    if e_in <= 0:
        raise ValueError("input waveform has zero energy")
    times = grid.times()

    if schedule.t_off >= grid.t_end:
        # coupling never switched: pure slow-light transmission
        control = ControlProfile.constant(grid, params.omega_c)
        psi_full, state = propagate(psi_in, control, params, n_z=n_z,
                                    snapshot_stride=snapshot_stride)
        return StorageResult(
            psi_out=psi_full,
            efficiency=psi_full.energy() / e_in,
            likeness=likeness(psi_in, psi_full, optimize=True),
            spinwave_peak=float(state.spinwave_series.max()),
            leaked_energy=0.0,
            schedule=schedule,
            transmitted=psi_full,
            state=state,
        )

    if schedule.t_off <= grid.t_start:
        raise ValueError("t_off lies before the grid start")
    if schedule.t_on + schedule.ramp >= grid.t_end:
        raise ValueError("retrieval window truncated by the grid end")

    control = ControlProfile(
        grid, base_level=params.omega_c,
        events=(SwitchEvent(schedule.t_off, 0.0, schedule.ramp),
                SwitchEvent(schedule.t_on, params.omega_c, schedule.ramp)),
        ramp_shape=ramp_shape)
    psi_full, state = propagate(psi_in, control, params, n_z=n_z,
                                snapshot_stride=snapshot_stride)

    gate = times >= schedule.t_on
    retrieved = np.where(gate, psi_full.samples, 0.0)
    decay_amp = np.exp(-0.5 * spin_decay * schedule.storage_time)
    psi_ret = Waveform(grid, retrieved * decay_amp)
    leaked = float(trapezoid(
        np.abs(np.where(gate, 0.0, psi_full.samples)) ** 2, dx=grid.dt))

    ret_int = np.abs(psi_ret.samples) ** 2
    peak = ret_int.max()
    if peak > 0 and ret_int[-1] > 1e-3 * peak:
        raise ValueError("retrieval window truncated by the grid end")

    return StorageResult(
        psi_out=psi_ret,
        efficiency=psi_ret.energy() / e_in,
        likeness=likeness(psi_in, psi_ret, optimize=True),
        spinwave_peak=float(state.spinwave_series.max()),
        leaked_energy=leaked,
        schedule=schedule,
        transmitted=psi_full,
        state=state,
    )


def design_grid(params: MediumParams, fwhm: float, storage_time: float,
                ramp: float = DEFAULT_RAMP) -> tuple:
    """Time window and step sized for one storage run; returns (grid, center).

    The window holds the input pulse (centered at 4 FWHM), the storage
    interval, and the retrieved pulse with group-delay margin. The step
    resolves the coherence decay, the optical depth, and the ramps.
    """
    if fwhm <= 0 or storage_time <= 0:
        raise ValueError("fwhm and storage_time must be > 0")
    gd = group_delay(params) if params.omega_c > 0 else 0.0
    center = 4.0 * fwhm
    t_end = (center + 4.0 * fwhm + storage_time + 2.0 * ramp
             + 4.0 * fwhm + 4.0 * abs(gd))
    dtau = min(2e-3, 0.8 / max(params.od, 1.0))
    dt = min(dtau / params.gamma13, ramp / 10.0)
    n_steps = int(np.ceil((t_end - 0.0) / dt))
    grid = TimeGrid(0.0, n_steps * dt, dt)
    return grid, center


def lifetime_scan(psi_in: Waveform, params: MediumParams, storage_times,
                  spin_decay: float, t_off: float | None = None,
                  ramp: float = DEFAULT_RAMP, n_z: int = 200) -> np.ndarray:
    """Efficiency versus storage time; returns an (n, 2) array.

    The switch-off time is chosen once (auto unless given) and shared by all
    runs; the grid must leave room for the longest storage plus retrieval.
    """
    storage_times = np.asarray(storage_times, dtype=float)
    if storage_times.size == 0 or np.any(storage_times <= 0):
        raise ValueError("storage times must be positive")
    sched0 = make_schedule(psi_in, params, float(storage_times.min()),
                           t_off=t_off, ramp=ramp, n_z=n_z)
    out = np.empty((storage_times.size, 2))
    for k, T in enumerate(storage_times):
        sched = StorageSchedule(sched0.t_off, sched0.t_off + float(T), ramp)
        res = store_retrieve(psi_in, sched, params, spin_decay=spin_decay,
                             n_z=n_z)
        out[k, 0] = T
        out[k, 1] = res.efficiency
    return out


def fit_lifetime(storage_times, efficiencies) -> tuple:
    """Log-linear exponential fit; returns (tau_1e, eta_at_zero)."""
    t = np.asarray(storage_times, dtype=float)
    eta = np.asarray(efficiencies, dtype=float)
    if t.size < 2:
        raise ValueError("need >= 2 points to fit a lifetime")
    if np.any(eta <= 0):
        raise ValueError("efficiencies must be positive for a log fit")
    slope, intercept = np.polyfit(t, np.log(eta), 1)
    if slope >= 0:
        raise ValueError("efficiency does not decay; lifetime undefined")
    return float(-1.0 / slope), float(np.exp(intercept))
