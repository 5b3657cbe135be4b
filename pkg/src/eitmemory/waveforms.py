"""Time grids, complex temporal envelopes, and coupling-field profiles.

Times are in seconds. A waveform sample psi(t) has units of sqrt(rate), so
trapezoidal integration of |psi|^2 over the grid gives a dimensionless photon
number and a single photon is a unit-energy waveform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

trapezoid = getattr(np, "trapezoid", np.trapz)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid. n_t = round((t_end - t_start)/dt) + 1 samples."""

    t_start: float
    t_end: float
    dt: float

    def __post_init__(self):
        if not (np.isfinite(self.t_start) and np.isfinite(self.t_end)
                and np.isfinite(self.dt)):
            raise ValueError("grid times must be finite")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.t_end <= self.t_start:
            raise ValueError("t_end must exceed t_start")

    @property
    def n_t(self) -> int:
        return int(round((self.t_end - self.t_start) / self.dt)) + 1

    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_t)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeGrid):
            return NotImplemented
        return (abs(self.t_start - other.t_start) < 1e-15
                and abs(self.t_end - other.t_end) < 1e-15
                and abs(self.dt - other.dt) < 1e-18)

    def __hash__(self):
        return hash((round(self.t_start, 15), round(self.t_end, 15),
                     round(self.dt, 18)))


@dataclass
class Waveform:
    """Complex envelope sampled on a TimeGrid."""

    grid: TimeGrid
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if samples.ndim != 1 or samples.size != self.grid.n_t:
            raise ValueError(
                f"samples must be 1-d with {self.grid.n_t} entries, "
                f"got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        self.samples = samples

    def energy(self) -> float:
        """Photon number: trapezoidal integral of |psi|^2 over the grid."""
        return float(trapezoid(np.abs(self.samples) ** 2, dx=self.grid.dt))

    def normalized(self) -> "Waveform":
        e = self.energy()
        if e <= 0:
            raise ValueError("cannot normalize a zero-energy waveform")
        return Waveform(self.grid, self.samples / np.sqrt(e))

    def centroid(self) -> float:
        """Energy-weighted mean arrival time, seconds."""
        w = np.abs(self.samples) ** 2
        norm = trapezoid(w, dx=self.grid.dt)
        if norm <= 0:
            raise ValueError("centroid of a zero-energy waveform is undefined")
        return float(trapezoid(self.grid.times() * w, dx=self.grid.dt) / norm)

    def fwhm(self) -> float:
        """Full width at half maximum of |psi|^2, by linear interpolation."""
        w = np.abs(self.samples) ** 2
        i_pk = int(np.argmax(w))
        half = w[i_pk] / 2.0
        if half <= 0:
            raise ValueError("fwhm of a zero waveform is undefined")
        t = self.grid.times()
        left = np.nonzero(w[: i_pk + 1] < half)[0]
        right = np.nonzero(w[i_pk:] < half)[0]
        if left.size == 0 or right.size == 0:
            raise ValueError("pulse is clipped by the grid, fwhm undefined")
        i = left[-1]
        t_lo = t[i] + (half - w[i]) / (w[i + 1] - w[i]) * self.grid.dt
        j = i_pk + right[0]
        t_hi = t[j - 1] + (half - w[j - 1]) / (w[j] - w[j - 1]) * self.grid.dt
        return float(t_hi - t_lo)

    def to_csv(self, path) -> None:
        data = np.column_stack([self.grid.times() * 1e9,
                                self.samples.real, self.samples.imag])
        np.savetxt(path, data, delimiter=",", fmt="%.9g",
                   header="t_ns,re,im", comments="")

    @classmethod
    def from_csv(cls, path) -> "Waveform":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 3 or data.shape[0] < 2:
            raise ValueError(f"{path}: expected >= 2 rows of t_ns,re,im")
        t = data[:, 0] * 1e-9
        dt = np.diff(t)
        if np.any(np.abs(dt - dt[0]) > 1e-6 * dt[0]):
            raise ValueError(f"{path}: time column is not uniformly spaced")
        grid = TimeGrid(t[0], t[-1], float(dt.mean()))
        samples = data[:, 1] + 1j * data[:, 2]
        if samples.size != grid.n_t:
            raise ValueError(f"{path}: inconsistent sample count")
        return cls(grid, samples)


def gaussian_pulse(grid: TimeGrid, center: float, fwhm: float,
                   energy: float = 1.0) -> Waveform:
    """Gaussian envelope whose intensity FWHM is `fwhm` seconds."""
    if fwhm <= 0:
        raise ValueError("fwhm must be > 0")
    if energy <= 0:
        raise ValueError("energy must be > 0")
    sigma = fwhm / (2.0 * np.sqrt(np.log(2.0)))  # amplitude 1/e half-width *sqrt2
    t = grid.times()
    psi = np.exp(-((t - center) ** 2) / (2.0 * sigma**2)).astype(complex)
    wf = Waveform(grid, psi)
    norm = wf.energy()
    if norm <= 0:
        raise ValueError("pulse does not overlap the grid")
    return Waveform(grid, psi * np.sqrt(energy / norm))


def square_pulse(grid: TimeGrid, center: float, width: float,
                 energy: float = 1.0) -> Waveform:
    """Flat-top envelope of the given width (equal to its intensity FWHM)."""
    if width <= 0:
        raise ValueError("width must be > 0")
    if energy <= 0:
        raise ValueError("energy must be > 0")
    t = grid.times()
    psi = ((t >= center - width / 2) & (t <= center + width / 2)).astype(complex)
    wf = Waveform(grid, psi)
    norm = wf.energy()
    if norm <= 0:
        raise ValueError("pulse does not overlap the grid")
    return Waveform(grid, psi * np.sqrt(energy / norm))


@dataclass(frozen=True)
class SwitchEvent:
    """Coupling switch: ramp from the current level to `target` starting at
    `time`, completing after `ramp` seconds."""

    time: float
    target: float
    ramp: float

    def __post_init__(self):
        if not (np.isfinite(self.time) and np.isfinite(self.target)
                and np.isfinite(self.ramp)):
            raise ValueError("switch event fields must be finite")
        if self.target < 0:
            raise ValueError("target level must be >= 0")
        if self.ramp <= 0:
            raise ValueError("ramp must be > 0")


def _ramp_fraction(x: np.ndarray, shape: str) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    if shape == "smoothstep":
        return x * x * (3.0 - 2.0 * x)
    if shape == "linear":
        return x
    raise ValueError(f"unknown ramp shape {shape!r}")


@dataclass(frozen=True)
class ControlProfile:
    """Coupling Rabi frequency over time (gamma13 units) with switch events.

    The profile starts at `base_level`; each event ramps to its target with
    the configured shape. Events must be time ordered and non-overlapping.
    `omega_c` holds the samples on the grid; `levels_at` evaluates the same
    analytic profile at arbitrary times (used for substep stage values).
    """

    grid: TimeGrid
    base_level: float
    events: tuple = ()
    ramp_shape: str = "smoothstep"
    omega_c: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.base_level < 0 or not np.isfinite(self.base_level):
            raise ValueError("base level must be finite and >= 0")
        events = tuple(self.events)
        for a, b in zip(events, events[1:]):
            if b.time < a.time + a.ramp:
                raise ValueError("switch events overlap or are out of order")
        _ramp_fraction(np.zeros(1), self.ramp_shape)  # validates the name
        object.__setattr__(self, "events", events)
        object.__setattr__(self, "omega_c", self.levels_at(self.grid.times()))

    @classmethod
    def constant(cls, grid: TimeGrid, level: float) -> "ControlProfile":
        return cls(grid, base_level=level)

    def levels_at(self, times) -> np.ndarray:
        t = np.asarray(times, dtype=float)
        out = np.full(t.shape, self.base_level)
        prev = self.base_level
        for ev in self.events:
            frac = _ramp_fraction((t - ev.time) / ev.ramp, self.ramp_shape)
            out = np.where(t >= ev.time, prev + (ev.target - prev) * frac, out)
            prev = ev.target
        return out
