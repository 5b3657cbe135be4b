"""Heralded photon-counting statistics for memory characterization.

Each Monte Carlo trial is one Stokes herald (detector D1). The paired
anti-Stokes photon survives to the fiber beamsplitter with probability
pairing_efficiency * chain_efficiency, is routed to D2 with probability
bs_split (else D3), and arrives at a delay drawn from the normalized
waveform intensity. Uncorrelated noise and dark counts are homogeneous
Poisson processes over the record window. Detectors are non number
resolving: a trial either fires a detector or it does not.

Randomness is counter based: trials are processed in fixed chunks of 65536,
each chunk owning a Philox stream keyed by (seed, chunk index) with draws in
one canonical order, so results depend only on the configuration and seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .waveforms import Waveform

CHUNK = 1 << 16

# Cross-correlation above this certifies a nonclassical pair source when both
# field autocorrelations are thermal (g_ss = g_asas = 2).
CLASSICAL_GBAR_THRESHOLD = 2.0


@dataclass(frozen=True)
class SourceConfig:
    """Pair source seen by the anti-Stokes arm.

    pairing_efficiency is the probability that a herald leaves a retrievable
    partner photon; herald_rate (1/s) only sets the wall-clock duration;
    noise_rate is the total uncorrelated anti-Stokes rate across both
    detectors (split by the beamsplitter); dark_rate applies per detector.
    """

    waveform: Waveform
    pairing_efficiency: float
    herald_rate: float = 5e5
    noise_rate: float = 0.0
    dark_rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.pairing_efficiency <= 1.0:
            raise ValueError("pairing_efficiency must lie in [0, 1]")
        if self.herald_rate <= 0:
            raise ValueError("herald_rate must be > 0")
        if self.noise_rate < 0 or self.dark_rate < 0:
            raise ValueError("rates must be >= 0")
        if self.waveform.energy() <= 0:
            raise ValueError("waveform must carry energy")


@dataclass(frozen=True)
class DetectorConfig:
    """Detection chain after the memory: one fiber beamsplitter, two SPCMs."""

    coincidence_window: float
    chain_efficiency: float = 1.0
    bs_split: float = 0.45
    bin_width: float = 1e-9
    window_center: float | None = None
    record_window: tuple | None = None

    def __post_init__(self):
        if self.coincidence_window <= 0:
            raise ValueError("coincidence_window must be > 0")
        if not 0.0 < self.chain_efficiency <= 1.0:
            raise ValueError("chain_efficiency must lie in (0, 1]")
        if not 0.0 < self.bs_split < 1.0:
            raise ValueError("bs_split must lie in (0, 1)")
        if self.bin_width <= 0:
            raise ValueError("bin_width must be > 0")
        if self.record_window is not None:
            r0, r1 = self.record_window
            if r1 <= r0:
                raise ValueError("record_window must be increasing")


@dataclass(frozen=True)
class CountSummary:
    """Raw trigger and coincidence counts over a run."""

    n1: int
    n12: int
    n13: int
    n123: int
    window: tuple
    duration: float

    def __post_init__(self):
        if min(self.n1, self.n12, self.n13, self.n123) < 0:
            raise ValueError("counts must be >= 0")
        if self.n12 > self.n1 or self.n13 > self.n1:
            raise ValueError("pair counts cannot exceed trigger count")
        if self.n123 > min(self.n12, self.n13):
            raise ValueError("triple count cannot exceed either pair count")


@dataclass(frozen=True)
class CoincidenceHistogram:
    """Counts of anti-Stokes arrivals versus delay from the herald."""

    bin_width: float
    offsets: np.ndarray  # bin centers, seconds
    counts: np.ndarray

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=float)
        counts = np.asarray(self.counts)
        if offsets.ndim != 1 or offsets.size == 0:
            raise ValueError("offsets must be a nonempty 1-d array")
        if counts.shape != offsets.shape:
            raise ValueError("counts must match offsets in shape")
        if np.any(counts < 0):
            raise ValueError("counts must be >= 0")
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "counts", counts)

    def to_csv(self, path) -> None:
        data = np.column_stack([self.offsets * 1e9, self.counts])
        np.savetxt(path, data, delimiter=",", fmt=["%.9g", "%d"],
                   header="tau_ns,counts", comments="")

    @classmethod
    def from_csv(cls, path) -> "CoincidenceHistogram":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 2 or data.shape[0] < 2:
            raise ValueError(f"{path}: expected >= 2 rows of tau_ns,counts")
        offsets = data[:, 0] * 1e-9
        width = float(np.diff(offsets).mean())
        return cls(width, offsets, data[:, 1].astype(int))


@dataclass(frozen=True)
class LossBudget:
    """Ordered chain of transmission elements plus the duty cycle."""

    elements: tuple
    duty_cycle: float = 1.0

    def __post_init__(self):
        elements = tuple((str(label), float(eff)) for label, eff
                         in self.elements)
        if not elements:
            raise ValueError("budget needs at least one element")
        for label, eff in elements:
            if not 0.0 < eff <= 1.0:
                raise ValueError(f"element {label!r} efficiency must lie "
                                 f"in (0, 1]")
        if not 0.0 < self.duty_cycle <= 1.0:
            raise ValueError("duty_cycle must lie in (0, 1]")
        object.__setattr__(self, "elements", elements)

    @property
    def transmission(self) -> float:
        out = 1.0
        for _, eff in self.elements:
            out *= eff
        return out


@dataclass(frozen=True)
class CountsRun:
    """simulate_counts output: totals plus per-detector delay histograms."""

    summary: CountSummary
    hist_12: CoincidenceHistogram
    hist_13: CoincidenceHistogram
    record_window: tuple
    events: tuple | None = None  # (trial, detector, time) arrays


def _intensity_cdf(wf: Waveform):
    t = wf.grid.times()
    w = np.abs(wf.samples) ** 2
    inc = 0.5 * (w[:-1] + w[1:]) * wf.grid.dt
    cdf = np.concatenate([[0.0], np.cumsum(inc)])
    cdf += np.linspace(0.0, 1e-12, cdf.size)  # break flat spans for interp
    return cdf / cdf[-1], t


def _windows(source: SourceConfig, det: DetectorConfig):
    w = det.coincidence_window
    center = det.window_center
    if center is None:
        center = source.waveform.centroid()
    w0, w1 = center - w / 2.0, center + w / 2.0
    if det.record_window is not None:
        r0, r1 = det.record_window
    else:
        grid = source.waveform.grid
        r0 = min(center - 2.0 * w, grid.t_start - w)
        r1 = max(center + 2.0 * w, grid.t_end + w)
    if not (r0 <= w0 and w1 <= r1):
        raise ValueError("coincidence window must lie inside the record window")
    n_bins = int(np.ceil((r1 - r0) / det.bin_width - 1e-9))
    r1 = r0 + n_bins * det.bin_width
    if w1 > r1:
        raise ValueError("record window too short for the coincidence window")
    return (w0, w1), (r0, r1), n_bins


def simulate_counts(source: SourceConfig, det: DetectorConfig, n_trials: int,
                    seed: int, collect_events: bool = False) -> CountsRun:
    """Monte Carlo heralded run; deterministic for a given (config, seed)."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if seed < 0:
        raise ValueError("seed must be >= 0")
    (w0, w1), (r0, r1), n_bins = _windows(source, det)
    edges = r0 + det.bin_width * np.arange(n_bins + 1)
    cdf, t_axis = _intensity_cdf(source.waveform)
    p_sig = source.pairing_efficiency * det.chain_efficiency
    span = r1 - r0
    lam2 = (source.noise_rate * det.bs_split + source.dark_rate) * span
    lam3 = (source.noise_rate * (1.0 - det.bs_split) + source.dark_rate) * span

    n12 = n13 = n123 = 0
    counts2 = np.zeros(n_bins, dtype=np.int64)
    counts3 = np.zeros(n_bins, dtype=np.int64)
    ev_trial, ev_det, ev_time = [], [], []

    n_chunks = (n_trials + CHUNK - 1) // CHUNK
    for c in range(n_chunks):
        start = c * CHUNK
        m = min(CHUNK, n_trials - start)
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence([seed, c])))
        # canonical draw order; do not reorder
        u_exist = rng.random(m)
        u_route = rng.random(m)
        u_tau = rng.random(m)
        bg2 = rng.poisson(lam2, m) if lam2 > 0 else np.zeros(m, dtype=np.int64)
        bg3 = rng.poisson(lam3, m) if lam3 > 0 else np.zeros(m, dtype=np.int64)
        t_bg2 = r0 + span * rng.random(int(bg2.sum()))
        t_bg3 = r0 + span * rng.random(int(bg3.sum()))

        exists = u_exist < p_sig
        to2 = exists & (u_route < det.bs_split)
        to3 = exists & ~(u_route < det.bs_split)
        tau = np.interp(u_tau, cdf, t_axis)

        fired2 = to2 & (tau >= w0) & (tau <= w1)
        fired3 = to3 & (tau >= w0) & (tau <= w1)
        own2 = np.repeat(np.arange(m), bg2)
        own3 = np.repeat(np.arange(m), bg3)
        in2 = (t_bg2 >= w0) & (t_bg2 <= w1)
        in3 = (t_bg3 >= w0) & (t_bg3 <= w1)
        np.logical_or.at(fired2, own2[in2], True)
        np.logical_or.at(fired3, own3[in3], True)

        n12 += int(fired2.sum())
        n13 += int(fired3.sum())
        n123 += int((fired2 & fired3).sum())

        all2 = np.concatenate([tau[to2], t_bg2])
        all3 = np.concatenate([tau[to3], t_bg3])
        counts2 += np.histogram(all2, bins=edges)[0]
        counts3 += np.histogram(all3, bins=edges)[0]

        if collect_events:
            tr2 = np.concatenate([start + np.nonzero(to2)[0], start + own2])
            tr3 = np.concatenate([start + np.nonzero(to3)[0], start + own3])
            ev_trial.append(np.concatenate([tr2, tr3]))
            ev_det.append(np.concatenate([np.full(all2.size, 2, dtype=np.int8),
                                          np.full(all3.size, 3,
                                                  dtype=np.int8)]))
            ev_time.append(np.concatenate([all2, all3]))

    centers = edges[:-1] + det.bin_width / 2.0
    events = None
    if collect_events:
        trial = np.concatenate(ev_trial) if ev_trial else np.zeros(0, int)
        detid = np.concatenate(ev_det) if ev_det else np.zeros(0, np.int8)
        time = np.concatenate(ev_time) if ev_time else np.zeros(0, float)
        order = np.lexsort((time, detid, trial))
        events = (trial[order], detid[order], time[order])

    summary = CountSummary(n1=n_trials, n12=n12, n13=n13, n123=n123,
                           window=(w0, w1),
                           duration=n_trials / source.herald_rate)
    return CountsRun(
        summary=summary,
        hist_12=CoincidenceHistogram(det.bin_width, centers, counts2),
        hist_13=CoincidenceHistogram(det.bin_width, centers, counts3),
        record_window=(r0, r1),
        events=events,
    )


def events_to_csv(path, events: tuple) -> None:
    """Write (trial, detector, time) event arrays as trial,detector,t_ns."""
    trial, det, time = events
    data = np.column_stack([trial, det, time * 1e9])
    np.savetxt(path, data, delimiter=",", fmt=["%d", "%d", "%.9g"],
               header="trial,detector,t_ns", comments="")


def histogram(pairs, bin_width: float, t_range: tuple) -> CoincidenceHistogram:
    """Bin herald/anti-Stokes timestamp pairs by delay tau = t_as - t_s."""
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError("pairs must be an (n, 2) array of timestamps")
    if bin_width <= 0:
        raise ValueError("bin_width must be > 0")
    lo, hi = t_range
    if hi <= lo:
        raise ValueError("t_range must be increasing")
    n_bins = max(int(round((hi - lo) / bin_width)), 1)
    edges = lo + bin_width * np.arange(n_bins + 1)
    taus = pairs[:, 1] - pairs[:, 0]
    counts = np.histogram(taus, bins=edges)[0]
    return CoincidenceHistogram(bin_width, edges[:-1] + bin_width / 2.0,
                                counts)


def g2_cross(hist: CoincidenceHistogram, floor_window: tuple):
    """Normalized cross-correlation per bin: counts over the accidental floor.

    floor_window is a (lo, hi) interval on the offset axis, away from the
    signal. Returns (g2 array, floor level). The floor must be positive.
    """
    lo, hi = floor_window
    sel = (hist.offsets >= lo) & (hist.offsets <= hi)
    if not sel.any():
        raise ValueError("floor window selects no histogram bins")
    floor = float(np.asarray(hist.counts, dtype=float)[sel].mean())
    if floor <= 0:
        raise ValueError(
            "accidental floor is zero, normalization undefined; run more "
            "trials or normalize against an explicit accidental rate"
        )
    return np.asarray(hist.counts, dtype=float) / floor, floor


def gbar(hist: CoincidenceHistogram, signal_window: tuple,
         floor_window: tuple) -> float:
    """Mean normalized cross-correlation over the signal window."""
    g2, _ = g2_cross(hist, floor_window)
    lo, hi = signal_window
    sel = (hist.offsets >= lo) & (hist.offsets <= hi)
    if not sel.any():
        raise ValueError("signal window selects no histogram bins")
    return float(g2[sel].mean())


def conditional_g2(summary: CountSummary) -> tuple:
    """Heralded autocorrelation N123*N1/(N12*N13) with Poisson error.

    With zero triples the value is 0 and the error is the one-sided bound
    obtained by setting N123 = 1.
    """
    if min(summary.n1, summary.n12, summary.n13) < 1:
        raise ValueError("need nonzero N1, N12 and N13")
    base = summary.n1 / (summary.n12 * summary.n13)
    rel = 1.0 / summary.n1 + 1.0 / summary.n12 + 1.0 / summary.n13
    if summary.n123 == 0:
        bound = base * np.sqrt(1.0 + rel)
        return 0.0, float(bound)
    value = summary.n123 * base
    err = value * np.sqrt(1.0 / summary.n123 + rel)
    return float(value), float(err)


@dataclass(frozen=True)
class GbarPrediction:
    """Conditional-g2 level implied by a cross-correlation g."""

    value: float
    asymptote: float  # 2/g, the large-g limit


def gc2_from_gbar(g: float) -> GbarPrediction:
    """Map the Stokes/anti-Stokes cross-correlation to the expected gc2.

    gc2 = (2g+1)/(g+1)^2, with the large-g asymptote 2/g.
    """
    if g < 0:
        raise ValueError("cross-correlation must be >= 0")
    value = (2.0 * g + 1.0) / (g + 1.0) ** 2
    asymptote = np.inf if g == 0 else 2.0 / g
    return GbarPrediction(value=float(value), asymptote=float(asymptote))


def cauchy_schwarz(g_sas_max: float, g_ss: float, g_asas: float) -> float:
    """Violation factor R = g_sas^2 / (g_ss * g_asas); R > 1 is nonclassical."""
    if g_ss <= 0 or g_asas <= 0:
        raise ValueError("autocorrelations must be > 0")
    if g_sas_max < 0:
        raise ValueError("cross-correlation must be >= 0")
    return float(g_sas_max**2 / (g_ss * g_asas))


@dataclass(frozen=True)
class BudgetReport:
    generation_rate: float
    chain_transmission: float
    detected_pair_rate: float
    duty_cycle: float


def loss_budget(budget: LossBudget, detected_pair_rate: float) -> BudgetReport:
    """Infer the generation rate behind a detected pair rate.

    generation = detected / (chain transmission * duty cycle).
    """
    if detected_pair_rate < 0:
        raise ValueError("detected rate must be >= 0")
    return BudgetReport(
        generation_rate=detected_pair_rate
        / (budget.transmission * budget.duty_cycle),
        chain_transmission=budget.transmission,
        detected_pair_rate=detected_pair_rate,
        duty_cycle=budget.duty_cycle,
    )


def pairing_efficiency_from_success(success_prob: float,
                                    chain: LossBudget) -> float:
    """Divide the heralded success probability by the chain transmission.

    The chain here is the anti-Stokes detection arm only; its duty cycle is
    ignored because the success probability is already per herald.
    """
    if not 0.0 <= success_prob <= 1.0:
        raise ValueError("success probability must lie in [0, 1]")
    p = success_prob / chain.transmission
    if p > 1.0 + 1e-9:
        raise ValueError(
            f"success probability {success_prob} exceeds the chain "
            f"transmission {chain.transmission:.6g}; budget inconsistent")
    return min(p, 1.0)
