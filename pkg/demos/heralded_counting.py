"""Heralded photon counting over a noise floor.

Monte Carlo run of the three-detector experiment: a herald click starts a
trial, the partner photon rides on top of uncorrelated noise, and a beam
splitter feeds two counters. The conditional autocorrelation from the
counts is compared with the prediction from the signal-to-background
ratio, and the waveform is recovered from the coincidence histogram.
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from eitmemory import (DetectorConfig, LossBudget, SourceConfig, TimeGrid,
                       cauchy_schwarz, conditional_g2, gaussian_pulse, gbar,
                       gc2_from_gbar, loss_budget,
                       pairing_efficiency_from_success, shape_overlap,
                       simulate_counts, waveform_from_histogram)

OUT = Path(__file__).with_suffix(".png")
NS = 1e-9

SIGNAL_WINDOW = (100 * NS, 200 * NS)
FLOOR_WINDOW = (-240 * NS, -20 * NS)


def main():
    grid = TimeGrid(0.0, 300 * NS, 0.5 * NS)
    pulse = gaussian_pulse(grid, 150 * NS, 50 * NS)
    source = SourceConfig(pulse, pairing_efficiency=0.56, herald_rate=290.0,
                          noise_rate=3500.0, dark_rate=100.0)
    detector = DetectorConfig(coincidence_window=100 * NS,
                              chain_efficiency=0.049959, bs_split=0.45,
                              bin_width=1 * NS,
                              record_window=(-250 * NS, 450 * NS))

    run = simulate_counts(source, detector, 200_000, seed=11)
    s = run.summary
    print(f"heralds {s.n1}, pair coincidences {s.n12}+{s.n13}, "
          f"triples {s.n123}")

    gc2, err = conditional_g2(s)
    g = gbar(run.hist_12, SIGNAL_WINDOW, FLOOR_WINDOW)
    predicted = gc2_from_gbar(g - 1.0)
    print(f"conditional g2 from counts: {gc2:.4f} +- {err:.4f}")
    print(f"cross correlation gbar: {g:.2f}, "
          f"predicted g2 {predicted.value:.4f}")
    print(f"nonclassicality factor at this gbar: "
          f"{cauchy_schwarz(g, 2.0, 2.0):.1f} (must exceed 1 classically)")

    recovered = waveform_from_histogram(run.hist_12, FLOOR_WINDOW)
    print(f"waveform recovered from the histogram, overlap with truth "
          f"{shape_overlap(recovered, pulse, optimize=True):.4f}")

    # what the count rates imply about the apparatus
    chain = LossBudget(
        elements=(("fiber_coupling_source", 0.70),
                  ("detector_d1_qe", 0.50),
                  ("fiber_connection", 0.61),
                  ("fiber_coupling_memory", 0.72),
                  ("filter_f1", 0.65),
                  ("eom_transmission", 0.50),
                  ("filter_f2", 0.65),
                  ("detector_d23_qe", 0.50)),
        duty_cycle=0.1)
    report = loss_budget(chain, 8.0)
    print(f"8 detected pairs/s through a {report.chain_transmission:.4f} "
          f"chain at duty {report.duty_cycle:g} needs "
          f"{report.generation_rate:.0f} generated pairs/s")
    arm = LossBudget(elements=(("fiber_coupling_memory", 0.70),
                               ("eom_transmission", 0.50),
                               ("fiber_connection", 0.61),
                               ("fiber_coupling_source", 0.72),
                               ("filter", 0.65),
                               ("detector_qe", 0.50)))
    print(f"2.8% heralded detection implies pairing efficiency "
          f"{pairing_efficiency_from_success(0.028, arm):.2f}")

    fig, ax = plt.subplots(figsize=(7, 4))
    for hist, label in ((run.hist_12, "detector 2"),
                        (run.hist_13, "detector 3")):
        ax.step(hist.offsets / NS, hist.counts, where="mid", label=label)
    ax.axvspan(SIGNAL_WINDOW[0] / NS, SIGNAL_WINDOW[1] / NS, color="C2",
               alpha=0.15, label="signal window")
    ax.axvspan(FLOOR_WINDOW[0] / NS, FLOOR_WINDOW[1] / NS, color="gray",
               alpha=0.15, label="floor window")
    ax.set_xlabel("delay after herald (ns)")
    ax.set_ylabel("coincidences per bin")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(OUT, dpi=150)
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
