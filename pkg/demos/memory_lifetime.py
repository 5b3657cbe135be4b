"""Memory lifetime from a storage-time scan.

Stores the same pulse for longer and longer holds, lets the spin wave
dephase, and fits the exponential decay of the retrieval efficiency.
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from eitmemory import (MediumParams, design_grid, fit_lifetime,
                       gaussian_pulse, lifetime_scan)

OUT = Path(__file__).with_suffix(".png")
NS = 1e-9


def main():
    params = MediumParams(od=60.0, omega_c=11.0)
    fwhm = 50 * NS
    storage_times = np.array([200, 600, 1000, 1600, 2400, 3200]) * NS
    spin_decay = 0.625e6

    grid, center = design_grid(params, fwhm, float(storage_times.max()),
                               50 * NS)
    psi = gaussian_pulse(grid, center, fwhm)
    scan = lifetime_scan(psi, params, storage_times, spin_decay=spin_decay)
    tau, eta0 = fit_lifetime(scan[:, 0], scan[:, 1])
    print(f"fitted lifetime {tau * 1e6:.3f} us "
          f"(decay constant set to {1 / spin_decay * 1e6:.3f} us)")
    print(f"efficiency extrapolated to zero hold: {eta0:.4f}")

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(scan[:, 0] / NS, scan[:, 1], "o", label="scan")
    t_fit = np.linspace(0.0, float(storage_times.max()), 200)
    ax.semilogy(t_fit / NS, eta0 * np.exp(-t_fit / tau), "-", lw=1,
                label=f"fit, tau = {tau * 1e6:.2f} us")
    ax.set_xlabel("storage time (ns)")
    ax.set_ylabel("efficiency")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(OUT, dpi=150)
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
