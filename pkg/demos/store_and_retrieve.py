"""Storage and retrieval of an unshaped 200 ns pulse.

Switches the coupling field off while the pulse is inside the cloud, holds
the excitation as a spin wave, and switches back on to read it out. The
pulse is deliberately too long for the medium, so a large fraction leaks
through before the switch; the optimizer demo shows how to do better.
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from eitmemory import (MediumParams, TimeGrid, design_grid, energy_audit,
                       gaussian_pulse, make_schedule, store_retrieve)

OUT = Path(__file__).with_suffix(".png")
NS = 1e-9


def main():
    params = MediumParams(od=60.0, omega_c=11.0, gamma12=0.03)
    fwhm = 200 * NS
    storage_time = 100 * NS
    ramp = 50 * NS

    grid, center = design_grid(params, fwhm, storage_time, ramp)
    psi = gaussian_pulse(grid, center, fwhm)
    schedule = make_schedule(psi, params, storage_time, ramp=ramp)
    result = store_retrieve(psi, schedule, params)

    audit = energy_audit(result.state)
    print(f"switch off at {schedule.t_off / NS:.1f} ns, "
          f"on at {schedule.t_on / NS:.1f} ns")
    print(f"efficiency: {result.efficiency:.4f}")
    print(f"likeness to the time-reversed input: {result.likeness:.4f}")
    print(f"leaked before the switch: "
          f"{result.leaked_energy / psi.energy():.4f}")
    print(f"spin-wave fraction at switch-off: {result.spinwave_peak:.4f}")
    print(f"energy audit defect: {audit.max_defect:.2e}")

    t_ns = grid.times() / NS
    state = result.state
    fig, (ax, ax_s) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax.plot(t_ns, np.abs(psi.samples) ** 2, label="input")
    ax.plot(t_ns, np.abs(result.transmitted.samples) ** 2,
            label="at the exit face")
    ax.fill_between(t_ns, np.abs(result.psi_out.samples) ** 2,
                    color="C2", alpha=0.4, label="retrieved")
    ax.set_ylabel("intensity (1/s)")
    ax.legend(fontsize=8)

    ax_s.plot(state.times / NS, state.spinwave_series / psi.energy(),
              color="C3", label="spin wave")
    for t_switch in (schedule.t_off, schedule.t_on):
        ax_s.axvline(t_switch / NS, color="gray", lw=0.8, ls="--")
    ax_s.set_xlabel("time (ns)")
    ax_s.set_ylabel("stored fraction")
    ax_s.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(OUT, dpi=150)
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
