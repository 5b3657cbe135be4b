"""Command-line runner: `eitmem run|validate|preset`.

Each run executes one scenario from a JSON config into its own output
directory and finishes with a manifest.json recording the resolved
configuration, the seed, and the artifact list, so the directory is
self-describing and the run can be reproduced exactly. Artifacts are
plain CSV (9-significant-digit floats, one header line) and JSON with
sorted keys; reruns of the same config and seed are byte-identical.
"""
from __future__ import annotations

import argparse
import json
import shutil
import sys
from importlib.resources import files
from pathlib import Path

import numpy as np

from . import __version__
from .config import (NS, PER_US, SCHEMA_VERSION, ConfigError, RunConfig,
                     build_budget, build_detector, build_medium, build_source,
                     build_time_grid, build_waveform, load_config,
                     validate_config)
from .medium import (FitConvergenceError, eit_bandwidth, group_delay,
                     transmission, transmission_spectrum)
from .optimizer import iterate_optimal, seed_waveform
from .photonstats import (CoincidenceHistogram, cauchy_schwarz,
                          conditional_g2, events_to_csv, g2_cross, gbar,
                          gc2_from_gbar, loss_budget,
                          pairing_efficiency_from_success, simulate_counts)
from .propagation import (NumericsError, energy_audit, peak_delay, propagate,
                          spectral_oracle)
from .protocol import (DEFAULT_RAMP, design_grid, fit_lifetime, lifetime_scan,
                       make_schedule, store_retrieve)
from .waveforms import ControlProfile, TimeGrid, Waveform, trapezoid


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _design_around(params, center, fwhm, hold, ramp) -> TimeGrid:
    """Auto grid with the standard geometry, shifted to the given center."""
    grid, c0 = design_grid(params, fwhm, hold, ramp)
    shift = center - c0
    return TimeGrid(grid.t_start + shift, grid.t_end + shift, grid.dt)


def _probe_waveform(rc: RunConfig, params, hold, ramp) -> Waveform:
    """Configured waveform on its grid; the grid is designed when omitted."""
    w = rc.block("waveform")
    if "csv" in w:
        return build_waveform(rc, None)
    grid = build_time_grid(rc)
    if grid is None:
        grid = _design_around(params, float(w["center_ns"]) * NS,
                              float(w["fwhm_ns"]) * NS, hold, ramp)
    return build_waveform(rc, grid)


def _run_spectrum(rc: RunConfig, out: Path) -> list:
    params = build_medium(rc)
    s = rc.block("spectrum")
    deltas = np.linspace(float(s["delta_min_gamma13"]),
                         float(s["delta_max_gamma13"]), int(s["n_points"]))
    spec = transmission_spectrum(params, deltas)
    spec.to_csv(out / "spectrum.csv")
    summary = {
        "od": params.od,
        "omega_c_gamma13": params.omega_c,
        "gamma12_gamma13": params.gamma12,
        "transmission_at_zero": float(transmission(0.0, params)),
        "group_delay_ns": None,
        "bandwidth_gamma13": None,
    }
    if params.omega_c > 0:
        summary["group_delay_ns"] = group_delay(params) / NS
        try:
            summary["bandwidth_gamma13"] = eit_bandwidth(params)
        except ValueError:
            pass  # contrast too low: width undefined, reported as null
    _write_json(out / "spectrum.json", summary)
    return ["spectrum.csv", "spectrum.json"]


def _run_propagate(rc: RunConfig, out: Path) -> list:
    params = build_medium(rc)
    n_z = int(rc.block("propagation")["n_z"])
    w = rc.block("waveform")
    hold = float(w.get("fwhm_ns", 50.0)) * NS  # transit margin only
    psi_in = _probe_waveform(rc, params, hold, DEFAULT_RAMP)
    control = ControlProfile.constant(psi_in.grid, params.omega_c)
    psi_out, state = propagate(psi_in, control, params, n_z=n_z)
    oracle = spectral_oracle(psi_in, params)

    psi_in.to_csv(out / "psi_in.csv")
    psi_out.to_csv(out / "psi_out.csv")
    oracle.to_csv(out / "oracle.csv")
    state.save_spinwave_csv(out / "spinwave_final.csv")

    report = energy_audit(state)
    diff = np.abs(psi_out.samples - oracle.samples) ** 2
    l2 = float(np.sqrt(trapezoid(diff, dx=psi_in.grid.dt) / psi_in.energy()))
    payload = {
        "input_energy": report.input_energy,
        "output_energy": report.output_energy,
        "coherence_energy": report.coherence_energy,
        "spinwave_energy": report.spinwave_energy,
        "dissipated_energy": report.dissipated_energy,
        "max_defect": report.max_defect,
        "transmitted_fraction": report.output_energy / report.input_energy,
        "oracle_l2_error": l2,
        "peak_delay_ns": peak_delay(psi_in, psi_out) / NS,
        "group_delay_ns": (group_delay(params) / NS
                           if params.omega_c > 0 else None),
    }
    _write_json(out / "audit.json", payload)
    return ["psi_in.csv", "psi_out.csv", "oracle.csv", "spinwave_final.csv",
            "audit.json"]


def _run_store(rc: RunConfig, out: Path) -> list:
    params = build_medium(rc)
    n_z = int(rc.block("propagation")["n_z"])
    s = rc.block("schedule")
    storage_time = float(s["storage_time_ns"]) * NS
    ramp = float(s["ramp_ns"]) * NS
    t_off = s.get("t_off_ns")
    psi_in = _probe_waveform(rc, params, storage_time, ramp)
    sched = make_schedule(psi_in, params, storage_time,
                          t_off=None if t_off is None else float(t_off) * NS,
                          ramp=ramp, n_z=n_z)
    res = store_retrieve(psi_in, sched, params,
                         spin_decay=float(s["spin_decay_per_us"]) * PER_US,
                         n_z=n_z, ramp_shape=s["ramp_shape"])

    psi_in.to_csv(out / "psi_in.csv")
    res.psi_out.to_csv(out / "psi_out.csv")
    payload = {
        "efficiency": res.efficiency,
        "likeness": res.likeness,
        "leaked_energy": res.leaked_energy,
        "spinwave_peak": res.spinwave_peak,
        "storage_time_ns": sched.storage_time / NS,
        "t_off_ns": sched.t_off / NS,
        "t_on_ns": sched.t_on / NS,
    }
    _write_json(out / "result.json", payload)
    report = energy_audit(res.state)
    _write_json(out / "audit.json", {
        "input_energy": report.input_energy,
        "output_energy": report.output_energy,
        "coherence_energy": report.coherence_energy,
        "spinwave_energy": report.spinwave_energy,
        "dissipated_energy": report.dissipated_energy,
        "max_defect": report.max_defect,
    })
    return ["psi_in.csv", "psi_out.csv", "result.json", "audit.json"]


def _run_optimize(rc: RunConfig, out: Path) -> list:
    params = build_medium(rc)
    n_z = int(rc.block("propagation")["n_z"])
    o = rc.block("optimizer")
    ramp = float(o["ramp_ns"]) * NS
    factor = float(o["storage_factor"])
    storage_time = o.get("storage_time_ns")
    storage_time = None if storage_time is None else float(storage_time) * NS

    if rc.block("waveform"):
        w = rc.block("waveform")
        hold = storage_time
        if hold is None:
            hold = factor * float(w.get("fwhm_ns", 50.0)) * NS
        psi0 = _probe_waveform(rc, params, hold, ramp)
    else:
        psi0 = seed_waveform(params, storage_factor=factor, ramp=ramp)

    trace = iterate_optimal(psi0, params, storage_time=storage_time,
                            storage_factor=factor, ramp=ramp,
                            tol=float(o["tol"]),
                            max_iters=int(o["max_iters"]), n_z=n_z)
    artifacts = []
    for k, rec in enumerate(trace.iterations):
        name = f"iteration_{k:02d}_input.csv"
        rec.psi_in.to_csv(out / name)
        artifacts.append(name)

    last = trace.iterations[-1]
    res = store_retrieve(last.psi_in, last.schedule, params, n_z=n_z)
    last.psi_in.to_csv(out / "optimal_input.csv")
    res.psi_out.to_csv(out / "optimal_output.csv")

    payload = trace.to_dict()
    payload["optimal_efficiency"] = res.efficiency
    payload["optimal_likeness_in_out"] = res.likeness
    payload["optimal_fwhm_ns"] = last.psi_in.fwhm() / NS
    _write_json(out / "trace.json", payload)
    return artifacts + ["optimal_input.csv", "optimal_output.csv",
                        "trace.json"]


def _counts_waveform(rc: RunConfig) -> Waveform:
    w = rc.block("waveform")
    if "csv" in w:
        return build_waveform(rc, None)
    grid = build_time_grid(rc)
    if grid is None:
        center = float(w["center_ns"]) * NS
        fwhm = float(w["fwhm_ns"]) * NS
        bin_width = float(rc.block("statistics")["bin_width_ns"]) * NS
        dt = min(bin_width, fwhm / 200.0)
        grid = TimeGrid(center - 6.0 * fwhm, center + 6.0 * fwhm, dt)
    return build_waveform(rc, grid)


def _run_counts(rc: RunConfig, out: Path) -> list:
    s = rc.block("statistics")
    wf = _counts_waveform(rc)
    source = build_source(rc, wf)
    det = build_detector(rc)
    run = simulate_counts(source, det, int(s["n_trials"]), rc.seed,
                          collect_events=bool(s["collect_events"]))
    run.hist_12.to_csv(out / "histogram_d2.csv")
    run.hist_13.to_csv(out / "histogram_d3.csv")
    artifacts = ["histogram_d2.csv", "histogram_d3.csv", "metrics.json"]

    summary = run.summary
    gc2, gc2_err = conditional_g2(summary)
    payload = {
        "n1": summary.n1,
        "n12": summary.n12,
        "n13": summary.n13,
        "n123": summary.n123,
        "duration_s": summary.duration,
        "coincidence_window_ns": [summary.window[0] / NS,
                                  summary.window[1] / NS],
        "record_window_ns": [run.record_window[0] / NS,
                             run.record_window[1] / NS],
        "gc2": gc2,
        "gc2_err": gc2_err,
        "gbar": None,
        "signal_to_background": None,
        "gc2_predicted": None,
        "cauchy_schwarz_factor": None,
    }
    if s.get("floor_window_ns") is not None:
        # combined herald/anti-Stokes delay histogram across both detectors
        combined = CoincidenceHistogram(
            run.hist_12.bin_width, run.hist_12.offsets,
            np.asarray(run.hist_12.counts) + np.asarray(run.hist_13.counts))
        floor_w = tuple(float(x) * NS for x in s["floor_window_ns"])
        sig = s.get("signal_window_ns")
        sig_w = (summary.window if sig is None
                 else tuple(float(x) * NS for x in sig))
        g = gbar(combined, sig_w, floor_w)
        g2, _ = g2_cross(combined, floor_w)
        in_sig = ((combined.offsets >= sig_w[0])
                  & (combined.offsets <= sig_w[1]))
        g_max = float(g2[in_sig].max())
        payload["gbar"] = g
        payload["signal_to_background"] = g - 1.0
        payload["gc2_predicted"] = gc2_from_gbar(max(g - 1.0, 0.0)).value
        payload["cauchy_schwarz_factor"] = cauchy_schwarz(
            g_max, float(s["g_ss"]), float(s["g_asas"]))
    _write_json(out / "metrics.json", payload)

    if run.events is not None:
        events_to_csv(out / "events.csv", run.events)
        artifacts.append("events.csv")
    return artifacts


def _run_budget(rc: RunConfig, out: Path) -> list:
    b = rc.block("budget")
    budget = build_budget(rc)
    payload = {
        "elements": [[name, val] for name, val in budget.elements],
        "chain_transmission": budget.transmission,
        "duty_cycle": budget.duty_cycle,
        "detected_pair_rate_per_s": None,
        "generation_rate_per_s": None,
        "success_probability": None,
        "pairing_efficiency": None,
    }
    detected = b.get("detected_pair_rate_per_s")
    if detected is not None:
        report = loss_budget(budget, float(detected))
        payload["detected_pair_rate_per_s"] = report.detected_pair_rate
        payload["generation_rate_per_s"] = report.generation_rate
    success = b.get("success_probability")
    if success is not None:
        payload["success_probability"] = float(success)
        payload["pairing_efficiency"] = pairing_efficiency_from_success(
            float(success), budget)
    _write_json(out / "budget.json", payload)
    return ["budget.json"]


def _run_lifetime(rc: RunConfig, out: Path) -> list:
    params = build_medium(rc)
    n_z = int(rc.block("propagation")["n_z"])
    lt = rc.block("lifetime")
    times = np.asarray([float(t) * NS for t in lt["storage_times_ns"]])
    ramp = float(lt["ramp_ns"]) * NS
    spin_decay = float(lt["spin_decay_per_us"]) * PER_US
    t_off = lt.get("t_off_ns")
    psi_in = _probe_waveform(rc, params, float(times.max()), ramp)
    scan = lifetime_scan(psi_in, params, times, spin_decay,
                         t_off=None if t_off is None else float(t_off) * NS,
                         ramp=ramp, n_z=n_z)
    data = np.column_stack([scan[:, 0] / NS, scan[:, 1]])
    np.savetxt(out / "lifetime.csv", data, delimiter=",", fmt="%.9g",
               header="storage_ns,efficiency", comments="")
    tau, eta0 = fit_lifetime(scan[:, 0], scan[:, 1])
    _write_json(out / "lifetime.json", {
        "tau_1e_us": tau * 1e6,
        "eta_extrapolated": eta0,
        "spin_decay_per_us": float(lt["spin_decay_per_us"]),
        "recovered_decay_per_us": 1e-6 / tau,
    })
    return ["lifetime.csv", "lifetime.json"]


_RUNNERS = {
    "spectrum": _run_spectrum,
    "propagate": _run_propagate,
    "store": _run_store,
    "optimize": _run_optimize,
    "counts": _run_counts,
    "budget": _run_budget,
    "lifetime": _run_lifetime,
}


def _preset_root():
    return files("eitmemory") / "presets"


def _preset_names() -> list:
    return sorted(p.name[:-5] for p in _preset_root().iterdir()
                  if p.name.endswith(".json"))


def _cmd_run(args) -> int:
    rc = load_config(args.config, seed_override=args.seed)
    out = Path(args.out) if args.out else Path(Path(args.config).stem + ".out")
    out.mkdir(parents=True, exist_ok=True)
    try:
        artifacts = _RUNNERS[rc.scenario](rc, out)
    except FitConvergenceError as exc:
        print(f"error: scenario '{rc.scenario}' failed in the dephasing "
              f"fit: {exc}", file=sys.stderr)
        return 3
    except NumericsError as exc:
        print(f"error: scenario '{rc.scenario}' failed in the propagation "
              f"solver: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: scenario '{rc.scenario}' failed: {exc}",
              file=sys.stderr)
        return 3
    _write_json(out / "manifest.json", {
        "schema": SCHEMA_VERSION,
        "scenario": rc.scenario,
        "seed": rc.seed,
        "version": __version__,
        "config": rc.raw,
        "artifacts": sorted(artifacts),
    })
    print(out)
    return 0


def _cmd_validate(args) -> int:
    p = Path(args.config)
    if not p.is_file():
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return 2
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return 2
    errors = validate_config(cfg, base_dir=p.parent)
    if errors:
        for msg in errors:
            print(f"error: {msg}", file=sys.stderr)
        return 2
    print("ok")
    return 0


def _cmd_preset(args) -> int:
    names = _preset_names()
    if args.action == "list":
        for name in names:
            cfg = json.loads((_preset_root() / f"{name}.json").read_text())
            title = cfg.get("title", "")
            print(f"{name:24s} {cfg.get('scenario', '?'):10s} {title}")
        return 0
    name = args.name[:-5] if args.name.endswith(".json") else args.name
    if name not in names:
        print(f"error: unknown preset '{name}'; available: "
              + ", ".join(names), file=sys.stderr)
        return 2
    dest = Path(args.out) if args.out else Path(f"{name}.json")
    if dest.is_dir():
        dest = dest / f"{name}.json"
    with (_preset_root() / f"{name}.json").open("rb") as src, \
            open(dest, "wb") as dst:
        shutil.copyfileobj(src, dst)
    print(dest)
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eitmem",
        description="EIT quantum-memory simulator: spectra, slow light, "
                    "storage/retrieval, waveform optimization, and photon "
                    "counting statistics.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario from a JSON "
                                       "config")
    run_p.add_argument("config", help="path to the run configuration")
    run_p.add_argument("--out", help="output directory (default: "
                                     "<config stem>.out)")
    run_p.add_argument("--seed", type=int, help="override the config seed")

    val_p = sub.add_parser("validate", help="check a config without "
                                            "running it")
    val_p.add_argument("config", help="path to the run configuration")

    pre_p = sub.add_parser("preset", help="list or copy bundled presets")
    pre_sub = pre_p.add_subparsers(dest="action", required=True)
    pre_sub.add_parser("list", help="show available presets")
    copy_p = pre_sub.add_parser("copy", help="copy a preset to a file")
    copy_p.add_argument("name", help="preset name from `preset list`")
    copy_p.add_argument("--out", help="destination path (default: "
                                      "<name>.json)")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        return _cmd_preset(args)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"error: {msg}", file=sys.stderr)
        return 2
    except (FitConvergenceError, NumericsError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
