"""Acceptance gate: every headline requirement runs at its stated tolerance
and appends one PASS/FAIL line with the measured values to
acceptance_report.txt at the repository root."""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from eitmemory import (ControlProfile, DetectorConfig, LossBudget,
                       MediumParams, SourceConfig, TimeGrid, Waveform,
                       __version__, cauchy_schwarz, cli, conditional_g2,
                       design_grid, fit_dephasing, fit_grid, fit_lifetime,
                       gaussian_pulse, gc2_from_gbar, group_delay,
                       lifetime_scan, loss_budget, make_schedule,
                       pairing_efficiency_from_success, peak_delay, propagate,
                       shape_overlap, simulate_counts, spectral_oracle,
                       store_retrieve, transmission_spectrum)

NS = 1e-9
REPORT = Path(__file__).resolve().parents[1] / "acceptance_report.txt"


@pytest.fixture(scope="module", autouse=True)
def _fresh_report():
    REPORT.write_text(
        f"acceptance report: eitmemory {__version__}\n"
        "one line per criterion; all values are measured by this run\n"
        + "-" * 72 + "\n")
    yield


def _check(num: int, name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} {num:02d} {name}: {detail}"
    with open(REPORT, "a") as fh:
        fh.write(line + "\n")
    print(line)
    assert ok, line


def _preset(name: str) -> dict:
    return json.loads((cli._preset_root() / f"{name}.json").read_text())


def _medium(cfg: dict) -> MediumParams:
    m = cfg["medium"]
    return MediumParams(od=m["od"],
                        gamma13=m.get("gamma13_mhz", 3.0) * 2e6 * np.pi,
                        gamma12=m.get("gamma12_gamma13", 0.0),
                        omega_c=m.get("omega_c_gamma13", 0.0))


def _l2_error(psi_out: Waveform, oracle: Waveform, psi_in: Waveform) -> float:
    diff = np.abs(psi_out.samples - oracle.samples) ** 2
    return float(np.sqrt(np.trapezoid(diff, dx=psi_in.grid.dt)
                         / psi_in.energy()))


def _slow_light_run(dt_scale: float = 1.0, nz_scale: int = 1) -> dict:
    cfg = _preset("slow-light-50ns")
    params = _medium(cfg)
    g, w = cfg["grid"], cfg["waveform"]
    grid = TimeGrid(g["t_start_ns"] * NS, g["t_end_ns"] * NS,
                    g["dt_ns"] * NS * dt_scale)
    psi = gaussian_pulse(grid, w["center_ns"] * NS, w["fwhm_ns"] * NS)
    control = ControlProfile.constant(grid, params.omega_c)
    t0 = time.perf_counter()
    psi_out, _ = propagate(psi, control, params,
                           n_z=cfg["propagation"]["n_z"] * nz_scale)
    runtime = time.perf_counter() - t0
    return {"params": params, "psi_in": psi, "psi_out": psi_out,
            "efficiency": psi_out.energy() / psi.energy(),
            "runtime": runtime}


@pytest.fixture(scope="module")
def slow_light():
    return _slow_light_run()


def _unshaped_run(dt_scale: float = 1.0, nz_scale: int = 1) -> float:
    cfg = _preset("storage-unshaped-200ns")
    params = _medium(cfg)
    w, s = cfg["waveform"], cfg["schedule"]
    fwhm, center = w["fwhm_ns"] * NS, w["center_ns"] * NS
    storage, ramp = s["storage_time_ns"] * NS, s["ramp_ns"] * NS
    base_grid, c0 = design_grid(params, fwhm, storage, ramp)
    shift = center - c0
    grid = TimeGrid(base_grid.t_start + shift, base_grid.t_end + shift,
                    base_grid.dt * dt_scale)
    psi = gaussian_pulse(grid, center, fwhm)
    n_z = 200 * nz_scale
    sched = make_schedule(psi, params, storage, ramp=ramp, n_z=n_z)
    return store_retrieve(psi, sched, params, n_z=n_z).efficiency


@pytest.fixture(scope="module")
def unshaped_efficiency():
    return _unshaped_run()


def _lifetime_first_point(dt_scale: float = 1.0, nz_scale: int = 1) -> float:
    cfg = _preset("lifetime-ground-state")
    params = _medium(cfg)
    w, lt = cfg["waveform"], cfg["lifetime"]
    t_first = lt["storage_times_ns"][0] * NS
    ramp = lt["ramp_ns"] * NS
    base_grid, _ = design_grid(params, w["fwhm_ns"] * NS, t_first, ramp)
    grid = TimeGrid(base_grid.t_start, base_grid.t_end,
                    base_grid.dt * dt_scale)
    psi = gaussian_pulse(grid, w["center_ns"] * NS, w["fwhm_ns"] * NS)
    scan = lifetime_scan(psi, params, [t_first],
                         spin_decay=lt["spin_decay_per_us"] * 1e6,
                         ramp=ramp, n_z=200 * nz_scale)
    return float(scan[0, 1])


def _refined_store(params: MediumParams, record) -> float:
    """Re-run one stored iterate at half dt and doubled n_z."""
    g = record.psi_in.grid
    fine = TimeGrid(g.t_start, g.t_end, g.dt / 2.0)
    t, tf = g.times(), fine.times()
    s = record.psi_in.samples
    samples = (np.interp(tf, t, s.real) + 1j * np.interp(tf, t, s.imag))
    psi = Waveform(fine, samples)
    return store_retrieve(psi, record.schedule, params, n_z=400).efficiency


def test_a01_two_level_transmission():
    params = MediumParams(od=2.0, omega_c=0.0)
    grid = TimeGrid(0.0, 11200e-9, 4e-9)
    psi = gaussian_pulse(grid, 5600e-9, 1400e-9)
    t0 = time.perf_counter()
    psi_out, _ = propagate(psi, ControlProfile.constant(grid, 0.0), params,
                           n_z=200)
    runtime = time.perf_counter() - t0
    eff = psi_out.energy() / psi.energy()
    target = float(np.exp(-2.0))
    rel = abs(eff - target) / target
    ok = rel < 0.01 and runtime < 10.0
    _check(1, "two-level transmission equals exp(-od)", ok,
           f"eff {eff:.6f} vs exp(-2) {target:.6f}, rel dev {rel:.2e} "
           f"(tol 1e-2), runtime {runtime:.2f} s (limit 10 s)")


def test_a02_solver_matches_spectral_filter(slow_light):
    oracle = spectral_oracle(slow_light["psi_in"], slow_light["params"])
    l2 = _l2_error(slow_light["psi_out"], oracle, slow_light["psi_in"])
    runtime = slow_light["runtime"]
    ok = l2 < 0.01 and runtime < 30.0
    _check(2, "march agrees with the linear-filter oracle", ok,
           f"L2 error {l2:.2e} (tol 1e-2) for a 50 ns pulse at od 60, "
           f"runtime {runtime:.2f} s (limit 30 s)")


def test_a03_narrowband_peak_arrives_at_group_delay(slow_light):
    params = MediumParams(od=60.0, omega_c=11.0)
    gd = group_delay(params)
    analytic = 2.0 * params.od / (params.omega_c**2 * params.gamma13)
    grid = TimeGrid(0.0, 2000e-9, 0.5e-9)
    psi = gaussian_pulse(grid, 600e-9, 200e-9)
    psi_out, _ = propagate(psi, ControlProfile.constant(grid, params.omega_c),
                           params, n_z=200)
    delay = peak_delay(psi, psi_out)
    rel = abs(delay - gd) / gd
    # a 50 ns pulse is not narrowband here; its dispersion-advanced peak is
    # reported for reference, not gated
    wide = peak_delay(slow_light["psi_in"], slow_light["psi_out"])
    ok = rel < 0.05 and abs(gd - analytic) / analytic < 1e-3
    _check(3, "narrowband peak delay matches the group delay", ok,
           f"200 ns probe delayed {delay / NS:.2f} ns vs group delay "
           f"{gd / NS:.4f} ns (analytic {analytic / NS:.4f}), rel dev "
           f"{rel:.3f} (tol 0.05); 50 ns probe reference {wide / NS:.1f} ns")


def test_a04_grid_convergence(slow_light, unshaped_efficiency, optimum_a,
                              optimum_b):
    params_a, trace_a = optimum_a
    params_b, trace_b = optimum_b
    cases = [
        ("slow-light-50ns", slow_light["efficiency"],
         _slow_light_run(dt_scale=0.5, nz_scale=2)["efficiency"]),
        ("storage-unshaped-200ns", unshaped_efficiency,
         _unshaped_run(dt_scale=0.5, nz_scale=2)),
        ("paper-fig3", trace_a.iterations[-1].efficiency,
         _refined_store(params_a, trace_a.iterations[-1])),
        ("paper-fig4", trace_b.iterations[-1].efficiency,
         _refined_store(params_b, trace_b.iterations[-1])),
        ("lifetime-ground-state", _lifetime_first_point(),
         _lifetime_first_point(dt_scale=0.5, nz_scale=2)),
    ]
    rows = []
    ok = True
    for name, base, fine in cases:
        rel = abs(fine - base) / base
        ok = ok and rel < 0.005
        rows.append(f"{name} {base:.5f}->{fine:.5f} ({rel:.2e})")
    _check(4, "efficiencies stable under dt/2 and 2*n_z", ok,
           "rel changes (tol 5e-3): " + "; ".join(rows))


def test_a05_optimizer_climbs_and_converges(optimum_a, optimum_b):
    ok = True
    rows = []
    for label, (_, trace) in (("A", optimum_a), ("B", optimum_b)):
        eff = trace.efficiencies
        ok = (ok and bool(np.all(np.diff(eff) >= -1e-6)) and trace.converged
              and trace.stop_reason == "tolerance" and len(eff) <= 10)
        rows.append(f"{label} effs [" + ", ".join(f"{e:.4f}" for e in eff)
                    + f"] in {len(eff)} iterations")
    _check(5, "iteration is monotone and converges at tol 0.999", ok,
           "; ".join(rows) + " (limit 10; reference runs settle in 3)")


def test_a06_optimum_is_time_reversal_symmetric(optimum_a, optimum_b):
    vals = {}
    for label, (params, trace) in (("A", optimum_a), ("B", optimum_b)):
        last = trace.iterations[-1]
        res = store_retrieve(last.psi_in, last.schedule, params)
        vals[label] = res.likeness
    ok = vals["A"] >= 0.98 and vals["B"] >= 0.98
    _check(6, "retrieved waveform mirrors the input at the optimum", ok,
           f"likeness A {vals['A']:.5f}, B {vals['B']:.5f} (floor 0.98; "
           f"experimental reference 0.93 and 0.96)")


def test_a07_efficiency_ordering(optimum_a, optimum_b, unshaped_efficiency):
    _, trace_a = optimum_a
    _, trace_b = optimum_b
    eta_a = trace_a.iterations[-1].efficiency
    eta_b = trace_b.iterations[-1].efficiency
    eta_u = unshaped_efficiency
    ok = eta_b > eta_a > eta_u
    ref = (0.49, 0.36, 0.20)
    _check(7, "shaped beats unshaped, lower dephasing beats higher", ok,
           f"B {eta_b:.4f} > A {eta_a:.4f} > unshaped {eta_u:.4f}; "
           f"experimental reference {ref[0]:.2f}/{ref[1]:.2f}/{ref[2]:.2f}, "
           f"deviations {eta_b - ref[0]:+.3f}/{eta_a - ref[1]:+.3f}/"
           f"{eta_u - ref[2]:+.3f} (ordering gated, absolutes reported)")


def test_a08_optimum_ignores_the_seed(optimum_a, optimum_a_square,
                                      optimum_b, optimum_b_square):
    ok = True
    rows = []
    for label, gauss, square in (("A", optimum_a, optimum_a_square),
                                 ("B", optimum_b, optimum_b_square)):
        _, tg = gauss
        _, ts = square
        overlap = shape_overlap(tg.optimal, ts.optimal, optimize=True)
        gap = abs(tg.iterations[-1].efficiency - ts.iterations[-1].efficiency)
        ok = ok and overlap >= 0.99 and gap < 0.005
        rows.append(f"{label} overlap {overlap:.5f}, eff gap {gap:.5f}")
    _check(8, "gaussian and square seeds reach the same optimum", ok,
           "; ".join(rows) + " (floors 0.99 and 5e-3)")


def test_a09_cauchy_schwarz_arithmetic():
    r_peak = cauchy_schwarz(150.0, 2.0, 2.0)
    r_avg = cauchy_schwarz(95.0, 2.0, 2.0)
    ok = r_peak == 5625.0 and r_avg == 2256.25
    _check(9, "nonclassicality factors are exact", ok,
           f"(150, 2, 2) -> {r_peak}, (95, 2, 2) -> {r_avg} "
           f"(expected 5625 and 2256.25)")


def test_a10_counting_matches_correlation_prediction():
    grid = TimeGrid(0.0, 300e-9, 0.5e-9)
    wf = gaussian_pulse(grid, 150e-9, 50e-9)
    det = DetectorConfig(coincidence_window=100e-9,
                         record_window=(-250e-9, 450e-9))
    window = 100e-9
    t = grid.times()
    w = np.abs(wf.samples) ** 2
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (w[:-1] + w[1:]) * grid.dt)])
    cdf = cum / cum[-1]
    in_window = float(np.interp(200e-9, t, cdf) - np.interp(100e-9, t, cdf))

    t0 = time.perf_counter()
    rows = []
    ok = True
    for ratio, pairing in ((2.0, 0.1), (5.0, 0.2), (10.0, 0.3), (23.0, 0.46)):
        noise = pairing * in_window / (ratio * window)
        src = SourceConfig(wf, pairing_efficiency=pairing, noise_rate=noise)
        run = simulate_counts(src, det, 1_000_000, seed=42)
        gc2, err = conditional_g2(run.summary)
        pred = gc2_from_gbar(ratio).value
        dev = (gc2 - pred) / err
        ok = ok and abs(gc2 - pred) <= 3.0 * err
        rows.append(f"ratio {ratio:g}: mc {gc2:.4f} vs predicted {pred:.4f} "
                    f"({dev:+.2f} sigma)")
    runtime = time.perf_counter() - t0
    exact = gc2_from_gbar(23.0).value == 47.0 / 576.0
    ok = ok and exact and runtime < 120.0
    _check(10, "measured gc2 follows (2g+1)/(g+1)^2", ok,
           "; ".join(rows) + f"; prediction at 23 exactly 47/576: {exact}; "
           f"runtime {runtime:.1f} s (limit 120 s)")


def test_a11_noiseless_source_is_single_photon():
    grid = TimeGrid(0.0, 300e-9, 0.5e-9)
    wf = gaussian_pulse(grid, 150e-9, 50e-9)
    det = DetectorConfig(coincidence_window=100e-9)
    rows = []
    ok = True
    for n in (10_000, 300_000):
        src = SourceConfig(wf, pairing_efficiency=0.5)
        run = simulate_counts(src, det, n, seed=1)
        gc2, _ = conditional_g2(run.summary)
        ok = ok and run.summary.n123 == 0 and gc2 == 0.0
        rows.append(f"n={n}: n123={run.summary.n123}, gc2={gc2}")
    _check(11, "zero background gives exactly zero gc2", ok, "; ".join(rows))


def test_a12_loss_budget_rates_and_pairing():
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
    gen_low = loss_budget(chain, 8.0).generation_rate
    gen_high = loss_budget(chain, 47.0).generation_rate
    gen_frac = loss_budget(chain, 7400.0 / 900.0).generation_rate
    arm = LossBudget(elements=(("fiber_coupling_memory", 0.70),
                               ("eom_transmission", 0.50),
                               ("fiber_connection", 0.61),
                               ("fiber_coupling_source", 0.72),
                               ("filter", 0.65),
                               ("detector_qe", 0.50)))
    p_low = pairing_efficiency_from_success(0.028, arm)
    p_high = pairing_efficiency_from_success(0.041, arm)
    ok = (abs(gen_low / 4900.0 - 1.0) < 0.03
          and abs(gen_high / 28900.0 - 1.0) < 0.03
          and abs(p_low - 0.56) < 0.01 and abs(p_high - 0.82) < 0.01)
    _check(12, "loss chain reproduces the published rates", ok,
           f"generation {gen_low:.1f}/s vs 4900 and {gen_high:.1f}/s vs "
           f"28900 (tol 3%); pairing {p_low:.4f} vs 0.56 and {p_high:.4f} "
           f"vs 0.82 (tol 1 pp); exact-fraction input 7400/900 pairs/s "
           f"gives {gen_frac:.0f}/s, reported unasserted")


def test_a13_dephasing_fit_round_trip():
    rows = []
    ok = True
    for gamma in (0.01, 0.03):
        truth = MediumParams(od=60.0, omega_c=11.0, gamma12=gamma)
        spectrum = transmission_spectrum(truth, fit_grid(truth))
        fit = fit_dephasing(spectrum, truth)
        rel = abs(fit.gamma12 - gamma) / gamma
        ok = ok and rel < 0.05
        rows.append(f"{gamma:g} -> {fit.gamma12:.6f} (rel {rel:.1e})")
    _check(13, "dephasing recovered from noiseless spectra", ok,
           "; ".join(rows) + " (tol 5%)")


def test_a14_lifetime_recovery():
    cfg = _preset("lifetime-ground-state")
    params = _medium(cfg)
    w, lt = cfg["waveform"], cfg["lifetime"]
    times = np.asarray(lt["storage_times_ns"]) * NS
    ramp = lt["ramp_ns"] * NS
    grid, _ = design_grid(params, w["fwhm_ns"] * NS, float(times.max()), ramp)
    psi = gaussian_pulse(grid, w["center_ns"] * NS, w["fwhm_ns"] * NS)
    scan = lifetime_scan(psi, params, times,
                         spin_decay=lt["spin_decay_per_us"] * 1e6, ramp=ramp)
    tau, _ = fit_lifetime(scan[:, 0], scan[:, 1])
    target = 1.0 / (lt["spin_decay_per_us"] * 1e6)
    rel = abs(tau - target) / target
    ok = rel < 0.05
    _check(14, "storage-time scan recovers the 1.6 us lifetime", ok,
           f"fitted tau {tau * 1e6:.4f} us vs {target * 1e6:.1f} us, "
           f"rel dev {rel:.1e} (tol 5%)")


def test_a15_reruns_are_byte_identical(tmp_path):
    cfg = tmp_path / "counts.json"
    assert cli.main(["preset", "copy", "counts-heralded", "--out",
                     str(cfg)]) == 0
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    code_a = cli.main(["run", str(cfg), "--out", str(out_a)])
    code_b = cli.main(["run", str(cfg), "--out", str(out_b)])
    names = sorted(p.name for p in out_a.iterdir())
    same = (code_a == 0 and code_b == 0
            and names == sorted(p.name for p in out_b.iterdir()))
    diffs = []
    for name in names:
        if (out_a / name).read_bytes() != (out_b / name).read_bytes():
            diffs.append(name)
    ok = same and not diffs
    _check(15, "identical config and seed rerun byte-identically", ok,
           f"compared {len(names)} artifacts ({', '.join(names)}); "
           f"mismatches: {diffs if diffs else 'none'}")
