"""Waveform/grid primitives and the time-domain march: vacuum and two-level
limits, agreement with the spectral filter, energy accounting, and the step
validator's guard rails."""
import numpy as np
import pytest

from eitmemory import (ControlProfile, MediumParams,
                       SwitchEvent, TimeGrid, Waveform, energy_audit,
                       gaussian_pulse, peak_delay, propagate, spectral_oracle,
                       spinwave_energy, square_pulse)


def test_grid_sample_count_and_axis():
    grid = TimeGrid(0.0, 1e-6, 1e-9)
    assert grid.n_t == 1001
    t = grid.times()
    assert t[0] == 0.0
    assert t[-1] == pytest.approx(1e-6, rel=1e-12)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1e-6, -1e-9)
    with pytest.raises(ValueError):
        TimeGrid(1e-6, 0.0, 1e-9)


def test_grid_equality_tolerates_rounding():
    a = TimeGrid(0.0, 1e-6, 1e-9)
    b = TimeGrid(0.0, 1e-6, 1e-9 * (1 + 1e-12))
    assert a == b
    assert hash(a) == hash(b)


def test_gaussian_pulse_moments():
    grid = TimeGrid(0.0, 600e-9, 0.25e-9)
    wf = gaussian_pulse(grid, 300e-9, 50e-9, energy=0.7)
    assert wf.energy() == pytest.approx(0.7, rel=1e-12)
    assert wf.centroid() == pytest.approx(300e-9, rel=1e-9)
    assert wf.fwhm() == pytest.approx(50e-9, rel=1e-3)


def test_square_pulse_width():
    grid = TimeGrid(0.0, 600e-9, 0.25e-9)
    wf = square_pulse(grid, 300e-9, 80e-9)
    assert wf.energy() == pytest.approx(1.0, rel=1e-12)
    assert wf.fwhm() == pytest.approx(80e-9, rel=5e-3)


def test_clipped_pulse_has_no_width():
    grid = TimeGrid(0.0, 100e-9, 0.5e-9)
    wf = gaussian_pulse(grid, 100e-9, 80e-9)  # peak at the grid edge
    with pytest.raises(ValueError, match="clipped"):
        wf.fwhm()


def test_waveform_csv_round_trip(tmp_path):
    grid = TimeGrid(0.0, 400e-9, 0.5e-9)
    wf = gaussian_pulse(grid, 200e-9, 60e-9)
    wf = Waveform(grid, wf.samples * np.exp(0.3j))  # nonzero phase
    path = tmp_path / "wf.csv"
    wf.to_csv(path)
    back = Waveform.from_csv(path)
    assert back.grid == wf.grid
    assert np.allclose(back.samples, wf.samples, rtol=1e-7, atol=1e-12)


def test_control_profile_constant():
    grid = TimeGrid(0.0, 100e-9, 1e-9)
    control = ControlProfile.constant(grid, 11.0)
    assert np.all(control.omega_c == 11.0)
    assert np.all(control.levels_at(np.array([0.0, 5e-8, 1e-7])) == 11.0)


def test_control_profile_switching():
    grid = TimeGrid(0.0, 1000e-9, 1e-9)
    events = (SwitchEvent(300e-9, 0.0, 50e-9),
              SwitchEvent(600e-9, 11.0, 50e-9))
    control = ControlProfile(grid, 11.0, events)
    lv = control.levels_at(np.array([0.0, 299e-9, 325e-9, 350e-9, 500e-9,
                                     625e-9, 650e-9, 900e-9]))
    assert lv[0] == lv[1] == 11.0
    assert lv[2] == pytest.approx(5.5)  # smoothstep midpoint is exactly half
    assert lv[3] == 0.0 and lv[4] == 0.0
    assert lv[5] == pytest.approx(5.5)
    assert lv[6] == lv[7] == 11.0


def test_control_profile_rejects_overlapping_events():
    grid = TimeGrid(0.0, 1000e-9, 1e-9)
    with pytest.raises(ValueError):
        ControlProfile(grid, 11.0, (SwitchEvent(300e-9, 0.0, 50e-9),
                                    SwitchEvent(320e-9, 11.0, 50e-9)))


def test_vacuum_limit_passes_pulse_through():
    grid = TimeGrid(0.0, 400e-9, 0.2e-9)
    psi = gaussian_pulse(grid, 150e-9, 40e-9)
    params = MediumParams(od=0.0)
    out, state = propagate(psi, ControlProfile.constant(grid, 0.0), params)
    assert np.max(np.abs(out.samples - psi.samples)) < 1e-10
    assert state.spinwave_series[-1] < 1e-20


def test_march_matches_spectral_filter_mid_od():
    grid = TimeGrid(0.0, 700e-9, 0.2e-9)
    psi = gaussian_pulse(grid, 200e-9, 60e-9)
    params = MediumParams(od=20.0, omega_c=8.0, gamma12=0.01)
    out, _ = propagate(psi, ControlProfile.constant(grid, 8.0), params)
    oracle = spectral_oracle(psi, params)
    l2 = np.sqrt(np.trapezoid(np.abs(out.samples - oracle.samples) ** 2,
                              dx=grid.dt) / psi.energy())
    assert l2 < 1e-3


def test_spectral_oracle_is_linear():
    grid = TimeGrid(0.0, 500e-9, 0.25e-9)
    psi = gaussian_pulse(grid, 200e-9, 50e-9)
    params = MediumParams(od=30.0, omega_c=9.0)
    base = spectral_oracle(psi, params)
    scaled = spectral_oracle(Waveform(grid, 3.0 * psi.samples), params)
    assert np.allclose(scaled.samples, 3.0 * base.samples, rtol=1e-12)


def test_energy_audit_closes():
    grid = TimeGrid(0.0, 800e-9, 0.1e-9)
    psi = gaussian_pulse(grid, 150e-9, 50e-9)
    params = MediumParams(od=60.0, omega_c=11.0, gamma12=0.03)
    _, state = propagate(psi, ControlProfile.constant(grid, 11.0), params)
    report = energy_audit(state)
    assert report.max_defect < 1e-4
    assert report.input_energy == pytest.approx(1.0, rel=1e-6)
    # boundary fluxes accumulate monotonically
    assert np.all(np.diff(state.flux_in_series) >= -1e-15)
    assert np.all(np.diff(state.flux_out_series) >= -1e-15)


def test_peak_delay_of_shifted_copy():
    grid = TimeGrid(0.0, 600e-9, 0.5e-9)
    psi = gaussian_pulse(grid, 200e-9, 50e-9)
    t = grid.times()
    delay = 37.25e-9
    shifted = np.interp(t - delay, t, psi.samples.real, left=0.0, right=0.0)
    out = Waveform(grid, shifted.astype(complex))
    assert peak_delay(psi, out) == pytest.approx(delay, abs=0.2e-9)


def test_snapshots_follow_stride():
    grid = TimeGrid(0.0, 400e-9, 0.5e-9)
    psi = gaussian_pulse(grid, 150e-9, 40e-9)
    params = MediumParams(od=40.0, omega_c=10.0)
    _, state = propagate(psi, ControlProfile.constant(grid, 10.0), params,
                         n_z=80, snapshot_stride=100)
    assert state.snapshots.shape[1] == 80
    assert state.snapshots.shape[0] == state.snapshot_times.size > 2
    assert np.all(np.diff(state.snapshot_times) > 0)


def test_spinwave_energy_interpolates():
    grid = TimeGrid(0.0, 500e-9, 0.25e-9)
    psi = gaussian_pulse(grid, 150e-9, 40e-9)
    params = MediumParams(od=60.0, omega_c=11.0)
    _, state = propagate(psi, ControlProfile.constant(grid, 11.0), params)
    mid = 0.5 * (state.times[100] + state.times[101])
    e = spinwave_energy(state, mid)
    assert min(state.spinwave_series[100],
               state.spinwave_series[101]) <= e <= max(
                   state.spinwave_series[100], state.spinwave_series[101])


def test_step_validator_names_the_violation():
    grid = TimeGrid(0.0, 400e-9, 0.5e-9)
    psi = gaussian_pulse(grid, 150e-9, 40e-9)
    params = MediumParams(od=60.0, omega_c=11.0)
    control = ControlProfile.constant(grid, 11.0)
    with pytest.raises(ValueError, match="n_z"):
        propagate(psi, control, params, n_z=10)

    coarse = TimeGrid(0.0, 4000e-9, 40e-9)
    psi2 = gaussian_pulse(coarse, 1500e-9, 400e-9)
    with pytest.raises(ValueError, match="dt too coarse"):
        propagate(psi2, ControlProfile.constant(coarse, 11.0), params)

    fine = TimeGrid(0.0, 1000e-9, 2e-9)
    psi3 = gaussian_pulse(fine, 300e-9, 80e-9)
    slow_ramp = ControlProfile(fine, 11.0, (SwitchEvent(500e-9, 0.0, 10e-9),))
    with pytest.raises(ValueError, match="ramp"):
        propagate(psi3, slow_ramp, MediumParams(od=2.0, omega_c=11.0))


def test_grid_mismatch_rejected():
    grid = TimeGrid(0.0, 400e-9, 0.5e-9)
    other = TimeGrid(0.0, 500e-9, 0.5e-9)
    psi = gaussian_pulse(grid, 150e-9, 40e-9)
    control = ControlProfile.constant(other, 11.0)
    with pytest.raises(ValueError):
        propagate(psi, control, MediumParams(od=10.0, omega_c=5.0))


def test_spinwave_csv_columns(tmp_path):
    grid = TimeGrid(0.0, 400e-9, 0.5e-9)
    psi = gaussian_pulse(grid, 150e-9, 40e-9)
    params = MediumParams(od=40.0, omega_c=10.0)
    _, state = propagate(psi, ControlProfile.constant(grid, 10.0), params,
                         n_z=60)
    path = tmp_path / "spin.csv"
    state.save_spinwave_csv(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (60, 3)
    assert np.allclose(data[:, 0], state.z, rtol=1e-8)
