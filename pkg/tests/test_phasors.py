"""Phasor extraction, power bookkeeping, and the phasor file format."""

import dataclasses
import math

import numpy as np
import pytest

from voxdosim.fdtd import (CalibrationError, ConvergenceError, FdtdSolver,
                           PhasorFormatError, SimulationDomain, calibrate_power,
                           cell_centered_e, cell_centered_h, default_flux_box,
                           load_phasors, poynting_flux_box, save_phasors)
from conftest import air_phantom


@pytest.fixture(scope="module")
def dipole_run():
    """One small vacuum dipole solve shared by the tests in this module."""
    domain = SimulationDomain(air_phantom(), padding=14, pml_cells=10,
                              frequency_hz=6e9)
    solver = FdtdSolver(domain)
    c = solver.cell_dims
    solver.add_drive("z", [c[0] // 2], [c[1] // 2], [c[2] // 2],
                     bbox=((c[0] // 2,) * 3, (c[0] // 2,) * 3))
    phasors = solver.run_to_steady_state(tol=1e-4, max_periods=40)
    return solver, phasors


def test_steady_state_converges(dipole_run):
    _, ph = dipole_run
    assert ph.converged
    assert ph.periods_accumulated >= 1
    ph.require_converged()  # must not raise


def test_phasor_reconstructs_the_time_series(dipole_run):
    # continue the same solver one full period; the stored phasor must
    # reproduce the wave at the probe as Re[phasor * exp(i w t)]
    solver, ph = dipole_run
    c = solver.cell_dims
    probe = (c[0] // 2 + 5, c[1] // 2, c[2] // 2)
    w = 2.0 * math.pi * ph.frequency_hz
    measured, predicted = [], []
    for _ in range(solver.steps_per_period):
        solver.step()
        t = solver.n * solver.dt
        measured.append(solver.ez[probe])
        predicted.append((ph.ez[probe] * np.exp(1j * w * t)).real)
    measured = np.asarray(measured)
    predicted = np.asarray(predicted)
    scale = np.max(np.abs(measured))
    assert scale > 0.0
    # a sign/convention defect would flip the phase and miss by ~200%; the
    # few-percent floor here is the leftover turn-on transient
    assert np.max(np.abs(measured - predicted)) < 0.05 * scale


def test_flux_is_box_independent(dipole_run):
    # vacuum carries no loss: any closed box around the source sees the
    # same time-averaged power
    _, ph = dipole_run
    p1 = poynting_flux_box(ph, *default_flux_box(ph, clearance=3))
    p2 = poynting_flux_box(ph, *default_flux_box(ph, clearance=6))
    assert p1 > 0.0 and p2 > 0.0
    assert abs(p1 - p2) / p1 < 0.02


def test_calibration_bookkeeping(dipole_run):
    _, ph = dipole_run
    assert not ph.calibrated
    cal = calibrate_power(ph, 0.25)
    assert cal.calibrated
    assert cal.target_power_w == 0.25
    assert cal.measured_power_w == poynting_flux_box(ph, *default_flux_box(ph))
    assert cal.power_factor == 0.25 / cal.measured_power_w
    assert cal.amplitude_factor == math.sqrt(cal.power_factor)
    # raw arrays are untouched: calibration happens at read-out
    assert np.array_equal(cal.ez, ph.ez)
    # calibrated flux read-out applies the factor
    flux = poynting_flux_box(cal, *default_flux_box(cal), calibrated=True)
    assert flux == pytest.approx(0.25, rel=1e-12)


def test_calibration_rejects_bad_targets(dipole_run):
    _, ph = dipole_run
    with pytest.raises(CalibrationError):
        calibrate_power(ph, 0.0)
    with pytest.raises(CalibrationError):
        calibrate_power(ph, -1.0)


def test_zero_field_cannot_calibrate(dipole_run):
    _, ph = dipole_run
    dead = dataclasses.replace(
        ph, **{c: np.zeros_like(getattr(ph, c))
               for c in ("ex", "ey", "ez", "hx", "hy", "hz")})
    with pytest.raises(CalibrationError):
        calibrate_power(dead, 1.0)


def test_flux_box_validation(dipole_run):
    _, ph = dipole_run
    n = ph.cell_dims
    # a box reaching into the PML is not a physical power measurement
    with pytest.raises(ValueError):
        poynting_flux_box(ph, (2, 2, 2), (n[0] - 3, n[1] - 3, n[2] - 3))
    with pytest.raises(ValueError):
        poynting_flux_box(ph, (15, 15, 15), (14, 16, 16))  # lo > hi


def test_unconverged_field_raises_on_demand(dipole_run):
    _, ph = dipole_run
    bad = dataclasses.replace(ph, converged=False)
    with pytest.raises(ConvergenceError):
        bad.require_converged()


def test_cell_centered_shapes_and_linearity(dipole_run):
    _, ph = dipole_run
    e = cell_centered_e(ph)
    h = cell_centered_h(ph)
    for comp in e + h:
        assert comp.shape == ph.cell_dims
    doubled = dataclasses.replace(
        ph, **{c: 2.0 * getattr(ph, c)
               for c in ("ex", "ey", "ez", "hx", "hy", "hz")})
    e2 = cell_centered_e(doubled)
    for a, b in zip(e, e2):
        assert np.array_equal(2.0 * a, b)


def test_save_load_round_trip(tmp_path, dipole_run):
    _, ph = dipole_run
    cal = calibrate_power(ph, 0.1)
    path = tmp_path / "fields.vxf"
    save_phasors(path, cal)
    loaded = load_phasors(path)
    for comp in ("ex", "ey", "ez", "hx", "hy", "hz"):
        assert np.array_equal(getattr(loaded, comp), getattr(cal, comp)), comp
    assert loaded.frequency_hz == cal.frequency_hz
    assert loaded.resolution_m == cal.resolution_m
    assert loaded.cell_dims == cal.cell_dims
    assert loaded.phantom_offset == cal.phantom_offset
    assert loaded.phantom_dims == cal.phantom_dims
    assert loaded.pml_cells == cal.pml_cells
    assert loaded.boundary == cal.boundary
    assert loaded.source_bbox == cal.source_bbox
    assert loaded.converged == cal.converged
    assert loaded.measured_power_w == cal.measured_power_w
    assert loaded.target_power_w == cal.target_power_w
    # a second save must be byte-identical
    path2 = tmp_path / "fields2.vxf"
    save_phasors(path2, loaded)
    assert path.read_bytes() == path2.read_bytes()


def test_uncalibrated_round_trip_keeps_none(tmp_path, dipole_run):
    _, ph = dipole_run
    path = tmp_path / "raw.vxf"
    save_phasors(path, ph)
    loaded = load_phasors(path)
    assert loaded.measured_power_w is None
    assert loaded.target_power_w is None
    assert not loaded.calibrated


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "junk.vxf"
    path.write_bytes(b"NOTPHASORS 1\nend_header\n")
    with pytest.raises(PhasorFormatError):
        load_phasors(path)


def test_load_rejects_truncation(tmp_path, dipole_run):
    _, ph = dipole_run
    path = tmp_path / "trunc.vxf"
    save_phasors(path, ph)
    data = path.read_bytes()
    path.write_bytes(data[:-33])
    with pytest.raises(PhasorFormatError):
        load_phasors(path)
