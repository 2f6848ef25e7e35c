"""Discrete invariants of the time-domain solver.

These run on deliberately tiny grids: every property here (conservation,
reciprocity to scaling, symmetry, stability) is resolution-independent, so
small grids prove as much as big ones and keep the suite fast.
"""

import dataclasses
import math

import numpy as np
import pytest

from voxdosim.constants import C0, EPS0
from voxdosim.fdtd import (FdtdSolver, GaussianPulse, SimulationDomain,
                           SourceSpec, StabilityError,
                           UnsupportedMaterialError, em_energy)
from voxdosim.materials import DispersiveModel, Material
from conftest import air_phantom, block_phantom, lossy_dielectric


def _wall_domain(n=4, pad=10, f=6e9):
    return SimulationDomain(air_phantom(n, n, n), padding=pad, pml_cells=0,
                            frequency_hz=f, boundary=("wall",) * 3)


def test_zero_field_stays_zero():
    solver = FdtdSolver(_wall_domain())
    solver.run(50)
    for name in ("ex", "ey", "ez", "hx", "hy", "hz"):
        arr = getattr(solver, name)
        assert np.count_nonzero(arr) == 0


def _snapshot_energy(solver):
    """Time-centered discrete energy: E at step n paired with H(n-1/2)*H(n+1/2)."""
    e_snap = tuple(getattr(solver, c).copy() for c in ("ex", "ey", "ez"))
    h_prev = tuple(getattr(solver, c).copy() for c in ("hx", "hy", "hz"))
    solver.step()
    h_cur = (solver.hx, solver.hy, solver.hz)
    vol = solver.domain.resolution ** 3
    return em_energy(*e_snap, *h_cur, vol, h_prev=h_prev)


def test_closed_box_energy_is_conserved():
    # Perfectly conducting walls, vacuum: once the pulse is over, the
    # time-centered energy of the staggered scheme is an exact invariant.
    solver = FdtdSolver(_wall_domain())
    c = solver.cell_dims
    solver.add_drive("z", [c[0] // 2], [c[1] // 2], [c[2] // 2],
                     waveform=GaussianPulse(6e9, 5e-11, delay_s=2.5e-10))
    solver.run(700)   # pulse fully over (delay + 8 width < 700 dt)
    w0 = _snapshot_energy(solver)
    assert w0 > 0.0
    drift = 0.0
    for _ in range(4):
        solver.run(249)
        w = _snapshot_energy(solver)
        drift = max(drift, abs(w - w0) / w0)
    assert drift < 1e-6


def test_cfl_violation_diverges():
    domain = _wall_domain(n=4, pad=6)
    dt_true = domain.resolution / (C0 * math.sqrt(3.0))
    solver = FdtdSolver(domain, dt_override=1.02 * dt_true)
    c = solver.cell_dims
    solver.add_drive("z", [c[0] // 2], [c[1] // 2], [c[2] // 2])
    with pytest.raises(StabilityError):
        solver.run_to_steady_state(max_periods=60)


def test_in_limit_override_is_stable():
    domain = _wall_domain(n=4, pad=6)
    dt_true = domain.resolution / (C0 * math.sqrt(3.0))
    solver = FdtdSolver(domain, dt_override=0.98 * dt_true)
    c = solver.cell_dims
    solver.add_drive("z", [c[0] // 2], [c[1] // 2], [c[2] // 2])
    solver.run(800)
    assert np.isfinite(solver.field_energy_metric())


def test_time_step_snaps_to_period():
    ph = air_phantom()
    domain = SimulationDomain(ph, padding=12, pml_cells=10, frequency_hz=6e9,
                              courant_factor=0.5)
    solver = FdtdSolver(domain)
    period = 1.0 / 6e9
    cfl = 0.5 * 0.001 / (C0 * math.sqrt(3.0))
    expected_spp = int(math.ceil(period / cfl))
    assert solver.steps_per_period == expected_spp == 174
    assert solver.dt == period / expected_spp
    assert solver.dt <= cfl


def test_drive_scaling_is_bitwise_linear():
    # power-of-two amplitude scaling commutes with every float operation in
    # the update chain, so the fields must scale bitwise - dispersive
    # polarization and CPML recursions included.
    tissue = Material("gel", DispersiveModel(5.0, 48.0, 9.4e-12, 0.0, 0.6),
                      density=1050.0)
    ph = block_phantom((6, 6, 6), tissue)
    runs = []
    for amp in (1.0, 2.0):
        domain = SimulationDomain(ph, padding=12, pml_cells=10,
                                  frequency_hz=6e9)
        solver = FdtdSolver(domain)
        c = solver.cell_dims
        solver.add_drive("x", [c[0] // 2], [c[1] // 2], [3],
                         amplitudes=[amp])
        solver.run(300)
        runs.append(solver)
    a, b = runs
    for name in ("ex", "ey", "ez", "hx", "hy", "hz", "pol_x", "pol_y", "pol_z"):
        assert np.array_equal(2.0 * getattr(a, name), getattr(b, name)), name


def test_nondispersive_material_keeps_polarization_at_zero():
    ph = block_phantom((6, 6, 6), lossy_dielectric(eps_r=4.0, sigma=0.2))
    domain = SimulationDomain(ph, padding=12, pml_cells=10, frequency_hz=6e9)
    solver = FdtdSolver(domain)
    c = solver.cell_dims
    solver.add_drive("x", [c[0] // 2], [c[1] // 2], [3])
    solver.run(200)
    assert np.count_nonzero(solver.pol_x) == 0
    assert np.count_nonzero(solver.pol_y) == 0
    assert np.count_nonzero(solver.pol_z) == 0
    assert np.count_nonzero(solver.ex) > 0  # the field itself did evolve


def test_nondispersive_coefficients_match_textbook_form():
    # deep inside the block the face-averaged material is uniform, so the
    # update coefficients reduce to the classic lossy-dielectric pair
    ph = block_phantom((6, 6, 6), lossy_dielectric(eps_r=4.0, sigma=0.2))
    domain = SimulationDomain(ph, padding=10, pml_cells=0,
                              boundary=("wall",) * 3, frequency_hz=6e9)
    solver = FdtdSolver(domain)
    i, j, k = (d // 2 for d in solver.cell_dims)
    dt = solver.dt
    denom = EPS0 * 4.0 / dt + 0.2 / 2.0
    ca_ref = (EPS0 * 4.0 / dt - 0.2 / 2.0) / denom
    cb_ref = 1.0 / denom
    assert solver.ca_x[i, j, k] == pytest.approx(ca_ref, rel=1e-14)
    assert solver.cb_x[i, j, k] == pytest.approx(cb_ref, rel=1e-14)
    assert np.count_nonzero(solver.bp_x) == 0  # no pole anywhere


def test_pml_echo_below_minus_60_db():
    ph = air_phantom()
    domain = SimulationDomain(ph, padding=18, pml_cells=10, frequency_hz=6e9)
    solver = FdtdSolver(domain)
    c = solver.cell_dims
    ci, cj, ck = c[0] // 2, c[1] // 2, c[2] // 2
    solver.add_drive("z", [ci], [cj], [ck],
                     waveform=GaussianPulse(6e9, 3e-11, delay_s=1.5e-10))
    probe = (ci + 8, cj, ck)
    direct = 0.0
    # direct transit: source tail ends ~400 dt; wave reaches the far wall and
    # any echo returns after ~2*20 cells of travel
    for _ in range(520):
        solver.step()
        direct = max(direct, abs(solver.ez[probe]))
    echo = 0.0
    for _ in range(700):
        solver.step()
        echo = max(echo, abs(solver.ez[probe]))
    assert direct > 0.0
    assert echo < 1e-3 * direct


def test_periodic_sheet_is_translation_invariant():
    ph = air_phantom(6, 6, 4)
    domain = SimulationDomain(
        ph, padding=((0, 0), (0, 0), (14, 14)), pml_cells=10,
        boundary=("periodic", "periodic", "cpml"), frequency_hz=6e9)
    solver = FdtdSolver(domain)
    nx, ny, nz = solver.cell_dims
    k0 = nz // 2
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    kk = np.full(ii.shape, k0)
    solver.add_drive("x", ii, jj, kk)
    solver.run(200)
    # a uniform sheet in a periodic box cannot know x from y: every
    # transverse slice is exactly constant and the cross components vanish
    for k in (k0 - 3, k0, k0 + 3):
        assert np.ptp(solver.ex[:nx, :, k]) == 0.0
    assert np.count_nonzero(solver.ey) == 0
    assert np.count_nonzero(solver.ez) == 0
    assert np.count_nonzero(solver.hx) == 0


def test_cole_cole_material_is_rejected():
    broad = Material("cc", DispersiveModel(4.0, 30.0, 7e-12, 0.3, 0.1),
                     density=1000.0)
    ph = block_phantom((4, 4, 4), broad)
    domain = SimulationDomain(ph, padding=12, pml_cells=10, frequency_hz=6e9)
    with pytest.raises(UnsupportedMaterialError):
        FdtdSolver(domain)


def test_unused_cole_cole_entry_is_fine():
    # the broadened material sits in the table but no voxel uses it
    mats = [Material("free_space", DispersiveModel(1.0), density=1.2),
            Material("cc", DispersiveModel(4.0, 30.0, 7e-12, 0.3, 0.1),
                     density=1000.0)]
    from voxdosim.phantom import VoxelPhantom
    ph = VoxelPhantom(np.zeros((4, 4, 4), dtype=np.uint8), 0.001, mats)
    domain = SimulationDomain(ph, padding=12, pml_cells=10, frequency_hz=6e9)
    FdtdSolver(domain)  # must not raise


def test_drive_index_validation():
    solver = FdtdSolver(_wall_domain())
    with pytest.raises(ValueError):
        solver.add_drive("x", [999], [0], [0])
    with pytest.raises(ValueError):
        solver.add_drive("q", [0], [0], [0])
    with pytest.raises(ValueError):
        solver.add_drive("x", [0, 1], [0], [0])


def test_source_too_close_to_pml_is_rejected():
    ph = air_phantom(4, 4, 4)
    # tissue-free phantom cannot host a surface-relative source at all
    domain = SimulationDomain(ph, padding=14, pml_cells=10, frequency_hz=6e9)
    with pytest.raises(ValueError):
        FdtdSolver(domain, SourceSpec(kind="dipole", distance_m=0.005))


def test_dipole_source_clearance():
    from voxdosim.phantom import generate_phantom, PhantomSpec
    ph = generate_phantom(PhantomSpec(radius_m=0.008, skin_thickness_m=0.002,
                                      cluster_count=3, seed=1))
    domain = SimulationDomain(ph, padding=((12, 12), (12, 12), (12, 18)),
                              pml_cells=10, frequency_hz=6e9)
    # 5 mm clearance fits inside 18 cells of padding; 12 mm does not
    FdtdSolver(domain, SourceSpec(kind="dipole", distance_m=0.005))
    with pytest.raises(ValueError):
        FdtdSolver(domain, SourceSpec(kind="dipole", distance_m=0.012))
