"""Acceptance gate: the nine capability criteria, one test per criterion.

Run with ``pytest -v`` and each criterion shows up as exactly one pass/fail
line. Values the criteria ask to be *recorded* rather than asserted (the
compliance verdicts and margins, the exposure temperature rise) are written
to the unbuffered real stdout so they land in piped logs even when pytest
captures test output.

The six electromagnetic solves on the default phantom are shared by
criteria 3, 5, 6 and 8 through a module fixture; everything else builds its
own small inputs.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from voxdosim.bioheat import ThermalParams, run_exposure
from voxdosim.fdtd import (FdtdSolver, SimulationDomain, SourceSpec,
                           calibrate_power)
from voxdosim.materials import (DispersiveModel, effective_conductivity,
                                evaluate_permittivity)
from voxdosim.phantom import (PhantomSpec, generate_phantom, load_phantom,
                              save_phantom, total_tissue_mass)
from voxdosim.sar import compliance, mass_averaged_sar, point_sar
from voxdosim.sweep import geometry_padding
from voxdosim.cli import main as cli_main
from conftest import air_phantom, block_phantom, lossy_dielectric
from oracles import (adiabatic_rise, brute_force_cube_average,
                     perfusion_temperature, plane_wave_decay_length,
                     scalar_conductivity, scalar_permittivity)
from test_sar import random_phantom_and_sar, synthetic_sar, uniform_phasors

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="module")
def record(request):
    """Writer that bypasses output capture so records reach piped logs."""
    manager = request.config.pluginmanager.getplugin("capturemanager")

    def _record(msg: str) -> None:
        if manager is not None:
            with manager.global_and_fixture_disabled():
                print(f"[acceptance] {msg}", flush=True)
        else:
            print(f"[acceptance] {msg}", flush=True)

    return _record


# --------------------------------------------------------------------------
# shared solves on the default phantom (criteria 3, 5, 6, 8)

DISTANCES_MM = (5, 10, 15, 20, 25, 30)


@pytest.fixture(scope="module")
def default_phantom():
    return generate_phantom(PhantomSpec())


@pytest.fixture(scope="module")
def distance_solves(default_phantom, record):
    """One 1 W aperture solve per distance; keeps the 5 mm phasors."""
    results = {}
    for d_mm in DISTANCES_MM:
        t0 = time.monotonic()
        distance_m = d_mm * 1e-3
        d_cells = max(2, int(round(distance_m / default_phantom.resolution)))
        domain = SimulationDomain(
            default_phantom,
            padding=geometry_padding(10, "+z", d_cells),
            pml_cells=10, frequency_hz=6.0e9)
        solver = FdtdSolver(domain, SourceSpec(
            kind="aperture", distance_m=distance_m, axis="+z",
            polarization="x", target_power_w=1.0))
        ph = solver.run_to_steady_state(tol=1e-3, max_periods=60)
        ph = calibrate_power(ph, 1.0)
        sar = point_sar(ph, default_phantom)
        sar_1g = mass_averaged_sar(sar, default_phantom, 0.001)
        sar_10g = mass_averaged_sar(sar, default_phantom, 0.010)
        results[d_mm] = {
            "converged": ph.converged,
            "grid": ph.cell_dims,
            "sar": sar,
            "peak_1g": sar_1g.peak_averaged[0],
            "peak_10g": sar_10g.peak_averaged[0],
            "phasors": ph if d_mm == 5 else None,
        }
        record(f"solve {d_mm:>2} mm: grid {ph.cell_dims}, "
            f"converged={ph.converged}, 1 W peaks 1g/10g = "
            f"{results[d_mm]['peak_1g']:.4g}/{results[d_mm]['peak_10g']:.4g}"
            f" W/kg ({time.monotonic() - t0:.0f} s)")
    return results


# --------------------------------------------------------------------------
# criterion 1: dispersive-model arithmetic against an independent script

def test_criterion_1_dispersive_model_oracle(record):
    rng = np.random.default_rng(20260817)
    worst = 0.0
    for trial in range(20):
        model = DispersiveModel(
            eps_inf=float(rng.uniform(1.5, 60.0)),
            delta_eps=float(rng.uniform(0.0, 50.0)),
            tau=float(rng.uniform(5.0e-12, 5.0e-11)),
            alpha=0.0 if trial % 2 == 0 else float(rng.uniform(0.02, 0.3)),
            sigma_s=float(rng.uniform(0.05, 2.5)),
        )
        freqs = rng.uniform(0.5e9, 20.0e9, size=25)
        eps = evaluate_permittivity(model, freqs)
        sig = effective_conductivity(model, freqs)
        for f, e, s in zip(freqs, eps, sig):
            e_ref = scalar_permittivity(
                f, model.eps_inf, model.delta_eps, model.tau, model.alpha,
                model.sigma_s)
            s_ref = scalar_conductivity(
                f, model.eps_inf, model.delta_eps, model.tau, model.alpha,
                model.sigma_s)
            worst = max(worst, abs(e - e_ref) / abs(e_ref),
                        abs(s - s_ref) / abs(s_ref))
    record(f"criterion 1: worst relative deviation {worst:.3e} "
        f"(20 parameter sets x 25 frequencies, 0.5-20 GHz)")
    assert worst <= 1.0e-10


# --------------------------------------------------------------------------
# criterion 2: canonical electromagnetic validations

def test_criterion_2_plane_wave_and_dipole_benchmarks(record):
    t0 = time.monotonic()
    # (a) plane wave into a lossy block: sigma = 0.5 S/m, eps_r = 40
    freq = 3.0e9
    block = block_phantom((4, 4, 280), lossy_dielectric(eps_r=40.0, sigma=0.5))
    domain = SimulationDomain(
        block, padding=((0, 0), (0, 0), (20, 12)), pml_cells=10,
        boundary=("periodic", "periodic", "cpml"), frequency_hz=freq)
    solver = FdtdSolver(domain)
    nx, ny, nz = solver.cell_dims
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    solver.add_drive("x", ii, jj, np.full(ii.shape, 14))
    ph = solver.run_to_steady_state(tol=1e-4, max_periods=60)
    assert ph.converged
    ks = np.arange(40, 160)  # 120 cells deep, well over ten
    amp = np.abs(ph.ex[nx // 2, ny // 2, ks])
    slope = np.polyfit(ks * domain.resolution, np.log(amp), 1)[0]
    delta_ref = plane_wave_decay_length(freq, 40.0, 0.5)
    skin_err = abs(-1.0 / slope - delta_ref) / delta_ref
    assert math.prod(ph.cell_dims) <= 120 ** 3

    # (b) point dipole in free space: 1/r amplitude over one octave
    fd = 15.0e9
    dd = SimulationDomain(air_phantom(4, 4, 4), padding=50, pml_cells=10,
                          frequency_hz=fd)
    ds = FdtdSolver(dd)
    cx, cy, cz = (n // 2 for n in ds.cell_dims)
    ds.add_drive("z", [cx], [cy], [cz])
    dph = ds.run_to_steady_state(tol=1e-4, max_periods=40)
    assert dph.converged
    assert math.prod(dph.cell_dims) <= 120 ** 3
    radii = np.array([16, 20, 24, 28, 32])  # 16 -> 32 cells: one octave
    amps = np.array([abs(dph.ez[cx + r, cy, cz]) for r in radii])
    one_over_r = (amps * radii) / (amps[0] * radii[0])
    dipole_err = float(np.max(np.abs(one_over_r - 1.0)))

    record(f"criterion 2: skin-depth error {skin_err:.3%} (tol 5%), dipole 1/r "
        f"deviation {dipole_err:.3%} (tol 10%), grids "
        f"{ph.cell_dims}/{dph.cell_dims}, {time.monotonic() - t0:.0f} s")
    assert skin_err < 0.05
    assert dipole_err < 0.10


# --------------------------------------------------------------------------
# criterion 3: calibrated-power linearity of every SAR metric

def test_criterion_3_power_linearity(default_phantom, distance_solves, record):
    base = distance_solves[5]
    phasors = base["phasors"]
    ref = point_sar(phasors, default_phantom)
    ref_1g = mass_averaged_sar(ref, default_phantom, 0.001)
    ref_10g = mass_averaged_sar(ref, default_phantom, 0.010)
    worst = 0.0
    for k in (0.5, 2.0, 10.0):
        scaled = calibrate_power(phasors, k)  # same fields, new target power
        sar = point_sar(scaled, default_phantom)
        sar_1g = mass_averaged_sar(sar, default_phantom, 0.001)
        sar_10g = mass_averaged_sar(sar, default_phantom, 0.010)
        pairs = [
            (sar.point_sar, ref.point_sar, default_phantom.tissue_mask),
            (sar_1g.averaged_sar, ref_1g.averaged_sar, ref_1g.valid_mask),
            (sar_10g.averaged_sar, ref_10g.averaged_sar, ref_10g.valid_mask),
        ]
        for got, want, mask in pairs:
            g = got[mask]
            w = want[mask] * k
            nz = w != 0.0
            worst = max(worst, float(np.max(np.abs(g[nz] - w[nz]) / w[nz])))
            assert np.array_equal(g == 0.0, w == 0.0)
        assert np.array_equal(sar_1g.valid_mask, ref_1g.valid_mask)
        assert np.array_equal(sar_10g.valid_mask, ref_10g.valid_mask)
    record(f"criterion 3: worst relative deviation from exact x-k scaling "
        f"{worst:.3e} for k in {{0.5, 2, 10}}")
    assert worst <= 1.0e-10


# --------------------------------------------------------------------------
# criterion 4: cube-growing averages against brute force

def test_criterion_4_averaging_oracle(record):
    rng = np.random.default_rng(404)
    hierarchy_ok = 0
    for _ in range(50):
        while True:
            phantom, point = random_phantom_and_sar(rng, max_side=20)
            if total_tissue_mass(phantom) >= 0.011:
                break
        sar = synthetic_sar(point, phantom)
        rho = np.array([m.density for m in phantom.materials])
        rho[0] = 0.0
        mass = rho[phantom.voxels] * phantom.voxel_volume
        peaks = {}
        for target_kg in (0.001, 0.010):
            got = mass_averaged_sar(sar, phantom, target_kg)
            want, want_valid = brute_force_cube_average(
                mass, point * mass, phantom.tissue_mask, target_kg, 0.1)
            assert np.array_equal(got.valid_mask, want_valid)
            assert np.array_equal(np.isnan(got.averaged_sar),
                                  np.isnan(want))
            ok = ~np.isnan(want)
            np.testing.assert_allclose(got.averaged_sar[ok], want[ok],
                                       rtol=1e-12, atol=0.0)
            peaks[target_kg] = got.peak_averaged[0]
        assert peaks[0.010] <= peaks[0.001]
        hierarchy_ok += 1

    # a spatially uniform field must average to exactly that constant
    block = block_phantom((12, 12, 12), lossy_dielectric(eps_r=40.0,
                                                         sigma=0.5,
                                                         density=1000.0))
    uniform = point_sar(uniform_phasors(block, ex_amp=100.0), block)
    averaged = mass_averaged_sar(uniform, block, 0.001)
    const = uniform.point_sar[0, 0, 0]
    np.testing.assert_allclose(averaged.averaged_sar, const, rtol=1e-12)
    record(f"criterion 4: 50 random phantoms matched brute force at 1 g and "
        f"10 g; 10 g peak <= 1 g peak on {hierarchy_ok}/50 runs")


# --------------------------------------------------------------------------
# criterion 5: peak 1 g SAR falls monotonically with distance

def test_criterion_5_distance_ordering(distance_solves, record):
    peaks = [distance_solves[d]["peak_1g"] for d in DISTANCES_MM]
    record("criterion 5: 1 W peak 1g SAR by distance "
        + ", ".join(f"{d} mm: {p:.4g}" for d, p in zip(DISTANCES_MM, peaks)))
    for d in DISTANCES_MM:
        assert distance_solves[d]["converged"]
        assert math.prod(distance_solves[d]["grid"]) <= 150 ** 3
    for nearer, farther in zip(peaks, peaks[1:]):
        assert farther <= nearer
    assert peaks[-1] < peaks[0]


# --------------------------------------------------------------------------
# criterion 6: compliance verdicts at 0.1 W and 5 mm (recorded, not fatal)

def test_criterion_6_compliance_reporting(distance_solves, record):
    power_w = 0.1
    base = distance_solves[5]
    report = compliance(base["peak_1g"] * power_w,
                        base["peak_10g"] * power_w)
    for line in report.summary().splitlines():
        record(f"criterion 6 (0.1 W, 5 mm): {line}")
    # soft expectation: the verdicts and margins exist and are well-formed;
    # whether they pass is a property of the hardware, not of this code
    assert isinstance(report.compliant_1g, bool)
    assert isinstance(report.compliant_10g, bool)
    assert math.isfinite(report.margin_1g)
    assert math.isfinite(report.margin_10g)
    assert report.limit_1g == 1.6
    assert report.limit_10g == 2.0


# --------------------------------------------------------------------------
# criterion 7: thermal solver against closed-form cases

def test_criterion_7_bioheat_analytic_suite(record):
    insulated = ThermalParams(boundary="insulated")

    # (a) adiabatic linear rise over 7200 s, within 0.1%
    cap = 3600.0
    adiabatic = block_phantom((6, 6, 6), lossy_dielectric(
        name="adiabatic", thermal_k=0.0, heat_capacity=cap, perfusion=0.0))
    res = run_exposure(adiabatic, np.full((6, 6, 6), 1.5), 7200.0,
                       params=insulated, dt_s=2.0)
    want = adiabatic_rise(1.5, 7200.0, cap)
    linear_err = abs(res.peak_rise_k - want) / want
    assert linear_err <= 1.0e-3

    # (b) perfusion-only exponential, within 1% of the scalar ODE
    rho, perf = 1000.0, 0.005
    perfused = block_phantom((6, 6, 6), lossy_dielectric(
        name="perfused", thermal_k=0.0, heat_capacity=3500.0,
        perfusion=perf, density=rho))
    params = ThermalParams(boundary="insulated", initial_k=305.0)
    res = run_exposure(perfused, np.full((6, 6, 6), 2.0), 600.0,
                       params=params, dt_s=0.25)
    exact = perfusion_temperature(600.0, 305.0, params.blood_temperature_k,
                                  rho, 3500.0, params.blood_density,
                                  params.blood_heat_capacity, perf, 2.0)
    ode_err = abs(res.peak_rise_k - (exact - 305.0)) / abs(exact - 305.0)
    assert ode_err <= 0.01

    # (c) insulated, source-free equilibrium is reproduced exactly
    still = block_phantom((6, 6, 6), lossy_dielectric(
        name="still", thermal_k=0.5, heat_capacity=3500.0, perfusion=0.002))
    res = run_exposure(still, np.zeros((6, 6, 6)), 300.0, params=insulated,
                       dt_s=0.5)
    assert np.array_equal(res.state.temperature,
                          np.full((6, 6, 6), insulated.initial_k))
    record(f"criterion 7: linear-rise error {linear_err:.2e} (tol 1e-3), "
        f"perfusion-ODE error {ode_err:.2e} (tol 1e-2), equilibrium exact")


# --------------------------------------------------------------------------
# criterion 8: a compliant exposure stays under 0.5 K after two hours

def test_criterion_8_compliant_exposure_temperature(default_phantom,
                                                    distance_solves,
                                                    record):
    base = distance_solves[5]
    # scale the 5 mm solve so the 1 g peak sits exactly at the 1.6 W/kg limit
    power_w = 1.6 / base["peak_1g"]
    sar_values = base["sar"].point_sar * power_w
    result = run_exposure(default_phantom, sar_values, 7200.0,
                          params=ThermalParams(), baseline="zero-power")
    record(f"criterion 8: {power_w:.4g} W drive puts peak 1g SAR at 1.6 W/kg; "
        f"2 h peak rise {result.peak_rise_k:.3f} K, mean "
        f"{result.mean_rise_k:.3f} K (limit 0.5 K; typical reported "
        f"observations 0.2-0.3 K)")
    assert result.peak_rise_k <= 0.5


# --------------------------------------------------------------------------
# criterion 9: determinism and round-trips

def test_criterion_9_determinism_and_round_trips(tmp_path, record):
    # (a) phantom save/load is bit-identical
    phantom = generate_phantom(PhantomSpec(radius_m=0.012, seed=3))
    p1, p2 = tmp_path / "a.vxph", tmp_path / "b.vxph"
    save_phantom(phantom, p1)
    save_phantom(load_phantom(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert np.array_equal(load_phantom(p2).voxels, phantom.voxels)

    # (b) identical config + seed give a bit-identical sweep CSV, and the
    # 2x2 mini-sweep reproduces the checked-in golden file
    out1, out2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
    for out in (out1, out2):
        rc = cli_main(["sweep", "--config", str(DATA / "mini_sweep.cfg"),
                       "--out", str(out)])
        assert rc == 0
    assert out1.read_bytes() == out2.read_bytes()

    def split(path):
        lines = Path(path).read_text().splitlines()
        head = [l for l in lines if l.startswith("#")]
        rows = [l.split(",") for l in lines if l and not l.startswith("#")]
        return head, rows[1:]

    got_head, got_rows = split(out1)
    want_head, want_rows = split(DATA / "golden_sweep.csv")
    assert got_head == want_head
    assert len(got_rows) == len(want_rows) == 4
    worst = 0.0
    for got, want in zip(got_rows, want_rows):
        assert got[6:9] == want[6:9]
        for g, w in zip(got[:6], want[:6]):
            worst = max(worst, abs(float(g) - float(w)) /
                        max(abs(float(w)), 1e-300))
    record(f"criterion 9: phantom round-trip bit-identical, sweep rerun "
        f"bit-identical, golden-file deviation {worst:.3e}")
    assert worst <= 1.0e-9
