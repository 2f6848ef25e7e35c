"""Parameter sweeps: distance x power x tissue-density studies to CSV.

One electromagnetic solve is run per (distance, density) geometry and every
power point is derived from it by linear scaling, which Maxwell linearity
makes exact: the stored phasors are kept raw and only the calibration factor
changes with the requested power. The same applies to the optional thermal
column: heating rise is linear in deposited power (the Pennes equation is
affine in temperature), so one unit-power integration per geometry serves
every power row, scaled.

Rows are emitted distance-major, then power, then density; a solve that
fails to converge flags its rows instead of aborting the sweep. CSV files
start with '#'-prefixed provenance lines (package version, config hash when
run through the CLI, and every resolved physics setting).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bioheat import ThermalParams, run_exposure
from .fdtd import (CalibrationError, FdtdSolver, SimulationDomain, SourceSpec,
                   calibrate_power)
from .phantom import PhantomSpec, VoxelPhantom, generate_phantom
from .sar import (LIMIT_1G_W_PER_KG, LIMIT_10G_W_PER_KG, mass_averaged_sar,
                  point_sar)

__all__ = ["SweepSpec", "SweepRow", "SweepResult", "default_power_ladder",
           "geometry_padding", "run_sweep", "write_sweep_csv", "CSV_COLUMNS"]

DEFAULT_DISTANCES_M = (0.005, 0.010, 0.015, 0.020, 0.025, 0.030)


def default_power_ladder() -> tuple[float, ...]:
    """1 mW to 0.5 W coverage plus the 0-10 dBm ladder, deduplicated."""
    watts = {0.001, 0.01, 0.05, 0.1, 0.2, 0.5}
    for dbm in range(11):
        watts.add(10.0 ** (dbm / 10.0) * 1.0e-3)
    return tuple(sorted(watts))


@dataclass(frozen=True)
class SweepSpec:
    """Axes and physics settings for one sweep run.

    ``density_fractions`` regenerates the phantom with that fibroglandular
    share per value (an age-group proxy); passing an explicit ``phantom``
    instead limits the sweep to that single geometry.
    """

    distances_m: tuple = DEFAULT_DISTANCES_M
    powers_w: tuple = field(default_factory=default_power_ladder)
    density_fractions: tuple = (0.30,)
    frequency_hz: float = 6.0e9
    source_kind: str = "aperture"
    axis: str = "+z"
    polarization: str = "x"
    aperture_edge_m: float = 0.025
    steering_deg: float = 45.0
    phantom: VoxelPhantom | None = None
    phantom_spec: PhantomSpec | None = None
    seed: int = 0
    pml_cells: int = 10
    courant_factor: float = 0.5
    convergence_tol: float = 1.0e-3
    max_periods: int = 60
    accumulate_periods: int = 4
    thermal: bool = False
    thermal_duration_s: float = 7200.0
    thermal_params: ThermalParams = field(default_factory=ThermalParams)

    def __post_init__(self) -> None:
        for name in ("distances_m", "powers_w", "density_fractions"):
            vals = tuple(getattr(self, name))
            object.__setattr__(self, name, vals)
            if not vals:
                raise ValueError(f"{name} must be non-empty")
            if name != "density_fractions" and any(v <= 0.0 for v in vals):
                raise ValueError(f"every value in {name} must be > 0")
        if any(not 0.0 <= v <= 1.0 for v in self.density_fractions):
            raise ValueError("density_fractions must lie in [0, 1]")
        if self.phantom is not None and len(self.density_fractions) > 1:
            raise ValueError(
                "an explicit phantom fixes the geometry; the density axis "
                "needs a phantom_spec to regenerate from"
            )
        if not self.thermal_duration_s >= 0.0:
            raise ValueError("thermal_duration_s must be >= 0")


@dataclass(frozen=True)
class SweepRow:
    distance_m: float
    power_w: float
    density_fraction: float
    peak_point_sar: float
    peak_sar_1g: float
    peak_sar_10g: float
    compliant_1g: bool
    compliant_10g: bool
    converged: bool
    peak_rise_k: float | None


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    spec: SweepSpec


def geometry_padding(pml_cells: int, axis: str, d_cells: int):
    """Per-side padding: room for PML everywhere, source + flux box on top."""
    base = pml_cells + 6
    src_side = pml_cells + 8 + d_cells
    pads = [[base, base], [base, base], [base, base]]
    ax = {"x": 0, "y": 1, "z": 2}[axis[1]]
    side = 1 if axis[0] == "+" else 0
    pads[ax][side] = src_side
    return tuple((lo, hi) for lo, hi in pads)


def _solve_geometry(spec: SweepSpec, phantom: VoxelPhantom, distance_m: float,
                    progress=None):
    """One EM solve; returns reference peaks at 1 W plus the converged flag."""
    d_cells = int(round(distance_m / phantom.resolution))
    domain = SimulationDomain(
        phantom,
        padding=geometry_padding(spec.pml_cells, spec.axis, max(d_cells, 2)),
        pml_cells=spec.pml_cells,
        courant_factor=spec.courant_factor,
        frequency_hz=spec.frequency_hz,
    )
    source = SourceSpec(
        kind=spec.source_kind, distance_m=distance_m, axis=spec.axis,
        polarization=spec.polarization, target_power_w=1.0,
        aperture_edge_m=spec.aperture_edge_m, steering_deg=spec.steering_deg,
    )
    solver = FdtdSolver(domain, source)
    ph = solver.run_to_steady_state(
        tol=spec.convergence_tol, max_periods=spec.max_periods,
        accumulate_periods=spec.accumulate_periods)
    converged = ph.converged
    try:
        ph = calibrate_power(ph, 1.0)
        sar_ref = point_sar(ph, phantom, require_converged=False)
        sar_1g = mass_averaged_sar(sar_ref, phantom, 0.001)
        sar_10g = mass_averaged_sar(sar_ref, phantom, 0.010)
        peaks = (sar_ref.peak_point[0], sar_1g.peak_averaged[0],
                 sar_10g.peak_averaged[0])
        sar_unit = sar_ref.point_sar
    except CalibrationError:
        converged = False
        peaks = (math.nan, math.nan, math.nan)
        sar_unit = None

    rise_unit = None
    if spec.thermal and sar_unit is not None:
        result = run_exposure(
            phantom, sar_unit, spec.thermal_duration_s,
            params=spec.thermal_params, baseline="zero-power")
        rise_unit = result.peak_rise_k
    if progress is not None:
        progress(
            f"solved distance={distance_m * 1e3:g} mm: converged={converged}, "
            f"1 W peaks point/1g/10g = {peaks[0]:.4g}/{peaks[1]:.4g}/"
            f"{peaks[2]:.4g} W/kg"
        )
    return peaks, rise_unit, converged


def run_sweep(spec: SweepSpec, progress=None) -> SweepResult:
    """Execute the sweep; see the module docstring for the solve-count model."""
    geometries: dict[float, VoxelPhantom] = {}
    for density in spec.density_fractions:
        if spec.phantom is not None:
            geometries[density] = spec.phantom
        else:
            base = spec.phantom_spec or PhantomSpec()
            pspec = dataclasses.replace(
                base, fibroglandular_fraction=density, seed=spec.seed)
            geometries[density] = generate_phantom(pspec)

    solved: dict[tuple, tuple] = {}
    for density in spec.density_fractions:
        for distance in spec.distances_m:
            solved[(distance, density)] = _solve_geometry(
                spec, geometries[density], distance, progress)

    rows = []
    for distance in spec.distances_m:
        for power in spec.powers_w:
            for density in spec.density_fractions:
                (pk_pt, pk_1g, pk_10g), rise_unit, converged = solved[
                    (distance, density)]
                rise = None
                if spec.thermal:
                    rise = rise_unit * power if rise_unit is not None else math.nan
                rows.append(SweepRow(
                    distance_m=distance, power_w=power,
                    density_fraction=density,
                    peak_point_sar=pk_pt * power,
                    peak_sar_1g=pk_1g * power,
                    peak_sar_10g=pk_10g * power,
                    compliant_1g=bool(pk_1g * power <= LIMIT_1G_W_PER_KG),
                    compliant_10g=bool(pk_10g * power <= LIMIT_10G_W_PER_KG),
                    converged=converged,
                    peak_rise_k=rise,
                ))
    return SweepResult(rows=tuple(rows), spec=spec)


CSV_COLUMNS = ("distance_mm,power_w,density_fraction,peak_point_sar_w_per_kg,"
               "peak_1g_sar_w_per_kg,peak_10g_sar_w_per_kg,verdict_1g,"
               "verdict_10g,converged,peak_rise_k")


def write_sweep_csv(result: SweepResult, path, provenance: dict | None = None) -> None:
    """Write rows with '#' provenance headers; floats use repr (round-trip)."""
    lines = [f"# voxdosim {__version__}"]
    for key in sorted(provenance or {}):
        lines.append(f"# {key}={provenance[key]}")
    lines.append("# columns: " + CSV_COLUMNS)
    lines.append(CSV_COLUMNS)
    for r in result.rows:
        cells = [
            repr(r.distance_m * 1000.0),
            repr(r.power_w),
            repr(r.density_fraction),
            repr(r.peak_point_sar),
            repr(r.peak_sar_1g),
            repr(r.peak_sar_10g),
            "pass" if r.compliant_1g else "fail",
            "pass" if r.compliant_10g else "fail",
            "1" if r.converged else "0",
            "" if r.peak_rise_k is None else repr(r.peak_rise_k),
        ]
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
