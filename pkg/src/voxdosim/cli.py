"""Command-line front end: phantom-gen | simulate | sar | bioheat | sweep.

Every subcommand reads an optional key=value config file (--config), applies
--set key=value overrides, validates against a strict schema (unknown keys
rejected, missing required keys listed all at once), and records the resolved
settings plus a config hash in its '#'-prefixed output headers. Power may be
given in watts or dBm; dBm converts here (10^(dBm/10) mW) so the physics
layers only ever see watts. Exit codes: 0 success, 2 configuration problems,
1 runtime failure; errors print as a single "error: ..." line on stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bioheat import ThermalParams, run_exposure
from .config import (ConfigError, Option, config_hash, format_resolved,
                     parse_config_text, parse_overrides, resolve)
from .fdtd import (FdtdSolver, SimulationDomain, SourceSpec, calibrate_power,
                   load_phasors, save_phasors)
from .phantom import (PhantomSpec, fibroglandular_fraction, generate_phantom,
                      load_phantom, save_phantom, total_tissue_mass)
from .sar import (LIMIT_1G_W_PER_KG, LIMIT_10G_W_PER_KG, compliance,
                  mass_averaged_sar, point_sar)
from .sweep import SweepSpec, default_power_ladder, geometry_padding, run_sweep, write_sweep_csv
from .volumes import load_volume, save_volume

__all__ = ["main"]


def dbm_to_watts(dbm: float) -> float:
    """10^(dBm/10) milliwatts, expressed in watts."""
    return 10.0 ** (dbm / 10.0) * 1.0e-3


# --------------------------------------------------------------------- schemas

_PHANTOM_KEYS = {
    "radius_mm": Option("float", 25.0, minimum=1e-6),
    "skin_mm": Option("float", 2.0, minimum=0.0),
    "fibroglandular_fraction": Option("float", 0.30, minimum=0.0),
    "clusters": Option("int", 12, minimum=0),
    "resolution_mm": Option("float", 1.0, minimum=1e-6),
    "seed": Option("int", 0, minimum=0),
}

_SOURCE_KEYS = {
    "frequency_hz": Option("float", 6.0e9, minimum=1.0),
    "source": Option("choice", "aperture", choices=("dipole", "aperture")),
    "axis": Option("choice", "+z", choices=("+x", "-x", "+y", "-y", "+z", "-z")),
    "polarization": Option("choice", "x", choices=("x", "y", "z")),
    "aperture_edge_mm": Option("float", 25.0, minimum=1e-6),
    "steering_deg": Option("float", 45.0, minimum=0.0),
    "pml_cells": Option("int", 10, minimum=1),
    "courant": Option("float", 0.5, minimum=1e-6),
    "tol": Option("float", 1.0e-3, minimum=0.0),
    "max_periods": Option("int", 60, minimum=1),
    "accumulate_periods": Option("int", 4, minimum=1),
    "ramp_periods": Option("float", 3.0, minimum=1e-6),
}

_THERMAL_KEYS = {
    "duration_s": Option("float", 7200.0, minimum=0.0),
    "boundary": Option("choice", "convective", choices=("convective", "insulated")),
    "h_w_per_m2k": Option("float", 10.0, minimum=0.0),
    "ambient_k": Option("float", 310.0, minimum=1e-6),
    "initial_k": Option("float", 310.0, minimum=1e-6),
    "blood_temperature_k": Option("float", 310.0, minimum=1e-6),
    "blood_density": Option("float", 1050.0, minimum=1e-6),
    "blood_heat_capacity": Option("float", 3617.0, minimum=1e-6),
}

SCHEMAS: dict[str, dict[str, Option]] = {
    "phantom-gen": {
        **_PHANTOM_KEYS,
        "out": Option("str"),
    },
    "simulate": {
        "phantom": Option("str"),
        "distance_mm": Option("float", 5.0, minimum=1e-6),
        "power_w": Option("float", None, minimum=1e-12),
        "power_dbm": Option("float", None),
        "out": Option("str"),
        **_SOURCE_KEYS,
    },
    "sar": {
        "phasors": Option("str"),
        "phantom": Option("str"),
        "masses_g": Option("list_float", [1.0, 10.0], minimum=1e-9),
        "tissue_fraction_min": Option("float", 0.1, minimum=0.0),
        "require_converged": Option("bool", True),
        "out": Option("str", None),
        "volume_out": Option("str", None),
    },
    "bioheat": {
        "phantom": Option("str"),
        "sar_volume": Option("str"),
        "baseline": Option("choice", "initial", choices=("initial", "zero-power")),
        "dt_s": Option("float", None, minimum=1e-12),
        "out": Option("str", None),
        "volume_out": Option("str", None),
        **_THERMAL_KEYS,
    },
    "sweep": {
        "distances_mm": Option("list_float", [5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
                               minimum=1e-6),
        "powers_w": Option("list_float", None, minimum=1e-12),
        "powers_dbm": Option("list_float", None),
        "density_fractions": Option("list_float", [0.30], minimum=0.0),
        "phantom": Option("str", None),
        "thermal": Option("bool", False),
        "out": Option("str"),
        **_PHANTOM_KEYS,
        **_SOURCE_KEYS,
        # thermal keys, with the duration namespaced so it cannot be confused
        # with a per-run exposure time
        **{("thermal_duration_s" if k == "duration_s" else k): v
           for k, v in _THERMAL_KEYS.items()},
    },
}


# Output destinations do not influence the computed numbers, so they stay out
# of the hash and the provenance header: the same physics config must yield
# byte-identical reports wherever they are written.
_UNHASHED = ("out", "volume_out")


def _load_config(args, command: str):
    raw = {}
    if args.config:
        raw = parse_config_text(Path(args.config).read_text(encoding="utf-8"),
                                origin=args.config)
    overrides = parse_overrides(args.set or [])
    if getattr(args, "out", None):
        overrides["out"] = args.out
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = str(args.seed)
    resolved = resolve(SCHEMAS[command], raw, overrides)
    hashable = {k: v for k, v in resolved.items() if k not in _UNHASHED}
    return resolved, config_hash(hashable)


def _provenance(resolved: dict, chash: str) -> dict:
    prov = {"config_hash": chash}
    for line in format_resolved(
            {k: v for k, v in resolved.items() if k not in _UNHASHED}):
        key, _, value = line.partition("=")
        prov[key] = value
    return prov


def _print_header(prov: dict, out) -> None:
    print(f"# voxdosim {__version__}", file=out)
    for key in sorted(prov):
        print(f"# {key}={prov[key]}", file=out)


def _thermal_params(cfg: dict) -> ThermalParams:
    return ThermalParams(
        boundary=cfg["boundary"], h_w_per_m2k=cfg["h_w_per_m2k"],
        ambient_k=cfg["ambient_k"], initial_k=cfg["initial_k"],
        blood_temperature_k=cfg["blood_temperature_k"],
        blood_density=cfg["blood_density"],
        blood_heat_capacity=cfg["blood_heat_capacity"],
    )


# ----------------------------------------------------------------- subcommands

def _cmd_phantom_gen(args) -> int:
    cfg, chash = _load_config(args, "phantom-gen")
    spec = PhantomSpec(
        radius_m=cfg["radius_mm"] * 1e-3,
        skin_thickness_m=cfg["skin_mm"] * 1e-3,
        fibroglandular_fraction=cfg["fibroglandular_fraction"],
        cluster_count=cfg["clusters"],
        resolution_m=cfg["resolution_mm"] * 1e-3,
        seed=cfg["seed"],
    )
    phantom = generate_phantom(spec)
    save_phantom(phantom, cfg["out"])
    _print_header(_provenance(cfg, chash), sys.stdout)
    print(f"wrote {cfg['out']}: dims {phantom.dims}, "
          f"tissue mass {total_tissue_mass(phantom):.6g} kg, "
          f"fibroglandular fraction {fibroglandular_fraction(phantom):.4f}")
    return 0


def _resolve_power(cfg: dict) -> float:
    if cfg["power_w"] is not None and cfg["power_dbm"] is not None:
        raise ConfigError(["give either power_w or power_dbm, not both"])
    if cfg["power_dbm"] is not None:
        return dbm_to_watts(cfg["power_dbm"])
    if cfg["power_w"] is not None:
        return cfg["power_w"]
    return 1.0


def _cmd_simulate(args) -> int:
    cfg, chash = _load_config(args, "simulate")
    power_w = _resolve_power(cfg)
    phantom = load_phantom(cfg["phantom"])
    distance_m = cfg["distance_mm"] * 1e-3
    d_cells = max(2, int(round(distance_m / phantom.resolution)))
    domain = SimulationDomain(
        phantom,
        padding=geometry_padding(cfg["pml_cells"], cfg["axis"], d_cells),
        pml_cells=cfg["pml_cells"], courant_factor=cfg["courant"],
        frequency_hz=cfg["frequency_hz"],
    )
    source = SourceSpec(
        kind=cfg["source"], distance_m=distance_m, axis=cfg["axis"],
        polarization=cfg["polarization"], target_power_w=power_w,
        ramp_periods=cfg["ramp_periods"],
        aperture_edge_m=cfg["aperture_edge_mm"] * 1e-3,
        steering_deg=cfg["steering_deg"],
    )
    solver = FdtdSolver(domain, source)
    ph = solver.run_to_steady_state(
        tol=cfg["tol"], max_periods=cfg["max_periods"],
        accumulate_periods=cfg["accumulate_periods"])
    ph = calibrate_power(ph, power_w)
    save_phasors(cfg["out"], ph)
    _print_header(_provenance(cfg, chash), sys.stdout)
    print(f"wrote {cfg['out']}: grid {ph.cell_dims}, converged={ph.converged}, "
          f"measured {ph.measured_power_w:.6g} W at drive amplitude, "
          f"target {power_w:.6g} W")
    return 0


def _cmd_sar(args) -> int:
    cfg, chash = _load_config(args, "sar")
    phasors = load_phasors(cfg["phasors"])
    phantom = load_phantom(cfg["phantom"])
    sar = point_sar(phasors, phantom, require_converged=cfg["require_converged"])
    peak_pt, vox_pt = sar.peak_point
    rows = [("point", "", repr(peak_pt), vox_pt, "", "")]
    averaged = {}
    for mass_g in cfg["masses_g"]:
        av = mass_averaged_sar(sar, phantom, mass_g * 1e-3,
                               tissue_fraction_min=cfg["tissue_fraction_min"])
        pk, vox = av.peak_averaged
        averaged[mass_g] = (pk, vox, av)
        limit = ""
        verdict = ""
        if math.isclose(mass_g, 1.0):
            limit, verdict = repr(LIMIT_1G_W_PER_KG), ("pass" if pk <= LIMIT_1G_W_PER_KG else "fail")
        elif math.isclose(mass_g, 10.0):
            limit, verdict = repr(LIMIT_10G_W_PER_KG), ("pass" if pk <= LIMIT_10G_W_PER_KG else "fail")
        rows.append(("averaged", repr(float(mass_g)), repr(pk), vox, limit, verdict))

    def emit(out):
        _print_header(_provenance(cfg, chash), out)
        print("# columns: metric,mass_g,value_w_per_kg,voxel_i,voxel_j,voxel_k,"
              "limit_w_per_kg,verdict", file=out)
        print("metric,mass_g,value_w_per_kg,voxel_i,voxel_j,voxel_k,"
              "limit_w_per_kg,verdict", file=out)
        for metric, mass, value, vox, limit, verdict in rows:
            print(f"{metric},{mass},{value},{vox[0]},{vox[1]},{vox[2]},"
                  f"{limit},{verdict}", file=out)

    if cfg["out"] is None or cfg["out"] == "-":
        emit(sys.stdout)
    else:
        with open(cfg["out"], "w", encoding="utf-8") as f:
            emit(f)
        print(f"wrote {cfg['out']}")
    if math.isclose(min(cfg["masses_g"], key=lambda m: abs(m - 1.0)), 1.0) and \
            math.isclose(min(cfg["masses_g"], key=lambda m: abs(m - 10.0)), 10.0):
        report = compliance(averaged[1.0][0], averaged[10.0][0])
        print(report.summary())
    if cfg["volume_out"] is not None:
        comps = {"point_sar": sar.point_sar.astype(np.float32)}
        for mass_g, (_, _, av) in averaged.items():
            name = f"sar_{mass_g:g}g".replace(".", "p")
            comps[name] = np.nan_to_num(av.averaged_sar, nan=0.0).astype(np.float32)
        save_volume(cfg["volume_out"], comps, phantom.resolution,
                    meta={"kind": "sar", "frequency_hz": repr(sar.frequency_hz)})
        print(f"wrote {cfg['volume_out']}")
    return 0


def _cmd_bioheat(args) -> int:
    cfg, chash = _load_config(args, "bioheat")
    phantom = load_phantom(cfg["phantom"])
    comps, res, _meta = load_volume(cfg["sar_volume"])
    if "point_sar" not in comps:
        raise ConfigError([f"{cfg['sar_volume']}: no point_sar component"])
    if not math.isclose(res, phantom.resolution, rel_tol=1e-9):
        raise ConfigError([
            f"SAR volume resolution {res} differs from phantom "
            f"{phantom.resolution}"])
    sar_values = comps["point_sar"].astype(np.float64)
    params = _thermal_params(cfg)
    result = run_exposure(phantom, sar_values, cfg["duration_s"], params=params,
                          dt_s=cfg["dt_s"], baseline=cfg["baseline"])

    def emit(out):
        _print_header(_provenance(cfg, chash), out)
        print("# columns: time_s,peak_rise_k,mean_rise_k,peak_i,peak_j,peak_k,"
              "baseline", file=out)
        print("time_s,peak_rise_k,mean_rise_k,peak_i,peak_j,peak_k,baseline",
              file=out)
        i, j, k = result.peak_voxel
        print(f"{result.state.time_s!r},{result.peak_rise_k!r},"
              f"{result.mean_rise_k!r},{i},{j},{k},{result.baseline}", file=out)

    if cfg["out"] is None or cfg["out"] == "-":
        emit(sys.stdout)
    else:
        with open(cfg["out"], "w", encoding="utf-8") as f:
            emit(f)
        print(f"wrote {cfg['out']}")
    if cfg["volume_out"] is not None:
        save_volume(cfg["volume_out"],
                    {"temperature_k": result.state.temperature.astype(np.float32)},
                    phantom.resolution,
                    meta={"kind": "temperature", "time_s": repr(result.state.time_s)})
        print(f"wrote {cfg['volume_out']}")
    return 0


def _cmd_sweep(args) -> int:
    cfg, chash = _load_config(args, "sweep")
    powers = []
    if cfg["powers_w"] is not None:
        powers.extend(cfg["powers_w"])
    if cfg["powers_dbm"] is not None:
        powers.extend(dbm_to_watts(d) for d in cfg["powers_dbm"])
    if not powers:
        powers = list(default_power_ladder())

    phantom = None
    phantom_spec = None
    if cfg["phantom"] is not None:
        phantom = load_phantom(cfg["phantom"])
    else:
        phantom_spec = PhantomSpec(
            radius_m=cfg["radius_mm"] * 1e-3,
            skin_thickness_m=cfg["skin_mm"] * 1e-3,
            fibroglandular_fraction=cfg["fibroglandular_fraction"],
            cluster_count=cfg["clusters"],
            resolution_m=cfg["resolution_mm"] * 1e-3,
            seed=cfg["seed"],
        )
    spec = SweepSpec(
        distances_m=tuple(d * 1e-3 for d in cfg["distances_mm"]),
        powers_w=tuple(powers),
        density_fractions=tuple(cfg["density_fractions"]),
        frequency_hz=cfg["frequency_hz"],
        source_kind=cfg["source"], axis=cfg["axis"],
        polarization=cfg["polarization"],
        aperture_edge_m=cfg["aperture_edge_mm"] * 1e-3,
        steering_deg=cfg["steering_deg"],
        phantom=phantom, phantom_spec=phantom_spec, seed=cfg["seed"],
        pml_cells=cfg["pml_cells"], courant_factor=cfg["courant"],
        convergence_tol=cfg["tol"], max_periods=cfg["max_periods"],
        accumulate_periods=cfg["accumulate_periods"],
        thermal=cfg["thermal"], thermal_duration_s=cfg["thermal_duration_s"],
        thermal_params=_thermal_params(cfg),
    )
    result = run_sweep(spec, progress=lambda msg: print(msg, file=sys.stderr))
    write_sweep_csv(result, cfg["out"], provenance=_provenance(cfg, chash))
    print(f"wrote {cfg['out']}: {len(result.rows)} rows")
    return 0


# ----------------------------------------------------------------------- main

_HANDLERS = {
    "phantom-gen": _cmd_phantom_gen,
    "simulate": _cmd_simulate,
    "sar": _cmd_sar,
    "bioheat": _cmd_bioheat,
    "sweep": _cmd_sweep,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voxdosim",
        description="Voxel-phantom microwave exposure and heating toolkit.",
    )
    parser.add_argument("--version", action="version",
                        version=f"voxdosim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _HANDLERS:
        p = sub.add_parser(name, help=f"{name} stage")
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.add_argument("--out", help="output path (overrides the 'out' key)")
        p.add_argument("--threads", type=int,
                       help="worker thread cap for compiled kernels")
        if name in ("phantom-gen", "sweep"):
            p.add_argument("--seed", type=int, help="override the 'seed' key")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if getattr(args, "threads", None) is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return 2
        import numba
        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    try:
        return _HANDLERS[args.command](args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
