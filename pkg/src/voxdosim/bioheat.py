"""Tissue heating under a fixed power deposition (one-way EM -> thermal).

Explicit forward-Euler update of

    rho C dT/dt = div(k grad T) + rho_b C_b w_b (T_b - T) + Q_m + rho * SAR

on the voxel grid with a 7-point Laplacian. Interface conductivities use the
harmonic mean 2 k1 k2 / (k1 + k2), which vanishes against a k=0 neighbor and
keeps heat flux continuous across material steps. Free-space voxels do not
evolve: with the convective boundary they are held at the ambient
temperature and every tissue face exposed to them (or to the grid edge)
leaks h (T - T_ambient) / dx; with the insulated boundary those faces carry
no flux.

The time step must satisfy the explicit stability bound, computed per voxel
from its actual face conductances, boundary faces, and perfusion sink:

    dt <= rho C / (sum_faces k_face/dx^2 + n_boundary h/dx + rho_b C_b w_b)

which reduces to the familiar rho C dx^2 / (6 k) in a uniform interior.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .phantom import VoxelPhantom

__all__ = ["ThermalParams", "ThermalState", "ThermalResult", "stable_dt",
           "step_thermal", "run_exposure"]

_PARALLEL = os.environ.get("VOXDOSIM_SERIAL", "0") != "1"

BOUNDARY_MODES = ("convective", "insulated")


@dataclass(frozen=True)
class ThermalParams:
    """Blood, boundary, and initial-condition parameters.

    Blood values are literature-typical defaults; override as needed. The
    convective coefficient ``h_w_per_m2k`` applies at every tissue face that
    touches free space or the grid edge.
    """

    boundary: str = "convective"
    h_w_per_m2k: float = 10.0
    ambient_k: float = 310.0
    initial_k: float = 310.0
    blood_temperature_k: float = 310.0
    blood_density: float = 1050.0        # kg/m^3
    blood_heat_capacity: float = 3617.0  # J/(kg K)

    def __post_init__(self) -> None:
        if self.boundary not in BOUNDARY_MODES:
            raise ValueError(f"boundary must be one of {BOUNDARY_MODES}")
        if self.h_w_per_m2k < 0.0:
            raise ValueError("h_w_per_m2k must be >= 0")
        for f in ("ambient_k", "initial_k", "blood_temperature_k",
                  "blood_density", "blood_heat_capacity"):
            if not getattr(self, f) > 0.0:
                raise ValueError(f"{f} must be > 0")


@dataclass(frozen=True)
class ThermalState:
    """Temperature field (K, phantom frame) at a point in exposure time."""

    temperature: np.ndarray
    time_s: float
    params: ThermalParams

    def __post_init__(self) -> None:
        t = self.temperature
        if not np.isfinite(t).all() or (t <= 0.0).any():
            raise ValueError("temperatures must be finite and > 0 K")


@dataclass(frozen=True)
class ThermalResult:
    """Exposure outcome: final state plus rise statistics over tissue.

    ``baseline`` names the reference the rises are measured against:
    "initial" (the uniform starting temperature) or "zero-power" (a second
    integration with the deposition turned off, isolating the
    exposure-attributable rise from metabolic/boundary drift).
    """

    state: ThermalState
    baseline: str
    baseline_temperature: np.ndarray | None
    peak_rise_k: float
    mean_rise_k: float
    peak_voxel: tuple[int, int, int]
    dt_s: float
    steps: int


def _voxel_arrays(phantom: VoxelPhantom, params: ThermalParams):
    mats = phantom.materials
    ids = phantom.voxels
    k_lut = np.array([m.thermal_k for m in mats])
    rho_lut = np.array([m.density for m in mats])
    c_lut = np.array([m.heat_capacity for m in mats])
    w_lut = np.array([m.perfusion for m in mats])
    q_lut = np.array([m.metabolic_rate for m in mats])
    tissue = phantom.tissue_mask
    for mid in np.unique(ids):
        if mid != 0 and c_lut[mid] <= 0.0:
            raise ValueError(
                f"material {mats[mid].name!r} has heat_capacity 0; thermal "
                f"integration needs rho*C > 0 for every tissue material"
            )
    kmap = np.ascontiguousarray(k_lut[ids])
    rho_c = rho_lut[ids] * c_lut[ids]
    inv_rho_c = np.ascontiguousarray(
        np.where(tissue, 1.0 / np.where(rho_c > 0.0, rho_c, 1.0), 0.0))
    perf = np.ascontiguousarray(
        params.blood_density * params.blood_heat_capacity * w_lut[ids]
        * tissue)
    q_m = np.ascontiguousarray(q_lut[ids] * tissue)
    rho_map = np.ascontiguousarray(rho_lut[ids])
    return kmap, rho_c, inv_rho_c, perf, q_m, rho_map, tissue


def stable_dt(phantom: VoxelPhantom, params: ThermalParams | None = None) -> float:
    """Largest explicitly stable time step for this phantom and boundary."""
    params = params or ThermalParams()
    kmap, rho_c, _, perf, _, _, tissue = _voxel_arrays(phantom, params)
    dx = phantom.resolution
    denom = np.array(perf)  # starts from the perfusion sink
    h_term = params.h_w_per_m2k / dx if params.boundary == "convective" else 0.0
    for axis in range(3):
        for side in (-1, 1):
            k_nb = np.full_like(kmap, np.nan)
            t_nb = np.zeros_like(tissue)
            src = [slice(None)] * 3
            dst = [slice(None)] * 3
            if side < 0:
                dst[axis] = slice(1, None)
                src[axis] = slice(0, -1)
            else:
                dst[axis] = slice(0, -1)
                src[axis] = slice(1, None)
            k_nb[tuple(dst)] = kmap[tuple(src)]
            t_nb[tuple(dst)] = tissue[tuple(src)]
            prod = kmap * np.where(np.isnan(k_nb), 0.0, k_nb)
            ssum = kmap + np.where(np.isnan(k_nb), 0.0, k_nb)
            k_face = np.where(prod > 0.0, 2.0 * prod / np.where(ssum > 0, ssum, 1.0), 0.0)
            denom = denom + np.where(t_nb, k_face / dx ** 2, h_term)
    denom = np.where(tissue, denom, np.inf)  # air voxels do not constrain dt
    with np.errstate(divide="ignore"):
        bounds = np.where(denom > 0.0, rho_c / denom, np.inf)
    bounds = np.where(tissue, bounds, np.inf)
    out = float(bounds.min())
    if not out > 0.0:
        raise ValueError("degenerate thermal grid: non-positive stability bound")
    return out


# six face-neighbour offsets; indexing a frozen table keeps the loop indices
# single-assignment, which parfor lowering requires
_FACES = np.array([[-1, 0, 0], [1, 0, 0], [0, -1, 0],
                   [0, 1, 0], [0, 0, -1], [0, 0, 1]], dtype=np.int64)


@njit(cache=True, parallel=_PARALLEL, fastmath=False)
def _thermal_step_kernel(t0, t1, kmap, inv_rho_c, perf, src, tissue, dt,
                         inv_dx2, h_over_dx, t_amb, t_blood, convective):
    nx, ny, nz = t0.shape
    for i in prange(nx):
        for j in range(ny):
            for k in range(nz):
                if tissue[i, j, k] == 0:
                    t1[i, j, k] = t_amb if convective else t0[i, j, k]
                    continue
                tc = t0[i, j, k]
                kc = kmap[i, j, k]
                acc = perf[i, j, k] * (t_blood - tc) + src[i, j, k]
                for d in range(6):
                    ii = i + _FACES[d, 0]
                    jj = j + _FACES[d, 1]
                    kk = k + _FACES[d, 2]
                    inside = 0 <= ii < nx and 0 <= jj < ny and 0 <= kk < nz
                    if inside and tissue[ii, jj, kk] != 0:
                        kn = kmap[ii, jj, kk]
                        if kc > 0.0 and kn > 0.0:
                            k_face = 2.0 * kc * kn / (kc + kn)
                            acc += k_face * (t0[ii, jj, kk] - tc) * inv_dx2
                    elif convective:
                        acc += h_over_dx * (t_amb - tc)
                t1[i, j, k] = tc + dt * inv_rho_c[i, j, k] * acc


def _integrate(phantom, sar_values, params, dt, steps, arrays):
    kmap, rho_c, inv_rho_c, perf, q_m, rho_map, tissue = arrays
    dx = phantom.resolution
    src = np.ascontiguousarray(q_m + rho_map * sar_values * tissue)
    t0 = np.full(phantom.dims, params.initial_k)
    if params.boundary == "convective":
        t0[~tissue] = params.ambient_k
    t1 = np.empty_like(t0)
    tiss8 = np.ascontiguousarray(tissue.astype(np.uint8))
    convective = params.boundary == "convective"
    for s in range(steps):
        _thermal_step_kernel(
            t0, t1, kmap, inv_rho_c, perf, src, tiss8, dt, 1.0 / dx ** 2,
            params.h_w_per_m2k / dx if convective else 0.0,
            params.ambient_k, params.blood_temperature_k, convective)
        t0, t1 = t1, t0
        if (s % 200 == 199 or s == steps - 1) and not np.isfinite(t0).all():
            raise RuntimeError(
                f"thermal integration produced non-finite temperatures at "
                f"step {s + 1} (dt={dt:.4g} s)"
            )
    return t0


def step_thermal(state: ThermalState, phantom: VoxelPhantom, sar_values,
                 dt_s: float) -> ThermalState:
    """One explicit update; validates the stability bound up front.

    ``sar_values`` is point SAR in W/kg on the phantom grid (a SarField's
    ``point_sar`` or any aligned array).
    """
    sar_values = np.asarray(sar_values, dtype=np.float64)
    if sar_values.shape != phantom.dims:
        raise ValueError("SAR field and phantom dimensions differ")
    if state.temperature.shape != phantom.dims:
        raise ValueError("temperature field and phantom dimensions differ")
    params = state.params
    bound = stable_dt(phantom, params)
    if dt_s > bound:
        raise ValueError(
            f"dt {dt_s:.6g} s violates the explicit stability bound "
            f"{bound:.6g} s for this phantom"
        )
    arrays = _voxel_arrays(phantom, params)
    kmap, rho_c, inv_rho_c, perf, q_m, rho_map, tissue = arrays
    dx = phantom.resolution
    src = np.ascontiguousarray(q_m + rho_map * sar_values * tissue)
    t0 = np.ascontiguousarray(state.temperature, dtype=np.float64)
    t1 = np.empty_like(t0)
    convective = params.boundary == "convective"
    _thermal_step_kernel(
        t0, t1, kmap, inv_rho_c, perf, src,
        np.ascontiguousarray(tissue.astype(np.uint8)), dt_s, 1.0 / dx ** 2,
        params.h_w_per_m2k / dx if convective else 0.0,
        params.ambient_k, params.blood_temperature_k, convective)
    if not np.isfinite(t1).all():
        raise RuntimeError("thermal step produced non-finite temperatures")
    return ThermalState(temperature=t1, time_s=state.time_s + dt_s, params=params)


def run_exposure(phantom: VoxelPhantom, sar_values, duration_s: float,
                 params: ThermalParams | None = None, dt_s: float | None = None,
                 baseline: str = "initial") -> ThermalResult:
    """Integrate heating over ``duration_s`` from a uniform initial field.

    ``baseline`` selects the reference for the reported rises: "initial"
    compares against the starting temperature; "zero-power" runs a second
    integration without the deposition and reports the difference, isolating
    the exposure-attributable rise (exactly linear in deposited power).
    """
    if baseline not in ("initial", "zero-power"):
        raise ValueError('baseline must be "initial" or "zero-power"')
    if duration_s < 0.0:
        raise ValueError("duration_s must be >= 0")
    params = params or ThermalParams()
    if hasattr(sar_values, "point_sar"):
        sar_values = sar_values.point_sar
    sar_values = np.asarray(sar_values, dtype=np.float64)
    if sar_values.shape != phantom.dims:
        raise ValueError("SAR field and phantom dimensions differ")

    bound = stable_dt(phantom, params)
    if dt_s is not None:
        want = float(dt_s)
        if want > bound:
            raise ValueError(
                f"dt {want:.6g} s violates the explicit stability bound "
                f"{bound:.6g} s for this phantom"
            )
    elif math.isfinite(bound):
        want = 0.9 * bound
    else:
        # nothing constrains dt (no conduction/perfusion/boundary paths);
        # the update is then exact for any step size
        want = duration_s if duration_s > 0.0 else 1.0
    if duration_s == 0.0:
        steps = 0
        dt = 0.0
    else:
        steps = max(1, int(math.ceil(duration_s / want)))
        dt = duration_s / steps

    arrays = _voxel_arrays(phantom, params)
    tissue = arrays[6]
    if steps == 0:
        t_end = np.full(phantom.dims, params.initial_k)
        if params.boundary == "convective":
            t_end[~tissue] = params.ambient_k
    else:
        t_end = _integrate(phantom, sar_values, params, dt, steps, arrays)

    if baseline == "zero-power":
        if steps == 0:
            ref = t_end.copy()
        else:
            ref = _integrate(phantom, np.zeros(phantom.dims), params, dt,
                             steps, arrays)
        rise = t_end - ref
        baseline_temp = ref
    else:
        rise = t_end - params.initial_k
        baseline_temp = None

    if not tissue.any():
        raise ValueError("phantom contains no tissue voxels")
    rise_t = np.where(tissue, rise, -np.inf)
    flat = int(np.argmax(rise_t))
    idx = np.unravel_index(flat, rise.shape)
    state = ThermalState(temperature=t_end, time_s=duration_s, params=params)
    return ThermalResult(
        state=state, baseline=baseline, baseline_temperature=baseline_temp,
        peak_rise_k=float(rise[idx]), mean_rise_k=float(rise[tissue].mean()),
        peak_voxel=tuple(int(v) for v in idx), dt_s=dt, steps=steps,
    )
