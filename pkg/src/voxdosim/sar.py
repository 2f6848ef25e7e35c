"""Specific absorption rate: per-voxel values, mass-averaged fields, limits.

Point SAR per voxel is sigma_eff(f) * |E_rms|^2 / density, where E is the
steady-state phasor interpolated to the voxel center (per component, the mean
of the two face samples straddling the voxel) and E_rms = |A|/sqrt(2) for a
phasor amplitude A. Free-space voxels are 0.

Mass averaging grows a voxel-aligned cube centered on each tissue voxel one
shell at a time until the enclosed tissue mass reaches the target; the
outermost shell gets a fractional weight w in (0, 1] so the enclosed mass
equals the target exactly, and the averaged value is the mass-weighted mean
of point SAR over that cube. Cells beyond the grid count as free space, so
cubes near the surface dilute; cubes whose tissue occupancy (tissue voxels /
nominal cube volume) is below the validity threshold (default 10%) are
excluded from peak searches.

Regulatory limits: 1.6 W/kg for 1 g averaging, 2.0 W/kg for 10 g, judged
independently.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace

import numpy as np
from numba import njit, prange

from .fdtd.phasors import PhasorField, cell_centered_e
from .materials import effective_conductivity
from .phantom import VoxelPhantom, total_tissue_mass

__all__ = ["SarField", "ComplianceReport", "point_sar", "mass_averaged_sar",
           "compliance", "LIMIT_1G_W_PER_KG", "LIMIT_10G_W_PER_KG"]

LIMIT_1G_W_PER_KG = 1.6
LIMIT_10G_W_PER_KG = 2.0

_PARALLEL = os.environ.get("VOXDOSIM_SERIAL", "0") != "1"


@dataclass(frozen=True)
class SarField:
    """Point SAR plus (optionally) one mass-averaged companion field.

    ``point_sar`` is W/kg per voxel in the phantom frame, 0 in free space.
    After mass_averaged_sar(): ``averaged_sar`` holds the cube averages (NaN
    where free space or invalid), ``valid_mask`` flags cubes that met the
    tissue-occupancy threshold, and ``averaging_mass_g`` names the mass.
    """

    point_sar: np.ndarray
    tissue_mask: np.ndarray
    frequency_hz: float
    resolution_m: float
    power_factor: float
    converged: bool
    averaging_mass_g: float | None = None
    averaged_sar: np.ndarray | None = None
    valid_mask: np.ndarray | None = None

    @property
    def peak_point(self) -> tuple[float, tuple[int, int, int]]:
        """(max point SAR over tissue, its voxel); first index wins ties."""
        if not self.tissue_mask.any():
            raise ValueError("phantom contains no tissue voxels")
        vals = np.where(self.tissue_mask, self.point_sar, -np.inf)
        flat = int(np.argmax(vals))
        idx = np.unravel_index(flat, vals.shape)
        return float(self.point_sar[idx]), tuple(int(v) for v in idx)

    @property
    def peak_averaged(self) -> tuple[float, tuple[int, int, int]]:
        """(max averaged SAR over valid cubes, its voxel)."""
        if self.averaged_sar is None or self.valid_mask is None:
            raise ValueError("averaged SAR not computed; call mass_averaged_sar first")
        if not self.valid_mask.any():
            raise ValueError(
                "no averaging cube met the tissue-occupancy threshold; "
                "the phantom is too small or too sparse for this mass"
            )
        vals = np.where(self.valid_mask, self.averaged_sar, -np.inf)
        flat = int(np.argmax(vals))
        idx = np.unravel_index(flat, vals.shape)
        return float(vals[idx]), tuple(int(v) for v in idx)


@dataclass(frozen=True)
class ComplianceReport:
    """Pass/fail against the 1 g and 10 g limits, judged independently."""

    peak_1g: float
    peak_10g: float
    limit_1g: float = LIMIT_1G_W_PER_KG
    limit_10g: float = LIMIT_10G_W_PER_KG

    def __post_init__(self) -> None:
        if self.peak_1g < 0.0 or self.peak_10g < 0.0:
            raise ValueError("SAR peaks must be >= 0")

    @property
    def compliant_1g(self) -> bool:
        return self.peak_1g <= self.limit_1g

    @property
    def compliant_10g(self) -> bool:
        return self.peak_10g <= self.limit_10g

    @property
    def margin_1g(self) -> float:
        return self.limit_1g - self.peak_1g

    @property
    def margin_10g(self) -> float:
        return self.limit_10g - self.peak_10g

    def summary(self) -> str:
        def line(mass, peak, limit, ok, margin):
            verdict = "PASS" if ok else "FAIL"
            return (f"{mass}: peak {peak:.6g} W/kg vs limit {limit} W/kg -> "
                    f"{verdict} (margin {margin:+.6g} W/kg)")

        return "\n".join([
            line("1g", self.peak_1g, self.limit_1g, self.compliant_1g, self.margin_1g),
            line("10g", self.peak_10g, self.limit_10g, self.compliant_10g,
                 self.margin_10g),
        ])


def point_sar(phasors: PhasorField, phantom: VoxelPhantom,
              frequency_hz: float | None = None,
              require_converged: bool = True) -> SarField:
    """Per-voxel SAR in W/kg from calibrated steady-state phasors.

    Raises CalibrationError when the phasors carry no power calibration and
    ConvergenceError when they did not converge (unless ``require_converged``
    is False, in which case the flag is propagated on the result).
    """
    if tuple(phantom.dims) != tuple(phasors.phantom_dims):
        raise ValueError(
            f"phantom dims {phantom.dims} do not match the phasor grid's "
            f"embedded phantom {phasors.phantom_dims}"
        )
    if not math.isclose(phantom.resolution, phasors.resolution_m,
                        rel_tol=1e-9, abs_tol=0.0):
        raise ValueError(
            f"phantom resolution {phantom.resolution} differs from phasor "
            f"resolution {phasors.resolution_m}"
        )
    if require_converged:
        phasors.require_converged()
    factor = phasors.power_factor
    f = phasors.frequency_hz if frequency_hz is None else float(frequency_hz)

    ox, oy, oz = phasors.phantom_offset
    px, py, pz = phantom.dims
    exc, eyc, ezc = cell_centered_e(phasors)
    box = (slice(ox, ox + px), slice(oy, oy + py), slice(oz, oz + pz))
    e2 = np.zeros(phantom.dims)
    for comp in (exc, eyc, ezc):
        c = comp[box]
        e2 += c.real * c.real + c.imag * c.imag

    mats = phantom.materials
    sig_eff = np.array([effective_conductivity(m.model, f) for m in mats])
    rho = np.array([m.density for m in mats])
    ids = phantom.voxels
    tissue = phantom.tissue_mask
    rho_safe = np.where(tissue, rho[ids], 1.0)
    sar = np.where(tissue, sig_eff[ids] * (0.5 * e2) * factor / rho_safe, 0.0)
    return SarField(
        point_sar=sar, tissue_mask=tissue, frequency_hz=f,
        resolution_m=phantom.resolution, power_factor=factor,
        converged=phasors.converged,
    )


@njit(cache=True, parallel=_PARALLEL, fastmath=False)
def _averaged_sar_kernel(mass, energy, tissue, target_kg, frac_min, out, valid):
    """Cube-growing mass average per voxel; each output cell is independent."""
    nx, ny, nz = mass.shape
    for i in prange(nx):
        for j in range(ny):
            for k in range(nz):
                if tissue[i, j, k] == 0:
                    out[i, j, k] = np.nan
                    valid[i, j, k] = 0
                    continue
                r_need = max(max(i, nx - 1 - i), max(j, ny - 1 - j))
                r_need = max(r_need, max(k, nz - 1 - k))
                m_in = 0.0
                e_in = 0.0
                cnt_in = 0
                done = False
                for r in range(r_need + 1):
                    m_sh = 0.0
                    e_sh = 0.0
                    c_sh = 0
                    if r == 0:
                        m_sh = mass[i, j, k]
                        e_sh = energy[i, j, k]
                        c_sh = 1
                    else:
                        x0 = i - r if i - r > 0 else 0
                        x1 = i + r if i + r < nx - 1 else nx - 1
                        y0 = j - r if j - r > 0 else 0
                        y1 = j + r if j + r < ny - 1 else ny - 1
                        # two full z faces
                        for s in range(2):
                            kk = k - r if s == 0 else k + r
                            if 0 <= kk < nz:
                                for ii in range(x0, x1 + 1):
                                    for jj in range(y0, y1 + 1):
                                        m_sh += mass[ii, jj, kk]
                                        e_sh += energy[ii, jj, kk]
                                        c_sh += tissue[ii, jj, kk]
                        # rings at intermediate z
                        z0 = k - r + 1 if k - r + 1 > 0 else 0
                        z1 = k + r - 1 if k + r - 1 < nz - 1 else nz - 1
                        for kk in range(z0, z1 + 1):
                            for s in range(2):
                                ii = i - r if s == 0 else i + r
                                if 0 <= ii < nx:
                                    for jj in range(y0, y1 + 1):
                                        m_sh += mass[ii, jj, kk]
                                        e_sh += energy[ii, jj, kk]
                                        c_sh += tissue[ii, jj, kk]
                            xi0 = i - r + 1 if i - r + 1 > 0 else 0
                            xi1 = i + r - 1 if i + r - 1 < nx - 1 else nx - 1
                            for s in range(2):
                                jj = j - r if s == 0 else j + r
                                if 0 <= jj < ny:
                                    for ii in range(xi0, xi1 + 1):
                                        m_sh += mass[ii, jj, kk]
                                        e_sh += energy[ii, jj, kk]
                                        c_sh += tissue[ii, jj, kk]
                    if m_in + m_sh >= target_kg and m_sh > 0.0:
                        w = (target_kg - m_in) / m_sh
                        out[i, j, k] = (e_in + w * e_sh) / target_kg
                        side = 2 * r + 1
                        frac = (cnt_in + c_sh) / (side * side * side)
                        valid[i, j, k] = 1 if frac >= frac_min else 0
                        done = True
                        break
                    m_in += m_sh
                    e_in += e_sh
                    cnt_in += c_sh
                if not done:
                    out[i, j, k] = np.nan
                    valid[i, j, k] = 0


def mass_averaged_sar(sar: SarField, phantom: VoxelPhantom, target_mass_kg: float,
                      tissue_fraction_min: float = 0.1) -> SarField:
    """Attach the cube-averaged SAR for ``target_mass_kg`` to a SarField.

    Raises ValueError when the phantom's total tissue mass is below the
    target (no cube can ever close).
    """
    if not target_mass_kg > 0.0:
        raise ValueError("target_mass_kg must be > 0")
    if sar.point_sar.shape != phantom.dims:
        raise ValueError("SAR field and phantom dimensions differ")
    total = total_tissue_mass(phantom)
    if total < target_mass_kg:
        raise ValueError(
            f"total tissue mass {total:.6g} kg is below the averaging target "
            f"{target_mass_kg:.6g} kg"
        )
    rho = np.array([m.density for m in phantom.materials])
    rho[0] = 0.0  # ID 0 is free space: massless for averaging purposes
    vol = phantom.voxel_volume
    mass = np.ascontiguousarray(rho[phantom.voxels] * vol)
    energy = np.ascontiguousarray(sar.point_sar * mass)
    tissue = np.ascontiguousarray(phantom.tissue_mask.astype(np.uint8))
    out = np.empty(phantom.dims)
    valid = np.empty(phantom.dims, dtype=np.uint8)
    _averaged_sar_kernel(mass, energy, tissue, float(target_mass_kg),
                         float(tissue_fraction_min), out, valid)
    return replace(
        sar, averaging_mass_g=target_mass_kg * 1000.0, averaged_sar=out,
        valid_mask=valid.astype(bool),
    )


def compliance(peak_1g: float, peak_10g: float) -> ComplianceReport:
    """Judge the 1 g and 10 g peaks against their regulatory limits."""
    return ComplianceReport(peak_1g=float(peak_1g), peak_10g=float(peak_10g))
