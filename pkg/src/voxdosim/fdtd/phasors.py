"""Steady-state phasor container, Poynting-flux power accounting, file I/O.

Phasors use the exp(+i w t) convention: the instantaneous field is
Re[A exp(i w t)], so a complex amplitude A has RMS magnitude |A|/sqrt(2) and
the time-averaged Poynting vector is (1/2) Re[E x conj(H)].

Power calibration does not rescale the stored arrays. It attaches the power
measured by a closed Poynting box around the source together with the target
power; consumers apply ``power_factor`` (to quadratic quantities) or
``amplitude_factor`` (to fields). Keeping the raw arrays makes downstream
results exactly linear in the requested power: asking for 2x the power
multiplies SAR by exactly 2.0 in floating point, with no re-simulation noise.

File format (VOXPHASOR 1): an ASCII header terminated by ``end_header``
followed by the six component arrays (ex, ey, ez, hx, hy, hz) as raw
little-endian complex128, each flattened x-fastest.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PhasorField", "CalibrationError", "ConvergenceError", "PhasorFormatError",
    "poynting_flux_box", "default_flux_box", "calibrate_power",
    "cell_centered_e", "cell_centered_h", "save_phasors", "load_phasors",
]


class CalibrationError(RuntimeError):
    """Raised when power calibration is missing, ambiguous, or impossible."""


class ConvergenceError(RuntimeError):
    """Raised when a result requires a converged steady state and lacks one."""


class PhasorFormatError(ValueError):
    """Raised when a phasor file is malformed."""


_COMPONENTS = ("ex", "ey", "ez", "hx", "hy", "hz")


@dataclass(frozen=True)
class PhasorField:
    """Single-frequency steady-state fields on the staggered grid.

    E components sit on voxel faces (Ex on x-normal faces, etc.); H
    components sit on voxel edges. Array shapes for an (nx, ny, nz)-cell
    domain: ex (nx+1, ny, nz), ey (nx, ny+1, nz), ez (nx, ny, nz+1),
    hx (nx, ny+1, nz+1), hy (nx+1, ny, nz+1), hz (nx+1, ny+1, nz).
    """

    ex: np.ndarray
    ey: np.ndarray
    ez: np.ndarray
    hx: np.ndarray
    hy: np.ndarray
    hz: np.ndarray
    frequency_hz: float
    resolution_m: float
    cell_dims: tuple[int, int, int]
    phantom_offset: tuple[int, int, int]
    phantom_dims: tuple[int, int, int]
    pml_cells: int
    boundary: tuple[str, str, str]
    source_bbox: tuple | None
    converged: bool
    periods_accumulated: int
    convergence_history: tuple = ()
    measured_power_w: float | None = None
    target_power_w: float | None = None

    @property
    def calibrated(self) -> bool:
        return self.measured_power_w is not None and self.target_power_w is not None

    @property
    def power_factor(self) -> float:
        """target/measured power ratio; multiply quadratic field quantities."""
        if not self.calibrated:
            raise CalibrationError(
                "phasor field is not power-calibrated; run calibrate_power() first"
            )
        return self.target_power_w / self.measured_power_w

    @property
    def amplitude_factor(self) -> float:
        """sqrt of power_factor; multiply field amplitudes."""
        return math.sqrt(self.power_factor)

    def require_converged(self) -> None:
        if not self.converged:
            raise ConvergenceError(
                f"steady state not reached after {self.periods_accumulated} periods "
                f"of accumulation; rerun with more periods or looser tolerance"
            )


def _flux_x(ph: PhasorField, i: int, j0: int, j1: int, k0: int, k1: int) -> float:
    """Time-averaged Poynting flux through plane x=i over cells [j0,j1)x[k0,k1), +x sense."""
    ey = ph.ey
    ez = ph.ez
    hy = ph.hy
    hz = ph.hz
    ey_c = 0.25 * (ey[i - 1, j0:j1, k0:k1] + ey[i, j0:j1, k0:k1]
                   + ey[i - 1, j0 + 1:j1 + 1, k0:k1] + ey[i, j0 + 1:j1 + 1, k0:k1])
    hz_c = 0.5 * (hz[i, j0:j1, k0:k1] + hz[i, j0 + 1:j1 + 1, k0:k1])
    ez_c = 0.25 * (ez[i - 1, j0:j1, k0:k1] + ez[i, j0:j1, k0:k1]
                   + ez[i - 1, j0:j1, k0 + 1:k1 + 1] + ez[i, j0:j1, k0 + 1:k1 + 1])
    hy_c = 0.5 * (hy[i, j0:j1, k0:k1] + hy[i, j0:j1, k0 + 1:k1 + 1])
    s = 0.5 * np.real(ey_c * np.conj(hz_c) - ez_c * np.conj(hy_c))
    return float(s.sum()) * ph.resolution_m ** 2


def _flux_y(ph: PhasorField, j: int, i0: int, i1: int, k0: int, k1: int) -> float:
    ex = ph.ex
    ez = ph.ez
    hx = ph.hx
    hz = ph.hz
    ez_c = 0.25 * (ez[i0:i1, j - 1, k0:k1] + ez[i0:i1, j, k0:k1]
                   + ez[i0:i1, j - 1, k0 + 1:k1 + 1] + ez[i0:i1, j, k0 + 1:k1 + 1])
    hx_c = 0.5 * (hx[i0:i1, j, k0:k1] + hx[i0:i1, j, k0 + 1:k1 + 1])
    ex_c = 0.25 * (ex[i0:i1, j - 1, k0:k1] + ex[i0:i1, j, k0:k1]
                   + ex[i0 + 1:i1 + 1, j - 1, k0:k1] + ex[i0 + 1:i1 + 1, j, k0:k1])
    hz_c = 0.5 * (hz[i0:i1, j, k0:k1] + hz[i0 + 1:i1 + 1, j, k0:k1])
    s = 0.5 * np.real(ez_c * np.conj(hx_c) - ex_c * np.conj(hz_c))
    return float(s.sum()) * ph.resolution_m ** 2


def _flux_z(ph: PhasorField, k: int, i0: int, i1: int, j0: int, j1: int) -> float:
    ex = ph.ex
    ey = ph.ey
    hx = ph.hx
    hy = ph.hy
    ex_c = 0.25 * (ex[i0:i1, j0:j1, k - 1] + ex[i0:i1, j0:j1, k]
                   + ex[i0 + 1:i1 + 1, j0:j1, k - 1] + ex[i0 + 1:i1 + 1, j0:j1, k])
    hy_c = 0.5 * (hy[i0:i1, j0:j1, k] + hy[i0 + 1:i1 + 1, j0:j1, k])
    ey_c = 0.25 * (ey[i0:i1, j0:j1, k - 1] + ey[i0:i1, j0:j1, k]
                   + ey[i0:i1, j0 + 1:j1 + 1, k - 1] + ey[i0:i1, j0 + 1:j1 + 1, k])
    hx_c = 0.5 * (hx[i0:i1, j0:j1, k] + hx[i0:i1, j0 + 1:j1 + 1, k])
    s = 0.5 * np.real(ex_c * np.conj(hy_c) - ey_c * np.conj(hx_c))
    return float(s.sum()) * ph.resolution_m ** 2


def poynting_flux_box(ph: PhasorField, lo, hi, calibrated: bool = False) -> float:
    """Net time-averaged power in watts leaving the cell box [lo, hi] (inclusive).

    Field values are interpolated to face centers of the box surface, so the
    six planes close exactly. ``calibrated=True`` additionally multiplies by
    ``power_factor``.
    """
    lo = tuple(int(v) for v in lo)
    hi = tuple(int(v) for v in hi)
    n = ph.cell_dims
    for a in range(3):
        if not (1 <= lo[a] <= hi[a] <= n[a] - 2):
            raise ValueError(
                f"flux box axis {a}: need 1 <= lo <= hi <= {n[a] - 2}, got "
                f"[{lo[a]}, {hi[a]}]"
            )
        if ph.boundary[a] == "cpml" and (lo[a] < ph.pml_cells or hi[a] > n[a] - 1 - ph.pml_cells):
            raise ValueError(
                f"flux box axis {a} overlaps the absorbing layer "
                f"({ph.pml_cells} cells); shrink the box or grow the padding"
            )
    p = 0.0
    p += _flux_x(ph, hi[0] + 1, lo[1], hi[1] + 1, lo[2], hi[2] + 1)
    p -= _flux_x(ph, lo[0], lo[1], hi[1] + 1, lo[2], hi[2] + 1)
    p += _flux_y(ph, hi[1] + 1, lo[0], hi[0] + 1, lo[2], hi[2] + 1)
    p -= _flux_y(ph, lo[1], lo[0], hi[0] + 1, lo[2], hi[2] + 1)
    p += _flux_z(ph, hi[2] + 1, lo[0], hi[0] + 1, lo[1], hi[1] + 1)
    p -= _flux_z(ph, lo[2], lo[0], hi[0] + 1, lo[1], hi[1] + 1)
    if calibrated:
        p *= ph.power_factor
    return p


def default_flux_box(ph: PhasorField, clearance: int = 3):
    """Source bounding box grown by ``clearance`` cells, clipped to legal planes."""
    if ph.source_bbox is None:
        raise CalibrationError(
            "phasor field has no recorded source region; pass an explicit box"
        )
    (blo, bhi) = ph.source_bbox
    n = ph.cell_dims
    lo = []
    hi = []
    for a in range(3):
        margin = max(1, ph.pml_cells if ph.boundary[a] == "cpml" else 1)
        lo.append(max(blo[a] - clearance, margin))
        hi.append(min(bhi[a] + clearance, n[a] - 1 - margin))
        if lo[a] > hi[a]:
            raise CalibrationError(
                f"no room for a flux box around the source on axis {a}; "
                f"increase padding"
            )
    return tuple(lo), tuple(hi)


def calibrate_power(ph: PhasorField, target_power_w: float,
                    clearance: int = 3, box=None) -> PhasorField:
    """Attach measured radiated power and the requested target power.

    Measures the net time-averaged Poynting flux through a closed box around
    the source and records it; stored phasors are left untouched (see module
    docstring). Returns a new PhasorField.
    """
    if not target_power_w > 0.0:
        raise CalibrationError("target_power_w must be > 0")
    if box is None:
        lo, hi = default_flux_box(ph, clearance)
    else:
        lo, hi = box
    measured = poynting_flux_box(ph, lo, hi)
    if not measured > 0.0 or not math.isfinite(measured):
        raise CalibrationError(
            f"measured source power {measured!r} W is not positive; the run "
            f"may not have reached steady state"
        )
    return dataclasses.replace(
        ph, measured_power_w=float(measured), target_power_w=float(target_power_w)
    )


def cell_centered_e(ph: PhasorField):
    """Complex E phasors interpolated to voxel centers: (ex, ey, ez).

    Each component is the average of the two face samples straddling the
    voxel along that component's axis.
    """
    ex_c = 0.5 * (ph.ex[:-1, :, :] + ph.ex[1:, :, :])
    ey_c = 0.5 * (ph.ey[:, :-1, :] + ph.ey[:, 1:, :])
    ez_c = 0.5 * (ph.ez[:, :, :-1] + ph.ez[:, :, 1:])
    return ex_c, ey_c, ez_c


def cell_centered_h(ph: PhasorField):
    """Complex H phasors interpolated to voxel centers: (hx, hy, hz)."""
    hx = ph.hx
    hy = ph.hy
    hz = ph.hz
    hx_c = 0.25 * (hx[:, :-1, :-1] + hx[:, 1:, :-1] + hx[:, :-1, 1:] + hx[:, 1:, 1:])
    hy_c = 0.25 * (hy[:-1, :, :-1] + hy[1:, :, :-1] + hy[:-1, :, 1:] + hy[1:, :, 1:])
    hz_c = 0.25 * (hz[:-1, :-1, :] + hz[1:, :-1, :] + hz[:-1, 1:, :] + hz[1:, 1:, :])
    return hx_c, hy_c, hz_c


def _fmt_opt(v) -> str:
    return "none" if v is None else repr(float(v))


def save_phasors(path, ph: PhasorField) -> None:
    """Write a VOXPHASOR 1 file. complex128 payload preserves values bitwise."""
    lines = ["VOXPHASOR 1"]
    lines.append("dims {} {} {}".format(*ph.cell_dims))
    lines.append(f"resolution_m {ph.resolution_m!r}")
    lines.append(f"frequency_hz {ph.frequency_hz!r}")
    lines.append("phantom_offset {} {} {}".format(*ph.phantom_offset))
    lines.append("phantom_dims {} {} {}".format(*ph.phantom_dims))
    lines.append(f"pml_cells {ph.pml_cells}")
    lines.append("boundary {} {} {}".format(*ph.boundary))
    if ph.source_bbox is None:
        lines.append("source_bbox none")
    else:
        lo, hi = ph.source_bbox
        lines.append("source_bbox {} {} {} {} {} {}".format(*lo, *hi))
    lines.append(f"converged {1 if ph.converged else 0}")
    lines.append(f"periods {ph.periods_accumulated}")
    lines.append(f"measured_power_w {_fmt_opt(ph.measured_power_w)}")
    lines.append(f"target_power_w {_fmt_opt(ph.target_power_w)}")
    lines.append("end_header")
    header = ("\n".join(lines) + "\n").encode("ascii")
    with open(path, "wb") as f:
        f.write(header)
        for name in _COMPONENTS:
            arr = getattr(ph, name)
            f.write(np.ascontiguousarray(
                arr.transpose(2, 1, 0), dtype="<c16").tobytes())


def _shapes(dims):
    nx, ny, nz = dims
    return {
        "ex": (nx + 1, ny, nz), "ey": (nx, ny + 1, nz), "ez": (nx, ny, nz + 1),
        "hx": (nx, ny + 1, nz + 1), "hy": (nx + 1, ny, nz + 1), "hz": (nx + 1, ny + 1, nz),
    }


def load_phasors(path) -> PhasorField:
    """Read a VOXPHASOR 1 file written by save_phasors."""
    with open(path, "rb") as f:
        blob = f.read()
    marker = b"end_header\n"
    cut = blob.find(marker)
    if cut < 0:
        raise PhasorFormatError(f"{path}: missing end_header marker")
    try:
        text = blob[:cut].decode("ascii")
    except UnicodeDecodeError as exc:
        raise PhasorFormatError(f"{path}: header is not ASCII") from exc
    payload = blob[cut + len(marker):]

    fields: dict[str, list[str]] = {}
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].split() != ["VOXPHASOR", "1"]:
        raise PhasorFormatError(f"{path}: not a VOXPHASOR 1 file")
    for ln in lines[1:]:
        parts = ln.split()
        fields[parts[0]] = parts[1:]

    def need(key, n):
        if key not in fields or len(fields[key]) != n:
            raise PhasorFormatError(f"{path}: bad or missing header line {key!r}")
        return fields[key]

    dims = tuple(int(v) for v in need("dims", 3))
    if any(d <= 0 for d in dims):
        raise PhasorFormatError(f"{path}: non-positive dims {dims}")
    res = float(need("resolution_m", 1)[0])
    freq = float(need("frequency_hz", 1)[0])
    offset = tuple(int(v) for v in need("phantom_offset", 3))
    pdims = tuple(int(v) for v in need("phantom_dims", 3))
    pml = int(need("pml_cells", 1)[0])
    boundary = tuple(need("boundary", 3))
    sb = fields.get("source_bbox")
    if sb == ["none"]:
        source_bbox = None
    elif sb is not None and len(sb) == 6:
        v = [int(x) for x in sb]
        source_bbox = (tuple(v[:3]), tuple(v[3:]))
    else:
        raise PhasorFormatError(f"{path}: bad or missing header line 'source_bbox'")
    converged = need("converged", 1)[0] == "1"
    periods = int(need("periods", 1)[0])

    def opt_float(key):
        v = need(key, 1)[0]
        return None if v == "none" else float(v)

    measured = opt_float("measured_power_w")
    target = opt_float("target_power_w")

    shapes = _shapes(dims)
    arrays = {}
    pos = 0
    for name in _COMPONENTS:
        shape = shapes[name]
        nbytes = int(np.prod(shape)) * 16
        chunk = payload[pos:pos + nbytes]
        if len(chunk) != nbytes:
            raise PhasorFormatError(
                f"{path}: truncated payload for component {name!r}: expected "
                f"{nbytes} bytes, got {len(chunk)}"
            )
        pos += nbytes
        flat = np.frombuffer(chunk, dtype="<c16")
        arrays[name] = flat.reshape(shape[::-1]).transpose(2, 1, 0).copy()
    if pos != len(payload):
        raise PhasorFormatError(f"{path}: {len(payload) - pos} trailing payload bytes")

    return PhasorField(
        ex=arrays["ex"], ey=arrays["ey"], ez=arrays["ez"],
        hx=arrays["hx"], hy=arrays["hy"], hz=arrays["hz"],
        frequency_hz=freq, resolution_m=res, cell_dims=dims,
        phantom_offset=offset, phantom_dims=pdims, pml_cells=pml,
        boundary=boundary, source_bbox=source_bbox, converged=converged,
        periods_accumulated=periods, convergence_history=(),
        measured_power_w=measured, target_power_w=target,
    )
