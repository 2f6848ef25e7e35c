"""Voxel phantoms: generation, file format, and resampling.

A phantom is a uniform cubic voxel grid of one-byte material IDs indexing an
ordered material table; ID 0 is background/free space by convention. The
built-in generator produces a hemispherical breast resting on the chest-wall
plane (dome pointing +z): a skin shell of configurable thickness, an adipose
interior, and seeded random ellipsoidal fibroglandular clusters grown until
the interior volume fraction matches the requested density.

File format (``VOXPHANTOM 1``): an ASCII header terminated by an
``end_header`` line, then a raw little-endian byte payload in x-fastest order
(index = i + nx*(j + ny*k))::

    VOXPHANTOM 1
    dims nx ny nz
    resolution_m 0.001
    materials N
    <N material-table lines: name eps_inf delta_eps tau_ps alpha sigma_s
     density k C perfusion Q_m>
    end_header
    <nx*ny*nz payload bytes>

'#' comments are allowed in the header. In memory voxels are held as a
C-ordered uint8 array indexed [i, j, k].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .materials import Material, MaterialTableError, default_material_table, \
    format_material_table, parse_material_table

__all__ = [
    "VoxelPhantom",
    "PhantomSpec",
    "PhantomFormatError",
    "PhantomGenerationError",
    "generate_phantom",
    "save_phantom",
    "load_phantom",
    "resample",
    "fibroglandular_fraction",
    "total_tissue_mass",
]

_MAGIC = "VOXPHANTOM 1"


class PhantomFormatError(ValueError):
    """Raised for malformed phantom files."""


class PhantomGenerationError(ValueError):
    """Raised when a phantom spec cannot be realized (e.g. unreachable density)."""


@dataclass(frozen=True)
class VoxelPhantom:
    """A voxel grid of material IDs plus its material table.

    Parameters
    ----------
    voxels : np.ndarray
        uint8 array of shape (nx, ny, nz), C-ordered, indexed [i, j, k].
        Every value must index into ``materials``; 0 means free space.
    resolution : float
        Voxel edge length in meters.
    materials : list of Material
        Ordered table; position = voxel ID.
    """

    voxels: np.ndarray
    resolution: float
    materials: list[Material] = field(default_factory=default_material_table)

    def __post_init__(self) -> None:
        v = self.voxels
        if not isinstance(v, np.ndarray) or v.dtype != np.uint8 or v.ndim != 3:
            raise ValueError("voxels must be a 3-D uint8 ndarray")
        if min(v.shape) < 1:
            raise ValueError(f"voxel grid must be non-empty, got shape {v.shape}")
        if not self.resolution > 0.0:
            raise ValueError(f"resolution must be > 0, got {self.resolution}")
        if not 1 <= len(self.materials) <= 256:
            raise ValueError("material table must hold 1..256 entries")
        vmax = int(v.max())
        if vmax >= len(self.materials):
            raise ValueError(
                f"voxel ID {vmax} exceeds material table of {len(self.materials)} entries"
            )

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.voxels.shape

    @property
    def voxel_volume(self) -> float:
        """Volume of one voxel in m^3."""
        return self.resolution ** 3

    @property
    def tissue_mask(self) -> np.ndarray:
        """Boolean array, True where the voxel is not free space."""
        return self.voxels != 0

    def material_counts(self) -> np.ndarray:
        """Voxel count per material ID (length = table size)."""
        return np.bincount(self.voxels.ravel(), minlength=len(self.materials))

    def id_of(self, name: str) -> int:
        """Voxel ID of the named material; KeyError if absent."""
        for i, m in enumerate(self.materials):
            if m.name == name:
                return i
        raise KeyError(f"material {name!r} not in table")


def total_tissue_mass(phantom: VoxelPhantom) -> float:
    """Total mass of all non-free-space voxels, in kg."""
    density = np.array([m.density for m in phantom.materials])
    density[0] = 0.0
    return float(density[phantom.voxels].sum() * phantom.voxel_volume)


def fibroglandular_fraction(phantom: VoxelPhantom) -> float:
    """Measured fibroglandular share of the interior (adipose+fibroglandular)."""
    counts = phantom.material_counts()
    n_fib = counts[phantom.id_of("fibroglandular")]
    n_adi = counts[phantom.id_of("adipose")]
    if n_fib + n_adi == 0:
        return 0.0
    return float(n_fib) / float(n_fib + n_adi)


@dataclass(frozen=True)
class PhantomSpec:
    """Inputs for :func:`generate_phantom`.

    ``fibroglandular_fraction`` is the target share of the interior volume
    (excluding the skin shell); the generator matches it within
    ``fraction_tol`` by scaling the cluster ellipsoids.
    """

    radius_m: float = 0.025
    skin_thickness_m: float = 0.002
    fibroglandular_fraction: float = 0.30
    cluster_count: int = 12
    resolution_m: float = 0.001
    seed: int = 0
    fraction_tol: float = 0.02
    materials: list[Material] = field(default_factory=default_material_table)

    def __post_init__(self) -> None:
        if not self.radius_m > 0.0:
            raise ValueError("radius_m must be > 0")
        if not 0.0 <= self.skin_thickness_m < self.radius_m:
            raise ValueError("skin_thickness_m must lie in [0, radius_m)")
        if not 0.0 <= self.fibroglandular_fraction <= 1.0:
            raise ValueError("fibroglandular_fraction must lie in [0, 1]")
        if self.cluster_count < 0:
            raise ValueError("cluster_count must be >= 0")
        if not self.resolution_m > 0.0:
            raise ValueError("resolution_m must be > 0")
        if self.radius_m < 3.0 * self.resolution_m:
            raise ValueError("radius_m must span at least 3 voxels")
        if not 0.0 < self.fraction_tol < 1.0:
            raise ValueError("fraction_tol must lie in (0, 1)")


def generate_phantom(spec: PhantomSpec) -> VoxelPhantom:
    """Generate the hemispherical breast phantom described by ``spec``.

    Deterministic for a fixed spec (seeded generator). The chest-wall plane
    (z = 0 face) is left open: the skin shell covers only the curved surface.

    Raises
    ------
    PhantomGenerationError
        If the target fibroglandular fraction cannot be met within tolerance
        (e.g. cluster_count is 0 with a nonzero target).
    """
    res = spec.resolution_m
    r_out = spec.radius_m
    r_in = r_out - spec.skin_thickness_m
    n_xy = int(math.ceil(2.0 * r_out / res))
    n_z = int(math.ceil(r_out / res))

    mats = spec.materials
    ids = {m.name: i for i, m in enumerate(mats)}
    for needed in ("skin", "adipose", "fibroglandular"):
        if needed not in ids:
            raise PhantomGenerationError(f"material table lacks {needed!r}")

    # Voxel-center coordinates relative to the dome center on the base plane.
    cx = 0.5 * n_xy * res
    x = (np.arange(n_xy) + 0.5) * res - cx
    z = (np.arange(n_z) + 0.5) * res
    r2 = (x[:, None, None] ** 2 + x[None, :, None] ** 2 + z[None, None, :] ** 2)

    vox = np.zeros((n_xy, n_xy, n_z), dtype=np.uint8)
    inside = r2 <= r_out * r_out
    interior = r2 <= r_in * r_in
    vox[inside] = ids["skin"]
    vox[interior] = ids["adipose"]

    target = spec.fibroglandular_fraction
    n_interior = int(interior.sum())
    if n_interior == 0:
        raise PhantomGenerationError("interior is empty; radius/skin combination too thin")

    if target > 0.0:
        if target == 1.0:
            vox[interior] = ids["fibroglandular"]
        else:
            if spec.cluster_count == 0:
                raise PhantomGenerationError(
                    f"fibroglandular target {target} unreachable with cluster_count=0"
                )
            q_min = _cluster_quadratic_forms(spec, x, z, interior, r_in)
            s2 = _match_fraction(q_min, target, spec.fraction_tol)
            fib = np.zeros_like(interior)
            fib[interior] = q_min <= s2
            vox[fib] = ids["fibroglandular"]

    return VoxelPhantom(voxels=vox, resolution=res, materials=mats)


def _cluster_quadratic_forms(spec, x, z, interior, r_in):
    """Min over clusters of the ellipsoid quadratic form at interior voxel centers.

    A voxel joins the fibroglandular union at scale s iff q_min <= s^2, so the
    covered fraction is monotone in s and exact bisection applies.
    """
    rng = np.random.default_rng(spec.seed)
    pts = np.stack(np.broadcast_arrays(x[:, None, None], x[None, :, None],
                                       z[None, None, :]), axis=-1)[interior]
    q_min = np.full(len(pts), np.inf)
    for _ in range(spec.cluster_count):
        # Center well inside the interior so clusters grow from tissue, not skin.
        while True:
            c = rng.uniform(-r_in, r_in, size=3)
            c[2] = abs(c[2])
            if c @ c <= (0.85 * r_in) ** 2:
                break
        semi = r_in * rng.uniform(0.15, 0.40, size=3)  # base semi-axes at s=1
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))   # random orientation
        d = (pts - c) @ q / semi
        q_min = np.minimum(q_min, np.einsum("ij,ij->i", d, d))
    return q_min


def _match_fraction(q_min, target, tol):
    """Bisection on the ellipsoid scale so mean(q_min <= s^2) hits the target."""
    n = len(q_min)
    frac = lambda s2: float(np.count_nonzero(q_min <= s2)) / n
    lo, hi = 0.0, 1.0
    for _ in range(80):
        if frac(hi) >= target:
            break
        hi *= 4.0
    else:
        raise PhantomGenerationError("cluster growth failed to reach target fraction")
    best_s2, best_err = hi, abs(frac(hi) - target)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f = frac(mid)
        err = abs(f - target)
        if err < best_err:
            best_s2, best_err = mid, err
        if err <= tol:
            return mid
        if f < target:
            lo = mid
        else:
            hi = mid
    if best_err <= tol:
        return best_s2
    raise PhantomGenerationError(
        f"fibroglandular fraction {target} unreachable within +-{tol}: "
        f"closest achievable {target + math.copysign(best_err, -1):.4f}.."
        f"{target + best_err:.4f} with this seed/cluster layout"
    )


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------

def resample(phantom: VoxelPhantom, new_resolution: float) -> VoxelPhantom:
    """Downsample to a coarser grid by per-voxel majority vote.

    Each fine voxel belongs to the coarse voxel containing its center; each
    coarse voxel takes the most common material ID among its fine voxels,
    ties broken toward the lowest ID. ``new_resolution`` may be any value
    >= the current resolution (non-integer ratios allowed). Passing the
    current resolution returns an identical copy.
    """
    res = phantom.resolution
    if new_resolution <= 0.0:
        raise ValueError("new_resolution must be > 0")
    if new_resolution < res * (1.0 - 1e-12):
        raise ValueError(
            f"refinement not supported: new_resolution {new_resolution} < current {res}"
        )
    if abs(new_resolution - res) <= 1e-12 * res:
        return VoxelPhantom(phantom.voxels.copy(), res, list(phantom.materials))

    nx, ny, nz = phantom.dims
    nmat = len(phantom.materials)
    ratio = res / new_resolution
    new_dims = tuple(max(1, int(math.ceil(n * ratio))) for n in (nx, ny, nz))

    def coarse_index(n, new_n):
        ci = np.floor((np.arange(n) + 0.5) * ratio).astype(np.int64)
        return np.minimum(ci, new_n - 1)

    ci = coarse_index(nx, new_dims[0])
    cj = coarse_index(ny, new_dims[1])
    ck = coarse_index(nz, new_dims[2])
    lin = (ci[:, None, None] * new_dims[1] + cj[None, :, None]) * new_dims[2] \
        + ck[None, None, :]
    counts = np.bincount(
        (lin.ravel() * nmat + phantom.voxels.ravel()).astype(np.int64),
        minlength=int(np.prod(new_dims)) * nmat,
    ).reshape(*new_dims, nmat)
    # argmax returns the first maximum, i.e. the lowest material ID on ties.
    new_vox = counts.argmax(axis=-1).astype(np.uint8)
    return VoxelPhantom(new_vox, new_resolution, list(phantom.materials))


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def save_phantom(phantom: VoxelPhantom, path) -> None:
    """Write the phantom in the VOXPHANTOM format described in the module docs."""
    nx, ny, nz = phantom.dims
    header = [
        _MAGIC,
        f"dims {nx} {ny} {nz}",
        f"resolution_m {phantom.resolution!r}",
        f"materials {len(phantom.materials)}",
    ]
    table = format_material_table(phantom.materials).splitlines()[1:]  # drop comment
    header.extend(table)
    header.append("end_header")
    payload = np.ascontiguousarray(phantom.voxels.transpose(2, 1, 0)).tobytes()
    Path(path).write_bytes("\n".join(header).encode() + b"\n" + payload)


def load_phantom(path) -> VoxelPhantom:
    """Read a VOXPHANTOM file; errors distinguish header, payload, and ID faults."""
    blob = Path(path).read_bytes()
    marker = b"\nend_header\n"
    pos = blob.find(marker)
    if pos < 0:
        raise PhantomFormatError("not a phantom file: missing end_header")
    try:
        head_lines = blob[:pos].decode("utf-8").splitlines()
    except UnicodeDecodeError:
        raise PhantomFormatError("malformed header: not valid UTF-8 text") from None
    payload = blob[pos + len(marker):]

    lines = [ln.split("#", 1)[0].strip() for ln in head_lines]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] != _MAGIC:
        raise PhantomFormatError(f"not a phantom file: expected magic {_MAGIC!r}")

    fields: dict[str, str] = {}
    idx = 1
    for key in ("dims", "resolution_m", "materials"):
        if idx >= len(lines) or not lines[idx].startswith(key + " "):
            raise PhantomFormatError(f"malformed header: expected {key!r} line")
        fields[key] = lines[idx][len(key) + 1:]
        idx += 1
    try:
        dims = tuple(int(t) for t in fields["dims"].split())
        resolution = float(fields["resolution_m"])
        nmat = int(fields["materials"])
    except ValueError as exc:
        raise PhantomFormatError(f"malformed header: {exc}") from None
    if len(dims) != 3 or min(dims) < 1:
        raise PhantomFormatError(f"malformed header: bad dims {fields['dims']!r}")

    mat_lines = lines[idx:]
    if len(mat_lines) != nmat:
        raise PhantomFormatError(
            f"malformed header: expected {nmat} material lines, got {len(mat_lines)}"
        )
    try:
        materials = parse_material_table("\n".join(mat_lines))
    except MaterialTableError as exc:
        raise PhantomFormatError(f"malformed material table: {exc}") from None

    expected = dims[0] * dims[1] * dims[2]
    if len(payload) != expected:
        raise PhantomFormatError(
            f"truncated payload: expected {expected} bytes, got {len(payload)}"
        )
    vox = np.frombuffer(payload, dtype=np.uint8).reshape(dims[2], dims[1], dims[0])
    vox = np.ascontiguousarray(vox.transpose(2, 1, 0))
    vmax = int(vox.max())
    if vmax >= nmat:
        raise PhantomFormatError(
            f"unknown material ID {vmax} in payload (table has {nmat} entries)"
        )
    try:
        return VoxelPhantom(vox, resolution, materials)
    except ValueError as exc:
        raise PhantomFormatError(str(exc)) from None
