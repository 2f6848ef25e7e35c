"""Named-component volume files (VOXVOLUME 1) for field/SAR/temperature export.

Layout mirrors the phantom format: an ASCII header ending at ``end_header``,
then one raw little-endian payload per declared component, each flattened
x-fastest (z-major). Components default to float32 (the export convention
for scalar fields); float64 is available when round-tripping must be exact.

    VOXVOLUME 1
    dims <nx> <ny> <nz>
    resolution_m <r>
    meta <key> <value...>          (zero or more)
    component <name> <f4|f8>       (one or more, payload order)
    end_header
    <payloads>
"""

from __future__ import annotations

import numpy as np

__all__ = ["VolumeFormatError", "save_volume", "load_volume"]

_DTYPES = {"f4": "<f4", "f8": "<f8"}


class VolumeFormatError(ValueError):
    """Raised when a volume file is malformed."""


def save_volume(path, components: dict[str, np.ndarray], resolution_m: float,
                meta: dict[str, str] | None = None, dtype: str = "f4") -> None:
    """Write named 3-D scalar fields sharing one grid.

    ``dtype`` is the storage type for every component ("f4" or "f8").
    """
    if not components:
        raise ValueError("need at least one component")
    if dtype not in _DTYPES:
        raise ValueError(f"dtype must be one of {sorted(_DTYPES)}")
    arrays = {}
    dims = None
    for name, arr in components.items():
        if not name or any(c.isspace() for c in name):
            raise ValueError(f"component name must be non-empty without spaces: {name!r}")
        a = np.asarray(arr)
        if a.ndim != 3:
            raise ValueError(f"component {name!r} is not a 3-D array")
        if dims is None:
            dims = a.shape
        elif a.shape != dims:
            raise ValueError(
                f"component {name!r} shape {a.shape} differs from {dims}")
        arrays[name] = a
    lines = ["VOXVOLUME 1", "dims {} {} {}".format(*dims),
             f"resolution_m {float(resolution_m)!r}"]
    for key, value in (meta or {}).items():
        if any(c.isspace() for c in key):
            raise ValueError(f"meta key must not contain whitespace: {key!r}")
        text = str(value)
        if "\n" in text:
            raise ValueError(f"meta value for {key!r} must be single-line")
        lines.append(f"meta {key} {text}")
    for name in arrays:
        lines.append(f"component {name} {dtype}")
    lines.append("end_header")
    with open(path, "wb") as f:
        f.write(("\n".join(lines) + "\n").encode("utf-8"))
        for name, a in arrays.items():
            f.write(np.ascontiguousarray(
                a.transpose(2, 1, 0), dtype=_DTYPES[dtype]).tobytes())


def load_volume(path):
    """Read a VOXVOLUME 1 file.

    Returns
    -------
    components : dict[str, np.ndarray]
        Arrays in C-order [i, j, k], float32 or float64 as stored.
    resolution_m : float
    meta : dict[str, str]
    """
    with open(path, "rb") as f:
        blob = f.read()
    marker = b"end_header\n"
    cut = blob.find(marker)
    if cut < 0:
        raise VolumeFormatError(f"{path}: missing end_header marker")
    try:
        text = blob[:cut].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise VolumeFormatError(f"{path}: header is not valid UTF-8") from exc
    payload = blob[cut + len(marker):]

    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].split() != ["VOXVOLUME", "1"]:
        raise VolumeFormatError(f"{path}: not a VOXVOLUME 1 file")
    dims = None
    resolution = None
    meta: dict[str, str] = {}
    decls: list[tuple[str, str]] = []
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "dims" and len(parts) == 4:
            dims = tuple(int(v) for v in parts[1:])
        elif parts[0] == "resolution_m" and len(parts) == 2:
            resolution = float(parts[1])
        elif parts[0] == "meta" and len(parts) >= 2:
            meta[parts[1]] = " ".join(parts[2:])
        elif parts[0] == "component" and len(parts) == 3:
            if parts[2] not in _DTYPES:
                raise VolumeFormatError(
                    f"{path}: unknown component dtype {parts[2]!r}")
            decls.append((parts[1], parts[2]))
        else:
            raise VolumeFormatError(f"{path}: unrecognized header line {ln!r}")
    if dims is None or any(d <= 0 for d in dims):
        raise VolumeFormatError(f"{path}: bad or missing dims")
    if resolution is None or not resolution > 0.0:
        raise VolumeFormatError(f"{path}: bad or missing resolution_m")
    if not decls:
        raise VolumeFormatError(f"{path}: no components declared")

    out: dict[str, np.ndarray] = {}
    pos = 0
    count = int(np.prod(dims))
    for name, dt in decls:
        nbytes = count * int(dt[1])
        chunk = payload[pos:pos + nbytes]
        if len(chunk) != nbytes:
            raise VolumeFormatError(
                f"{path}: truncated payload for component {name!r}: expected "
                f"{nbytes} bytes, got {len(chunk)}"
            )
        pos += nbytes
        flat = np.frombuffer(chunk, dtype=_DTYPES[dt])
        out[name] = flat.reshape(dims[::-1]).transpose(2, 1, 0).copy()
    if pos != len(payload):
        raise VolumeFormatError(f"{path}: {len(payload) - pos} trailing payload bytes")
    return out, resolution, meta
