"""Binary and CSV export of sampled fields.

Binary layout (all integers little-endian)::

    8 bytes   magic b"CDFIELD1"
    8 bytes   uint64 length L of the JSON header
    L bytes   UTF-8 JSON header
    rest      complex samples (complex128 or complex64), little-endian,
              C order of ``shape``

The header records the field kind, grid, mass, surface and array shape, so
a file can be rebuilt without side information.  Samples are node-major and
spinor-minor; mass-shell fields put the sheet index (upper first) in front.
"""

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .fields import Grid3, MassShellField, Momentum3Field, SurfaceField, shell_four_momenta
from .surfaces import make_surface

MAGIC = b"CDFIELD1"
FORMAT_VERSION = 1
DTYPES = {"complex128": np.dtype("<c16"), "complex64": np.dtype("<c8")}


def _kind(field):
    if isinstance(field, MassShellField):
        return "mass-shell"
    if isinstance(field, SurfaceField):
        return "surface"
    if isinstance(field, Momentum3Field):
        return "momentum-3"
    raise TypeError(f"cannot serialize {type(field).__name__}")


def field_header(field, extra=None, dtype="complex128"):
    """JSON-ready description of ``field`` used as the binary header."""
    kind = _kind(field)
    if dtype not in DTYPES:
        raise ValueError(f"dtype must be one of {sorted(DTYPES)}, got {dtype!r}")
    header = {
        "format": "cauchydirac-field",
        "version": FORMAT_VERSION,
        "kind": kind,
        "grid": field.grid.describe(),
        "dtype": DTYPES[dtype].str,
        "shape": list(field.values.shape),
        "layout": "node-major, spinor-minor",
    }
    if kind == "mass-shell":
        header["mass"] = float(field.mass)
        header["sheets"] = ["+", "-"]
    if kind == "surface":
        header["surface"] = field.surface.describe()
        if field.support is not None:
            header["support"] = [np.asarray(b, dtype=float).tolist() for b in field.support]
    if extra:
        header["extra"] = extra
    return header


def _plain(obj):
    if isinstance(obj, (np.generic, np.ndarray)):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def save_field(path, field, extra=None, dtype="complex128"):
    """Write ``field`` to ``path`` in the binary format above.

    ``dtype="complex64"`` halves the file size at single precision.
    """
    header = field_header(field, extra, dtype)
    header = json.dumps(header, sort_keys=True, default=_plain).encode("utf-8")
    data = np.ascontiguousarray(field.values, dtype=DTYPES[dtype])
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        fh.write(data.tobytes())
    return path


def read_header(path):
    """Return ``(header, data_offset)`` of a field file."""
    with Path(path).open("rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a field file (bad magic {magic!r})")
        (length,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(length).decode("utf-8"))
    if header.get("version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported field format version {header.get('version')}")
    return header, len(MAGIC) + 8 + length


def load_field(path):
    """Rebuild a field written by :func:`save_field`.

    Surface fields need a surface family known to
    :func:`cauchydirac.surfaces.make_surface`.
    """
    header, offset = read_header(path)
    shape = tuple(header["shape"])
    values = np.fromfile(path, dtype=np.dtype(header["dtype"]), offset=offset)
    if values.size != int(np.prod(shape)):
        raise ValueError(f"{path}: expected {np.prod(shape)} samples, found {values.size}")
    values = values.reshape(shape).astype(complex)
    grid = Grid3(float(header["grid"]["extent"]), int(header["grid"]["n"]))
    kind = header["kind"]
    if kind == "mass-shell":
        return MassShellField(grid, float(header["mass"]), values)
    if kind == "momentum-3":
        return Momentum3Field(grid, values)
    if kind == "surface":
        spec = header["surface"]
        surface = make_surface(spec["name"], **spec.get("params", {}))
        support = header.get("support")
        return SurfaceField(surface, grid, values, tuple(map(np.asarray, support)) if support else None)
    raise ValueError(f"{path}: unknown field kind {kind!r}")


SPINOR_COLUMNS = [f"{part}{a}" for a in range(4) for part in ("re", "im")]


def field_rows(field):
    """Header and rows for the CSV export of ``field``."""
    kind = _kind(field)
    pts = field.grid.points().reshape(-1, 3)
    if kind == "mass-shell":
        names = ["sheet", "p0", "p1", "p2", "p3"]
        p4 = shell_four_momenta(field.grid, field.mass).reshape(2, -1, 4)
        coords = [np.concatenate([np.full((len(pts), 1), s), p4[i]], axis=-1)
                  for i, s in enumerate((1.0, -1.0))]
        coords = np.concatenate(coords)
    elif kind == "surface":
        names = ["x0", "x1", "x2", "x3"]
        coords = field.surface.lift(pts)
    else:
        names = ["p1", "p2", "p3"]
        coords = pts
    vals = field.values.reshape(-1, 4)
    spin = np.stack([vals.real, vals.imag], axis=-1).reshape(-1, 8)
    return names + SPINOR_COLUMNS, np.concatenate([coords, spin], axis=-1)


def export_csv(path, field):
    """Write one row per node: coordinates followed by the 8 real spinor parts."""
    names, rows = field_rows(field)
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
    return path
