"""File formats: HTEN tensors, CSV tensors, run manifests and trace tables.

HTEN layout (little-endian)::

    b"HTEN" | version u8 (=1) | order u8 | dims u32 x order | dtype u8 (1 = f64) | payload

The payload holds the entries in C order (first index slowest).
"""

import csv
import io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

__all__ = [
    "HTEN_MAGIC",
    "FormatError",
    "atomic_write",
    "write_hten",
    "read_hten",
    "write_tensor",
    "read_tensor",
    "read_csv_tensor",
    "write_csv_tensor",
    "write_manifest",
    "read_manifest",
    "TRACE_COLUMNS",
    "write_trace",
    "append_report_csv",
]

HTEN_MAGIC = b"HTEN"
HTEN_VERSION = 1
DTYPE_F64 = 1


class FormatError(ValueError):
    """Malformed or inconsistent tensor file."""


def atomic_write(path, data):
    """Write bytes to `path` through a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def hten_bytes(t):
    t = np.asarray(t, dtype=np.float64)
    if t.ndim < 1 or t.ndim > 255:
        raise FormatError(f"cannot store an order-{t.ndim} tensor")
    header = HTEN_MAGIC + struct.pack("<BB", HTEN_VERSION, t.ndim)
    header += struct.pack(f"<{t.ndim}I", *t.shape) + struct.pack("<B", DTYPE_F64)
    return header + np.ascontiguousarray(t, dtype="<f8").tobytes(order="C")


def write_hten(path, t):
    atomic_write(path, hten_bytes(t))


def read_hten(path):
    raw = Path(path).read_bytes()
    if raw[:4] != HTEN_MAGIC:
        raise FormatError(f"{path}: not an HTEN file")
    if len(raw) < 6:
        raise FormatError(f"{path}: truncated header")
    version, order = struct.unpack_from("<BB", raw, 4)
    if version != HTEN_VERSION:
        raise FormatError(f"{path}: unsupported HTEN version {version}")
    pos = 6
    if order < 1 or len(raw) < pos + 4 * order + 1:
        raise FormatError(f"{path}: truncated header")
    dims = struct.unpack_from(f"<{order}I", raw, pos)
    pos += 4 * order
    (dtype,) = struct.unpack_from("<B", raw, pos)
    pos += 1
    if dtype != DTYPE_F64:
        raise FormatError(f"{path}: unsupported dtype code {dtype}")
    count = int(np.prod(dims))
    if len(raw) - pos != 8 * count:
        raise FormatError(f"{path}: payload has {len(raw) - pos} bytes, header implies {8 * count}")
    return np.frombuffer(raw, dtype="<f8", offset=pos).astype(np.float64).reshape(dims)


def _shape_sidecar(path):
    return Path(str(path) + ".shape")


def read_csv_tensor(path):
    """Flat CSV of values (C order) plus a ``<path>.shape`` sidecar of comma-separated dims."""
    side = _shape_sidecar(path)
    if not side.exists():
        raise FormatError(f"{path}: missing shape sidecar {side}")
    dims = tuple(int(d) for d in side.read_text().replace(",", " ").split())
    text = Path(path).read_text().replace(",", " ").split()
    vals = np.array([float(v) for v in text], dtype=np.float64)
    if vals.size != int(np.prod(dims)):
        raise FormatError(f"{path}: {vals.size} values for shape {dims}")
    return vals.reshape(dims)


def write_csv_tensor(path, t):
    t = np.asarray(t, dtype=np.float64)
    atomic_write(path, ("\n".join(repr(float(v)) for v in t.ravel()) + "\n").encode())
    atomic_write(_shape_sidecar(path), (",".join(str(d) for d in t.shape) + "\n").encode())


def read_tensor(path):
    """Load an HTEN, CSV (with sidecar) or ``.npy`` tensor by extension."""
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return read_csv_tensor(path)
    if suffix == ".npy":
        return np.load(path).astype(np.float64)
    return read_hten(path)


def write_tensor(path, t):
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        write_csv_tensor(path, t)
    elif suffix == ".npy":
        buf = io.BytesIO()
        np.save(buf, np.asarray(t, dtype=np.float64))
        atomic_write(path, buf.getvalue())
    else:
        write_hten(path, t)


def write_manifest(path, manifest):
    atomic_write(path, (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode())


def read_manifest(path):
    return json.loads(Path(path).read_text())


TRACE_COLUMNS = (
    "iteration",
    "objective",
    "hsi_term",
    "msi_term",
    "nuclear_term",
    "mu",
    "g0_g3_residual",
    "wall_seconds",
)


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_trace(path, trace, mode="nctrf"):
    """One row per outer iteration. CTRF traces omit ``mu`` and leave penalty columns empty;
    an ``rmse`` column is appended when the rows carry one."""
    cols = [c for c in TRACE_COLUMNS if not (mode == "ctrf" and c == "mu")]
    if trace and "rmse" in trace[0]:
        cols.append("rmse")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in trace:
        w.writerow([_cell(row.get(c)) for c in cols])
    atomic_write(path, buf.getvalue().encode())


def append_report_csv(path, report, label=None):
    """Append a metrics row, writing the header when the file is new."""
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    header = ("label," if label is not None else "") + report.csv_header()
    row = (f"{label}," if label is not None else "") + report.csv_row()
    with open(path, "a") as fh:
        if new:
            fh.write(header + "\n")
        fh.write(row + "\n")
