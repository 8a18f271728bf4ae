"""Report and dump formats (see docs/formats.md)."""

import csv
import json
import struct
from pathlib import Path

import numpy as np

SCHEMA = 1
MAGIC = b"BCKD"
_HEADER = struct.Struct("<4sII")


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _finite(obj.real), "im": _finite(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        return _finite(float(obj))
    return obj


def _finite(x):
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def write_json(path, payload):
    body = {"schema": SCHEMA, **to_jsonable(payload)}
    Path(path).write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")


def read_json(path):
    data = json.loads(Path(path).read_text())
    if data.get("schema") != SCHEMA:
        raise ValueError(f"unsupported report schema {data.get('schema')!r}")
    return data


def _fmt(x):
    return repr(float(x))


def write_kernel_csv(path, t, x, values):
    """Rows (t, x_1, ..., re, im) for every grid point; ``x`` is (n,) or (n, d-1)."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    x = x[:, None] if x.ndim == 1 else x
    values = np.asarray(values, dtype=complex).reshape(len(t), len(x))
    names = ["t"] + [f"x{i + 1}" for i in range(x.shape[1])] + ["re", "im"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i, ti in enumerate(t):
            for j, xj in enumerate(x):
                v = values[i, j]
                w.writerow([_fmt(ti), *map(_fmt, xj), _fmt(v.real), _fmt(v.imag)])


def read_kernel_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], np.array(rows[1:], dtype=float)
    nx = len(head) - 3
    return body[:, 0], body[:, 1:1 + nx], body[:, -2] + 1j * body[:, -1]


def write_kernel_binary(path, t, x, values):
    """Magic, version, spatial dimension count, then sizes and little-endian doubles."""
    t = np.asarray(t, dtype="<f8")
    x = np.asarray(x, dtype="<f8")
    x = x[:, None] if x.ndim == 1 else x
    values = np.asarray(values, dtype=complex).reshape(len(t), len(x))
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, 1, x.shape[1]))
        fh.write(struct.pack("<QQ", len(t), len(x)))
        fh.write(t.tobytes())
        fh.write(np.ascontiguousarray(x, dtype="<f8").tobytes())
        inter = np.empty(values.shape + (2,), dtype="<f8")
        inter[..., 0] = values.real
        inter[..., 1] = values.imag
        fh.write(inter.tobytes())


def read_kernel_binary(path):
    raw = Path(path).read_bytes()
    magic, version, nd = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC or version != 1:
        raise ValueError("not a kernel dump")
    off = _HEADER.size
    nt, nx = struct.unpack_from("<QQ", raw, off)
    off += 16
    t = np.frombuffer(raw, "<f8", nt, off)
    off += 8 * nt
    x = np.frombuffer(raw, "<f8", nx * nd, off).reshape(nx, nd)
    off += 8 * nx * nd
    v = np.frombuffer(raw, "<f8", 2 * nt * nx, off).reshape(nt, nx, 2)
    return t, x, v[..., 0] + 1j * v[..., 1]


def write_table_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])


def write_spectrum_csv(path, rows):
    write_table_csv(path, ["sector", "index", "value"], rows)
