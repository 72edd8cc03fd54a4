"""File formats: ZKFLD1 field snapshots, CSV tables, atomic writes.

ZKFLD1 layout (all little-endian)::

    b"ZKFLD1"
    int64   dims
    int64   points[dims]
    float64 extent[dims]
    float64 data[2 * prod(points)]   # interleaved re, im; row-major physical order
"""

from __future__ import annotations

import contextlib
import hashlib
import io
import os
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .spectral import Grid, SpectralField, make_grid

MAGIC = b"ZKFLD1"


@contextlib.contextmanager
def atomic_open(path, mode: str = "w"):
    """Write to ``path + '.partial'`` and rename into place on success.

    If the block raises, the ``.partial`` file is left behind so a truncated
    output is never mistaken for a finished one.
    """
    path = Path(path)
    tmp = path.with_name(path.name + ".partial")
    f = open(tmp, mode, **({} if "b" in mode else {"newline": ""}))
    try:
        yield f
        f.flush()
        os.fsync(f.fileno())
    finally:
        f.close()
    os.replace(tmp, path)


def field_to_bytes(field: SpectralField) -> bytes:
    g = field.grid
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(np.asarray([g.dims], dtype="<i8").tobytes())
    buf.write(np.asarray(g.points, dtype="<i8").tobytes())
    buf.write(np.asarray(g.extent, dtype="<f8").tobytes())
    v = np.ascontiguousarray(field.values, dtype=np.complex128)
    inter = np.empty(v.size * 2, dtype="<f8")
    inter[0::2] = v.real.ravel()
    inter[1::2] = v.imag.ravel()
    buf.write(inter.tobytes())
    return buf.getvalue()


def field_from_bytes(data: bytes, dealias: bool = False) -> SpectralField:
    if data[:6] != MAGIC:
        raise ValueError("not a ZKFLD1 file (bad magic)")
    off = 6
    dims = int(np.frombuffer(data, dtype="<i8", count=1, offset=off)[0])
    off += 8
    if dims not in (1, 2, 3):
        raise ValueError(f"corrupt ZKFLD1 header: dims={dims}")
    points = tuple(int(p) for p in np.frombuffer(data, dtype="<i8", count=dims, offset=off))
    off += 8 * dims
    extent = tuple(float(e) for e in np.frombuffer(data, dtype="<f8", count=dims, offset=off))
    off += 8 * dims
    n = int(np.prod(points))
    if len(data) - off != 16 * n:
        raise ValueError(f"ZKFLD1 payload has {len(data) - off} bytes, expected {16 * n}")
    raw = np.frombuffer(data, dtype="<f8", count=2 * n, offset=off)
    grid = make_grid(dims, extent, points, dealias)
    values = (raw[0::2] + 1j * raw[1::2]).reshape(points)
    return SpectralField.from_values(grid, values)


def write_field(path, field: SpectralField) -> None:
    with atomic_open(path, "wb") as f:
        f.write(field_to_bytes(field))


def read_field(path, dealias: bool = False) -> SpectralField:
    return field_from_bytes(Path(path).read_bytes(), dealias)


def write_metadata(path, items: Mapping[str, object]) -> None:
    """Sidecar ``key=value`` text file."""
    with atomic_open(path, "w") as f:
        for k, v in items.items():
            f.write(f"{k}={_fmt(v)}\n")


def read_metadata(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        k, _, v = line.partition("=")
        out[k.strip()] = v.strip()
    return out


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()) -> None:
    """Deterministic CSV: floats are written with ``repr`` precision."""
    with atomic_open(path, "w") as f:
        for c in comments:
            f.write(f"# {c}\n")
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(x) for x in row) + "\n")


def read_csv(path) -> tuple[list[str], np.ndarray, list[str]]:
    """Return ``(header, data, comment_lines)``; raises on an empty table."""
    comments, lines = [], []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            comments.append(line[1:].strip())
        elif line.strip():
            lines.append(line)
    if not lines:
        raise ValueError(f"{path}: no header row")
    header = [h.strip() for h in lines[0].split(",")]
    if len(lines) < 2:
        raise ValueError(f"{path}: no data rows")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    return header, data, comments


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]
