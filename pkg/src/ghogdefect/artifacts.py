"""On-disk formats for debug maps, feature matrices and solver traces."""

from __future__ import annotations

import csv
import struct

import numpy as np

_HEADER = struct.Struct("<II")   # width, height


def write_float_map(path, grid2d) -> None:
    """Little-endian float32 grid, row-major, after a (width, height) uint32 header."""
    arr = np.asarray(grid2d, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D map, got shape {arr.shape}")
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(w, h))
        fh.write(np.ascontiguousarray(arr).tobytes())


def read_float_map(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    w, h = _HEADER.unpack_from(raw)
    body = raw[_HEADER.size:]
    if len(body) != 4 * w * h:
        raise ValueError(f"{path}: expected {w}x{h} floats, found {len(body)} bytes")
    return np.frombuffer(body, dtype="<f4").reshape(h, w).copy()


def write_feature_csv(path, F) -> None:
    """Dense CSV: a ``d,K`` header row followed by d rows of K values."""
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2:
        raise ValueError(f"feature matrix must be 2-D, got shape {F.shape}")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(F.shape)
        for row in F:
            w.writerow([repr(float(v)) for v in row])


def read_feature_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty feature file")
    try:
        d, K = (int(v) for v in rows[0])
        F = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: malformed feature file ({exc})") from exc
    if F.shape != (d, K) and not (d * K == 0 and F.size == 0):
        raise ValueError(f"{path}: header says {d}x{K}, body is {F.shape}")
    return F.reshape(d, K)


def write_trace_csv(path, residuals, objectives) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "residual", "objective"])
        for i, (r, o) in enumerate(zip(residuals, objectives), start=1):
            w.writerow([i, repr(float(r)), repr(float(o))])
