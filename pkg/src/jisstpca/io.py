"""Tensor and matrix persistence.

``.jst`` layout::

    8 bytes   magic b"JSSTTNS1"
    4 bytes   little-endian uint32 header length H
    H bytes   UTF-8 JSON {"dims": [p, p, N], "dtype": "f64", "order": "slice-major"}
    rest      p*p*N little-endian float64, slice k contiguous, row-major within slice

CSV ingestion reads one slice per file, listed by a JSON manifest
``{"dims": [p, p, N], "slices": ["s1.csv", ...]}`` with paths relative to
the manifest.
"""

import json
import struct
from pathlib import Path

import numpy as np

from .tensor import SemiSymTensor

MAGIC = b"JSSTTNS1"


def write_jst(path, t: SemiSymTensor) -> None:
    header = json.dumps(
        {"dims": list(t.dims), "dtype": "f64", "order": "slice-major"},
        separators=(",", ":"),
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(t.slices, dtype="<f8").tobytes())


def read_jst(path) -> SemiSymTensor:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path}: not a .jst tensor file (bad magic)")
    (hlen,) = struct.unpack("<I", raw[8:12])
    header = json.loads(raw[12 : 12 + hlen].decode("utf-8"))
    if header.get("dtype") != "f64" or header.get("order") != "slice-major":
        raise ValueError(f"{path}: unsupported header {header}")
    p, p2, N = header["dims"]
    if p != p2:
        raise ValueError(f"{path}: slices must be square, got dims {header['dims']}")
    body = raw[12 + hlen :]
    if len(body) != 8 * p * p * N:
        raise ValueError(f"{path}: expected {p * p * N} values, found {len(body) // 8}")
    data = np.frombuffer(body, dtype="<f8").astype(np.float64)
    return SemiSymTensor(data.reshape(N, p, p))


def read_csv_slices(manifest_path) -> SemiSymTensor:
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    p, _, N = manifest["dims"]
    files = manifest["slices"]
    if len(files) != N:
        raise ValueError(f"manifest lists {len(files)} slices but dims say N={N}")
    slices = np.empty((N, p, p))
    for k, name in enumerate(files):
        a = np.loadtxt(manifest_path.parent / name, delimiter=",", ndmin=2)
        if a.shape != (p, p):
            raise ValueError(f"{name}: expected a {p}x{p} slice, got {a.shape}")
        slices[k] = a
    return SemiSymTensor(slices)


def write_matrix_csv(path, M) -> None:
    np.savetxt(path, np.asarray(M, dtype=np.float64), delimiter=",", fmt="%.17g")


def read_matrix_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def load_data(path):
    """Load a tensor (``.jst`` or CSV manifest ``.json``) or a covariate matrix (``.csv``)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".jst":
        return read_jst(path)
    if suffix == ".json":
        return read_csv_slices(path)
    if suffix == ".csv":
        return read_matrix_csv(path)
    raise ValueError(f"{path}: unrecognised data file extension {suffix!r}")
