#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Matrix container files for normalized contour distance matrices.

Layout (little-endian)::

    b"SEDM" | u32 version | u32 N | u32 count | count records

where each record is a 64-byte zero-padded UTF-8 object id, the f32 Frobenius norm
recorded at normalization time, and the N x N f32 entries in row-major order.
Labels travel in the sidecar manifest CSV.
"""

import logging
import os
import struct
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
import numpy.typing as npt

from edmshape_core.distmat import DistanceMatrix
from edmshape_core.exceptions import DecodeError, PreconditionError, ShapeError

_LOG = logging.getLogger(__name__)

MAGIC = b"SEDM"
VERSION = 1

ID_BYTES = 64

_HEADER = struct.Struct("<4sIII")


def _record_dtype(n: int) -> np.dtype:
    return np.dtype([("object_id", f"S{ID_BYTES}"), ("norm", "<f4"), ("entries", "<f4", (n, n))])


@dataclass(frozen=True)
class MatrixSet:
    """
    Normalized distance matrices with their object ids, in file order.
    """

    object_ids: List[str]
    matrices: List[DistanceMatrix]

    def __post_init__(self) -> None:
        if len(self.object_ids) != len(self.matrices):
            raise ShapeError(f"Got {len(self.object_ids)} ids for {len(self.matrices)} matrices")
        sizes = {m.n for m in self.matrices}
        if len(sizes) > 1:
            raise ShapeError(f"Matrices of mixed sizes {sorted(sizes)}")

    def __len__(self) -> int:
        return len(self.matrices)

    @property
    def n(self) -> int:
        """Matrix side N (0 for an empty set)."""
        return self.matrices[0].n if self.matrices else 0

    @property
    def norms(self) -> List[float]:
        """Frobenius norms recorded before normalization."""
        return [float(m.frobenius_norm or 1.0) for m in self.matrices]

    def select(self, object_ids: Sequence[str]) -> "MatrixSet":
        """
        The matrices of the given ids, in that order.

        Raises
        ------
        PreconditionError
            If an id is not in the set.
        """
        lookup = {oid: i for (i, oid) in enumerate(self.object_ids)}
        missing = [oid for oid in object_ids if oid not in lookup]
        if missing:
            raise PreconditionError(f"{len(missing)} object(s) missing from the matrix set, e.g. {missing[0]}")
        return MatrixSet(list(object_ids), [self.matrices[lookup[oid]] for oid in object_ids])


def _encode_id(object_id: str) -> bytes:
    raw = object_id.encode("utf-8")
    if len(raw) > ID_BYTES or b"\0" in raw:
        raise PreconditionError(f"Object id {object_id!r} does not fit in {ID_BYTES} bytes")
    return raw


def write_sedm(path: str, matrices: MatrixSet) -> None:
    """
    Write normalized matrices to a SEDM container.

    Raises
    ------
    PreconditionError
        If a matrix is not normalized or an id is longer than 64 bytes.
    """
    if not all(m.is_normalized for m in matrices.matrices):
        raise PreconditionError("Only normalized distance matrices can be stored")
    n = matrices.n
    records = np.zeros(len(matrices), dtype=_record_dtype(n))
    records["object_id"] = [_encode_id(oid) for oid in matrices.object_ids]
    records["norm"] = matrices.norms
    if len(matrices):
        records["entries"] = np.stack([m.entries for m in matrices.matrices])
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, len(matrices)))
        fh.write(records.tobytes())
    _LOG.info("Wrote %d matrices (N=%d) to %s", len(matrices), n, path)


def _renormalize(entries: npt.NDArray[np.float32], norm: float) -> DistanceMatrix:
    # The f32 round trip leaves the unit norm off by ~1e-7; restore it in f64.
    arr = entries.astype(np.float64)
    total = float(np.linalg.norm(arr))
    if total == 0:
        raise PreconditionError("stored matrix has all-zero entries")
    return DistanceMatrix(arr / total, frobenius_norm=float(norm))


def read_sedm(path: str) -> MatrixSet:
    """
    Read a SEDM container.

    Raises
    ------
    DecodeError
        On a missing or unreadable file, bad magic bytes, unsupported version,
        or a size that does not match the header.
    """
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as ex:
        raise DecodeError(path, str(ex)) from ex
    if len(blob) < _HEADER.size:
        raise DecodeError(path, "truncated header")
    (magic, version, n, count) = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise DecodeError(path, f"bad magic bytes {magic!r}")
    if version != VERSION:
        raise DecodeError(path, f"unsupported version {version}")
    dtype = _record_dtype(n)
    if len(blob) != _HEADER.size + count * dtype.itemsize:
        raise DecodeError(path, f"holds {len(blob) - _HEADER.size} record bytes, expected {count} x {dtype.itemsize}")
    records = np.frombuffer(blob, dtype=dtype, count=count, offset=_HEADER.size)
    try:
        ids = [bytes(r).decode("utf-8") for r in records["object_id"]]
        matrices = [_renormalize(e, nm) for (e, nm) in zip(records["entries"], records["norm"])]
    except (UnicodeDecodeError, PreconditionError, ShapeError) as ex:
        raise DecodeError(path, f"invalid record: {ex}") from ex
    _LOG.info("Read %d matrices (N=%d) from %s", count, n, path)
    return MatrixSet(ids, matrices)
