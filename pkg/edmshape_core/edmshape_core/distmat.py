#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Euclidean distance matrices of contours: construction, Frobenius normalization,
and the reindexing algebra of the 2N-element equivalence class.

The class of a closed contour with N points consists of the matrices

    D^{k,o}[i, j] = D[(i * o + k) mod N, (j * o + k) mod N]

for every origin k in {0..N-1} and direction o in {+1, -1}. Throughout this
package the class is enumerated in the fixed order o = +1 first, then o = -1,
with k ascending inside each direction.
"""

import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, TypeVar, Union

import numpy as np
import numpy.typing as npt
from scipy.spatial.distance import pdist, squareform

from edmshape_core.contour import ContourLike, points_of
from edmshape_core.exceptions import ConfigError, DegenerateShape, PreconditionError, ShapeError

_LOG = logging.getLogger(__name__)

# Tolerance on the Frobenius norm of normalized matrices.
NORM_ATOL = 1e-9


def _square(entries: npt.ArrayLike) -> npt.NDArray[np.float64]:
    arr = np.array(entries, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeError(f"Expected a square matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class Reindexing:
    """
    Choice of origin k and travel direction o selecting one member of the class.
    """

    k: int = 0
    o: int = 1

    def __post_init__(self) -> None:
        if self.o not in (-1, 1):
            raise ConfigError(f"Direction must be -1 or +1, got {self.o}")
        if self.k < 0:
            raise ConfigError(f"Origin index must be non-negative, got {self.k}")

    def indices(self, n: int) -> npt.NDArray[np.int64]:
        """
        Row/column permutation (i * o + k) mod n realizing this reindexing.
        """
        if self.k >= n:
            raise ConfigError(f"Origin index {self.k} out of range for N={n}")
        return (np.arange(n, dtype=np.int64) * self.o + self.k) % n

    @classmethod
    def from_position(cls, position: int, n: int) -> "Reindexing":
        """
        Inverse of the fixed enumeration order: position in [0, 2N) to (k, o).
        """
        if not 0 <= position < 2 * n:
            raise ConfigError(f"Enumeration position {position} out of range for N={n}")
        return cls(k=position % n, o=1 if position < n else -1)

    def position(self, n: int) -> int:
        """
        Position of this reindexing in the fixed (o, k) enumeration order.
        """
        return self.k + (0 if self.o == 1 else n)


@dataclass(frozen=True)
class RawMatrix:
    """
    Unconstrained N x N decoder output, prior to sanitization.
    """

    entries: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        arr = _square(self.entries)
        if not np.all(np.isfinite(arr)):
            raise PreconditionError("Raw matrix has non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        """Side length N."""
        return int(self.entries.shape[0])


@dataclass(frozen=True)
class DistanceMatrix:
    """
    N x N symmetric, zero-diagonal, non-negative matrix of pairwise distances.

    Attributes
    ----------
    entries : np.ndarray
        (N, N) float64 entries.
    frobenius_norm : Optional[float]
        The Frobenius norm of the raw matrix recorded by `normalize`; None for
        raw (unnormalized) matrices.
    """

    entries: npt.NDArray[np.float64]
    frobenius_norm: Optional[float] = None

    def __post_init__(self) -> None:
        arr = _square(self.entries)
        if not np.all(np.isfinite(arr)):
            raise PreconditionError("Distance matrix has non-finite entries")
        if np.any(np.diag(arr) != 0):
            raise PreconditionError("Distance matrix diagonal must be zero")
        if not np.array_equal(arr, arr.T):
            raise PreconditionError("Distance matrix must be symmetric")
        if np.any(arr < 0):
            raise PreconditionError("Distance matrix entries must be non-negative")
        if self.frobenius_norm is not None:
            if abs(float(np.linalg.norm(arr)) - 1.0) > NORM_ATOL:
                raise PreconditionError("Normalized distance matrix must have unit Frobenius norm")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        """Side length N."""
        return int(self.entries.shape[0])

    @property
    def is_normalized(self) -> bool:
        """True if the matrix was divided by its Frobenius norm."""
        return self.frobenius_norm is not None

    def __len__(self) -> int:
        return self.n


AnyMatrix = TypeVar("AnyMatrix", DistanceMatrix, RawMatrix)


def edm(contour: ContourLike) -> DistanceMatrix:
    """
    Pairwise Euclidean distance matrix of the contour points (raw, unnormalized).
    """
    pts = points_of(contour)
    return DistanceMatrix(squareform(pdist(pts, metric="euclidean")))


def normalize(dmat: DistanceMatrix) -> DistanceMatrix:
    """
    Divide the matrix by its Frobenius norm, recording the divisor.

    Raises
    ------
    DegenerateShape
        If the matrix is all zeros.
    """
    norm = float(np.linalg.norm(dmat.entries))
    if norm == 0:
        raise DegenerateShape("Cannot normalize an all-zero distance matrix")
    return DistanceMatrix(dmat.entries / norm, frobenius_norm=norm)


def reindex_indices(n: int) -> npt.NDArray[np.int64]:
    """
    The (2N, N) table of row/column permutations of the equivalence class,
    in the fixed (o, k) enumeration order.
    """
    base = np.arange(n, dtype=np.int64)
    ks = np.arange(n, dtype=np.int64)[:, None]
    forward = (base[None, :] + ks) % n
    backward = (-base[None, :] + ks) % n
    return np.concatenate([forward, backward], axis=0)


def reindex(dmat: DistanceMatrix, r: Reindexing) -> DistanceMatrix:
    """
    Return the member D^{k,o} of the equivalence class; the Frobenius norm is carried over.
    """
    idx = r.indices(dmat.n)
    return DistanceMatrix(dmat.entries[np.ix_(idx, idx)], frobenius_norm=dmat.frobenius_norm)


def equivalence_class(dmat: DistanceMatrix) -> Iterator[DistanceMatrix]:
    """
    Yield all 2N reindexed versions of the matrix in the fixed (o, k) order.
    """
    for position in range(2 * dmat.n):
        yield reindex(dmat, Reindexing.from_position(position, dmat.n))


def mirror_both(mat: AnyMatrix) -> AnyMatrix:
    """
    Mirror the matrix horizontally and vertically: (i, j) -> (N-1-i, N-1-j).
    """
    flipped = mat.entries[::-1, ::-1].copy()
    if isinstance(mat, DistanceMatrix):
        return DistanceMatrix(flipped, frobenius_norm=mat.frobenius_norm)
    return RawMatrix(flipped)


def sanitize(mat: Union[RawMatrix, DistanceMatrix, npt.ArrayLike]) -> DistanceMatrix:
    """
    Turn a decoder output into a valid distance matrix: average with the
    transpose, zero the diagonal, and clamp negative entries to zero.
    """
    entries = mat.entries if isinstance(mat, (RawMatrix, DistanceMatrix)) else RawMatrix(np.asarray(mat)).entries
    sym = 0.5 * (entries + entries.T)
    np.fill_diagonal(sym, 0.0)
    np.maximum(sym, 0.0, out=sym)
    return DistanceMatrix(sym)


def upper_triangle(dmat: DistanceMatrix) -> npt.NDArray[np.float64]:
    """
    Strictly upper triangular entries as a flat vector of length N (N - 1) / 2.
    """
    return dmat.entries[np.triu_indices(dmat.n, k=1)].copy()


def stack(matrices: Sequence[DistanceMatrix], dtype: npt.DTypeLike = np.float32) -> npt.NDArray:
    """
    Stack same-sized matrices into a (B, N, N) array (a 32-bit copy by default).
    """
    if not matrices:
        raise ShapeError("Cannot stack an empty list of matrices")
    sizes = {m.n for m in matrices}
    if len(sizes) != 1:
        raise ShapeError(f"Matrices have different sizes: {sorted(sizes)}")
    return np.stack([m.entries for m in matrices]).astype(dtype)


def norms_of(matrices: Sequence[DistanceMatrix]) -> List[float]:
    """
    Recorded Frobenius norms of normalized matrices.
    """
    norms = [m.frobenius_norm for m in matrices]
    if any(v is None for v in norms):
        raise PreconditionError("All matrices must be normalized")
    return [float(v) for v in norms if v is not None]
