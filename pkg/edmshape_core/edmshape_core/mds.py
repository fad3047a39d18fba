#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Outline reconstruction from distance matrices by metric multidimensional scaling
(SMACOF stress majorization) and rigid Procrustes alignment for scoring.
"""

import logging
from dataclasses import dataclass
from typing import Literal, Union

import numpy as np
import numpy.typing as npt
from scipy.linalg import orthogonal_procrustes
from scipy.spatial.distance import pdist, squareform

from edmshape_core.distmat import DistanceMatrix, RawMatrix, sanitize
from edmshape_core.exceptions import ConfigError, PreconditionError, ShapeError
from edmshape_core.util import PointsLike, as_points, seeded_rng

_LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class MdsConfig:
    """
    SMACOF settings.

    Attributes
    ----------
    max_iter : int
        Maximum number of Guttman transform iterations per start.
    tol : float
        Stop when the relative stress decrease of one iteration falls below this value.
    seed : int
        Seed of the standard normal initial point clouds.
    init : {"random", "classical"}
        Initial configuration: seeded random points, or the classical (Torgerson) embedding.
    n_init : int
        Number of random starts; the lowest-stress result is kept.
    """

    max_iter: int = 2000
    tol: float = 1e-12
    seed: int = 0
    init: Literal["random", "classical"] = "random"
    n_init: int = 1

    def __post_init__(self) -> None:
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.init not in ("random", "classical"):
            raise ConfigError(f"Unknown MDS init: {self.init}")
        if self.n_init < 1:
            raise ConfigError(f"n_init must be >= 1, got {self.n_init}")


@dataclass(frozen=True)
class AlignmentResult:
    """
    Outcome of a rigid Procrustes superposition of B onto A.

    Attributes
    ----------
    aligned_points : np.ndarray
        B after applying the transform, (N, 2).
    rmse : float
        Root mean square point distance between A and the aligned B.
    rotation : np.ndarray
        The 2 x 2 orthogonal matrix R applied as ``B @ R``.
    translation : np.ndarray
        Translation applied after the rotation.
    reflection : bool
        True if R has a negative determinant.
    """

    aligned_points: npt.NDArray[np.float64]
    rmse: float
    rotation: npt.NDArray[np.float64]
    translation: npt.NDArray[np.float64]
    reflection: bool


def _check_sanitized(dmat: Union[DistanceMatrix, npt.ArrayLike]) -> npt.NDArray[np.float64]:
    if isinstance(dmat, DistanceMatrix):
        return dmat.entries
    try:
        return DistanceMatrix(np.asarray(dmat, dtype=np.float64)).entries
    except (ValueError, ShapeError) as ex:
        raise PreconditionError(f"SMACOF requires a sanitized distance matrix: {ex}") from ex


def stress(dmat: Union[DistanceMatrix, npt.ArrayLike], points: PointsLike) -> float:
    """
    Raw stress: sum over i < j of (d_ij - |p_i - p_j|)^2.
    """
    entries = dmat.entries if isinstance(dmat, DistanceMatrix) else np.asarray(dmat, dtype=np.float64)
    target = entries[np.triu_indices(len(entries), k=1)]
    return float(np.sum((target - pdist(as_points(points))) ** 2))


def classical_mds(dmat: Union[DistanceMatrix, npt.ArrayLike], n_components: int = 2) -> npt.NDArray[np.float64]:
    """
    Classical (Torgerson) scaling: the top eigenvectors of the double-centered
    squared distance matrix. Used only to initialize SMACOF.
    """
    entries = _check_sanitized(dmat)
    n = len(entries)
    centering = np.eye(n) - np.full((n, n), 1.0 / n)
    gram = -0.5 * centering @ (entries ** 2) @ centering
    (evals, evecs) = np.linalg.eigh(gram)
    order = np.argsort(evals)[::-1][:n_components]
    return evecs[:, order] * np.sqrt(np.clip(evals[order], 0.0, None))


def _smacof_single(entries: npt.NDArray[np.float64], init: npt.NDArray[np.float64],
                   max_iter: int, tol: float) -> "tuple[npt.NDArray[np.float64], float, int]":
    n = len(entries)
    points = init.copy()
    upper = np.triu_indices(n, k=1)
    prev = float(np.sum((entries[upper] - pdist(points)) ** 2))
    it = 0
    for it in range(1, max_iter + 1):
        dist = squareform(pdist(points))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dist > 0, entries / dist, 0.0)
        bmat = -ratio
        np.fill_diagonal(bmat, 0.0)
        np.fill_diagonal(bmat, -bmat.sum(axis=1))
        points = bmat @ points / n
        cur = float(np.sum((entries[upper] - pdist(points)) ** 2))
        if prev == 0 or (prev - cur) / prev < tol:
            prev = cur
            break
        prev = cur
    return (points, prev, it)


def smacof(dmat: Union[DistanceMatrix, npt.ArrayLike], config: MdsConfig = MdsConfig()) -> npt.NDArray[np.float64]:
    """
    Embed a sanitized distance matrix in 2D by minimizing raw stress.

    Parameters
    ----------
    dmat : DistanceMatrix
        Symmetric, zero-diagonal, non-negative matrix.
    config : MdsConfig
        Iteration settings.

    Returns
    -------
    points : np.ndarray
        (N, 2) point list; point i corresponds to row i, so index order restores
        the outline connectivity.

    Raises
    ------
    PreconditionError
        If the matrix is not sanitized or is all zeros.
    """
    entries = _check_sanitized(dmat)
    if not np.any(entries):
        raise PreconditionError("Cannot embed an all-zero distance matrix")
    n = len(entries)
    if config.init == "classical":
        starts = [classical_mds(entries)]
    else:
        starts = [seeded_rng(config.seed, run).standard_normal((n, 2)) for run in range(config.n_init)]
    best = None
    best_stress = np.inf
    for (run, init) in enumerate(starts):
        (points, value, iters) = _smacof_single(entries, init, config.max_iter, config.tol)
        _LOG.debug("SMACOF start %d: stress %.3e after %d iterations", run, value, iters)
        if value < best_stress:
            (best, best_stress) = (points, value)
    assert best is not None
    return best


def procrustes_align(target: PointsLike, moving: PointsLike) -> AlignmentResult:
    """
    Rigidly superimpose `moving` onto `target` (rotation, optional reflection,
    translation; no scaling).

    Raises
    ------
    ShapeError
        If the point sets differ in size or have fewer than 2 points.
    """
    a = as_points(target)
    b = as_points(moving)
    if a.shape != b.shape or len(a) < 2:
        raise ShapeError(f"Point sets must have equal size >= 2, got {a.shape} and {b.shape}")
    (mean_a, mean_b) = (a.mean(axis=0), b.mean(axis=0))
    (rot, _scale) = orthogonal_procrustes(b - mean_b, a - mean_a)
    translation = mean_a - mean_b @ rot
    aligned = b @ rot + translation
    rmse = float(np.sqrt(np.mean(np.sum((aligned - a) ** 2, axis=1))))
    return AlignmentResult(aligned_points=aligned, rmse=rmse, rotation=rot,
                           translation=translation, reflection=bool(np.linalg.det(rot) < 0))


def reconstruct_outline(mat: Union[RawMatrix, DistanceMatrix, npt.ArrayLike], norm: float,
                        config: MdsConfig = MdsConfig()) -> npt.NDArray[np.float64]:
    """
    Sanitize a (decoded) matrix, restore its original scale, and embed it.

    Parameters
    ----------
    mat : RawMatrix
        Decoder output or normalized distance matrix.
    norm : float
        The Frobenius norm recorded at normalization time (1 for raw matrices).
    config : MdsConfig

    Returns
    -------
    points : np.ndarray
        (N, 2) outline points at the original size.
    """
    if not norm > 0:
        raise PreconditionError(f"Matrix norm must be positive, got {norm}")
    clean = sanitize(mat)
    return smacof(DistanceMatrix(clean.entries * norm), config)
