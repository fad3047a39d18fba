#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Probes of a trained model's latent space: class-mean and prior-sample decoding,
latent drift under shape-preserving transformations, and reconstruction error.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import numpy.typing as npt
from scipy.spatial.distance import pdist

from edmshape_core.contour import ContourLike, ContourSequence, points_of, roll_contour
from edmshape_core.distmat import DistanceMatrix, Reindexing, edm, mirror_both, normalize, reindex
from edmshape_core.evaluation.classifier import FeatureTable
from edmshape_core.exceptions import PreconditionError, ShapeError
from edmshape_core.mds import MdsConfig, procrustes_align, reconstruct_outline
from edmshape_core.models import decode, embed
from edmshape_core.models.shape_vae import ShapeVAE
from edmshape_core.transforms import SimilarityTransform, transform_contour
from edmshape_core.util import seeded_rng

_LOG = logging.getLogger(__name__)


def _decode_outlines(model: ShapeVAE, latents: npt.NDArray[np.float64], norms: Sequence[float],
                     mds_config: MdsConfig) -> List[npt.NDArray[np.float64]]:
    return [reconstruct_outline(raw, norm, mds_config) for (raw, norm) in zip(decode(model, latents), norms)]


def class_mean_decode(latents: FeatureTable, model: ShapeVAE, *, norms: Optional[Sequence[float]] = None,
                      mds_config: MdsConfig = MdsConfig()) -> Dict[str, npt.NDArray[np.float64]]:
    """
    Decode the mean latent code of every class into an outline.

    Parameters
    ----------
    latents : FeatureTable
        Posterior means produced by the model's encoder (a size column, if any, is ignored).
    model : ShapeVAE
        The model that produced the latents.
    norms : Optional[Sequence[float]]
        Per-row Frobenius norms; each class outline is scaled by its mean norm (1 if omitted).
    mds_config : MdsConfig
        Outline reconstruction settings.

    Returns
    -------
    outlines : Dict[str, np.ndarray]
        (N, 2) outline per class name, for classes with at least one row.
    """
    rows = latents.rows[:, :-1] if latents.size_column else latents.rows
    if rows.shape[1] != model.config.latent_dim:
        raise ShapeError(f"Latent table has {rows.shape[1]} columns, model expects {model.config.latent_dim}")
    if norms is not None and len(norms) != len(latents):
        raise ShapeError(f"Got {len(norms)} norms for {len(latents)} rows")
    names = latents.class_names or tuple(str(i) for i in range(latents.n_classes))
    outlines = {}
    for (index, name) in enumerate(names):
        member = latents.labels == index
        if not member.any():
            _LOG.warning("Class %s has no members: skipped", name)
            continue
        mean = rows[member].mean(axis=0)
        norm = float(np.mean(np.asarray(norms)[member])) if norms is not None else 1.0
        outlines[name] = _decode_outlines(model, mean[None], [norm], mds_config)[0]
    return outlines


def sample_latent(model: ShapeVAE, count: int, seed: int = 0, *, norm: float = 1.0,
                  mds_config: MdsConfig = MdsConfig()) -> List[npt.NDArray[np.float64]]:
    """
    Decode `count` standard normal latent draws into (N, 2) outlines.
    """
    z = seeded_rng(seed).standard_normal((count, model.config.latent_dim))
    return _decode_outlines(model, z, [norm] * count, mds_config)


@dataclass(frozen=True)
class DriftStats:
    """
    Relative latent drift of one transformation type.
    """

    max: float
    median: float
    count: int


@dataclass
class InvarianceReport:
    """
    Latent drift per transformation type, relative to the median inter-object distance.
    """

    median_inter_object_distance: float
    drift: Dict[str, DriftStats] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        """JSON form."""
        return {
            "median_inter_object_distance": self.median_inter_object_distance,
            "drift": {kind: {"max": s.max, "median": s.median, "count": s.count} for (kind, s) in self.drift.items()},
        }


def _normalized(contour: ContourLike) -> DistanceMatrix:
    return normalize(edm(contour))


def invariance_report(model: ShapeVAE, contours: Sequence[ContourSequence],
                      transforms: Sequence[SimilarityTransform] = (),
                      reindexings: Optional[Sequence[Reindexing]] = None) -> InvarianceReport:
    """
    Measure how far latent means move when each input is transformed.

    For every object, mu of the original matrix is compared with mu of each variant:
    similarity-transformed contours, the mirrored matrix (reversed traversal), and
    reindexed matrices (all 2N by default). Drifts are divided by the median
    pairwise distance between the original objects' mu vectors.
    """
    if len(contours) < 2:
        raise PreconditionError("Invariance report needs at least 2 contours")
    base = [_normalized(c) for c in contours]
    mus = embed(model, base)
    scale = float(np.median(pdist(mus)))
    if scale <= 0:
        raise PreconditionError("All objects share the same latent mean")
    n = base[0].n
    rs = list(reindexings) if reindexings is not None else [Reindexing.from_position(p, n) for p in range(2 * n)]

    variants: Dict[str, List[List[DistanceMatrix]]] = {
        "reflection": [[mirror_both(d)] for d in base],
        "reindexing": [[reindex(d, r) for r in rs] for d in base],
    }
    if transforms:
        variants["similarity"] = [[_normalized(transform_contour(c, t)) for t in transforms] for c in contours]

    report = InvarianceReport(median_inter_object_distance=scale)
    for (kind, per_object) in variants.items():
        drifts = []
        for (d, matrices) in zip(base, per_object):
            # Original and variants share one batch; batched float32 convolutions are not batch-size invariant.
            (mu, *moved) = embed(model, [d, *matrices])
            drifts.extend(np.linalg.norm(np.asarray(moved) - mu, axis=1) / scale)
        values = np.asarray(drifts)
        report.drift[kind] = DriftStats(max=float(values.max()), median=float(np.median(values)), count=len(values))
        _LOG.info("Latent drift under %s: median %.4g, max %.4g (%d variants)",
                  kind, report.drift[kind].median, report.drift[kind].max, len(values))
    return report


def reconstruction_error(model: ShapeVAE, matrices: Sequence[DistanceMatrix], norms: Sequence[float],
                         contours: Sequence[ContourLike], mds_config: MdsConfig = MdsConfig()) -> npt.NDArray[np.float64]:
    """
    Per-object Procrustes RMSE between decoded outlines and the input contours.

    The decoder may return any indexation of the outline, so the error is the
    minimum over all origins and directions of the reconstructed point order.
    """
    if not len(matrices) == len(norms) == len(contours):
        raise ShapeError(f"Got {len(matrices)} matrices, {len(norms)} norms and {len(contours)} contours")
    outlines = _decode_outlines(model, embed(model, matrices), norms, mds_config)
    errors = []
    for (outline, contour) in zip(outlines, contours):
        target = points_of(contour)
        n = len(target)
        errors.append(min(procrustes_align(target, roll_contour(outline, k, o)).rmse
                          for o in (1, -1) for k in range(n)))
    return np.asarray(errors, dtype=np.float64)
