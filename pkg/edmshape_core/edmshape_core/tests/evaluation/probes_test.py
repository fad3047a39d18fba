#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Tests for latent-space probes of a (small, untrained) model.
"""

import logging
from typing import List

import numpy as np
import pytest

from edmshape_core.contour import ContourSequence, perimeter
from edmshape_core.distmat import DistanceMatrix, Reindexing, norms_of
from edmshape_core.evaluation.classifier import FeatureTable
from edmshape_core.evaluation.probes import class_mean_decode, invariance_report, reconstruction_error, sample_latent
from edmshape_core.exceptions import PreconditionError, ShapeError
from edmshape_core.mds import MdsConfig, reconstruct_outline
from edmshape_core.models import ModelConfig, ShapeVAE, decode, embed, init_model
from edmshape_core.tests import SEED, random_contour
from edmshape_core.transforms import SimilarityTransform

MDS = MdsConfig(seed=SEED, max_iter=300)


def _latents(model: ShapeVAE, matrices: List[DistanceMatrix]) -> FeatureTable:
    labels = np.arange(len(matrices)) % 3
    labels[-1] = 3
    return FeatureTable(rows=embed(model, matrices), labels=labels, class_names=("a", "b", "c", "single", "empty"))


def test_class_mean_decode(tiny_model: ShapeVAE, matrices16: List[DistanceMatrix],
                           caplog: pytest.LogCaptureFixture) -> None:
    """
    One outline per populated class; empty classes are skipped with a warning.
    """
    latents = _latents(tiny_model, matrices16)
    with caplog.at_level(logging.WARNING):
        outlines = class_mean_decode(latents, tiny_model, mds_config=MDS)
    assert sorted(outlines) == ["a", "b", "c", "single"]
    assert all(o.shape == (16, 2) for o in outlines.values())
    assert "empty" in caplog.text


def test_single_member_class_decodes_its_latent(tiny_model: ShapeVAE, matrices16: List[DistanceMatrix]) -> None:
    """
    The mean of a one-member class is that member's latent code.
    """
    latents = _latents(tiny_model, matrices16)
    norms = norms_of(matrices16)
    outlines = class_mean_decode(latents, tiny_model, norms=norms, mds_config=MDS)
    expected = reconstruct_outline(decode(tiny_model, latents.rows[-1])[0], norms[-1], MDS)
    np.testing.assert_array_equal(outlines["single"], expected)
    again = class_mean_decode(latents, tiny_model, norms=norms, mds_config=MDS)
    np.testing.assert_array_equal(again["a"], outlines["a"])


def test_class_mean_decode_shapes(tiny_model: ShapeVAE, matrices16: List[DistanceMatrix]) -> None:
    """
    Latent width and norm count must match.
    """
    latents = _latents(tiny_model, matrices16)
    with pytest.raises(ShapeError):
        class_mean_decode(latents, tiny_model, norms=[1.0])
    narrow = FeatureTable(rows=latents.rows[:, :4], labels=latents.labels)
    with pytest.raises(ShapeError):
        class_mean_decode(narrow, tiny_model)


def test_sample_latent(tiny_model: ShapeVAE) -> None:
    """
    Prior samples decode to finite closed outlines, reproducibly.
    """
    outlines = sample_latent(tiny_model, 4, seed=SEED, mds_config=MDS)
    assert len(outlines) == 4
    for outline in outlines:
        assert outline.shape == (16, 2)
        assert np.isfinite(outline).all()
        assert perimeter(outline) > 0
    again = sample_latent(tiny_model, 4, seed=SEED, mds_config=MDS)
    for (first, second) in zip(outlines, again):
        np.testing.assert_array_equal(first, second)


def test_invariance_report(tiny_model: ShapeVAE, contours16: List[ContourSequence]) -> None:
    """
    Reflection drift is exactly zero; similarity drift is negligible.
    """
    rng = np.random.default_rng(SEED)
    transforms = [SimilarityTransform.random(rng, scale_range=(0.5, 2.0), rotation=True, translation=5.0)
                  for _ in range(3)]
    report = invariance_report(tiny_model, contours16, transforms)
    assert report.median_inter_object_distance > 0
    assert report.drift["reflection"].max == 0.0
    assert report.drift["similarity"].max < 1e-4
    assert report.drift["similarity"].count == 3 * len(contours16)
    assert report.drift["reindexing"].count == 32 * len(contours16)
    assert set(report.to_dict()["drift"]) == {"reflection", "reindexing", "similarity"}


def test_invariance_report_reflection_is_exact_at_desk_size() -> None:
    """
    Reflection drift stays exactly zero with many objects and a desk-size model,
    whatever batch the inter-object scale was computed from.
    """
    model = init_model(ModelConfig(matrix_size=32, latent_dim=32, blocks=3, base_channels=8, seed=SEED))
    gen = np.random.default_rng(SEED)
    contours = [random_contour(gen, 32, elongation=gen.uniform(1.0, 3.0)) for _ in range(40)]
    report = invariance_report(model, contours, reindexings=[Reindexing(0, 1), Reindexing(5, -1)])
    assert report.drift["reflection"].count == 40
    assert report.drift["reflection"].max == 0.0
    assert report.drift["reindexing"].count == 80


def test_invariance_report_chosen_reindexings(tiny_model: ShapeVAE, contours16: List[ContourSequence]) -> None:
    """
    The identity reindexing has zero drift; at least two contours are needed.
    """
    report = invariance_report(tiny_model, contours16, reindexings=[Reindexing(0, 1)])
    assert report.drift["reindexing"].max == 0.0
    assert "similarity" not in report.drift
    with pytest.raises(PreconditionError):
        invariance_report(tiny_model, contours16[:1])


def test_reconstruction_error(tiny_model: ShapeVAE, contours16: List[ContourSequence],
                              matrices16: List[DistanceMatrix]) -> None:
    """
    One finite non-negative error per object; inputs must be aligned.
    """
    errors = reconstruction_error(tiny_model, matrices16[:3], norms_of(matrices16[:3]), contours16[:3], MDS)
    assert errors.shape == (3,)
    assert np.all(np.isfinite(errors)) and np.all(errors >= 0)
    with pytest.raises(ShapeError):
        reconstruction_error(tiny_model, matrices16[:3], norms_of(matrices16[:2]), contours16[:3], MDS)
