#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Tests for the training loss terms.
"""

import warnings
from typing import Tuple

import numpy as np
import pytest
import torch

from edmshape_core.distmat import DistanceMatrix, RawMatrix, Reindexing, edm, equivalence_class, normalize, reindex
from edmshape_core.exceptions import ConfigError, ShapeError
from edmshape_core.losses import (
    LossBreakdown,
    LossWeights,
    compute_loss,
    diag_loss,
    kl_loss,
    nonneg_loss,
    rec_loss,
    reconstruction_errors,
    sym_loss,
    total_loss,
)
from edmshape_core.tests import SEED, random_contour


def _pair(rng: np.random.Generator, n: int = 16) -> Tuple[RawMatrix, DistanceMatrix]:
    d = normalize(edm(random_contour(rng, n, elongation=rng.uniform(1.0, 2.0))))
    d_hat = RawMatrix(d.entries + rng.normal(scale=0.02, size=(n, n)))
    return (d_hat, d)


def test_rec_loss_identity() -> None:
    """
    A matrix reconstructs itself at the identity reindexing.
    """
    d = normalize(edm(random_contour(np.random.default_rng(SEED), 16)))
    assert rec_loss(d, d) == (0.0, Reindexing(0, 1))


def test_rec_loss_class_members() -> None:
    """
    Every member of the class reconstructs the original with zero loss.
    """
    d = normalize(edm(random_contour(np.random.default_rng(SEED), 16)))
    for member in equivalence_class(d):
        assert rec_loss(member, d)[0] == 0.0


def test_rec_loss_finds_reindexing() -> None:
    """
    The selected reindexing maps the target onto the reconstruction.
    """
    d = normalize(edm(random_contour(np.random.default_rng(SEED), 16, elongation=1.7)))
    r = Reindexing(5, -1)
    (loss, found) = rec_loss(reindex(d, r), d)
    assert loss == 0.0
    np.testing.assert_array_equal(reindex(d, found).entries, reindex(d, r).entries)


def test_rec_loss_ties_go_to_first_reindexing() -> None:
    """
    A constant reconstruction ties with every member; (0, +1) wins.
    """
    d = normalize(edm(random_contour(np.random.default_rng(SEED), 8)))
    assert rec_loss(np.full((8, 8), 0.1), d)[1] == Reindexing(0, 1)


def test_rec_loss_invariance() -> None:
    """
    rec_loss(D_hat, reindex(D, r)) == rec_loss(D_hat, D) exactly, for all 2N reindexings
    of 100 random pairs.
    """
    rng = np.random.default_rng(SEED)
    for _ in range(100):
        (d_hat, d) = _pair(rng)
        (reference, _r) = rec_loss(d_hat, d)
        for member in equivalence_class(d):
            assert rec_loss(d_hat, member)[0] == reference


def test_rec_loss_size_mismatch() -> None:
    """
    Side lengths must agree.
    """
    with pytest.raises(ShapeError):
        rec_loss(np.zeros((8, 8)), np.zeros((16, 16)))


def test_plain_reconstruction_error_is_not_invariant() -> None:
    """
    With index invariance off, a reindexed target costs something.
    """
    dmat = normalize(edm(random_contour(np.random.default_rng(SEED), 16, elongation=1.8)))
    d = torch.as_tensor(dmat.entries)[None]
    moved = torch.as_tensor(reindex(dmat, Reindexing(3, 1)).entries)[None]
    (plain, positions) = reconstruction_errors(d, moved, index_invariant=False)
    assert float(plain[0]) > 0.0
    assert int(positions[0]) == 0
    (invariant, _positions) = reconstruction_errors(d, moved)
    assert float(invariant[0]) == 0.0


def test_kl_loss_examples() -> None:
    """
    Closed-form KL values.
    """
    assert kl_loss(np.zeros(4), np.zeros(4)) == 0.0
    assert kl_loss([1.0, 0.0, 0.0], np.zeros(3)) == pytest.approx(0.5, rel=1e-15)
    rng = np.random.default_rng(SEED)
    for _ in range(20):
        assert kl_loss(rng.normal(size=(3, 5)), rng.normal(size=(3, 5))) >= 0.0


def test_diag_loss_examples() -> None:
    """
    Mean squared diagonal entry.
    """
    assert diag_loss(edm(random_contour(np.random.default_rng(SEED), 8))) == 0.0
    assert diag_loss(np.array([[3.0, 1.0], [1.0, 4.0]])) == 12.5
    mat = np.random.default_rng(SEED).normal(size=(8, 8))
    assert diag_loss(3.0 * mat) == pytest.approx(9.0 * diag_loss(mat), rel=1e-12)


def test_nonneg_loss_examples() -> None:
    """
    Mean hinge on negative entries.
    """
    assert nonneg_loss(np.ones((4, 4))) == 0.0
    assert nonneg_loss(np.array([[0.0, -2.0], [0.0, 0.0]])) == 0.5
    assert nonneg_loss(np.random.default_rng(SEED).normal(size=(8, 8))) >= 0.0


def test_sym_loss_examples() -> None:
    """
    Mean squared difference with the transpose.
    """
    assert sym_loss(edm(random_contour(np.random.default_rng(SEED), 8))) == 0.0
    assert sym_loss(np.array([[0.0, 1.0], [3.0, 0.0]])) == 2.0
    mat = np.random.default_rng(SEED).normal(size=(8, 8))
    assert sym_loss(mat.T) == sym_loss(mat)


def test_loss_weights_validation() -> None:
    """
    Negative or non-finite weights are rejected; the defaults match the documented values.
    """
    with pytest.raises(ConfigError):
        LossWeights(beta=-1.0)
    with pytest.raises(ConfigError):
        LossWeights(gamma=float("nan"))
    assert LossWeights().to_dict() == {"beta": 1e-10, "gamma": 1e-5, "delta": 1e-5, "epsilon": 1e-5,
                                       "index_invariant": True}


def test_total_loss_perfect() -> None:
    """
    A perfect reconstruction at the prior has zero total loss.
    """
    d = normalize(edm(random_contour(np.random.default_rng(SEED), 16)))
    breakdown = total_loss(d, d, np.zeros(8), np.zeros(8))
    assert breakdown.total == 0.0
    assert breakdown.argmin_reindexing == Reindexing(0, 1)


def test_total_loss_weighting() -> None:
    """
    With all weights zero the total is the reconstruction term; the total is the weighted sum.
    """
    rng = np.random.default_rng(SEED)
    (d_hat, d) = _pair(rng)
    (mu, logvar) = (rng.normal(size=8), rng.normal(size=8))
    only_rec = total_loss(d_hat, d, mu, logvar, LossWeights(beta=0.0, gamma=0.0, delta=0.0, epsilon=0.0))
    assert only_rec.total == only_rec.rec
    w = LossWeights(beta=0.3, gamma=0.2, delta=0.7, epsilon=1.1)
    b = total_loss(d_hat, d, mu, logvar, w)
    expected = b.rec + w.beta * b.kl + w.gamma * b.diag + w.delta * b.nonneg + w.epsilon * b.sym
    assert b.total == pytest.approx(expected, rel=1e-12)
    assert all(v >= 0.0 for v in b.to_dict().values())


def test_total_loss_is_index_invariant() -> None:
    """
    Reindexing the target leaves every term unchanged.
    """
    rng = np.random.default_rng(SEED)
    (d_hat, d) = _pair(rng)
    (mu, logvar) = (rng.normal(size=8), rng.normal(size=8))
    reference = total_loss(d_hat, d, mu, logvar).to_dict()
    for position in range(32):
        moved = reindex(d, Reindexing.from_position(position, 16))
        assert total_loss(d_hat, moved, mu, logvar).to_dict() == reference


def test_total_loss_batch_shapes() -> None:
    """
    Batched posteriors must match the batch size.
    """
    rng = np.random.default_rng(SEED)
    (d_hat, d) = _pair(rng)
    with pytest.raises(ShapeError):
        total_loss(np.stack([d_hat.entries] * 2), np.stack([d.entries] * 2), np.zeros((3, 4)), np.zeros((3, 4)))


def test_loss_gradient_matches_finite_differences() -> None:
    """
    d total / d D_hat agrees with central differences (step 1e-4, 64-bit).
    """
    rng = np.random.default_rng(SEED)
    (d_hat, d) = _pair(rng, 8)
    w = LossWeights(gamma=0.1, delta=0.0, epsilon=0.1)
    target = torch.as_tensor(d.entries)[None]
    (mu, logvar) = (torch.zeros(1, 4, dtype=torch.float64), torch.zeros(1, 4, dtype=torch.float64))
    hat = torch.as_tensor(d_hat.entries)[None].clone().requires_grad_(True)
    (total, _breakdown) = compute_loss(hat, target, mu, logvar, w)
    (grad,) = torch.autograd.grad(total, hat)

    def value(mat: np.ndarray) -> float:
        return compute_loss(torch.as_tensor(mat)[None], target, mu, logvar, w)[1].total

    step = 1e-4
    base = d_hat.entries.copy()
    numeric = np.zeros_like(base)
    for i in range(8):
        for j in range(8):
            (up, down) = (base.copy(), base.copy())
            up[i, j] += step
            down[i, j] -= step
            numeric[i, j] = (value(up) - value(down)) / (2 * step)
    np.testing.assert_allclose(grad[0].numpy(), numeric, rtol=1e-4, atol=1e-9)


def test_breakdown_of_graph_tensors_is_silent() -> None:
    """
    Reading the breakdown of tensors that require grad raises no warnings,
    and the float helpers accept such tensors too.
    """
    rng = np.random.default_rng(SEED)
    (d_hat, d) = _pair(rng, 8)
    hat = torch.as_tensor(d_hat.entries)[None].clone().requires_grad_(True)
    mu = torch.zeros(1, 4, dtype=torch.float64, requires_grad=True)
    logvar = torch.zeros(1, 4, dtype=torch.float64, requires_grad=True)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        (total, breakdown) = compute_loss(hat, torch.as_tensor(d.entries)[None], mu, logvar, LossWeights())
        assert sym_loss(hat) == pytest.approx(breakdown.sym, rel=1e-12)
        assert diag_loss(hat) == pytest.approx(breakdown.diag, rel=1e-12)
    assert total.requires_grad
    assert breakdown.total == pytest.approx(total.item(), rel=1e-12)


def test_breakdown_from_terms() -> None:
    """
    from_terms computes the weighted total.
    """
    b = LossBreakdown.from_terms(LossWeights(beta=1.0, gamma=2.0, delta=3.0, epsilon=4.0),
                                 rec=1.0, kl=1.0, diag=1.0, nonneg=1.0, sym=1.0)
    assert b.total == 11.0
