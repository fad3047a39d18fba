#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Training loss of the distance-matrix VAE: the indexation-invariant reconstruction
term, the KL divergence to the standard normal prior, and three regularizers that
push decoded matrices towards valid distance matrices (zero diagonal,
non-negative entries, symmetry).

All matrix terms are means over the N^2 entries (N for the diagonal) and are
averaged over the batch.
"""

import math
from dataclasses import dataclass, fields
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
import torch

from edmshape_core.distmat import DistanceMatrix, RawMatrix, Reindexing, reindex_indices
from edmshape_core.exceptions import ConfigError, ShapeError

TensorLike = Union[torch.Tensor, RawMatrix, DistanceMatrix, npt.ArrayLike]


@dataclass(frozen=True)
class LossWeights:
    """
    Multipliers of the KL term and the three regularizers.

    Attributes
    ----------
    beta : float
        KL weight.
    gamma : float
        Zero-diagonal regularizer weight.
    delta : float
        Non-negativity regularizer weight.
    epsilon : float
        Symmetry regularizer weight.
    index_invariant : bool
        Take the minimum reconstruction error over all 2N reindexings of the target.
        When False the target is compared in its given indexation only.
    """

    beta: float = 1e-10
    gamma: float = 1e-5
    delta: float = 1e-5
    epsilon: float = 1e-5
    index_invariant: bool = True

    def __post_init__(self) -> None:
        for name in ("beta", "gamma", "delta", "epsilon"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ConfigError(f"Loss weight {name} must be a finite non-negative number, got {value}")

    def to_dict(self) -> Dict[str, Any]:
        """JSON-friendly representation."""
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class LossBreakdown:
    """
    Values of all loss terms for one batch (or averaged over an epoch).
    """

    rec: float
    kl: float
    diag: float
    nonneg: float
    sym: float
    total: float
    argmin_reindexing: Reindexing = Reindexing()

    @classmethod
    def from_terms(cls, weights: LossWeights, *, rec: float, kl: float, diag: float, nonneg: float, sym: float,
                   argmin_reindexing: Reindexing = Reindexing()) -> "LossBreakdown":
        """
        Combine the terms into a breakdown whose total is the weighted sum.
        """
        total = rec + weights.beta * kl + weights.gamma * diag + weights.delta * nonneg + weights.epsilon * sym
        return cls(rec=rec, kl=kl, diag=diag, nonneg=nonneg, sym=sym, total=total,
                   argmin_reindexing=argmin_reindexing)

    def to_dict(self) -> Dict[str, float]:
        """The scalar terms, in the training log column order."""
        return {"rec": self.rec, "kl": self.kl, "diag": self.diag,
                "nonneg": self.nonneg, "sym": self.sym, "total": self.total}


def _matrices(value: TensorLike, dtype: Optional[torch.dtype] = None) -> torch.Tensor:
    if isinstance(value, (RawMatrix, DistanceMatrix)):
        value = value.entries
    tensor = value.detach() if isinstance(value, torch.Tensor) else torch.as_tensor(np.asarray(value, dtype=np.float64))
    if dtype is not None:
        tensor = tensor.to(dtype)
    if tensor.ndim < 2 or tensor.shape[-1] != tensor.shape[-2]:
        raise ShapeError(f"Expected square matrices, got shape {tuple(tensor.shape)}")
    return tensor


def reconstruction_errors(d_hat: torch.Tensor, d: torch.Tensor,
                          index_invariant: bool = True) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Per-sample reconstruction error of a (B, N, N) batch.

    Every target is expanded into its 2N reindexed versions (in the fixed
    enumeration order) and the smallest mean squared error is kept. The argmin
    takes the first minimum, so ties go to the earliest reindexing, and the
    gradient flows through the selected version only.

    Returns
    -------
    errors : torch.Tensor
        (B,) selected mean squared errors.
    positions : torch.Tensor
        (B,) enumeration positions of the selected reindexings.
    """
    if d_hat.shape != d.shape:
        raise ShapeError(f"Reconstruction shape {tuple(d_hat.shape)} differs from target {tuple(d.shape)}")
    if not index_invariant:
        errors = torch.mean((d_hat - d) ** 2, dim=(-2, -1))
        return (errors, torch.zeros(errors.shape, dtype=torch.long))
    n = d.shape[-1]
    idx = torch.as_tensor(reindex_indices(n))
    candidates = d[:, idx[:, :, None], idx[:, None, :]]     # (B, 2N, N, N)
    mse = torch.mean((d_hat[:, None] - candidates) ** 2, dim=(-2, -1))
    positions = torch.argmin(mse, dim=1)
    return (torch.gather(mse, 1, positions[:, None])[:, 0], positions)


def rec_loss(d_hat: TensorLike, d: TensorLike) -> Tuple[float, Reindexing]:
    """
    Indexation-invariant reconstruction loss of a single decoded matrix.

    Parameters
    ----------
    d_hat : RawMatrix
        Decoder output.
    d : DistanceMatrix
        Target matrix of the same side length.

    Returns
    -------
    (loss, reindexing) : Tuple[float, Reindexing]
        The minimum over all 2N reindexings of the mean squared error, and the
        reindexing achieving it.

    Raises
    ------
    ShapeError
        If the side lengths differ.
    """
    (hat, target) = (_matrices(d_hat, torch.float64), _matrices(d, torch.float64))
    if hat.shape != target.shape:
        raise ShapeError(f"Reconstruction shape {tuple(hat.shape)} differs from target {tuple(target.shape)}")
    (errors, positions) = reconstruction_errors(hat.reshape(-1, *hat.shape[-2:]), target.reshape(-1, *target.shape[-2:]))
    return (float(errors.mean()), Reindexing.from_position(int(positions[0]), target.shape[-1]))


def kl_divergence(mu: torch.Tensor, logvar: torch.Tensor) -> torch.Tensor:
    """
    KL divergence of N(mu, exp(logvar)) from N(0, 1), summed over latent
    dimensions and averaged over the batch.
    """
    return torch.mean(-0.5 * torch.sum(1.0 + logvar - mu ** 2 - torch.exp(logvar), dim=-1))


def diag_penalty(d_hat: torch.Tensor) -> torch.Tensor:
    """Mean squared diagonal entry, averaged over the batch."""
    return torch.mean(torch.diagonal(d_hat, dim1=-2, dim2=-1) ** 2)


def nonneg_penalty(d_hat: torch.Tensor) -> torch.Tensor:
    """Mean hinge on negative entries, averaged over the batch."""
    return -torch.mean(torch.clamp(d_hat, max=0.0))


def sym_penalty(d_hat: torch.Tensor) -> torch.Tensor:
    """Mean squared difference between each matrix and its transpose."""
    return torch.mean((d_hat - d_hat.transpose(-2, -1)) ** 2)


def kl_loss(mu: npt.ArrayLike, logvar: npt.ArrayLike) -> float:
    """
    KL divergence to the standard normal prior, summed over dimensions, averaged over the batch.
    """
    mu_t = torch.as_tensor(np.atleast_2d(np.asarray(mu, dtype=np.float64)))
    logvar_t = torch.as_tensor(np.atleast_2d(np.asarray(logvar, dtype=np.float64)))
    return float(kl_divergence(mu_t, logvar_t))


def diag_loss(d_hat: TensorLike) -> float:
    """(1/N) sum of squared diagonal entries."""
    return float(diag_penalty(_matrices(d_hat, torch.float64)))


def nonneg_loss(d_hat: TensorLike) -> float:
    """-(1/N^2) sum of min(entry, 0)."""
    return float(nonneg_penalty(_matrices(d_hat, torch.float64)))


def sym_loss(d_hat: TensorLike) -> float:
    """Mean squared error between the matrix and its transpose."""
    return float(sym_penalty(_matrices(d_hat, torch.float64)))


def compute_loss(d_hat: torch.Tensor, d: torch.Tensor, mu: torch.Tensor, logvar: torch.Tensor,
                 weights: LossWeights) -> Tuple[torch.Tensor, LossBreakdown]:
    """
    Differentiable weighted total loss of a (B, N, N) batch and its breakdown.

    Returns
    -------
    (total, breakdown) : Tuple[torch.Tensor, LossBreakdown]
        The scalar tensor to backpropagate and the term values; the breakdown
        reports the reindexing selected for the first sample.
    """
    (errors, positions) = reconstruction_errors(d_hat, d, weights.index_invariant)
    rec = errors.mean()
    kl = kl_divergence(mu, logvar)
    diag = diag_penalty(d_hat)
    nonneg = nonneg_penalty(d_hat)
    sym = sym_penalty(d_hat)
    total = rec + weights.beta * kl + weights.gamma * diag + weights.delta * nonneg + weights.epsilon * sym
    breakdown = LossBreakdown.from_terms(
        weights, rec=rec.detach().item(), kl=kl.detach().item(), diag=diag.detach().item(),
        nonneg=nonneg.detach().item(), sym=sym.detach().item(),
        argmin_reindexing=Reindexing.from_position(int(positions[0]), d.shape[-1]),
    )
    return (total, breakdown)


def total_loss(d_hat: TensorLike, d: TensorLike, mu: npt.ArrayLike, logvar: npt.ArrayLike,
               w: LossWeights = LossWeights()) -> LossBreakdown:
    """
    Evaluate all loss terms in 64-bit precision.

    Parameters
    ----------
    d_hat : RawMatrix or array
        Decoded matrix (N, N) or batch (B, N, N).
    d : DistanceMatrix or array
        Target matrix or batch of the same shape.
    mu, logvar : array
        Posterior parameters, (latent_dim,) or (B, latent_dim).
    w : LossWeights
        Term weights.

    Returns
    -------
    breakdown : LossBreakdown
    """
    hat = _matrices(d_hat, torch.float64)
    target = _matrices(d, torch.float64)
    if hat.shape != target.shape:
        raise ShapeError(f"Reconstruction shape {tuple(hat.shape)} differs from target {tuple(target.shape)}")
    hat = hat.reshape(-1, *hat.shape[-2:])
    target = target.reshape(-1, *target.shape[-2:])
    mu_t = torch.as_tensor(np.atleast_2d(np.asarray(mu, dtype=np.float64)))
    logvar_t = torch.as_tensor(np.atleast_2d(np.asarray(logvar, dtype=np.float64)))
    if mu_t.shape != logvar_t.shape or mu_t.shape[0] != hat.shape[0]:
        raise ShapeError(f"Posterior shapes {tuple(mu_t.shape)} and {tuple(logvar_t.shape)} "
                         f"do not match a batch of {hat.shape[0]}")
    return compute_loss(hat, target, mu_t, logvar_t, w)[1]
