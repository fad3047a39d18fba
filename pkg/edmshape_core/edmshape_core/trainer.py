#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Mini-batch Adam training of the autoencoders, with periodic checkpoints, bitwise
resumable runs, and a finite-difference check of the backward pass.
"""

import copy
import logging
import math
import os
import time
from dataclasses import dataclass, field, fields
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import torch

from edmshape_core.distmat import DistanceMatrix, reindex_indices
from edmshape_core.exceptions import ConfigError, PreconditionError, ShapeError, TrainingDiverged
from edmshape_core.losses import LossBreakdown, LossWeights, compute_loss
from edmshape_core.models import MatricesLike, as_tensor
from edmshape_core.models.checkpoint import read_checkpoint, save_checkpoint
from edmshape_core.models.mask_vae import MaskVAE
from edmshape_core.models.shape_vae import ShapeVAE
from edmshape_core.util import deterministic_mode, seeded_rng, torch_generator

_LOG = logging.getLogger(__name__)

HISTORY_COLUMNS = ["epoch", "rec", "kl", "diag", "nonneg", "sym", "total", "seconds"]


@dataclass(frozen=True)
class TrainConfig:
    """
    Training loop settings.

    Attributes
    ----------
    learning_rate : float
        Adam step size.
    epochs : int
        Total number of epochs (including those of a resumed run).
    batch_size : int
        Mini-batch size; clamped to the dataset size.
    seed : int
        Root seed of the shuffling and sampling noise streams.
    weights : LossWeights
        Loss term weights.
    deterministic : bool
        Single-threaded deterministic torch kernels for the duration of the run.
    random_reindexing : bool
        Draw a fresh random origin and direction for every training matrix
        each epoch (distance-matrix models only).
    checkpoint_every : int
        Save a checkpoint every that many epochs (0 disables periodic checkpoints).
    checkpoint_dir : Optional[str]
        Directory for periodic and final checkpoints; nothing is saved if None.
    resume_from : Optional[str]
        Checkpoint to continue training from.
    """

    learning_rate: float = 1e-3
    epochs: int = 50
    batch_size: int = 32
    seed: int = 0
    weights: LossWeights = LossWeights()
    deterministic: bool = False
    random_reindexing: bool = False
    checkpoint_every: int = 0
    checkpoint_dir: Optional[str] = None
    resume_from: Optional[str] = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.checkpoint_every < 0:
            raise ConfigError(f"checkpoint_every must be >= 0, got {self.checkpoint_every}")

    def to_dict(self) -> Dict[str, Any]:
        """JSON-friendly representation."""
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values["weights"] = self.weights.to_dict()
        return values


@dataclass
class TrainHistory:
    """
    Per-epoch loss breakdowns and wall-clock durations.
    """

    epochs: List[LossBreakdown] = field(default_factory=list)
    seconds: List[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.epochs)

    def append(self, breakdown: LossBreakdown, seconds: float) -> None:
        """Record one finished epoch."""
        self.epochs.append(breakdown)
        self.seconds.append(seconds)

    def totals(self) -> List[float]:
        """Total loss per epoch."""
        return [b.total for b in self.epochs]

    def trailing_means(self, window: int = 10) -> List[float]:
        """
        Mean total loss over each run of `window` consecutive epochs.

        Empty if fewer than `window` epochs were recorded.
        """
        if window < 1:
            raise ConfigError(f"window must be >= 1, got {window}")
        totals = np.asarray(self.totals(), dtype=np.float64)
        if len(totals) < window:
            return []
        return [float(m) for m in np.convolve(totals, np.ones(window) / window, mode="valid")]

    def is_settling(self, window: int = 10, tolerance: float = 0.05) -> bool:
        """
        Check that the trailing-window mean loss never rises by more than `tolerance`
        (relative) from one epoch to the next.
        """
        means = self.trailing_means(window)
        return all(after <= before * (1.0 + tolerance) for (before, after) in zip(means, means[1:]))

    def to_frame(self) -> pd.DataFrame:
        """
        Training log table: epoch, rec, kl, diag, nonneg, sym, total, seconds.
        """
        rows = [{"epoch": i + 1, **b.to_dict(), "seconds": s}
                for (i, (b, s)) in enumerate(zip(self.epochs, self.seconds))]
        return pd.DataFrame(rows, columns=HISTORY_COLUMNS)

    def to_dict(self) -> Dict[str, Any]:
        """JSON-friendly representation (stored in checkpoints)."""
        return {"epochs": [b.to_dict() for b in self.epochs], "seconds": list(self.seconds)}

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "TrainHistory":
        """Inverse of `to_dict`."""
        return cls(epochs=[LossBreakdown(**b) for b in values.get("epochs", [])],
                   seconds=[float(s) for s in values.get("seconds", [])])


class AdamState:
    """
    Adam optimizer state (moment estimates and step count) over a parameter list.
    """

    def __init__(self, params: Iterable[torch.nn.Parameter], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.optimizer = torch.optim.Adam(self.params, lr=lr, betas=(beta1, beta2), eps=eps)

    @property
    def step_count(self) -> int:
        """Number of updates applied so far."""
        steps = [self.optimizer.state[p]["step"] for p in self.params if p in self.optimizer.state]
        return int(steps[0]) if steps else 0

    def moments(self) -> Dict[str, torch.Tensor]:
        """First and second moment estimates keyed by parameter position."""
        tensors = {}
        for (i, param) in enumerate(self.params):
            state = self.optimizer.state.get(param)
            if state:
                tensors[f"{i}.exp_avg"] = state["exp_avg"]
                tensors[f"{i}.exp_avg_sq"] = state["exp_avg_sq"]
        return tensors

    def load_moments(self, tensors: Dict[str, torch.Tensor], step_count: int) -> None:
        """
        Restore moments saved by `moments` after `step_count` updates.
        """
        if step_count == 0:
            return
        for (i, param) in enumerate(self.params):
            try:
                (exp_avg, exp_avg_sq) = (tensors[f"{i}.exp_avg"], tensors[f"{i}.exp_avg_sq"])
            except KeyError as ex:
                raise ShapeError(f"Optimizer state misses moments of parameter {i}") from ex
            if exp_avg.shape != param.shape:
                raise ShapeError(f"Optimizer moment shape {tuple(exp_avg.shape)} differs from "
                                 f"parameter shape {tuple(param.shape)}")
            self.optimizer.state[param] = {
                "step": torch.tensor(float(step_count)),
                "exp_avg": exp_avg.clone().to(param.dtype),
                "exp_avg_sq": exp_avg_sq.clone().to(param.dtype),
            }


def adam_step(params: Sequence[torch.nn.Parameter], grads: Sequence[Optional[torch.Tensor]],
              state: AdamState) -> Tuple[Sequence[torch.nn.Parameter], AdamState]:
    """
    Apply one bias-corrected Adam update in place.

    Raises
    ------
    TrainingDiverged
        If any gradient has non-finite entries.
    """
    if len(params) != len(grads):
        raise ShapeError(f"Got {len(grads)} gradients for {len(params)} parameters")
    for (param, grad) in zip(params, grads):
        if grad is None:
            continue
        if grad.shape != param.shape:
            raise ShapeError(f"Gradient shape {tuple(grad.shape)} differs from parameter shape {tuple(param.shape)}")
        if not bool(torch.isfinite(grad).all()):
            raise TrainingDiverged("Non-finite gradient")
    for (param, grad) in zip(params, grads):
        param.grad = grad
    state.optimizer.step()
    return (params, state)


def _check_dataset(model: ShapeVAE, matrices: MatricesLike) -> torch.Tensor:
    if isinstance(matrices, Sequence) and matrices and isinstance(matrices[0], DistanceMatrix):
        if not all(m.is_normalized for m in matrices):
            raise PreconditionError("Training matrices must be Frobenius normalized")
    data = as_tensor(matrices, torch.float32)
    n = model.config.matrix_size
    if data.ndim != 3 or tuple(data.shape[1:]) != (n, n):
        raise ShapeError(f"Expected a dataset of {n}x{n} matrices, got shape {tuple(data.shape)}")
    if len(data) == 0:
        raise ShapeError("Empty training set")
    return data


def _save(model: ShapeVAE, state: AdamState, history: TrainHistory, config: TrainConfig,
          epoch: int, path: str) -> None:
    save_checkpoint(model, path,
                    train_state={"epoch": epoch, "adam_step": state.step_count,
                                 "history": history.to_dict(), "train_config": config.to_dict()},
                    optimizer_tensors=state.moments())


def train(model: ShapeVAE, matrices: MatricesLike, config: TrainConfig = TrainConfig()) -> Tuple[ShapeVAE, TrainHistory]:
    """
    Train the model on a dataset of normalized distance matrices (or masks for MaskVAE).

    Each epoch shuffles the data with a stream derived from (seed, epoch) and draws
    the latent noise of every batch from (seed, epoch, batch), so a run resumed
    from a checkpoint continues exactly as an uninterrupted one. With
    `random_reindexing` the per-matrix (k, o) of an epoch come from (seed, epoch, 1).
    The deterministic torch settings are restored when training returns or fails.

    Parameters
    ----------
    model : ShapeVAE
        Model to train in place.
    matrices : sequence of DistanceMatrix or array (B, N, N)
        Training inputs, side N = model.config.matrix_size.
    config : TrainConfig
        Loop settings.

    Returns
    -------
    (model, history) : Tuple[ShapeVAE, TrainHistory]

    Raises
    ------
    ConfigError
        If random reindexing is asked of a mask model.
    TrainingDiverged
        On a non-finite loss or gradient; checkpoints already on disk are kept.
    """
    data = _check_dataset(model, matrices)
    if config.random_reindexing and isinstance(model, MaskVAE):
        raise ConfigError("random_reindexing applies to distance-matrix models only")
    with deterministic_mode(config.deterministic):
        return _train(model, data, config)


def _reindexed(data: torch.Tensor, seed: int, epoch: int) -> torch.Tensor:
    """Every matrix of the dataset under its own random (k, o) drawn from (seed, epoch)."""
    n = data.shape[-1]
    table = torch.as_tensor(reindex_indices(n))
    rows = table[torch.as_tensor(seeded_rng(seed, epoch, 1).integers(2 * n, size=len(data)))]
    return data[torch.arange(len(data))[:, None, None], rows[:, :, None], rows[:, None, :]]


def _train(model: ShapeVAE, data: torch.Tensor, config: TrainConfig) -> Tuple[ShapeVAE, TrainHistory]:
    state = AdamState(model.parameters(), lr=config.learning_rate)
    history = TrainHistory()
    start_epoch = 0
    if config.resume_from:
        ckpt = read_checkpoint(config.resume_from)
        if ckpt.config != model.config:
            raise ShapeError(f"Checkpoint config {ckpt.config} differs from model config {model.config}")
        model.load_state_dict(ckpt.model.state_dict())
        state.load_moments(ckpt.optimizer_tensors, int(ckpt.train_state.get("adam_step", 0)))
        start_epoch = int(ckpt.train_state.get("epoch", 0))
        history = TrainHistory.from_dict(ckpt.train_state.get("history", {}))
        _LOG.info("Resuming from %s at epoch %d", config.resume_from, start_epoch)
    if config.checkpoint_dir:
        os.makedirs(config.checkpoint_dir, exist_ok=True)

    n_samples = len(data)
    batch_size = min(config.batch_size, n_samples)
    params = list(model.parameters())
    model.train()
    for epoch in range(start_epoch, config.epochs):
        started = time.perf_counter()
        order = seeded_rng(config.seed, epoch).permutation(n_samples)
        epoch_data = _reindexed(data, config.seed, epoch) if config.random_reindexing else data
        sums = dict.fromkeys(("rec", "kl", "diag", "nonneg", "sym"), 0.0)
        for (batch, start) in enumerate(range(0, n_samples, batch_size)):
            idx = torch.as_tensor(order[start:start + batch_size])
            x = epoch_data[idx]
            (d_hat, mu, logvar) = model(x, generator=torch_generator(config.seed, epoch, batch))
            (total, breakdown) = compute_loss(d_hat, x, mu, logvar, config.weights)
            if not math.isfinite(breakdown.total):
                raise TrainingDiverged(f"Non-finite loss at epoch {epoch + 1}, batch {batch}")
            grads = torch.autograd.grad(total, params, allow_unused=True)
            adam_step(params, grads, state)
            for key in sums:
                sums[key] += getattr(breakdown, key) * len(idx)
            _LOG.debug("Epoch %d batch %d: total %.6g", epoch + 1, batch, breakdown.total)
        means = {key: value / n_samples for (key, value) in sums.items()}
        epoch_breakdown = LossBreakdown.from_terms(config.weights, **means)
        history.append(epoch_breakdown, time.perf_counter() - started)
        _LOG.info("Epoch %d/%d: total %.6g rec %.6g kl %.6g diag %.6g nonneg %.6g sym %.6g",
                  epoch + 1, config.epochs, epoch_breakdown.total, epoch_breakdown.rec, epoch_breakdown.kl,
                  epoch_breakdown.diag, epoch_breakdown.nonneg, epoch_breakdown.sym)
        if config.checkpoint_dir and config.checkpoint_every and (epoch + 1) % config.checkpoint_every == 0:
            _save(model, state, history, config, epoch + 1,
                  os.path.join(config.checkpoint_dir, f"epoch-{epoch + 1:04d}.seck"))
    if config.checkpoint_dir:
        _save(model, state, history, config, config.epochs, os.path.join(config.checkpoint_dir, "final.seck"))
    return (model, history)


def grad_check(model: ShapeVAE, sample_batch: MatricesLike, step: float = 1e-4, *,
               weights: LossWeights = LossWeights(), n_coords: int = 256, seed: int = 0,
               min_magnitude: float = 1e-10) -> float:
    """
    Compare the analytic gradient of the total loss with central finite differences.

    The check runs on a 64-bit copy of the model in eval mode (z = mu), so the loss
    is a deterministic function of the parameters.

    Parameters
    ----------
    model : ShapeVAE
        Model to check (left untouched).
    sample_batch : array (B, N, N)
        Inputs, used as their own reconstruction targets.
    step : float
        Finite-difference step.
    n_coords : int
        Number of randomly sampled parameter coordinates (at least 200).
    seed : int
        Seed of the coordinate sample.
    min_magnitude : float
        Coordinates where both gradients are smaller than this are skipped.

    Returns
    -------
    max_rel_error : float
        Largest |analytic - numeric| / max(|analytic|, |numeric|) over checked coordinates.
    """
    if n_coords < 200:
        raise ConfigError(f"n_coords must be >= 200, got {n_coords}")
    probe = copy.deepcopy(model).double().eval()
    x = as_tensor(sample_batch, torch.float64)
    params = list(probe.parameters())

    def loss() -> torch.Tensor:
        (d_hat, mu, logvar) = probe(x)
        return compute_loss(d_hat, x, mu, logvar, weights)[0]

    analytic = torch.autograd.grad(loss(), params, allow_unused=True)
    sizes = np.array([p.numel() for p in params])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    rng = seeded_rng(seed)
    coords = rng.choice(int(offsets[-1]), size=min(n_coords, int(offsets[-1])), replace=False)
    worst = 0.0
    checked = 0
    with torch.no_grad():
        for coord in np.sort(coords):
            which = int(np.searchsorted(offsets, coord, side="right")) - 1
            flat = params[which].view(-1)
            pos = int(coord - offsets[which])
            orig = float(flat[pos])
            flat[pos] = orig + step
            plus = float(loss())
            flat[pos] = orig - step
            minus = float(loss())
            flat[pos] = orig
            numeric = (plus - minus) / (2.0 * step)
            grad = analytic[which]
            value = 0.0 if grad is None else float(grad.reshape(-1)[pos])
            scale = max(abs(value), abs(numeric))
            if scale < min_magnitude:
                continue
            checked += 1
            worst = max(worst, abs(value - numeric) / scale)
    _LOG.info("Gradient check: %d of %d coordinates compared, max relative error %.3e",
              checked, len(coords), worst)
    return worst
