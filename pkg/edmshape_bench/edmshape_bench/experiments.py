#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Desk-scale experiments on synthetic data, run end to end in one process.

desk
    Three synthetic classes with random similarity transforms and random
    reindexing; cross-validated macro-F1 of the latent codes and the latent
    drift report of the trained model.
ablation
    The full model against (a) zero padding with the plain MSE reconstruction
    term and (b) a vanilla VAE over rasterized masks, over several seeds.
size
    Two classes that differ only in scale, classified with and without the
    appended Frobenius norm.
"""

import logging
import time
from dataclasses import replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from edmshape_core.contour import ContourSequence
from edmshape_core.distmat import DistanceMatrix, edm, normalize, norms_of
from edmshape_core.evaluation import CvReport, FeatureTable, append_size, cross_validate, invariance_report
from edmshape_core.losses import LossWeights
from edmshape_core.models import ModelConfig, ModelFactory, ModelType, ShapeVAE, embed, init_model
from edmshape_core.trainer import TrainConfig, train
from edmshape_core.util import seeded_rng

from edmshape_bench.datasets import (
    Manifest,
    Randomization,
    augment_reindex,
    make_size_variant,
    make_synthetic_shapes,
    rasterize_dataset,
)
from edmshape_bench.launcher import CliConfig

_LOG = logging.getLogger(__name__)

Result = Dict[str, Any]

# Objects and random similarity transforms per object in the drift report.
DRIFT_OBJECTS = 50
DRIFT_TRANSFORMS = 4


def _model_config(config: CliConfig, n: int, seed: int) -> ModelConfig:
    return ModelConfig(matrix_size=n, latent_dim=config["latent_dim"], blocks=config["blocks"],
                       base_channels=config["base_channels"], seed=seed)


def _train_config(config: CliConfig, seed: int, weights: LossWeights = LossWeights(),
                  random_reindexing: bool = True) -> TrainConfig:
    return TrainConfig(learning_rate=config["lr"], epochs=config["epochs"], batch_size=config["batch_size"],
                       seed=seed, weights=weights, deterministic=bool(config["deterministic"]),
                       random_reindexing=random_reindexing)


def _dataset(config: CliConfig, seed: int) -> Tuple[Manifest, List[ContourSequence], List[DistanceMatrix]]:
    """
    The three-class dataset with random similarity transforms, and its
    randomly reindexed normalized distance matrices.
    """
    (manifest, contours) = make_synthetic_shapes(config["n_per_class"], seed, Randomization(),
                                                 n_points=config["n_points"])
    (matrices, _) = augment_reindex([normalize(edm(c)) for c in contours], seed=seed)
    return (manifest, contours, matrices)


def _score(model: ShapeVAE, inputs: Any, manifest: Manifest, config: CliConfig, seed: int,
           norms: Optional[Sequence[float]] = None) -> CvReport:
    """
    Cross-validated logistic regression on the latent codes of the inputs.
    """
    latents = embed(model, inputs)
    table = FeatureTable(rows=latents, labels=manifest.labels, object_ids=tuple(manifest.object_ids),
                         class_names=manifest.class_names)
    if norms is not None:
        table = append_size(table, norms)
    return cross_validate(table, config["folds"], seed, n_jobs=config["workers"])


def _summary(report: CvReport) -> Dict[str, float]:
    return {"f1": report.mean("f1"), "f1_std": report.std("f1"),
            "accuracy": report.mean("accuracy"), "log_loss": report.mean("log_loss")}


def desk(config: CliConfig) -> Result:
    """
    Train on the augmented three-class dataset and evaluate the latent codes.
    """
    seed = config["seed"]
    started = time.perf_counter()
    (manifest, contours, matrices) = _dataset(config, seed)
    (model, history) = train(init_model(_model_config(config, config["n_points"], seed)), matrices,
                             _train_config(config, seed))
    report = _score(model, matrices, manifest, config, seed)
    rng = seeded_rng(seed, 1)
    transforms = [Randomization().draw(rng) for _ in range(DRIFT_TRANSFORMS)]
    drift = invariance_report(model, _spread(contours, DRIFT_OBJECTS), transforms)
    elapsed = time.perf_counter() - started
    _LOG.info("Desk experiment: macro-F1 %.4f +- %.4f in %.1f s", report.mean("f1"), report.std("f1"), elapsed)
    return {
        "experiment": "desk",
        "objects": len(manifest),
        "final_loss": history.totals()[-1],
        "loss_settles": history.is_settling(),
        **_summary(report),
        "cv": report.to_dict(),
        "invariance": drift.to_dict(),
        "seconds": elapsed,
    }


def _spread(contours: Sequence[ContourSequence], count: int) -> List[ContourSequence]:
    """At most `count` contours evenly spaced over the (class-grouped) list."""
    index = np.unique(np.linspace(0, len(contours) - 1, num=min(count, len(contours))).astype(int))
    return [contours[i] for i in index]


def _as_masks(contours: Sequence[ContourSequence], size: int) -> npt.NDArray[np.float32]:
    return np.stack([m.pixels for m in rasterize_dataset(contours, size)]).astype(np.float32)


def ablation(config: CliConfig) -> Result:
    """
    Full model against the no-invariance variant and the mask VAE, per seed.
    """
    variants: Dict[str, List[float]] = {"full": [], "no_invariance": [], "mask_vae": []}
    for seed in config["seeds"]:
        (manifest, contours, matrices) = _dataset(config, seed)
        model_cfg = _model_config(config, config["n_points"], seed)

        (full, _) = train(init_model(model_cfg), matrices, _train_config(config, seed))
        variants["full"].append(_score(full, matrices, manifest, config, seed).mean("f1"))

        plain = init_model(replace(model_cfg, padding_mode="zeros"))
        (plain, _) = train(plain, matrices, _train_config(config, seed, LossWeights(index_invariant=False)))
        variants["no_invariance"].append(_score(plain, matrices, manifest, config, seed).mean("f1"))

        masks = _as_masks(contours, config["n_points"])
        mask_model = ModelFactory.create(config=model_cfg, model_type=ModelType.MASK)
        mask_weights = LossWeights(gamma=0.0, delta=0.0, epsilon=0.0, index_invariant=False)
        (mask_model, _) = train(mask_model, masks, _train_config(config, seed, mask_weights, random_reindexing=False))
        variants["mask_vae"].append(_score(mask_model, masks, manifest, config, seed).mean("f1"))
        _LOG.info("Ablation seed %d: %s", seed, {k: v[-1] for (k, v) in variants.items()})

    means = {k: float(np.mean(v)) for (k, v) in variants.items()}
    return {
        "experiment": "ablation",
        "seeds": list(config["seeds"]),
        "f1": {k: {"mean": means[k], "runs": v} for (k, v) in variants.items()},
        "margin": {k: means["full"] - means[k] for k in ("no_invariance", "mask_vae")},
    }


def size(config: CliConfig) -> Result:
    """
    Classification of the scale-only two-class dataset with and without size.
    """
    seed = config["seed"]
    (manifest, contours) = make_size_variant(config["n_per_class"], seed, n_points=config["n_points"])
    matrices: List[DistanceMatrix] = [normalize(edm(c)) for c in contours]
    (model, _) = train(init_model(_model_config(config, config["n_points"], seed)), matrices,
                       _train_config(config, seed))
    without = _score(model, matrices, manifest, config, seed)
    with_size = _score(model, matrices, manifest, config, seed, norms=norms_of(matrices))
    return {
        "experiment": "size",
        "without_size": _summary(without),
        "with_size": _summary(with_size),
        "f1_gain": with_size.mean("f1") - without.mean("f1"),
    }


EXPERIMENTS: Dict[str, Callable[[CliConfig], Result]] = {
    "desk": desk,
    "ablation": ablation,
    "size": size,
}
