#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Pipeline stages run by the `edmshape` command line.

Each stage reads the file artifacts of the previous ones and writes its own into
the --out directory:

    synth        -> manifest.csv, contours.csv [, masks/<label>/<id>.png]
    preprocess   -> manifest.csv, contours.csv, matrices.sedm
    train        -> checkpoints/final.seck, history.csv, history.svg
    embed        -> latents.csv
    reconstruct  -> outlines.csv [, svg/]
    baseline     -> features.csv
    evaluate     -> cv.json, cv.csv
    sample       -> samples.csv [, svg/]
    classmeans   -> classmeans.csv [, svg/]
    invariance   -> invariance.json
    experiment   -> <experiment>.json
"""

import logging
from dataclasses import replace
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import numpy.typing as npt
from joblib import Parallel, delayed

from edmshape_core.baselines import (
    REGION_FEATURE_NAMES,
    distmat_feature_names,
    distmat_features,
    efd_feature_names,
    efd_feature_vector,
    region_props,
)
from edmshape_core.contour import ContourSequence, Polygon, contour_from_mask, ensure_ccw, resample_uniform
from edmshape_core.distmat import edm, normalize
from edmshape_core.evaluation import (
    FeatureTable,
    append_size,
    class_mean_decode,
    cross_validate,
    invariance_report,
    sample_latent,
)
from edmshape_core.exceptions import ConfigError, PreconditionError, ShapeError
from edmshape_core.losses import LossWeights
from edmshape_core.mds import MdsConfig, reconstruct_outline
from edmshape_core.models import ModelConfig, ShapeVAE, decode, embed, init_model, load_checkpoint
from edmshape_core.trainer import TrainConfig, train
from edmshape_core.util import seeded_rng

from edmshape_viz import plot_history, save_outlines

from edmshape_bench.datasets import (
    Manifest,
    ManifestRecord,
    Randomization,
    load_mask,
    make_size_variant,
    make_synthetic_shapes,
    rasterize_dataset,
    read_manifest,
    save_mask,
    scan_dataset,
    write_manifest,
)
from edmshape_bench.launcher import CliConfig
from edmshape_bench.storage import (
    MatrixSet,
    read_contours,
    read_features,
    read_sedm,
    write_contours,
    write_csv,
    write_cv_report,
    write_features,
    write_json,
    write_sedm,
)

_LOG = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.csv"
CONTOURS_FILE = "contours.csv"
MATRICES_FILE = "matrices.sedm"
CHECKPOINT_DIR = "checkpoints"
FINAL_CHECKPOINT = "final.seck"
LATENTS_FILE = "latents.csv"
FEATURES_FILE = "features.csv"

Summary = Dict[str, Any]


def model_config(config: CliConfig, matrix_size: int) -> ModelConfig:
    """Model architecture from the resolved flags."""
    return ModelConfig(matrix_size=matrix_size, latent_dim=config["latent_dim"], blocks=config["blocks"],
                       base_channels=config["base_channels"], seed=config["seed"],
                       padding_mode=config.get("padding_mode", "circular"),
                       residual=bool(config.get("residual", False)),
                       mirror_sum=bool(config.get("mirror_sum", True)))


def train_config(config: CliConfig, checkpoint_dir: Optional[str] = None) -> TrainConfig:
    """Training loop settings from the resolved flags."""
    defaults = LossWeights()
    weights = LossWeights(beta=config.get("beta", defaults.beta), gamma=config.get("gamma", defaults.gamma),
                          delta=config.get("delta", defaults.delta), epsilon=config.get("epsilon", defaults.epsilon),
                          index_invariant=bool(config.get("index_invariant", defaults.index_invariant)))
    return TrainConfig(learning_rate=config["lr"], epochs=config["epochs"], batch_size=config["batch_size"],
                       seed=config["seed"], weights=weights, deterministic=bool(config["deterministic"]),
                       checkpoint_every=config.get("checkpoint_every", 0), checkpoint_dir=checkpoint_dir,
                       resume_from=config.get("resume"), random_reindexing=bool(config.get("augment_reindex", False)))


def mds_config(config: CliConfig) -> MdsConfig:
    """Outline reconstruction settings from the resolved flags."""
    return MdsConfig(max_iter=config["mds_max_iter"], tol=config["mds_tol"], seed=config["seed"],
                     init=config["mds_init"], n_init=config["mds_n_init"])


def _mask_contour(path: str, n_points: int, name: str) -> ContourSequence:
    return contour_from_mask(load_mask(path, name), n_points, name=name)


def _resample(points: npt.NDArray[np.float64], n_points: int) -> ContourSequence:
    return resample_uniform(ensure_ccw(Polygon(points)), n_points)


def _contours_for(manifest: Manifest, contours_path: str) -> List[npt.NDArray[np.float64]]:
    """
    Contour points of every manifest record, in manifest order.
    """
    (ids, points) = read_contours(contours_path)
    lookup = dict(zip(ids, points))
    missing = [oid for oid in manifest.object_ids if oid not in lookup]
    if missing:
        raise PreconditionError(f"{len(missing)} object(s) of the manifest have no contour, e.g. {missing[0]}")
    return [lookup[oid] for oid in manifest.object_ids]


def _latent_table(table: FeatureTable, model: ShapeVAE) -> npt.NDArray[np.float64]:
    rows = table.rows[:, :-1] if table.size_column else table.rows
    if rows.shape[1] != model.config.latent_dim:
        raise ShapeError(f"Latent table has {rows.shape[1]} columns, model expects {model.config.latent_dim}")
    return rows


def _write_outlines(config: CliConfig, file_name: str, names: Sequence[str],
                    outlines: Sequence[npt.NDArray[np.float64]]) -> Summary:
    path = config.output(file_name)
    write_contours(path, names, outlines)
    summary: Summary = {"outlines": path, "count": len(outlines)}
    if config.get("svg"):
        save_outlines(dict(zip(names, outlines)), config.output("svg"))
        summary["svg"] = config.output("svg")
    return summary


def synth(config: CliConfig) -> Summary:
    """
    Emit a synthetic dataset: manifest and contours, plus mask images if --mask-size > 0.
    """
    if config["size_variant"]:
        (manifest, contours) = make_size_variant(config["n_per_class"], config["seed"], n_points=config["n_points"])
    else:
        randomize = Randomization(scale_range=tuple(config["scale_range"]), rotation=config["rotation"],
                                  translation=config["translation"])
        (manifest, contours) = make_synthetic_shapes(config["n_per_class"], config["seed"], randomize,
                                                     n_points=config["n_points"])
    if config["mask_size"] > 0:
        records = []
        for (record, mask) in zip(manifest, rasterize_dataset(contours, config["mask_size"])):
            path = config.output("masks", record.label, f"{record.object_id}.png")
            save_mask(mask, path)
            records.append(replace(record, source_path=path))
        manifest = Manifest(tuple(records), manifest.class_table)
    write_manifest(manifest, config.output(MANIFEST_FILE))
    write_contours(config.output(CONTOURS_FILE), manifest.object_ids, contours)
    return {"objects": len(manifest), "classes": list(manifest.class_names)}


def preprocess(config: CliConfig) -> Summary:
    """
    Masks (--root) or raw contours (--contours with --manifest) to uniformly
    resampled contours and their normalized distance matrices.
    """
    n_points = config["n_points"]
    parallel = Parallel(n_jobs=config["workers"])
    if config.get("root"):
        manifest = scan_dataset(config["root"])
        contours = parallel(delayed(_mask_contour)(r.source_path, n_points, r.object_id) for r in manifest)
    else:
        config.require("contours", "manifest")
        manifest = read_manifest(config["manifest"])
        contours = parallel(delayed(_resample)(pts, n_points) for pts in _contours_for(manifest, config["contours"]))
    matrices = [normalize(edm(c)) for c in contours]
    write_manifest(manifest, config.output(MANIFEST_FILE))
    write_contours(config.output(CONTOURS_FILE), manifest.object_ids, contours)
    write_sedm(config.output(MATRICES_FILE), MatrixSet(manifest.object_ids, matrices))
    return {"objects": len(manifest), "n": n_points, "matrices": config.output(MATRICES_FILE)}


def train_model(config: CliConfig) -> Summary:
    """
    Train the distance-matrix VAE on a SEDM container.
    """
    config.require("matrices")
    data = read_sedm(config["matrices"])
    model = init_model(model_config(config, data.n))
    (model, history) = train(model, data.matrices, train_config(config, config.output(CHECKPOINT_DIR)))
    frame = history.to_frame()
    write_csv(frame, config.output("history.csv"))
    plot_history(frame, config.output("history.svg"))
    return {"checkpoint": config.output(CHECKPOINT_DIR, FINAL_CHECKPOINT), "epochs": len(history),
            "final_loss": history.totals()[-1]}


def embed_matrices(config: CliConfig) -> Summary:
    """
    Encode the manifest's matrices into a latent CSV (posterior means).
    """
    config.require("checkpoint", "matrices", "manifest")
    (model, _) = load_checkpoint(config["checkpoint"])
    manifest = read_manifest(config["manifest"])
    data = read_sedm(config["matrices"]).select(manifest.object_ids)
    latents = embed(model, data.matrices)
    table = FeatureTable(rows=latents, labels=manifest.labels,
                         feature_names=tuple(f"z_{i}" for i in range(latents.shape[1])),
                         object_ids=tuple(manifest.object_ids), class_names=manifest.class_names)
    if config["append_size"]:
        table = append_size(table, data.norms)
    write_features(config.output(LATENTS_FILE), table)
    return {"latents": config.output(LATENTS_FILE), "objects": len(table), "dim": table.feature_dim}


def reconstruct(config: CliConfig) -> Summary:
    """
    Decode latents (or the encoded matrices) into outlines at their original size.

    Sizes come from the matrix norms when --matrices is given, otherwise the
    outlines are drawn at unit Frobenius norm.
    """
    config.require("checkpoint")
    (model, _) = load_checkpoint(config["checkpoint"])
    data = read_sedm(config["matrices"]) if config.get("matrices") else None
    if config.get("latents"):
        table = read_features(config["latents"])
        names = list(table.object_ids)
        latents = _latent_table(table, model)
        norms = data.select(names).norms if data is not None else [1.0] * len(names)
    elif data is not None:
        names = data.object_ids
        latents = embed(model, data.matrices)
        norms = data.norms
    else:
        raise ConfigError("Command reconstruct requires --latents or --matrices")
    settings = mds_config(config)
    outlines = [reconstruct_outline(raw, norm, settings) for (raw, norm) in zip(decode(model, latents), norms)]
    return _write_outlines(config, "outlines.csv", names, outlines)


def baseline(config: CliConfig) -> Summary:
    """
    Classical descriptors of every manifest object: efd (contours), regionprops
    (mask images) or distmat (raw normalized matrix entries).
    """
    method = config.get("method")
    if not method:
        raise ConfigError("Command baseline requires a method: efd, regionprops or distmat")
    config.require("manifest")
    manifest = read_manifest(config["manifest"])
    parallel = Parallel(n_jobs=config["workers"])
    if method == "efd":
        config.require("contours")
        order = config["efd_order"]
        rows = parallel(delayed(efd_feature_vector)(pts, order) for pts in _contours_for(manifest, config["contours"]))
        names = efd_feature_names(order)
    elif method == "regionprops":
        unmasked = [r.object_id for r in manifest if not r.source_path]
        if unmasked:
            raise PreconditionError(f"Region properties need mask images; {len(unmasked)} object(s) have no"
                                    f" source_path, e.g. {unmasked[0]} (synth writes masks with --mask-size)")
        rows = parallel(delayed(_region_row)(r) for r in manifest)
        names = list(REGION_FEATURE_NAMES)
    else:
        config.require("matrices")
        data = read_sedm(config["matrices"]).select(manifest.object_ids)
        rows = distmat_features(data.matrices)
        names = distmat_feature_names(data.n)
    table = FeatureTable(rows=np.asarray(rows, dtype=np.float64), labels=manifest.labels, feature_names=tuple(names),
                         object_ids=tuple(manifest.object_ids), class_names=manifest.class_names)
    write_features(config.output(FEATURES_FILE), table)
    return {"method": method, "features": config.output(FEATURES_FILE), "dim": table.feature_dim}


def _region_row(record: ManifestRecord) -> npt.NDArray[np.float64]:
    return region_props(load_mask(record.source_path, record.object_id), record.object_id).as_vector()


def evaluate(config: CliConfig) -> Summary:
    """
    Stratified k-fold logistic regression on a feature (or latent) CSV.
    """
    config.require("features")
    table = read_features(config["features"])
    report = cross_validate(table, config["folds"], config["seed"], l2=config["l2"], max_iter=config["max_iter"],
                            tol=config["tol"], n_jobs=config["workers"])
    if not all(report.converged):
        _LOG.warning("Logistic regression did not converge in %d of %d folds",
                     report.converged.count(False), len(report.converged))
    write_cv_report(report, config.output("cv.json"), config.output("cv.csv"))
    return {metric: {"mean": values["mean"], "std": values["std"]} for (metric, values) in report.to_dict().items()}


def sample(config: CliConfig) -> Summary:
    """
    Decode standard normal latent draws into outlines.
    """
    config.require("checkpoint")
    (model, _) = load_checkpoint(config["checkpoint"])
    outlines = sample_latent(model, config["count"], config["seed"], norm=config["norm"],
                             mds_config=mds_config(config))
    names = [f"sample-{i:04d}" for i in range(len(outlines))]
    return _write_outlines(config, "samples.csv", names, outlines)


def classmeans(config: CliConfig) -> Summary:
    """
    Decode the mean latent code of every class of a latent CSV.
    """
    config.require("checkpoint", "latents")
    (model, _) = load_checkpoint(config["checkpoint"])
    table = read_features(config["latents"])
    norms = read_sedm(config["matrices"]).select(table.object_ids).norms if config.get("matrices") else None
    outlines = class_mean_decode(table, model, norms=norms, mds_config=mds_config(config))
    return _write_outlines(config, "classmeans.csv", list(outlines), list(outlines.values()))


def invariance(config: CliConfig) -> Summary:
    """
    Latent drift of the contours in a contour CSV under random similarity
    transforms, reflection and all reindexings.
    """
    config.require("checkpoint", "contours")
    (model, _) = load_checkpoint(config["checkpoint"])
    (_, points) = read_contours(config["contours"])
    n = model.config.matrix_size
    wrong = [len(p) for p in points if len(p) != n]
    if wrong:
        raise ShapeError(f"Contours have {wrong[0]} points, the model expects {n} (run preprocess --n-points {n})")
    contours = [ContourSequence(p) for p in points[:config["max_objects"]]]
    rng = seeded_rng(config["seed"])
    transforms = [Randomization().draw(rng) for _ in range(config["n_transforms"])]
    report = invariance_report(model, contours, transforms)
    write_json(report.to_dict(), config.output("invariance.json"))
    return report.to_dict()


def experiment(config: CliConfig) -> Summary:
    """
    Run one of the desk-scale experiments.
    """
    from edmshape_bench.experiments import EXPERIMENTS    # pylint: disable=import-outside-toplevel
    name = config.get("experiment")
    if not name:
        raise ConfigError(f"Command experiment requires a name: {', '.join(EXPERIMENTS)}")
    result = EXPERIMENTS[name](config)
    write_json(result, config.output(f"{name}.json"))
    return result


COMMANDS: Dict[str, Callable[[CliConfig], Summary]] = {
    "synth": synth,
    "preprocess": preprocess,
    "train": train_model,
    "embed": embed_matrices,
    "reconstruct": reconstruct,
    "baseline": baseline,
    "evaluate": evaluate,
    "sample": sample,
    "classmeans": classmeans,
    "invariance": invariance,
    "experiment": experiment,
}
