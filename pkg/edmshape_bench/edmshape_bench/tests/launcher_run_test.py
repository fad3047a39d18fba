#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Unit tests to check the main CLI entry point end to end on a tiny synthetic dataset.
"""

import json
import os
from typing import Dict, List

import pandas as pd
import pytest

from edmshape_core.baselines import REGION_FEATURE_NAMES

from edmshape_bench.run import _main

# pylint: disable=redefined-outer-name

# Tiny model and dataset so that the whole pipeline runs in seconds.
_TINY_MODEL = ["--latent-dim", "8", "--blocks", "2", "--base-channels", "4"]
_TINY_SYNTH = ["--n-per-class", "6", "--n-points", "16", "--seed", "3"]


def _run(*argv: str) -> None:
    assert _main(list(argv)) == 0


def _read_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="module")
def work_dir(tmp_path_factory: pytest.TempPathFactory) -> str:
    """
    Test fixture for a scratch directory shared by the pipeline stages.
    """
    return str(tmp_path_factory.mktemp("pipeline"))


@pytest.fixture(scope="module")
def stages(work_dir: str) -> Dict[str, str]:
    """
    Run synth, preprocess, train and embed once; return the stage output directories.
    """
    out = {name: os.path.join(work_dir, name) for name in ("synth", "pre", "train", "embed")}
    _run("synth", *_TINY_SYNTH, "--mask-size", "32", "--out", out["synth"])
    _run("preprocess", "--contours", os.path.join(out["synth"], "contours.csv"),
         "--manifest", os.path.join(out["synth"], "manifest.csv"), "--n-points", "16", "--out", out["pre"])
    _run("train", "--matrices", os.path.join(out["pre"], "matrices.sedm"), *_TINY_MODEL,
         "--epochs", "2", "--batch-size", "8", "--augment-reindex", "--deterministic", "--out", out["train"])
    _run("embed", "--checkpoint", os.path.join(out["train"], "checkpoints", "final.seck"),
         "--matrices", os.path.join(out["pre"], "matrices.sedm"),
         "--manifest", os.path.join(out["pre"], "manifest.csv"), "--append-size", "--out", out["embed"])
    return out


def test_synth_outputs(stages: Dict[str, str]) -> None:
    """
    18 objects over three classes, with one mask image each and a run record.
    """
    manifest = pd.read_csv(os.path.join(stages["synth"], "manifest.csv"), keep_default_na=False)
    assert len(manifest) == 18
    assert sorted(set(manifest["label"])) == ["ellipse", "rectangle", "star"]
    assert all(os.path.isfile(p) for p in manifest["source_path"])
    record = _read_json(os.path.join(stages["synth"], "run.json"))
    assert record["command"] == "synth"
    assert record["n_per_class"] == 6
    assert "version" in record


def test_train_outputs(stages: Dict[str, str]) -> None:
    """
    Two epochs of history, a plot and the final checkpoint.
    """
    history = pd.read_csv(os.path.join(stages["train"], "history.csv"))
    assert list(history["epoch"]) == [1, 2]
    assert os.path.isfile(os.path.join(stages["train"], "history.svg"))
    assert os.path.isfile(os.path.join(stages["train"], "checkpoints", "final.seck"))


def test_embed_outputs(stages: Dict[str, str]) -> None:
    """
    One row per object: id, label, 8 latent columns and the size column.
    """
    latents = pd.read_csv(os.path.join(stages["embed"], "latents.csv"))
    assert len(latents) == 18
    assert list(latents.columns) == ["object_id", "label", *[f"z_{i}" for i in range(8)], "size"]


@pytest.mark.parametrize(("method", "dim"), [("efd", 4 * 6), ("distmat", 16 * 15 // 2)])
def test_baseline_and_evaluate(stages: Dict[str, str], work_dir: str, method: str, dim: int) -> None:
    """
    Baseline features feed the evaluation, which reports every metric.
    """
    out = os.path.join(work_dir, f"baseline-{method}")
    _run("baseline", method, "--manifest", os.path.join(stages["pre"], "manifest.csv"),
         "--contours", os.path.join(stages["pre"], "contours.csv"),
         "--matrices", os.path.join(stages["pre"], "matrices.sedm"), "--efd-order", "6", "--out", out)
    features = pd.read_csv(os.path.join(out, "features.csv"))
    assert features.shape == (18, 2 + dim)
    _run("evaluate", "--features", os.path.join(out, "features.csv"), "--folds", "3", "--out", out)
    report = _read_json(os.path.join(out, "cv.json"))
    for metric in ("accuracy", "f1", "precision", "recall", "log_loss"):
        assert len(report[metric]["folds"]) == 3
        assert report[metric]["mean"] >= 0.0


def test_regionprops_baseline(stages: Dict[str, str], work_dir: str) -> None:
    """
    The region property baseline reads the mask images written by synth.
    """
    out = os.path.join(work_dir, "baseline-regionprops")
    _run("baseline", "regionprops", "--manifest", os.path.join(stages["synth"], "manifest.csv"), "--out", out)
    features = pd.read_csv(os.path.join(out, "features.csv"))
    assert len(features) == 18
    assert list(features.columns[2:]) == list(REGION_FEATURE_NAMES)


def test_regionprops_without_masks(work_dir: str, capsys: pytest.CaptureFixture) -> None:
    """
    Without mask images the region property baseline is a precondition failure.
    """
    out = os.path.join(work_dir, "no-masks")
    _run("synth", *_TINY_SYNTH, "--out", out)
    code = _main(["baseline", "regionprops", "--manifest", os.path.join(out, "manifest.csv"), "--out", out])
    assert code == 17
    assert "error=PreconditionError message=" in capsys.readouterr().err


def test_preprocess_mask_root(work_dir: str) -> None:
    """
    Mask images of a dataset root become 16-point contours and matrices.
    """
    synth_out = os.path.join(work_dir, "synth-masks")
    _run("synth", *_TINY_SYNTH, "--mask-size", "64", "--scale-range", "1", "1", "--no-rotation", "--out", synth_out)
    out = os.path.join(work_dir, "pre-masks")
    _run("preprocess", "--root", os.path.join(synth_out, "masks"), "--n-points", "16", "--workers", "2",
         "--out", out)
    manifest = pd.read_csv(os.path.join(out, "manifest.csv"))
    assert len(manifest) == 18
    assert all(oid.endswith(".png") and "/" in oid for oid in manifest["object_id"])
    contours = pd.read_csv(os.path.join(out, "contours.csv"))
    assert len(contours) == 18 * 16


def test_reconstruct_sample_classmeans(stages: Dict[str, str], work_dir: str) -> None:
    """
    Decoded outlines are written as contour CSV files (and SVG files on request).
    """
    checkpoint = os.path.join(stages["train"], "checkpoints", "final.seck")
    matrices = os.path.join(stages["pre"], "matrices.sedm")
    latents = os.path.join(stages["embed"], "latents.csv")
    mds = ["--mds-max-iter", "50", "--mds-n-init", "1"]

    out = os.path.join(work_dir, "reconstruct")
    _run("reconstruct", "--checkpoint", checkpoint, "--latents", latents, "--matrices", matrices, "--svg",
         *mds, "--out", out)
    outlines = pd.read_csv(os.path.join(out, "outlines.csv"))
    assert outlines["object_id"].nunique() == 18
    assert len(outlines) == 18 * 16
    assert len([f for f in os.listdir(os.path.join(out, "svg")) if f.endswith(".svg")]) == 18

    out = os.path.join(work_dir, "sample")
    _run("sample", "--checkpoint", checkpoint, "--count", "3", *mds, "--out", out)
    assert pd.read_csv(os.path.join(out, "samples.csv"))["object_id"].nunique() == 3

    out = os.path.join(work_dir, "classmeans")
    _run("classmeans", "--checkpoint", checkpoint, "--latents", latents, "--matrices", matrices, *mds,
         "--out", out)
    names: List[str] = sorted(pd.read_csv(os.path.join(out, "classmeans.csv"))["object_id"].unique())
    assert names == ["ellipse", "rectangle", "star"]


def test_invariance(stages: Dict[str, str], work_dir: str) -> None:
    """
    The drift report covers reflection, reindexing and similarity transforms.
    """
    out = os.path.join(work_dir, "invariance")
    _run("invariance", "--checkpoint", os.path.join(stages["train"], "checkpoints", "final.seck"),
         "--contours", os.path.join(stages["pre"], "contours.csv"), "--max-objects", "6",
         "--n-transforms", "2", "--out", out)
    report = _read_json(os.path.join(out, "invariance.json"))
    assert report["median_inter_object_distance"] > 0
    assert set(report["drift"]) == {"reflection", "reindexing", "similarity"}
    assert report["drift"]["reindexing"]["count"] == 6 * 2 * 16


def test_run_record_reproduces(stages: Dict[str, str], work_dir: str) -> None:
    """
    Passing run.json back as --config repeats the run with the same results.
    """
    first = os.path.join(work_dir, "eval-first")
    _run("evaluate", "--features", os.path.join(stages["embed"], "latents.csv"), "--folds", "3", "--seed", "9",
         "--out", first)
    second = os.path.join(work_dir, "eval-second")
    _run("--config", os.path.join(first, "run.json"), "--out", second)
    assert _read_json(os.path.join(first, "cv.json")) == _read_json(os.path.join(second, "cv.json"))
    assert _read_json(os.path.join(second, "run.json"))["seed"] == 9


@pytest.mark.parametrize(("argv", "code", "error"), [
    (["synth", "--no-such-flag"], 2, None),
    (["synth", "--n-points", "48"], 15, "ConfigError"),
    (["evaluate", "--features", "missing.csv"], 11, "DecodeError"),
    (["train"], 15, "ConfigError"),
])
def test_exit_codes(work_dir: str, capsys: pytest.CaptureFixture, argv: List[str], code: int,
                    error: str) -> None:
    """
    Library errors exit with their code and one stderr line; usage errors exit with 2.
    """
    assert _main([*argv, "--out", os.path.join(work_dir, "errors")]) == code
    if error is not None:
        lines = [line for line in capsys.readouterr().err.splitlines() if line.startswith("error=")]
        assert len(lines) == 1
        assert lines[0].startswith(f"error={error} message=")
