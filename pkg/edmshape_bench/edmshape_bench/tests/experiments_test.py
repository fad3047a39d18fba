#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Desk-scale experiments. These train several models on 600 contours and take
minutes each: they only run with `pytest -m slow`.
"""

from typing import Callable, List

import pytest

from edmshape_bench.experiments import ablation, desk, size
from edmshape_bench.launcher import CliConfig, Launcher


def _config(*argv: str) -> CliConfig:
    return Launcher("test", argv=["experiment", *argv, "--workers", "-1"]).config


@pytest.mark.slow
def test_desk_experiment(record_property: Callable[[str, object], None]) -> None:
    """
    Latent codes of the randomly transformed and reindexed three-class dataset
    classify well, and reindexing barely moves them.
    """
    result = desk(_config("desk"))
    drift = result["invariance"]["drift"]
    record_property("desk_f1", result["f1"])
    record_property("desk_reindexing_drift_median", drift["reindexing"]["median"])
    record_property("desk_reflection_drift_max", drift["reflection"]["max"])
    assert result["objects"] == 600
    assert result["f1"] >= 0.90
    assert drift["reindexing"]["median"] < 0.05
    assert drift["reflection"]["max"] == 0.0
    assert result["loss_settles"]


@pytest.mark.slow
def test_ablation_experiment() -> None:
    """
    The full model beats zero padding with plain MSE and the mask VAE.
    """
    result = ablation(_config("ablation"))
    runs: List[float] = result["f1"]["full"]["runs"]
    assert len(runs) == 3
    assert result["margin"]["no_invariance"] >= 0.05
    assert result["margin"]["mask_vae"] >= 0.05


@pytest.mark.slow
def test_size_experiment() -> None:
    """
    On two classes that differ only in scale, the appended size feature decides.
    """
    result = size(_config("size", "--n-per-class", "100"))
    assert result["f1_gain"] >= 0.2
    assert result["with_size"]["f1"] >= 0.9
