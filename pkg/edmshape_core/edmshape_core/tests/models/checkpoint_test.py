#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Tests for the binary checkpoint format.
"""

import os
from pathlib import Path

import pytest
import torch

from edmshape_core.exceptions import CheckpointError
from edmshape_core.models import (
    ModelConfig,
    ModelFactory,
    ModelType,
    ShapeVAE,
    load_checkpoint,
    read_checkpoint,
    save_checkpoint,
)
from edmshape_core.models.checkpoint import MAGIC, parameters_equal


def test_round_trip(tiny_model: ShapeVAE, tmp_path: Path) -> None:
    """
    Parameters, config and training state survive a save and load.
    """
    path = os.path.join(tmp_path, "model.seck")
    moments = {"0.exp_avg": torch.arange(6, dtype=torch.float32).reshape(2, 3)}
    save_checkpoint(tiny_model, path, train_state={"epoch": 3}, optimizer_tensors=moments)
    ckpt = read_checkpoint(path)
    assert parameters_equal(ckpt.model, tiny_model)
    assert ckpt.config == tiny_model.config
    assert ckpt.train_state == {"epoch": 3}
    assert torch.equal(ckpt.optimizer_tensors["0.exp_avg"], moments["0.exp_avg"])
    assert not os.path.exists(path + ".tmp")


def test_mask_model_round_trip(tiny_config: ModelConfig, tmp_path: Path) -> None:
    """
    The model class is restored from the header.
    """
    model = ModelFactory.create(config=tiny_config, model_type=ModelType.MASK)
    path = os.path.join(tmp_path, "mask.seck")
    save_checkpoint(model, path)
    (loaded, _config) = load_checkpoint(path)
    assert type(loaded) is ModelType.MASK.value
    assert parameters_equal(loaded, model)


def test_bad_magic(tiny_model: ShapeVAE, tmp_path: Path) -> None:
    """
    A file with other magic bytes is refused.
    """
    path = os.path.join(tmp_path, "model.seck")
    save_checkpoint(tiny_model, path)
    with open(path, "r+b") as fh:
        head = fh.read(4)
        assert head == MAGIC
        fh.seek(0)
        fh.write(b"XXXX")
    with pytest.raises(CheckpointError):
        read_checkpoint(path)


def test_truncated(tiny_model: ShapeVAE, tmp_path: Path) -> None:
    """
    Truncated files and trailing bytes are refused.
    """
    path = os.path.join(tmp_path, "model.seck")
    save_checkpoint(tiny_model, path)
    with open(path, "rb") as fh:
        blob = fh.read()
    with open(path, "wb") as fh:
        fh.write(blob[:-10])
    with pytest.raises(CheckpointError):
        read_checkpoint(path)
    with open(path, "wb") as fh:
        fh.write(blob + b"\0\0\0\0")
    with pytest.raises(CheckpointError):
        read_checkpoint(path)
    with open(path, "wb") as fh:
        fh.write(blob[:6])
    with pytest.raises(CheckpointError):
        read_checkpoint(path)


def test_missing_file(tmp_path: Path) -> None:
    """
    A missing file is a checkpoint error, not an OSError.
    """
    with pytest.raises(CheckpointError):
        load_checkpoint(os.path.join(tmp_path, "nope.seck"))
