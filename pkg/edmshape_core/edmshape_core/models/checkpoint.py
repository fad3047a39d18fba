#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Self-describing binary checkpoints.

Layout (little-endian)::

    b"SECK" | u32 version | u32 header length | UTF-8 JSON header | f32 tensor data

The JSON header holds the model class and config, free-form training state, and an
ordered table of tensors (name, shape) whose raw data follows in the same order.
"""

import json
import logging
import os
import struct
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np
import torch
from torch import nn

from edmshape_core.exceptions import CheckpointError
from edmshape_core.models.config import ModelConfig
from edmshape_core.models.mask_vae import MaskVAE
from edmshape_core.models.shape_vae import ShapeVAE, build_model

_LOG = logging.getLogger(__name__)

MAGIC = b"SECK"
VERSION = 1

_PREAMBLE = struct.Struct("<4sII")

_MODEL_CLASSES = {cls.__name__: cls for cls in (ShapeVAE, MaskVAE)}

# Prefix of optimizer tensors stored alongside the model parameters.
OPTIMIZER_PREFIX = "optimizer."


@dataclass
class Checkpoint:
    """
    Everything read back from a checkpoint file.
    """

    model: ShapeVAE
    config: ModelConfig
    train_state: Dict[str, Any] = field(default_factory=dict)
    optimizer_tensors: Dict[str, torch.Tensor] = field(default_factory=dict)


def save_checkpoint(model: ShapeVAE, path: str, *,
                    train_state: Optional[Mapping[str, Any]] = None,
                    optimizer_tensors: Optional[Mapping[str, torch.Tensor]] = None) -> None:
    """
    Write the model parameters (and optional training state) to `path`.

    The file is written to a temporary name first and moved into place, so an
    existing checkpoint at `path` survives a failed write.
    """
    tensors: Dict[str, torch.Tensor] = dict(model.state_dict())
    for (name, tensor) in (optimizer_tensors or {}).items():
        tensors[OPTIMIZER_PREFIX + name] = tensor
    table = []
    chunks = []
    for (name, tensor) in tensors.items():
        data = np.ascontiguousarray(tensor.detach().cpu().numpy(), dtype="<f4")
        table.append({"name": name, "shape": list(data.shape), "dtype": "f32"})
        chunks.append(data.tobytes())
    header = json.dumps({
        "model_class": type(model).__name__,
        "config": model.config.to_dict(),
        "train_state": dict(train_state or {}),
        "tensors": table,
    }).encode("utf-8")
    tmp_path = f"{path}.tmp"
    with open(tmp_path, "wb") as fh:
        fh.write(_PREAMBLE.pack(MAGIC, VERSION, len(header)))
        fh.write(header)
        for chunk in chunks:
            fh.write(chunk)
    os.replace(tmp_path, path)
    _LOG.info("Saved checkpoint: %s (%d tensors)", path, len(table))


def read_checkpoint(path: str) -> Checkpoint:
    """
    Read a checkpoint written by `save_checkpoint`.

    Raises
    ------
    CheckpointError
        On bad magic bytes, unsupported version, malformed header, or truncated data.
    """
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as ex:
        raise CheckpointError(f"Cannot read checkpoint {path}: {ex}") from ex
    if len(blob) < _PREAMBLE.size:
        raise CheckpointError(f"Checkpoint {path} is truncated")
    (magic, version, header_len) = _PREAMBLE.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointError(f"Checkpoint {path} has bad magic bytes {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"Checkpoint {path} has unsupported version {version}")
    offset = _PREAMBLE.size
    try:
        header = json.loads(blob[offset:offset + header_len].decode("utf-8"))
        model_class = _MODEL_CLASSES[header["model_class"]]
        config = ModelConfig.from_dict(header["config"])
        table = header["tensors"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError) as ex:
        raise CheckpointError(f"Checkpoint {path} has a malformed header: {ex}") from ex
    offset += header_len
    tensors: Dict[str, torch.Tensor] = {}
    for entry in table:
        shape = tuple(int(s) for s in entry["shape"])
        nbytes = 4 * int(np.prod(shape, dtype=np.int64))
        if offset + nbytes > len(blob):
            raise CheckpointError(f"Checkpoint {path} is truncated at tensor {entry['name']}")
        data = np.frombuffer(blob, dtype="<f4", count=nbytes // 4, offset=offset).reshape(shape)
        tensors[entry["name"]] = torch.from_numpy(data.astype(np.float32))
        offset += nbytes
    if offset != len(blob):
        raise CheckpointError(f"Checkpoint {path} has {len(blob) - offset} trailing bytes")

    model = build_model(model_class, config)
    state = {k: v for (k, v) in tensors.items() if not k.startswith(OPTIMIZER_PREFIX)}
    try:
        model.load_state_dict(state)
    except RuntimeError as ex:
        raise CheckpointError(f"Checkpoint {path} does not match its model config: {ex}") from ex
    optimizer_tensors = {k[len(OPTIMIZER_PREFIX):]: v for (k, v) in tensors.items() if k.startswith(OPTIMIZER_PREFIX)}
    _LOG.info("Loaded checkpoint: %s (%s)", path, config)
    assert isinstance(model, ShapeVAE)
    return Checkpoint(model=model, config=config, train_state=header.get("train_state", {}),
                      optimizer_tensors=optimizer_tensors)


def load_checkpoint(path: str) -> Tuple[ShapeVAE, ModelConfig]:
    """
    Read back the model and its config.
    """
    ckpt = read_checkpoint(path)
    return (ckpt.model, ckpt.config)


def parameters_equal(left: nn.Module, right: nn.Module) -> bool:
    """
    True if both modules hold bitwise identical tensors under the same names.
    """
    (lstate, rstate) = (left.state_dict(), right.state_dict())
    return lstate.keys() == rstate.keys() and all(torch.equal(lstate[k], rstate[k]) for k in lstate)
