#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Basic initializer module for the edmshape_core models, plus numpy-level helpers
to encode distance matrices and decode latent codes.
"""

from enum import Enum
from typing import List, Sequence, Tuple, TypeVar, Union

import numpy as np
import numpy.typing as npt
import torch

from edmshape_core.distmat import DistanceMatrix, RawMatrix
from edmshape_core.models.checkpoint import Checkpoint, load_checkpoint, read_checkpoint, save_checkpoint
from edmshape_core.models.config import ModelConfig
from edmshape_core.models.mask_vae import MaskVAE
from edmshape_core.models.shape_vae import ShapeVAE, build_model

__all__ = [
    'Checkpoint',
    'MaskVAE',
    'ModelConfig',
    'ModelFactory',
    'ModelType',
    'ShapeVAE',
    'decode',
    'embed',
    'encode',
    'init_model',
    'load_checkpoint',
    'read_checkpoint',
    'save_checkpoint',
]


class ModelType(Enum):
    """Enumerate supported autoencoder models."""

    SHAPE = ShapeVAE
    """Distance-matrix VAE with circular padding and mirror-sum."""

    MASK = MaskVAE
    """Vanilla VAE over rasterized masks."""


# To make mypy happy, we need to define a type variable for each model type.
# mypy cannot build a TypeVar from the enum members.
ConcreteModel = TypeVar('ConcreteModel', ShapeVAE, MaskVAE)

DEFAULT_MODEL_TYPE = ModelType.SHAPE


class ModelFactory:
    """Simple factory class for creating ShapeVAE-derived objects"""

    # pylint: disable=too-few-public-methods

    @staticmethod
    def create(*,
               config: ModelConfig,
               model_type: ModelType = DEFAULT_MODEL_TYPE) -> ConcreteModel:   # type: ignore[type-var]
        """
        Create a freshly initialized model.

        Parameters
        ----------
        config : ModelConfig
            Architecture and initialization seed.
        model_type : ModelType
            Model class as defined by Enum.

        Returns
        -------
        model : ConcreteModel
            Instance of the concrete model class, deterministically initialized from config.seed.
        """
        model: ConcreteModel = build_model(model_type.value, config)   # type: ignore[assignment]
        return model


def init_model(config: ModelConfig) -> ShapeVAE:
    """
    Deterministically initialized distance-matrix VAE.
    """
    return ModelFactory.create(config=config, model_type=ModelType.SHAPE)


MatricesLike = Union[DistanceMatrix, Sequence[DistanceMatrix], npt.ArrayLike, torch.Tensor]


def as_tensor(matrices: MatricesLike, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """
    Convert one or more matrices into a (B, N, N) tensor.
    """
    if isinstance(matrices, torch.Tensor):
        out = matrices.to(dtype)
    elif isinstance(matrices, (DistanceMatrix, RawMatrix)):
        out = torch.as_tensor(matrices.entries).to(dtype)
    elif isinstance(matrices, Sequence) and matrices and isinstance(matrices[0], (DistanceMatrix, RawMatrix)):
        out = torch.as_tensor(np.stack([m.entries for m in matrices])).to(dtype)
    else:
        out = torch.as_tensor(np.asarray(matrices)).to(dtype)
    return out[None] if out.ndim == 2 else out


def _in_eval(model: ShapeVAE) -> bool:
    was_training = model.training
    model.eval()
    return was_training


def encode(model: ShapeVAE, matrices: MatricesLike) -> Tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """
    Posterior (mu, logvar) of each input matrix, as (B, latent_dim) arrays.
    """
    was_training = _in_eval(model)
    try:
        with torch.no_grad():
            (mu, logvar) = model.encode(as_tensor(matrices, next(model.parameters()).dtype))
    finally:
        model.train(was_training)
    return (mu.double().numpy(), logvar.double().numpy())


def embed(model: ShapeVAE, matrices: MatricesLike, batch_size: int = 256) -> npt.NDArray[np.float64]:
    """
    Latent descriptors: the posterior means of the inputs, computed in eval mode.
    """
    data = as_tensor(matrices)
    parts = [encode(model, data[start:start + batch_size])[0] for start in range(0, len(data), batch_size)]
    return np.concatenate(parts, axis=0) if parts else np.zeros((0, model.config.latent_dim))


def decode(model: ShapeVAE, latents: npt.ArrayLike) -> List[RawMatrix]:
    """
    Decode latent codes (B, latent_dim) or (latent_dim,) into raw matrices.
    """
    was_training = _in_eval(model)
    try:
        with torch.no_grad():
            z = torch.as_tensor(np.atleast_2d(np.asarray(latents, dtype=np.float64))).to(next(model.parameters()).dtype)
            out = model.decode(z).double().numpy()
    finally:
        model.train(was_training)
    return [RawMatrix(m) for m in out]
