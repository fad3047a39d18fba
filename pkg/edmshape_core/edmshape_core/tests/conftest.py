#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Test fixtures for edmshape_core.
"""

from typing import List

import numpy as np
import pytest

from edmshape_core.contour import ContourSequence
from edmshape_core.distmat import DistanceMatrix, edm, normalize
from edmshape_core.models import ModelConfig, ShapeVAE, init_model
from edmshape_core.tests import SEED, random_contour


@pytest.fixture
def rng() -> np.random.Generator:
    """
    Test fixture providing a freshly seeded random generator.
    """
    return np.random.default_rng(SEED)


@pytest.fixture
def tiny_config() -> ModelConfig:
    """
    Test fixture for a small model: N=16, two stages, 4 base channels.
    """
    return ModelConfig(matrix_size=16, latent_dim=8, blocks=2, base_channels=4, seed=SEED)


@pytest.fixture
def tiny_model(tiny_config: ModelConfig) -> ShapeVAE:
    """
    Test fixture for an untrained tiny model.
    """
    return init_model(tiny_config)


@pytest.fixture
def contours16() -> List[ContourSequence]:
    """
    Test fixture with a dozen random contours of 16 points.
    """
    gen = np.random.default_rng(SEED)
    return [random_contour(gen, 16, elongation=gen.uniform(1.0, 2.0)) for _ in range(12)]


@pytest.fixture
def matrices16(contours16: List[ContourSequence]) -> List[DistanceMatrix]:
    """
    Test fixture with the normalized distance matrices of `contours16`.
    """
    return [normalize(edm(c)) for c in contours16]
