#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Test fixtures for edmshape_bench.
"""

import os

import numpy as np
import pytest

from edmshape_bench.tests import SEED, disc, write_png

# pylint: disable=redefined-outer-name


@pytest.fixture
def rng() -> np.random.Generator:
    """
    Test fixture providing a freshly seeded random generator.
    """
    return np.random.default_rng(SEED)


@pytest.fixture
def mask_root(tmp_path: str) -> str:
    """
    Test fixture for a small mask dataset: class "a" with 2 discs, class "b" with 3.
    """
    root = os.path.join(tmp_path, "masks")
    for (label, count) in (("a", 2), ("b", 3)):
        for i in range(count):
            write_png(os.path.join(root, label, f"{i}.png"), disc(32, 6.0 + 2 * i))
    return root
