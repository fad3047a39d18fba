#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Test fixtures for edmshape_viz.
"""

import matplotlib
import numpy as np
import pandas
import pytest

from edmshape_viz.tests import SEED

matplotlib.use("Agg")


@pytest.fixture
def history_df() -> pandas.DataFrame:
    """A short training log in the column layout the trainer writes."""
    rng = np.random.default_rng(SEED)
    epochs = np.arange(1, 6)
    rec = 1.0 / epochs + rng.uniform(0, 0.01, size=len(epochs))
    return pandas.DataFrame({
        "epoch": epochs,
        "rec": rec,
        "kl": rng.uniform(1e-3, 1e-2, size=len(epochs)),
        "diag": np.zeros(len(epochs)),
        "nonneg": rng.uniform(1e-6, 1e-5, size=len(epochs)),
        "sym": rng.uniform(1e-6, 1e-5, size=len(epochs)),
        "total": rec + 0.01,
    })


@pytest.fixture
def square() -> np.ndarray:
    """Unit square outline, counter-clockwise."""
    return np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
