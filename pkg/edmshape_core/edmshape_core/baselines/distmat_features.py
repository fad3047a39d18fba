#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Raw distance-matrix descriptor: the strictly upper triangle of the normalized matrix.
"""

from typing import List, Sequence

import numpy as np
import numpy.typing as npt

from edmshape_core.distmat import DistanceMatrix, upper_triangle
from edmshape_core.exceptions import ShapeError


def distmat_features(matrices: Sequence[DistanceMatrix]) -> npt.NDArray[np.float64]:
    """
    Stack the upper-triangle vectors of same-sized matrices into a (B, N (N - 1) / 2) table.
    """
    if not matrices:
        raise ShapeError("No matrices given")
    sizes = {m.n for m in matrices}
    if len(sizes) != 1:
        raise ShapeError(f"Matrices have different sizes: {sorted(sizes)}")
    return np.stack([upper_triangle(m) for m in matrices])


def distmat_feature_names(n: int) -> List[str]:
    """
    Column names d_i_j (i < j) matching `distmat_features`.
    """
    (rows, cols) = np.triu_indices(n, k=1)
    return [f"d_{i}_{j}" for (i, j) in zip(rows, cols)]
