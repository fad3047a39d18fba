#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Common functions for edmshape_core tests.
"""

import numpy as np
import numpy.typing as npt

from edmshape_core.contour import ContourSequence, Polygon, resample_uniform

# A common seed to use to avoid tracking down race conditions and intermingling
# issues of seeds across tests that run in non-deterministic parallel orders.
SEED = 42


def random_polygon(rng: np.random.Generator, n_vertices: int = 256, harmonics: int = 4,
                   elongation: float = 1.0) -> Polygon:
    """
    A random star-shaped counterclockwise polygon: radius 1 plus a few random
    low-amplitude angular harmonics, optionally stretched along x.
    """
    phi = np.linspace(0.0, 2.0 * np.pi, n_vertices, endpoint=False)
    radius = np.ones_like(phi)
    for k in range(2, harmonics + 2):
        radius += rng.uniform(0.0, 0.3 / k) * np.cos(k * phi + rng.uniform(0.0, 2.0 * np.pi))
    pts = np.column_stack([elongation * radius * np.cos(phi), radius * np.sin(phi)])
    return Polygon(pts)


def random_contour(rng: np.random.Generator, n_points: int = 64, elongation: float = 1.0) -> ContourSequence:
    """
    A uniformly resampled random star-shaped contour.
    """
    return resample_uniform(random_polygon(rng, elongation=elongation), n_points)


def unit_square() -> npt.NDArray[np.float64]:
    """Corners of the unit square in counterclockwise order."""
    return np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
