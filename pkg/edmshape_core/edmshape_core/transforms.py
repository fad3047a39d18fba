#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Similarity transforms of contour point sequences.
"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
import numpy.typing as npt

from edmshape_core.contour import ContourLike, ContourSequence, Polygon, points_of
from edmshape_core.exceptions import InvalidTransform


@dataclass(frozen=True)
class SimilarityTransform:
    """
    Scale, then (optionally) reflect, rotate, and translate.

    Attributes
    ----------
    theta : float
        Rotation angle in radians.
    t_x, t_y : float
        Translation.
    a : float
        Scale factor, strictly positive.
    reflect : bool
        Negate y before rotation (and reverse the point order to keep the
        traversal counterclockwise).
    """

    theta: float = 0.0
    t_x: float = 0.0
    t_y: float = 0.0
    a: float = 1.0
    reflect: bool = False

    def __post_init__(self) -> None:
        if not self.a > 0:
            raise InvalidTransform(f"Scale factor must be positive, got {self.a}")

    @classmethod
    def random(cls, rng: np.random.Generator, *,
               scale_range: Tuple[float, float] = (1.0, 1.0),
               rotation: bool = False,
               translation: float = 0.0,
               reflect: bool = False) -> "SimilarityTransform":
        """
        Draw a random transform.

        Parameters
        ----------
        rng : np.random.Generator
            Random stream.
        scale_range : Tuple[float, float]
            Inclusive range of the scale factor.
        rotation : bool
            Draw a uniform rotation angle in [0, 2 pi) if True.
        translation : float
            Translation components are drawn uniformly from [-translation, translation].
        reflect : bool
            Whether the transform reflects.
        """
        (lo, hi) = scale_range
        scale = float(rng.uniform(lo, hi)) if hi > lo else float(lo)
        theta = float(rng.uniform(0.0, 2.0 * np.pi)) if rotation else 0.0
        (t_x, t_y) = rng.uniform(-translation, translation, size=2) if translation > 0 else (0.0, 0.0)
        return cls(theta=theta, t_x=float(t_x), t_y=float(t_y), a=scale, reflect=reflect)

    def apply(self, points: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        """
        Map an (N, 2) point array through the transform.
        """
        pts = np.asarray(points, dtype=np.float64) * self.a
        if self.reflect:
            pts = pts * np.array([1.0, -1.0])
        (cos_t, sin_t) = (np.cos(self.theta), np.sin(self.theta))
        (x, y) = (pts[:, 0], pts[:, 1])
        out = np.column_stack([x * cos_t - y * sin_t + self.t_x,
                               x * sin_t + y * cos_t + self.t_y])
        if self.reflect:
            out = out[::-1].copy()
        return out


def transform_contour(contour: ContourLike, t: SimilarityTransform) -> Union[ContourSequence, Polygon]:
    """
    Apply a similarity transform to a contour.

    Parameters
    ----------
    contour : ContourSequence or Polygon
        The contour to transform.
    t : SimilarityTransform
        The transform.

    Returns
    -------
    contour : ContourSequence or Polygon
        The transformed contour (a Polygon for Polygon input), still counterclockwise.

    Raises
    ------
    InvalidTransform
        If the scale factor is not positive.
    """
    if not t.a > 0:
        raise InvalidTransform(f"Scale factor must be positive, got {t.a}")
    moved = t.apply(points_of(contour))
    if isinstance(contour, Polygon):
        return Polygon(moved)
    return ContourSequence(moved)
