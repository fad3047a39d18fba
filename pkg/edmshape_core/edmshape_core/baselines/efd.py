#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Elliptic Fourier descriptors (Kuhl-Giardina) of closed contours, computed with pyefd.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import numpy.typing as npt
import pyefd

from edmshape_core.contour import ContourLike, perimeter, points_of
from edmshape_core.exceptions import ConfigError, ContourError, DegenerateShape

_LOG = logging.getLogger(__name__)

DEFAULT_ORDER = 30


@dataclass(frozen=True)
class EfdCoefficients:
    """
    Fourier coefficients (a_n, b_n, c_n, d_n) of the first `order` harmonics.

    Attributes
    ----------
    coeffs : np.ndarray
        (order, 4) array.
    normalized : bool
        Whether `efd_normalize` was applied.
    locus : Tuple[float, float]
        The DC components (A0, C0), i.e. the contour centroid in the Fourier sense.
    """

    coeffs: npt.NDArray[np.float64]
    normalized: bool = False
    locus: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        arr = np.array(self.coeffs, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 4 or arr.shape[0] < 1:
            raise ConfigError(f"EFD coefficients must have shape (order >= 1, 4), got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def order(self) -> int:
        """Number of harmonics."""
        return int(self.coeffs.shape[0])

    def flatten(self) -> npt.NDArray[np.float64]:
        """The 4 * order coefficients, harmonic by harmonic."""
        return self.coeffs.reshape(-1).copy()


def _closed_points(contour: ContourLike) -> npt.NDArray[np.float64]:
    pts = points_of(contour)
    keep = np.any(np.roll(pts, -1, axis=0) != pts, axis=1)
    pts = pts[keep]
    if len(pts) < 3 or perimeter(pts) <= 0:
        raise ContourError("Cannot compute Fourier descriptors of a degenerate contour")
    return np.vstack([pts, pts[:1]])


def efd_coeffs(contour: ContourLike, order: int = DEFAULT_ORDER) -> EfdCoefficients:
    """
    Raw (unnormalized) elliptic Fourier coefficients of the closed piecewise-linear contour.

    Raises
    ------
    ConfigError
        If order < 1.
    ContourError
        If the contour is degenerate.
    """
    if order < 1:
        raise ConfigError(f"EFD order must be >= 1, got {order}")
    closed = _closed_points(contour)
    coeffs = pyefd.elliptic_fourier_descriptors(closed, order=order, normalize=False)
    locus = pyefd.calculate_dc_coefficients(closed)
    return EfdCoefficients(coeffs=coeffs, normalized=False, locus=(float(locus[0]), float(locus[1])))


def efd_normalize(c: EfdCoefficients) -> EfdCoefficients:
    """
    Normalize coefficients for invariance to rotation, scale, and starting point.

    pyefd rotates the harmonics so the first ellipse starts on its semi-major axis,
    aligns that axis with x, and scales so that a_1 = 1. The starting point on the
    semi-major axis is only defined up to half a turn, which flips the sign of all
    even harmonics; the ambiguity is removed by making the largest-magnitude even
    harmonic coefficient positive.

    Raises
    ------
    DegenerateShape
        If the first harmonic is all zero.
    """
    first = c.coeffs[0]
    if not np.all(np.isfinite(c.coeffs)) or float(np.dot(first, first)) <= np.finfo(np.float64).tiny:
        raise DegenerateShape("First Fourier harmonic is degenerate")
    coeffs = pyefd.normalize_efd(c.coeffs.copy(), size_invariant=True)
    even = coeffs[1::2]
    if even.size:
        flat = even.reshape(-1)
        if flat[int(np.argmax(np.abs(flat)))] < 0:
            coeffs[1::2] *= -1.0
    return EfdCoefficients(coeffs=coeffs, normalized=True, locus=(0.0, 0.0))


def efd_reconstruct(c: EfdCoefficients, locus: Optional[Tuple[float, float]] = None,
                    n_points: int = 64) -> npt.NDArray[np.float64]:
    """
    Inverse Fourier synthesis: n_points outline points at equally spaced parameter values.
    """
    where = c.locus if locus is None else locus
    # pyefd samples t in [0, 1] inclusive; drop the repeated closing point.
    pts = pyefd.reconstruct_contour(np.asarray(c.coeffs), locus=where, num_points=n_points + 1)
    return np.asarray(pts[:-1], dtype=np.float64)


def efd_feature_vector(contour: ContourLike, order: int = DEFAULT_ORDER) -> npt.NDArray[np.float64]:
    """
    Normalized, flattened 4 * order descriptor of one contour.
    """
    return efd_normalize(efd_coeffs(contour, order)).flatten()


def efd_feature_names(order: int = DEFAULT_ORDER) -> List[str]:
    """
    Column names of `efd_feature_vector`: a_1, b_1, c_1, d_1, a_2, ...
    """
    return [f"{letter}_{n}" for n in range(1, order + 1) for letter in "abcd"]
