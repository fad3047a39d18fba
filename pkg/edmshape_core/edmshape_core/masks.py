#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Binary segmentation masks: connected component filtering and contour rasterization.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import numpy.typing as npt
from scipy import ndimage
from skimage.draw import polygon as draw_polygon

from edmshape_core.exceptions import ContourError, ShapeError
from edmshape_core.util import PointsLike, as_points

_LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class BinaryMask:
    """
    A row-major boolean pixel grid with at least one foreground pixel.

    Attributes
    ----------
    pixels : np.ndarray
        Boolean array of shape (height, width); True marks foreground.
    """

    pixels: npt.NDArray[np.bool_]

    def __post_init__(self) -> None:
        pixels = np.asarray(self.pixels, dtype=bool)
        if pixels.ndim != 2:
            raise ShapeError(f"Mask must be two-dimensional, got shape {pixels.shape}")
        if not pixels.any():
            raise ContourError("Mask has no foreground pixels")
        object.__setattr__(self, "pixels", pixels)

    @classmethod
    def from_array(cls, image: npt.ArrayLike) -> "BinaryMask":
        """
        Build a mask from a grayscale image: nonzero pixels are foreground.
        """
        return cls(np.asarray(image) != 0)

    @property
    def width(self) -> int:
        """Number of pixel columns."""
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        """Number of pixel rows."""
        return int(self.pixels.shape[0])

    @property
    def area(self) -> int:
        """Number of foreground pixels."""
        return int(self.pixels.sum())

    def component_count(self) -> int:
        """
        Number of 4-connected foreground components.
        """
        (_labels, count) = ndimage.label(self.pixels)
        return int(count)

    def largest_component(self, name: str = "") -> "BinaryMask":
        """
        Keep only the largest 4-connected foreground component.

        Parameters
        ----------
        name : str
            Object identifier used in the warning logged when components are dropped.

        Returns
        -------
        mask : BinaryMask
            Self if the mask is already a single component, otherwise a new mask.
        """
        # The default structuring element of ndimage.label is 4-connectivity in 2D.
        (labels, count) = ndimage.label(self.pixels)
        if count <= 1:
            return self
        sizes = np.bincount(labels.ravel())[1:]
        keep = int(np.argmax(sizes)) + 1
        _LOG.warning("Mask %s has %d connected components: keeping the largest (%d of %d pixels)",
                     name or "<unnamed>", count, int(sizes[keep - 1]), int(sizes.sum()))
        return BinaryMask(labels == keep)


def rasterize_contour(points: PointsLike, size: int, *,
                      scale: Optional[float] = None, margin: int = 2) -> BinaryMask:
    """
    Fill a closed contour into a square mask.

    Parameters
    ----------
    points : array-like
        (N, 2) contour points in (x, y) order.
    size : int
        Side length of the output canvas in pixels.
    scale : Optional[float]
        Pixels per contour length unit. If omitted, the contour is scaled to fit
        the canvas (minus the margin), which discards its absolute size.
    margin : int
        Minimum number of background pixels kept around the fitted contour.

    Returns
    -------
    mask : BinaryMask
    """
    pts = as_points(points)
    center = 0.5 * (pts.min(axis=0) + pts.max(axis=0))
    if scale is None:
        extent = float(np.max(pts.max(axis=0) - pts.min(axis=0)))
        if extent <= 0:
            raise ContourError("Cannot rasterize a contour with zero extent")
        scale = (size - 1 - 2 * margin) / extent
    pix = (pts - center) * scale + (size - 1) / 2.0
    (rows, cols) = draw_polygon(pix[:, 1], pix[:, 0], shape=(size, size))
    canvas = np.zeros((size, size), dtype=bool)
    canvas[rows, cols] = True
    return BinaryMask(canvas)
