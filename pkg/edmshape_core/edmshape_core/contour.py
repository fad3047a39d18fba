#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Outline extraction from binary masks and uniform arc-length resampling into
counterclockwise contour sequences.
"""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
import numpy.typing as npt
from scipy.spatial.distance import pdist
from skimage import measure

from edmshape_core.exceptions import ConfigError, ContourError
from edmshape_core.masks import BinaryMask
from edmshape_core.util import PointsLike, as_points, check_power_of_two

_LOG = logging.getLogger(__name__)

# Number of contour points used when nothing else is specified.
DEFAULT_N_POINTS = 64

# Tolerance (relative to the squared bounding box diagonal) below which a polygon is
# considered to have zero area.
_AREA_RTOL = 1e-12


def signed_area(points: PointsLike) -> float:
    """
    Shoelace signed area of a closed polygon; positive for counterclockwise order.
    """
    pts = as_points(points)
    (x, y) = (pts[:, 0], pts[:, 1])
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def perimeter(points: PointsLike) -> float:
    """
    Length of the closed piecewise-linear curve through the points.
    """
    pts = as_points(points)
    return float(np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1).sum())


def diameter(points: PointsLike) -> float:
    """
    Largest pairwise distance between points.
    """
    pts = as_points(points)
    return float(pdist(pts).max()) if len(pts) > 1 else 0.0


@dataclass(frozen=True)
class Polygon:
    """
    An implicitly closed polygon in pixel coordinates.

    Attributes
    ----------
    vertices : np.ndarray
        (V, 2) array of (x, y) vertices, V >= 3, consecutive vertices distinct.
    """

    vertices: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        verts = as_points(self.vertices)
        if len(verts) < 3:
            raise ContourError(f"Polygon needs at least 3 vertices, got {len(verts)}")
        if np.any(np.all(np.roll(verts, -1, axis=0) == verts, axis=1)):
            raise ContourError("Polygon has repeated consecutive vertices")
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)

    @property
    def signed_area(self) -> float:
        """Shoelace area, positive when counterclockwise."""
        return signed_area(self.vertices)

    @property
    def perimeter(self) -> float:
        """Closed perimeter length."""
        return perimeter(self.vertices)

    def __len__(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class ContourSequence:
    """
    N successive outline points traversed counterclockwise.

    Attributes
    ----------
    points : np.ndarray
        (N, 2) float64 array; N >= 4 is a power of two and the signed area is positive.
    """

    points: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        pts = as_points(self.points)
        check_power_of_two("Contour point count", len(pts), minimum=4)
        if not np.all(np.isfinite(pts)):
            raise ContourError("Contour has non-finite coordinates")
        if signed_area(pts) <= 0:
            raise ContourError("Contour must be counterclockwise (positive signed area)")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        """Number of points N."""
        return len(self.points)

    def __len__(self) -> int:
        return len(self.points)


ContourLike = Union[ContourSequence, Polygon, PointsLike]


def points_of(contour: ContourLike) -> npt.NDArray[np.float64]:
    """
    Get the (N, 2) float64 point array of any contour-like value.
    """
    if isinstance(contour, ContourSequence):
        return contour.points
    if isinstance(contour, Polygon):
        return contour.vertices
    return as_points(contour)


def _drop_repeats(points: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """
    Remove consecutive duplicate vertices, including the closing repeat.
    """
    keep = np.any(np.roll(points, -1, axis=0) != points, axis=1)
    return points[keep]


def extract_outline(mask: BinaryMask, level: float = 0.5) -> Polygon:
    """
    Extract the closed iso-contour of a binary mask with marching squares.

    The mask is zero-padded by one pixel on all sides so objects touching the
    image border still yield closed contours. Saddle cells are resolved by the
    cell-average rule: for a 0/1 mask the average of a saddle cell equals 0.5,
    which is treated as foreground, i.e., diagonal foreground pixels connect.

    Parameters
    ----------
    mask : BinaryMask
        Input mask with at least one foreground pixel.
    level : float
        Iso-value at which to extract the contour.

    Returns
    -------
    polygon : Polygon
        The closed contour with the greatest perimeter, in (x, y) pixel coordinates
        of the unpadded mask (x = column, y = row).

    Raises
    ------
    ContourError
        If no closed contour is found.
    """
    padded = np.pad(mask.pixels.astype(np.float64), 1, mode="constant", constant_values=0.0)
    contours = measure.find_contours(padded, level=level, fully_connected="high")
    best = None
    best_perimeter = -1.0
    for rc_points in contours:
        if len(rc_points) < 4 or not np.array_equal(rc_points[0], rc_points[-1]):
            continue    # open contour
        xy = _drop_repeats(rc_points[:, ::-1] - 1.0)
        if len(xy) < 3:
            continue
        length = perimeter(xy)
        if length > best_perimeter:
            (best, best_perimeter) = (xy, length)
    if best is None:
        raise ContourError("No closed contour found in mask")
    _LOG.debug("Extracted outline: %d closed contours, best has %d vertices, perimeter %.3f",
               len(contours), len(best), best_perimeter)
    return Polygon(best)


def ensure_ccw(polygon: Polygon) -> Polygon:
    """
    Return the polygon with counterclockwise (positive shoelace area) vertex order.

    Raises
    ------
    ContourError
        If the polygon has (numerically) zero area.
    """
    verts = polygon.vertices
    area = polygon.signed_area
    extent = float(np.sum((verts.max(axis=0) - verts.min(axis=0)) ** 2))
    if abs(area) <= _AREA_RTOL * extent:
        raise ContourError("Degenerate polygon with zero area")
    if area > 0:
        return polygon
    return Polygon(verts[::-1].copy())


def resample_uniform(polygon: Union[Polygon, PointsLike], n_points: int = DEFAULT_N_POINTS,
                     origin: float = 0.0) -> ContourSequence:
    """
    Sample N points at equal arc-length spacing along the closed polygon.

    Parameters
    ----------
    polygon : Polygon
        Counterclockwise polygon to sample.
    n_points : int
        Number of points N; must be a power of two (>= 4).
    origin : float
        Arc-length offset of the first sample, measured from vertex 0.

    Returns
    -------
    contour : ContourSequence

    Raises
    ------
    ConfigError
        If N is not a power of two.
    ContourError
        If the polygon has zero perimeter.
    """
    try:
        check_power_of_two("N", n_points, minimum=4)
    except ConfigError:
        _LOG.error("Invalid number of contour points: %s", n_points)
        raise
    verts = points_of(polygon)
    closed = np.vstack([verts, verts[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = float(arc[-1])
    if total <= 0:
        raise ContourError("Polygon has zero perimeter")
    step = total / n_points
    # Offsets that are whole multiples of the spacing are handled with integer index
    # arithmetic, so that shifting the origin by k steps rolls the samples exactly.
    shift = (origin % total) / step
    whole = int(np.floor(shift + 1e-9))
    frac = shift - whole
    if abs(frac) < 1e-9:
        frac = 0.0
    idx = (np.arange(n_points) + whole) % n_points
    targets = (idx + frac) * step
    xs = np.interp(targets, arc, closed[:, 0])
    ys = np.interp(targets, arc, closed[:, 1])
    return ContourSequence(np.column_stack([xs, ys]))


def roll_contour(contour: ContourLike, k: int, o: int) -> npt.NDArray[np.float64]:
    """
    Reorder a point list by origin k and direction o.

    Point i of the result is point (i * o + k) mod N of the input, the point-level
    counterpart of distance-matrix reindexing.

    Returns
    -------
    points : np.ndarray
        The reordered (N, 2) point array (clockwise when o = -1).
    """
    if o not in (-1, 1):
        raise ConfigError(f"Direction must be -1 or +1, got {o}")
    pts = points_of(contour)
    n = len(pts)
    return pts[(np.arange(n) * o + k) % n].copy()


def contour_from_mask(mask: BinaryMask, n_points: int = DEFAULT_N_POINTS, *, name: str = "") -> ContourSequence:
    """
    Full mask to contour pipeline: largest component, marching squares,
    counterclockwise orientation, and uniform resampling.
    """
    polygon = ensure_ccw(extract_outline(mask.largest_component(name)))
    return resample_uniform(polygon, n_points)
