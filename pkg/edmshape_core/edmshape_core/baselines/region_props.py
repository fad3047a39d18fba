#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Region-property shape features of binary masks (scikit-image regionprops).
"""

from dataclasses import dataclass
from typing import Dict, Tuple, Union

import numpy as np
import numpy.typing as npt
from skimage import measure

from edmshape_core.masks import BinaryMask

# Ordered names of the region feature vector: 9 scalars, 7 Hu moments, 2 bounding box extents.
REGION_FEATURE_NAMES: Tuple[str, ...] = (
    "area",
    "convex_area",
    "perimeter",
    "axis_major_length",
    "axis_minor_length",
    "extent",
    "eccentricity",
    "solidity",
    "feret_diameter_max",
    *(f"hu_moment_{i}" for i in range(7)),
    "bbox_width",
    "bbox_height",
)


@dataclass(frozen=True)
class RegionFeatures:
    """
    Named region features of one mask, in REGION_FEATURE_NAMES order.
    """

    values: Dict[str, float]

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def as_vector(self) -> npt.NDArray[np.float64]:
        """The 18 values as a vector."""
        return np.array([self.values[name] for name in REGION_FEATURE_NAMES], dtype=np.float64)


def region_props(mask: Union[BinaryMask, npt.ArrayLike], name: str = "") -> RegionFeatures:
    """
    Compute the region feature vector of the largest foreground component.

    Conventions are those of scikit-image: the perimeter is the weighted
    boundary-crossing estimate, moments are taken about pixel centers, Hu moments
    come from normalized central moments, and the maximum Feret diameter is
    measured on the convex hull.

    Raises
    ------
    ContourError
        If the mask has no foreground pixel.
    """
    if not isinstance(mask, BinaryMask):
        mask = BinaryMask.from_array(mask)
    region = mask.largest_component(name)
    props = measure.regionprops(region.pixels.astype(np.uint8))[0]
    (min_row, min_col, max_row, max_col) = props.bbox
    values = {
        "area": float(props.area),
        "convex_area": float(props.area_convex),
        "perimeter": float(props.perimeter),
        "axis_major_length": float(props.axis_major_length),
        "axis_minor_length": float(props.axis_minor_length),
        "extent": float(props.extent),
        "eccentricity": float(props.eccentricity),
        "solidity": float(props.solidity),
        "feret_diameter_max": float(props.feret_diameter_max),
    }
    for (i, hu) in enumerate(props.moments_hu):
        values[f"hu_moment_{i}"] = float(hu)
    values["bbox_width"] = float(max_col - min_col)
    values["bbox_height"] = float(max_row - min_row)
    return RegionFeatures(values)
