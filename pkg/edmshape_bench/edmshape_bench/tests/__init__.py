#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Common functions for edmshape_bench tests.
"""

import os

import numpy as np
import numpy.typing as npt
from PIL import Image

# A common seed to use to avoid tracking down race conditions and intermingling
# issues of seeds across tests that run in non-deterministic parallel orders.
SEED = 42


def disc(size: int, radius: float, center: float = 0.0) -> npt.NDArray[np.uint8]:
    """
    8-bit grayscale image of a filled disc (foreground 255), centered unless an
    offset is given.
    """
    (rows, cols) = np.mgrid[0:size, 0:size]
    mid = (size - 1) / 2.0 + center
    return np.where((rows - mid) ** 2 + (cols - mid) ** 2 <= radius ** 2, 255, 0).astype(np.uint8)


def write_png(path: str, pixels: npt.NDArray[np.uint8]) -> str:
    """Write a grayscale PNG, creating parent directories."""
    os.makedirs(os.path.dirname(path), exist_ok=True)
    Image.fromarray(pixels).save(path)
    return path
