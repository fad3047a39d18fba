#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Internal helper functions for edmshape_core package.
"""

import logging
from contextlib import contextmanager
from typing import Iterator, Sequence, Union

import numpy as np
import numpy.typing as npt
import torch

from edmshape_core.exceptions import ConfigError, ShapeError

_LOG = logging.getLogger(__name__)

PointsLike = Union[npt.ArrayLike, Sequence[Sequence[float]]]


def is_power_of_two(value: int) -> bool:
    """
    Check whether the given integer is a positive power of two.
    """
    return value > 0 and (value & (value - 1)) == 0


def check_power_of_two(name: str, value: int, minimum: int = 1) -> int:
    """
    Validate a power-of-two sized parameter.

    Parameters
    ----------
    name : str
        Name of the parameter (for the error message).
    value : int
        Value to validate.
    minimum : int
        Smallest admissible value.

    Returns
    -------
    value : int
        The validated value.

    Raises
    ------
    ConfigError
        If the value is not a power of two or is below the minimum.
    """
    if not isinstance(value, (int, np.integer)) or not is_power_of_two(int(value)) or value < minimum:
        raise ConfigError(f"{name} must be a power of two >= {minimum}, got {value}")
    return int(value)


def as_points(points: PointsLike) -> npt.NDArray[np.float64]:
    """
    Convert a sequence of 2D points to a contiguous (N, 2) float64 array.
    """
    arr = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ShapeError(f"Expected an (N, 2) point array, got shape {arr.shape}")
    return arr


def seeded_rng(*seeds: int) -> np.random.Generator:
    """
    Create a numpy Generator from a tuple of integer seeds.

    Deriving streams from (seed, epoch, batch, ...) keeps every random draw
    reproducible independently of how many draws preceded it.
    """
    return np.random.default_rng([int(s) for s in seeds])


def torch_generator(*seeds: int) -> torch.Generator:
    """
    Create a torch CPU Generator deterministically derived from integer seeds.
    """
    gen = torch.Generator(device="cpu")
    gen.manual_seed(int(seeded_rng(*seeds).integers(0, 2**62)))
    return gen


def set_deterministic(enabled: bool = True) -> None:
    """
    Switch torch into (or out of) the single-threaded deterministic mode.
    """
    torch.use_deterministic_algorithms(enabled)
    if enabled:
        torch.set_num_threads(1)
    _LOG.debug("Deterministic mode: %s", enabled)


@contextmanager
def deterministic_mode(enabled: bool = True) -> Iterator[None]:
    """
    Run the enclosed block in the single-threaded deterministic mode (if enabled)
    and restore the previous torch settings on exit.
    """
    previous = (torch.are_deterministic_algorithms_enabled(), torch.get_num_threads())
    if enabled:
        set_deterministic(True)
    try:
        yield
    finally:
        if enabled:
            torch.use_deterministic_algorithms(previous[0])
            torch.set_num_threads(previous[1])
            _LOG.debug("Deterministic mode restored to: %s", previous[0])
