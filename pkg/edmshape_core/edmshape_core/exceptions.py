#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Exception hierarchy for the edmshape packages.

Every error carries a distinct ``exit_code`` so the command line launcher can map
it to a process exit status without a lookup table of its own.
"""


class EdmShapeError(Exception):
    """
    Base class for all errors raised by edmshape_core and edmshape_bench.
    """

    exit_code: int = 1


class NoData(EdmShapeError, ValueError):
    """No input objects were found (e.g., an empty dataset directory)."""

    exit_code = 10


class DecodeError(EdmShapeError, ValueError):
    """An input image could not be decoded."""

    exit_code = 11

    def __init__(self, path: str, reason: str = ""):
        self.path = path
        super().__init__(f"Cannot decode {path}" + (f": {reason}" if reason else ""))


class StratificationError(EdmShapeError, ValueError):
    """A class has too few members for the requested stratified split."""

    exit_code = 12


class InvalidTransform(EdmShapeError, ValueError):
    """A similarity transform has a non-positive scale factor."""

    exit_code = 13


class ContourError(EdmShapeError, ValueError):
    """No usable closed outline could be extracted or the polygon is degenerate."""

    exit_code = 14


class ConfigError(EdmShapeError, ValueError):
    """Invalid configuration values or shape arithmetic."""

    exit_code = 15


class DegenerateShape(EdmShapeError, ValueError):
    """The shape has no extent (all-zero distance matrix, degenerate first harmonic, ...)."""

    exit_code = 16


class PreconditionError(EdmShapeError, ValueError):
    """An input violates a documented precondition (e.g., unsanitized matrix)."""

    exit_code = 17


class ShapeError(EdmShapeError, ValueError):
    """Array or tensor dimensions do not match."""

    exit_code = 18


class CheckpointError(EdmShapeError):
    """A checkpoint file is corrupt, truncated, or of an unsupported version."""

    exit_code = 19


class TrainingDiverged(EdmShapeError, ArithmeticError):
    """Non-finite gradients or losses were observed during training."""

    exit_code = 20


class LabelError(EdmShapeError, ValueError):
    """A label is outside the known class set."""

    exit_code = 21
