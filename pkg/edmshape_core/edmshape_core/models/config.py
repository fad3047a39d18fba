#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Architecture configuration of the distance-matrix autoencoders.
"""

from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List

from edmshape_core.exceptions import ConfigError
from edmshape_core.util import check_power_of_two

PADDING_MODES = ("circular", "zeros")


@dataclass(frozen=True)
class ModelConfig:
    """
    Shape of the encoder/decoder stacks.

    Attributes
    ----------
    matrix_size : int
        Side length N of the input matrices (power of two).
    latent_dim : int
        Size of the latent code.
    blocks : int
        Number of stride-2 stages; the bottleneck grid is N / 2**blocks on a side.
    base_channels : int
        Channels after the stem convolution, doubled by every stage.
    seed : int
        Seed of the weight initialization.
    padding_mode : {"circular", "zeros"}
        Convolution padding. Circular padding makes stride-1 layers equivariant
        to cyclic shifts of the input matrix.
    residual : bool
        Add 1x1 projection shortcuts around every stage.
    mirror_sum : bool
        Sum backbone features of the input and its doubly mirrored copy.
    """

    matrix_size: int = 64
    latent_dim: int = 128
    blocks: int = 4
    base_channels: int = 16
    seed: int = 0
    padding_mode: str = "circular"
    residual: bool = False
    mirror_sum: bool = True

    def __post_init__(self) -> None:
        check_power_of_two("matrix_size", self.matrix_size, minimum=4)
        if self.blocks < 1:
            raise ConfigError(f"blocks must be >= 1, got {self.blocks}")
        if self.matrix_size >> self.blocks < 2:
            raise ConfigError(f"matrix_size={self.matrix_size} is too small for {self.blocks} stride-2 "
                              f"stages (bottleneck would be smaller than 2x2)")
        if self.latent_dim < 2:
            raise ConfigError(f"latent_dim must be >= 2, got {self.latent_dim}")
        if self.base_channels < 1:
            raise ConfigError(f"base_channels must be >= 1, got {self.base_channels}")
        if self.padding_mode not in PADDING_MODES:
            raise ConfigError(f"padding_mode must be one of {PADDING_MODES}, got {self.padding_mode!r}")

    @property
    def bottleneck_size(self) -> int:
        """Spatial side of the deepest feature grid."""
        return self.matrix_size >> self.blocks

    @property
    def channels(self) -> List[int]:
        """Channel counts from the stem through the deepest stage."""
        return [self.base_channels * 2 ** i for i in range(self.blocks + 1)]

    def to_dict(self) -> Dict[str, Any]:
        """JSON-friendly representation."""
        return asdict(self)

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "ModelConfig":
        """
        Build a config from a dictionary, rejecting unknown keys.
        """
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"Unknown model config keys: {sorted(unknown)}")
        return cls(**values)
