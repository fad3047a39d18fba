#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Convolution building blocks shared by the encoder and decoder stacks.
"""

import torch
from torch import nn

# Slope of the leaky rectifier used after every hidden layer.
LEAKY_SLOPE = 0.01


def conv3x3(in_channels: int, out_channels: int, *, stride: int = 1, padding_mode: str = "circular") -> nn.Conv2d:
    """
    3x3 convolution with padding 1; "circular" pads by periodic tiling.
    """
    return nn.Conv2d(in_channels, out_channels, kernel_size=3, stride=stride, padding=1, padding_mode=padding_mode)


class EncoderStage(nn.Module):
    """
    [conv 3x3, leaky ReLU, conv 3x3 stride 2, leaky ReLU], halving the grid.
    """

    def __init__(self, in_channels: int, out_channels: int, *, padding_mode: str, residual: bool = False):
        super().__init__()
        self.conv = conv3x3(in_channels, out_channels, padding_mode=padding_mode)
        self.down = conv3x3(out_channels, out_channels, stride=2, padding_mode=padding_mode)
        self.act = nn.LeakyReLU(LEAKY_SLOPE)
        self.shortcut = nn.Conv2d(in_channels, out_channels, kernel_size=1, stride=2) if residual else None

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = self.down(self.act(self.conv(x)))
        if self.shortcut is not None:
            out = out + self.shortcut(x)
        return self.act(out)


class DecoderStage(nn.Module):
    """
    [nearest 2x upsample, conv 3x3, leaky ReLU], doubling the grid.
    """

    def __init__(self, in_channels: int, out_channels: int, *, padding_mode: str, residual: bool = False):
        super().__init__()
        self.upsample = nn.Upsample(scale_factor=2, mode="nearest")
        self.conv = conv3x3(in_channels, out_channels, padding_mode=padding_mode)
        self.act = nn.LeakyReLU(LEAKY_SLOPE)
        self.shortcut = nn.Conv2d(in_channels, out_channels, kernel_size=1) if residual else None

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        up = self.upsample(x)
        out = self.conv(up)
        if self.shortcut is not None:
            out = out + self.shortcut(up)
        return self.act(out)


def reset_parameters(module: nn.Module) -> None:
    """
    Fan-in scaled uniform weights and zero biases for every conv and dense layer.
    Draws from the global torch generator; callers seed it.
    """
    for layer in module.modules():
        if isinstance(layer, (nn.Conv2d, nn.Linear)):
            nn.init.kaiming_uniform_(layer.weight, a=LEAKY_SLOPE, mode="fan_in", nonlinearity="leaky_relu")
            if layer.bias is not None:
                nn.init.zeros_(layer.bias)
