#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Variational autoencoder over contour distance matrices.

The encoder is a stack of circularly padded convolutions ending in global average
pooling. It is applied to the input matrix and to its horizontally and vertically
mirrored copy, and the two pooled feature vectors are summed, which makes the
latent code exactly invariant to reversing the contour direction. The decoder
mirrors the stack with nearest-neighbor upsampling.
"""

import logging
from typing import Optional, Tuple

import torch
from torch import nn

from edmshape_core.exceptions import ShapeError
from edmshape_core.models.config import ModelConfig
from edmshape_core.models.layers import LEAKY_SLOPE, DecoderStage, EncoderStage, conv3x3, reset_parameters

_LOG = logging.getLogger(__name__)

# Clamp range of the posterior log-variance.
LOGVAR_MIN = -30.0
LOGVAR_MAX = 20.0


class ShapeVAE(nn.Module):
    """
    Indexation-invariant distance-matrix VAE.
    """

    input_kind = "distmat"

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        channels = config.channels
        pad = config.padding_mode
        self.stem = conv3x3(1, channels[0], padding_mode=pad)
        self.act = nn.LeakyReLU(LEAKY_SLOPE)
        self.encoder_stages = nn.ModuleList(
            EncoderStage(channels[i], channels[i + 1], padding_mode=pad, residual=config.residual)
            for i in range(config.blocks)
        )
        self.mu_head = nn.Linear(channels[-1], config.latent_dim)
        self.logvar_head = nn.Linear(channels[-1], config.latent_dim)
        self.decoder_input = nn.Linear(config.latent_dim, channels[-1] * config.bottleneck_size ** 2)
        self.decoder_stages = nn.ModuleList(
            DecoderStage(channels[i + 1], channels[i], padding_mode=pad, residual=config.residual)
            for i in reversed(range(config.blocks))
        )
        self.output = conv3x3(channels[0], 1, padding_mode=pad)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.config})"

    def _as_batch(self, x: torch.Tensor) -> torch.Tensor:
        """
        Accept (N, N), (B, N, N) or (B, 1, N, N) input and return (B, 1, N, N).
        """
        if x.ndim == 2:
            x = x[None, None]
        elif x.ndim == 3:
            x = x[:, None]
        n = self.config.matrix_size
        if x.ndim != 4 or x.shape[1] != 1 or tuple(x.shape[-2:]) != (n, n):
            raise ShapeError(f"Expected {n}x{n} input matrices, got tensor of shape {tuple(x.shape)}")
        return x

    def backbone(self, x: torch.Tensor) -> torch.Tensor:
        """
        Convolution stack followed by global average pooling: (B, 1, N, N) -> (B, C).
        """
        out = self.act(self.stem(x))
        for stage in self.encoder_stages:
            out = stage(out)
        return out.mean(dim=(-2, -1))

    def features(self, x: torch.Tensor) -> torch.Tensor:
        """
        Pooled features, summed over the input and its mirrored copy if enabled.
        """
        x = self._as_batch(x)
        feats = self.backbone(x)
        if self.config.mirror_sum:
            feats = feats + self.backbone(torch.flip(x, dims=(-2, -1)))
        return feats

    def encode(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Posterior parameters (mu, logvar), each (B, latent_dim).

        Raises
        ------
        ShapeError
            If the input side length differs from the configured matrix size.
        """
        feats = self.features(x)
        logvar = torch.clamp(self.logvar_head(feats), LOGVAR_MIN, LOGVAR_MAX)
        return (self.mu_head(feats), logvar)

    def reparameterize(self, mu: torch.Tensor, logvar: torch.Tensor,
                       generator: Optional[torch.Generator] = None) -> torch.Tensor:
        """
        z = mu + exp(logvar / 2) * eps with standard normal eps drawn from `generator`.
        In eval mode eps = 0 and z = mu.
        """
        if not self.training:
            return mu
        logvar = torch.clamp(logvar, LOGVAR_MIN, LOGVAR_MAX)
        eps = torch.randn(mu.shape, generator=generator, dtype=mu.dtype, device=mu.device)
        return mu + torch.exp(0.5 * logvar) * eps

    def decode(self, z: torch.Tensor) -> torch.Tensor:
        """
        Map latent codes (B, latent_dim) to raw (B, N, N) matrices.
        """
        if z.ndim == 1:
            z = z[None]
        if z.shape[-1] != self.config.latent_dim:
            raise ShapeError(f"Expected latent codes of size {self.config.latent_dim}, got {tuple(z.shape)}")
        side = self.config.bottleneck_size
        out = self.act(self.decoder_input(z)).view(z.shape[0], self.config.channels[-1], side, side)
        for stage in self.decoder_stages:
            out = stage(out)
        return self.output(out)[:, 0]

    def forward(self, x: torch.Tensor,
                generator: Optional[torch.Generator] = None) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        (mu, logvar) = self.encode(x)
        z = self.reparameterize(mu, logvar, generator)
        return (self.decode(z), mu, logvar)


def build_model(model_class: type, config: ModelConfig) -> nn.Module:
    """
    Instantiate a model and initialize its weights deterministically from config.seed
    without disturbing the global torch random state.
    """
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(config.seed)
        model = model_class(config)
        reset_parameters(model)
    _LOG.debug("Initialized %s with %d parameters", model,
               sum(p.numel() for p in model.parameters()))
    return model
