#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Vanilla VAE over N x N mask images, the comparison model for the distance-matrix VAE.
"""

from dataclasses import replace

from edmshape_core.models.config import ModelConfig
from edmshape_core.models.shape_vae import ShapeVAE


class MaskVAE(ShapeVAE):
    """
    Same stage layout and latent size as ShapeVAE, but zero padded and without
    the mirror-sum: the input is a rasterized mask, not a distance matrix.
    """

    input_kind = "mask"

    def __init__(self, config: ModelConfig):
        super().__init__(replace(config, padding_mode="zeros", mirror_sum=False))
