#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Classical shape descriptors used as comparison baselines.
"""

from edmshape_core.baselines.distmat_features import distmat_feature_names, distmat_features
from edmshape_core.baselines.efd import (
    DEFAULT_ORDER,
    EfdCoefficients,
    efd_coeffs,
    efd_feature_names,
    efd_feature_vector,
    efd_normalize,
    efd_reconstruct,
)
from edmshape_core.baselines.region_props import REGION_FEATURE_NAMES, RegionFeatures, region_props

__all__ = [
    'DEFAULT_ORDER',
    'EfdCoefficients',
    'REGION_FEATURE_NAMES',
    'RegionFeatures',
    'distmat_feature_names',
    'distmat_features',
    'efd_coeffs',
    'efd_feature_names',
    'efd_feature_vector',
    'efd_normalize',
    'efd_reconstruct',
    'region_props',
]
