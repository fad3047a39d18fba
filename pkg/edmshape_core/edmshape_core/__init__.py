#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
edmshape_core: contour distance-matrix shape descriptors, the indexation-invariant
distance-matrix VAE, outline reconstruction, and evaluation tools.
"""
