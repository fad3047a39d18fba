#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Version number for the edmshape_viz package.
"""

# NOTE: This should be managed by bumpversion.
_VERSION = '0.1.0'
