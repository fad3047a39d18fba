#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Version number for the edmshape_core package.
"""

# NOTE: This should be managed by bumpversion.
_VERSION = '0.1.0'
