#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Tests for edmshape_core.baselines.
"""
