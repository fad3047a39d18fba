#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Tests for the pipeline artifact file formats.
"""
