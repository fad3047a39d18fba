#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
edmshape_bench.config: JSON schemas and example configs of the `edmshape` command line.
"""
