#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
edmshape_bench: mask dataset ingestion, artifact file formats, and the `edmshape`
command line that chains the distance-matrix shape pipeline stage by stage.
"""
