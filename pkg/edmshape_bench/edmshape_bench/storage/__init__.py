#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
File formats of the pipeline artifacts: SEDM matrix containers and CSV/JSON tables.
"""

from edmshape_bench.storage.sedm import MatrixSet, read_sedm, write_sedm
from edmshape_bench.storage.tables import (
    read_contours,
    read_csv,
    read_features,
    write_contours,
    write_csv,
    write_cv_report,
    write_features,
    write_json,
)

__all__ = [
    'MatrixSet',
    'read_contours',
    'read_csv',
    'read_features',
    'read_sedm',
    'write_contours',
    'write_csv',
    'write_cv_report',
    'write_features',
    'write_json',
    'write_sedm',
]
