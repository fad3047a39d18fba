#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Tests for the SEDM matrix container.
"""

import os
import struct

import numpy as np
import pytest

from edmshape_core.distmat import DistanceMatrix, edm, normalize
from edmshape_core.exceptions import DecodeError, PreconditionError

from edmshape_bench.datasets import make_synthetic_shapes
from edmshape_bench.storage import MatrixSet, read_sedm, write_sedm
from edmshape_bench.storage.sedm import MAGIC
from edmshape_bench.tests import SEED

# pylint: disable=redefined-outer-name


@pytest.fixture
def matrix_set() -> MatrixSet:
    """
    Test fixture with six normalized 16 x 16 matrices.
    """
    (manifest, contours) = make_synthetic_shapes(2, seed=SEED, n_points=16)
    return MatrixSet(manifest.object_ids, [normalize(edm(c)) for c in contours])


def test_sedm_file_layout(matrix_set: MatrixSet, tmp_path: str) -> None:
    """
    16 byte header, then one record of id, norm and N x N f32 entries per matrix.
    """
    path = os.path.join(tmp_path, "m.sedm")
    write_sedm(path, matrix_set)
    with open(path, "rb") as fh:
        blob = fh.read()
    assert struct.unpack_from("<4sIII", blob) == (MAGIC, 1, 16, 6)
    assert len(blob) == 16 + 6 * (64 + 4 + 4 * 16 * 16)


def test_sedm_read_back(matrix_set: MatrixSet, tmp_path: str) -> None:
    """
    Ids and order survive; entries and norms match to f32 precision and stay normalized.
    """
    path = os.path.join(tmp_path, "m.sedm")
    write_sedm(path, matrix_set)
    loaded = read_sedm(path)
    assert loaded.object_ids == matrix_set.object_ids
    assert loaded.n == 16
    np.testing.assert_allclose(loaded.norms, matrix_set.norms, rtol=1e-6)
    for (a, b) in zip(loaded.matrices, matrix_set.matrices):
        assert a.is_normalized
        np.testing.assert_allclose(a.entries, b.entries, atol=1e-6)


def test_sedm_select(matrix_set: MatrixSet) -> None:
    """
    Selection follows the requested order and rejects unknown ids.
    """
    ids = matrix_set.object_ids[::-1][:3]
    chosen = matrix_set.select(ids)
    assert chosen.object_ids == ids
    assert chosen.matrices[0] is matrix_set.matrices[-1]
    with pytest.raises(PreconditionError):
        matrix_set.select(["nope"])


def test_sedm_write_preconditions(matrix_set: MatrixSet, tmp_path: str) -> None:
    """
    Unnormalized matrices and overlong ids are refused.
    """
    path = os.path.join(tmp_path, "m.sedm")
    raw = DistanceMatrix(matrix_set.matrices[0].entries * 3.0)
    with pytest.raises(PreconditionError):
        write_sedm(path, MatrixSet(["a"], [raw]))
    with pytest.raises(PreconditionError):
        write_sedm(path, MatrixSet(["x" * 65], matrix_set.matrices[:1]))


@pytest.mark.parametrize("damage", ["magic", "version", "truncated", "header"])
def test_sedm_damaged(matrix_set: MatrixSet, tmp_path: str, damage: str) -> None:
    """
    Damaged files raise DecodeError naming the file.
    """
    path = os.path.join(tmp_path, "m.sedm")
    write_sedm(path, matrix_set)
    with open(path, "rb") as fh:
        blob = bytearray(fh.read())
    if damage == "magic":
        blob[:4] = b"XEDM"
    elif damage == "version":
        blob[4:8] = struct.pack("<I", 2)
    elif damage == "truncated":
        blob = blob[:-10]
    else:
        blob = blob[:10]
    with open(path, "wb") as fh:
        fh.write(bytes(blob))
    with pytest.raises(DecodeError) as ex_info:
        read_sedm(path)
    assert ex_info.value.path == path


def test_sedm_missing_file(tmp_path: str) -> None:
    """
    A missing file is a decode error, not an OSError.
    """
    with pytest.raises(DecodeError):
        read_sedm(os.path.join(tmp_path, "missing.sedm"))
