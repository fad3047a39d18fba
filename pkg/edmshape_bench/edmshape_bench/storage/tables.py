#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
CSV and JSON artifacts exchanged between pipeline stages.
"""

import json
import logging
import os
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import pandas as pd

from edmshape_core.contour import ContourLike, points_of
from edmshape_core.evaluation import CvReport, FeatureTable
from edmshape_core.exceptions import DecodeError, ShapeError

_LOG = logging.getLogger(__name__)

CONTOUR_COLUMNS = ["object_id", "point_index", "x", "y"]


def _ensure_parent(path: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)


def write_csv(frame: pd.DataFrame, path: str) -> None:
    """Write a table without the pandas index."""
    _ensure_parent(path)
    frame.to_csv(path, index=False)
    _LOG.info("Wrote %d rows to %s", len(frame), path)


def read_csv(path: str, required: Sequence[str] = ()) -> pd.DataFrame:
    """
    Read a table, checking that the required columns are present.

    Raises
    ------
    DecodeError
        If the file cannot be read or parsed, or lacks a required column.
    """
    try:
        frame = pd.read_csv(path, keep_default_na=False, dtype={"object_id": str, "label": str})
    except (OSError, ValueError, pd.errors.ParserError) as ex:
        raise DecodeError(path, str(ex)) from ex
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise DecodeError(path, f"missing columns {missing}")
    return frame


def write_json(values: Dict[str, Any], path: str) -> None:
    """Write an indented JSON document."""
    _ensure_parent(path)
    with open(path, mode="w", encoding="utf-8") as fh:
        json.dump(values, fh, indent=2, sort_keys=False)
        fh.write("\n")
    _LOG.info("Wrote %s", path)


def contours_to_frame(object_ids: Sequence[str], contours: Sequence[ContourLike]) -> pd.DataFrame:
    """
    Contour CSV table: one row per point, columns object_id, point_index, x, y.
    """
    if len(object_ids) != len(contours):
        raise ShapeError(f"Got {len(object_ids)} ids for {len(contours)} contours")
    parts = []
    for (oid, contour) in zip(object_ids, contours):
        pts = points_of(contour)
        parts.append(pd.DataFrame({"object_id": oid, "point_index": np.arange(len(pts)),
                                   "x": pts[:, 0], "y": pts[:, 1]}))
    if not parts:
        return pd.DataFrame(columns=CONTOUR_COLUMNS)
    return pd.concat(parts, ignore_index=True)


def contours_from_frame(frame: pd.DataFrame) -> Tuple[List[str], List[npt.NDArray[np.float64]]]:
    """
    Inverse of `contours_to_frame`: object ids in first-appearance order and their
    (N, 2) point arrays sorted by point index.
    """
    missing = [c for c in CONTOUR_COLUMNS if c not in frame.columns]
    if missing:
        raise DecodeError("contour table", f"missing columns {missing}")
    ids: List[str] = []
    points: List[npt.NDArray[np.float64]] = []
    for (oid, group) in frame.groupby("object_id", sort=False):
        ordered = group.sort_values("point_index")
        ids.append(str(oid))
        points.append(ordered[["x", "y"]].to_numpy(dtype=np.float64))
    return (ids, points)


def write_contours(path: str, object_ids: Sequence[str], contours: Sequence[ContourLike]) -> None:
    """Write a contour CSV file."""
    write_csv(contours_to_frame(object_ids, contours), path)


def read_contours(path: str) -> Tuple[List[str], List[npt.NDArray[np.float64]]]:
    """Read a contour CSV file."""
    return contours_from_frame(read_csv(path, CONTOUR_COLUMNS))


def write_features(path: str, table: FeatureTable) -> None:
    """Write a feature (or latent) CSV file: object_id, label, then the features."""
    write_csv(table.to_frame(), path)


def read_features(path: str) -> FeatureTable:
    """Read a feature (or latent) CSV file."""
    return FeatureTable.from_frame(read_csv(path, ["object_id", "label"]))


def write_cv_report(report: CvReport, json_path: str, csv_path: str) -> None:
    """Write a cross-validation report as JSON and as CSV."""
    write_json(report.to_dict(), json_path)
    write_csv(report.to_frame(), csv_path)
