#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
edmshape_viz renders the artifacts of the edmshape pipeline for visual inspection:
decoded outlines as SVG files and training loss curves.
"""

from enum import Enum
from typing import Dict, Optional

import numpy.typing as npt
import pandas

from edmshape_viz import base


class HistoryScale(Enum):
    """
    Y axis scale of the training curve plots.
    """

    LOG = "log"
    LINEAR = "linear"
    AUTO = LOG      # loss terms span several orders of magnitude


def plot_history(history_df: pandas.DataFrame, path: Optional[str] = None, *,
                 scale: HistoryScale = HistoryScale.AUTO, show: bool = False) -> None:
    """
    Plot the per-epoch loss terms of a training log.

    Parameters
    ----------
    history_df : pandas.DataFrame
        Training log with an epoch column and one column per loss term.
    path : Optional[str]
        Save the figure there (the format follows the extension, e.g. .svg).
    scale : HistoryScale
        Y axis scale.
    show : bool
        Display the figure interactively.
    """
    base.ignore_plotter_warnings()
    base.plot_training_history(history_df, path=path, yscale=scale.value, show=show)


def save_outlines(outlines: Dict[str, npt.ArrayLike], directory: str) -> Dict[str, str]:
    """
    Write one SVG file per named outline; returns the path of each.
    """
    return {name: base.outline_svg(points, base.svg_path(directory, name)) for (name, points) in outlines.items()}
