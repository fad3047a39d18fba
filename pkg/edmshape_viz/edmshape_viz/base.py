#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Base functions for plotting training curves and outlines.
"""

import logging
import os
import re
import warnings
from importlib.metadata import version
from typing import List, Optional

import numpy as np
import numpy.typing as npt
import pandas
import seaborn as sns
from matplotlib import pyplot as plt

_LOG = logging.getLogger(__name__)

_SEABORN_VERS = version('seaborn')

LOSS_COLUMNS = ["rec", "kl", "diag", "nonneg", "sym", "total"]


def ignore_plotter_warnings() -> None:
    """
    Suppress some annoying warnings from third-party data visualization packages by
    adding them to the warnings filter.
    """
    warnings.filterwarnings("ignore", category=FutureWarning)
    if _SEABORN_VERS <= '0.13.1':
        warnings.filterwarnings("ignore", category=DeprecationWarning, module="seaborn",    # but actually comes from pandas
                                message="is_categorical_dtype is deprecated and will be removed in a future version.")


def _save_or_show(fig: plt.Figure, path: Optional[str], show: bool) -> None:
    if path:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        fig.savefig(path, bbox_inches="tight")
        _LOG.info("Saved figure: %s", path)
    if show:
        plt.show()
    plt.close(fig)


def plot_training_history(history_df: pandas.DataFrame, *, path: Optional[str] = None,
                          yscale: str = "log", show: bool = False) -> None:
    """
    Line plot of every loss term over the epochs.

    Parameters
    ----------
    history_df : pandas.DataFrame
        Training log with columns epoch and (a subset of) rec, kl, diag, nonneg, sym, total.
    path : Optional[str]
        Where to save the figure.
    yscale : str
        Matplotlib y axis scale.
    show : bool
        Whether to call `plt.show()`.
    """
    if "epoch" not in history_df.columns:
        raise ValueError("Training log has no epoch column")
    terms: List[str] = [c for c in LOSS_COLUMNS if c in history_df.columns]
    long_df = history_df.melt(id_vars="epoch", value_vars=terms, var_name="term", value_name="loss")
    if yscale == "log":
        # Zero terms (e.g. disabled penalties) cannot be drawn on a log axis.
        long_df = long_df[long_df["loss"] > 0]
    (fig, axis) = plt.subplots(figsize=(7, 4))
    sns.lineplot(data=long_df, x="epoch", y="loss", hue="term", marker="o", ax=axis)
    axis.set_yscale(yscale)
    axis.set_title("Training loss")
    axis.grid(True, which="both", alpha=0.3)
    _save_or_show(fig, path, show)


def svg_path(directory: str, name: str) -> str:
    """
    File path for an outline named `name`, with path separators and other
    unsafe characters replaced.
    """
    return os.path.join(directory, re.sub(r"[^A-Za-z0-9_.-]+", "_", name) + ".svg")


def outline_svg(points: npt.ArrayLike, path: str, *, fill: bool = True) -> str:
    """
    Draw a closed outline with equal axes into an SVG file.

    Parameters
    ----------
    points : array-like
        (N, 2) outline points.
    path : str
        Output file; the format is always SVG.
    fill : bool
        Fill the enclosed region as well as stroking the outline.

    Returns
    -------
    path : str
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise ValueError(f"Expected an (N, 2) outline with N >= 3, got shape {pts.shape}")
    closed = np.vstack([pts, pts[:1]])
    (fig, axis) = plt.subplots(figsize=(3, 3))
    if fill:
        axis.fill(closed[:, 0], closed[:, 1], alpha=0.25)
    axis.plot(closed[:, 0], closed[:, 1], linewidth=1.5)
    axis.plot(pts[:1, 0], pts[:1, 1], marker="o", markersize=3)
    axis.set_aspect("equal")
    axis.axis("off")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
    _LOG.debug("Saved outline: %s", path)
    return path
