#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Unit tests for edmshape_viz.
"""

import seaborn  # pylint: disable=unused-import     # (used by patch)   # noqa: unused

SEED = 42

BASE_MATPLOTLIB_SHOW_PATCH = "edmshape_viz.base.plt.show"
