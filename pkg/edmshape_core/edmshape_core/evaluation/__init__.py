#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Descriptor evaluation: classification protocol and latent-space probes.
"""

from edmshape_core.evaluation.classifier import (
    METRIC_NAMES,
    CvReport,
    FeatureTable,
    FittedClassifier,
    append_size,
    cross_validate,
    fit_logreg,
    metrics,
)
from edmshape_core.evaluation.probes import (
    DriftStats,
    InvarianceReport,
    class_mean_decode,
    invariance_report,
    reconstruction_error,
    sample_latent,
)

__all__ = [
    'METRIC_NAMES',
    'CvReport',
    'DriftStats',
    'FeatureTable',
    'FittedClassifier',
    'InvarianceReport',
    'append_size',
    'class_mean_decode',
    'cross_validate',
    'fit_logreg',
    'invariance_report',
    'metrics',
    'reconstruction_error',
    'sample_latent',
]
