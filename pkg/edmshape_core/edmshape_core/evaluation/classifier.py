#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Downstream classification of shape descriptors: standardized multinomial logistic
regression, stratified k-fold cross-validation, and macro-averaged metrics.
"""

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import pandas as pd
from joblib import Parallel, delayed
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression
from sklearn.metrics import accuracy_score, f1_score, log_loss, precision_score, recall_score
from sklearn.model_selection import StratifiedKFold
from sklearn.pipeline import Pipeline
from sklearn.preprocessing import StandardScaler

from edmshape_core.exceptions import ConfigError, LabelError, PreconditionError, ShapeError, StratificationError

_LOG = logging.getLogger(__name__)

METRIC_NAMES = ("f1", "accuracy", "precision", "recall", "log_loss")

# Probabilities are clipped to [PROBA_EPS, 1 - PROBA_EPS] before taking logs.
PROBA_EPS = 1e-15

SIZE_COLUMN = "size"


@dataclass(frozen=True)
class FeatureTable:
    """
    Per-object descriptor vectors with integer class labels.

    Attributes
    ----------
    rows : np.ndarray
        (M, d) feature matrix.
    labels : np.ndarray
        (M,) integer class indices.
    feature_names : Tuple[str, ...]
        Column names, d of them.
    object_ids : Tuple[str, ...]
        Optional object identifiers (empty or M of them).
    class_names : Tuple[str, ...]
        Optional label names indexed by class index.
    size_column : bool
        True once `append_size` added the (standardized) Frobenius norm column.
    """

    rows: npt.NDArray[np.float64]
    labels: npt.NDArray[np.int64]
    feature_names: Tuple[str, ...] = ()
    object_ids: Tuple[str, ...] = ()
    class_names: Tuple[str, ...] = ()
    size_column: bool = False

    def __post_init__(self) -> None:
        rows = np.array(self.rows, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64)
        if rows.ndim != 2:
            raise ShapeError(f"Feature rows must be a 2D array, got shape {rows.shape}")
        if labels.shape != (rows.shape[0],):
            raise ShapeError(f"Got {labels.shape} labels for {rows.shape[0]} rows")
        names = tuple(self.feature_names) or tuple(f"f_{i}" for i in range(rows.shape[1]))
        if len(names) != rows.shape[1]:
            raise ShapeError(f"Got {len(names)} feature names for {rows.shape[1]} columns")
        if self.object_ids and len(self.object_ids) != rows.shape[0]:
            raise ShapeError(f"Got {len(self.object_ids)} object ids for {rows.shape[0]} rows")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "object_ids", tuple(self.object_ids))
        object.__setattr__(self, "class_names", tuple(self.class_names))

    def __len__(self) -> int:
        return int(self.rows.shape[0])

    @property
    def feature_dim(self) -> int:
        """Number of feature columns."""
        return int(self.rows.shape[1])

    @property
    def n_classes(self) -> int:
        """Number of classes (from class_names if known, else from the labels)."""
        if self.class_names:
            return len(self.class_names)
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def class_counts(self) -> Dict[int, int]:
        """Row count per class index present in the table."""
        (values, counts) = np.unique(self.labels, return_counts=True)
        return {int(v): int(c) for (v, c) in zip(values, counts)}

    def subset(self, index: npt.ArrayLike) -> "FeatureTable":
        """Rows selected by an integer index array."""
        idx = np.asarray(index, dtype=np.int64)
        ids = tuple(self.object_ids[i] for i in idx) if self.object_ids else ()
        return replace(self, rows=self.rows[idx], labels=self.labels[idx], object_ids=ids)

    def to_frame(self) -> pd.DataFrame:
        """
        Feature CSV table: object_id, label, then the feature columns.
        """
        frame = pd.DataFrame(self.rows, columns=list(self.feature_names))
        labels = [self.class_names[i] for i in self.labels] if self.class_names else list(self.labels)
        frame.insert(0, "label", labels)
        frame.insert(0, "object_id", list(self.object_ids) if self.object_ids else [str(i) for i in range(len(self))])
        return frame

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, class_names: Optional[Sequence[str]] = None) -> "FeatureTable":
        """
        Inverse of `to_frame`; class indices follow `class_names` or the sorted label values.

        Raises
        ------
        LabelError
            If a label is not in `class_names`.
        """
        for column in ("object_id", "label"):
            if column not in frame.columns:
                raise ShapeError(f"Feature table is missing the {column} column")
        labels = [str(v) for v in frame["label"]]
        names = tuple(class_names) if class_names is not None else tuple(sorted(set(labels)))
        lookup = {name: i for (i, name) in enumerate(names)}
        unknown = sorted(set(labels) - set(lookup))
        if unknown:
            raise LabelError(f"Labels outside the class set: {unknown}")
        features = [c for c in frame.columns if c not in ("object_id", "label")]
        return cls(rows=frame[features].to_numpy(dtype=np.float64),
                   labels=np.array([lookup[v] for v in labels], dtype=np.int64),
                   feature_names=tuple(features),
                   object_ids=tuple(str(v) for v in frame["object_id"]),
                   class_names=names,
                   size_column=SIZE_COLUMN in features)


@dataclass
class FittedClassifier:
    """
    A fitted standardize + logistic regression pipeline.
    """

    pipeline: Pipeline
    converged: bool
    classes: npt.NDArray[np.int64]

    def predict(self, rows: npt.ArrayLike) -> npt.NDArray[np.int64]:
        """Most likely class per row."""
        return np.asarray(self.pipeline.predict(np.asarray(rows, dtype=np.float64)), dtype=np.int64)

    def predict_proba(self, rows: npt.ArrayLike) -> npt.NDArray[np.float64]:
        """Class probabilities (columns in `classes` order)."""
        return np.asarray(self.pipeline.predict_proba(np.asarray(rows, dtype=np.float64)), dtype=np.float64)


@dataclass
class CvReport:
    """
    Per-fold metrics of a cross-validation run, with mean and standard deviation.
    """

    folds: List[Dict[str, float]] = field(default_factory=list)
    converged: List[bool] = field(default_factory=list)
    seed: int = 0

    def values(self, metric: str) -> npt.NDArray[np.float64]:
        """Per-fold values of one metric."""
        return np.array([fold[metric] for fold in self.folds], dtype=np.float64)

    def mean(self, metric: str) -> float:
        """Mean of a metric over folds."""
        return float(np.mean(self.values(metric)))

    def std(self, metric: str) -> float:
        """Population standard deviation of a metric over folds."""
        return float(np.std(self.values(metric)))

    def to_dict(self) -> Dict[str, Dict[str, object]]:
        """
        JSON form: {metric: {mean, std, folds: [...]}}.
        """
        return {metric: {"mean": self.mean(metric), "std": self.std(metric),
                         "folds": [float(v) for v in self.values(metric)]}
                for metric in METRIC_NAMES}

    def to_frame(self) -> pd.DataFrame:
        """
        CSV form: one row per metric with columns metric, mean, std, fold_0, ...
        """
        rows = []
        for metric in METRIC_NAMES:
            row: Dict[str, object] = {"metric": metric, "mean": self.mean(metric), "std": self.std(metric)}
            row.update({f"fold_{i}": float(v) for (i, v) in enumerate(self.values(metric))})
            rows.append(row)
        return pd.DataFrame(rows)


def _check_classes(table: FeatureTable, min_count: int) -> None:
    counts = table.class_counts()
    if len(counts) < 2:
        raise LabelError(f"Classification needs at least 2 classes, got {len(counts)}")
    small = {c: n for (c, n) in counts.items() if n < min_count}
    if small:
        raise StratificationError(f"Classes with fewer than {min_count} samples: {small}")


def fit_logreg(table: FeatureTable, l2: float = 1.0, max_iter: int = 1000, tol: float = 1e-8) -> FittedClassifier:
    """
    Fit a multinomial logistic regression on standardized features.

    Parameters
    ----------
    table : FeatureTable
        Training rows (>= 2 classes, >= 2 rows per class).
    l2 : float
        L2 penalty strength (inverse of the regularization parameter C); 0 disables it.
    max_iter : int
        Iteration budget of the L-BFGS solver.
    tol : float
        Gradient tolerance.

    Returns
    -------
    classifier : FittedClassifier
        Non-convergence is reported in `converged` (and logged), not raised.
    """
    if l2 < 0:
        raise ConfigError(f"l2 must be non-negative, got {l2}")
    _check_classes(table, 2)
    logreg = LogisticRegression(C=1.0 / l2 if l2 > 0 else 1.0, penalty="l2" if l2 > 0 else None,
                                solver="lbfgs", max_iter=max_iter, tol=tol)
    pipeline = Pipeline([("scale", StandardScaler()), ("logreg", logreg)])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        pipeline.fit(table.rows, table.labels)
    converged = not any(issubclass(w.category, ConvergenceWarning) for w in caught)
    if not converged:
        _LOG.warning("Logistic regression did not converge within %d iterations", max_iter)
    return FittedClassifier(pipeline=pipeline, converged=converged,
                            classes=np.asarray(logreg.classes_, dtype=np.int64))


def metrics(y_true: npt.ArrayLike, y_pred: npt.ArrayLike, probs: npt.ArrayLike,
            labels: Optional[Sequence[int]] = None) -> Dict[str, float]:
    """
    Macro-averaged F1, precision and recall, accuracy, and log loss.

    Parameters
    ----------
    y_true, y_pred : array of int
        True and predicted class indices.
    probs : array (M, C)
        Predicted class probabilities; rows sum to 1.
    labels : Optional[Sequence[int]]
        The class set, in probability column order; defaults to 0..C-1.

    Raises
    ------
    LabelError
        If a label is outside the class set.
    """
    truth = np.asarray(y_true, dtype=np.int64)
    pred = np.asarray(y_pred, dtype=np.int64)
    proba = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    if not len(truth) == len(pred) == len(proba):
        raise ShapeError(f"Inconsistent lengths: {len(truth)}, {len(pred)}, {len(proba)}")
    classes = list(labels) if labels is not None else list(range(proba.shape[1]))
    if len(classes) != proba.shape[1]:
        raise ShapeError(f"{proba.shape[1]} probability columns for {len(classes)} classes")
    outside = sorted(set(truth.tolist()).union(pred.tolist()) - set(classes))
    if outside:
        raise LabelError(f"Labels outside the class set: {outside}")
    if not np.allclose(proba.sum(axis=1), 1.0, rtol=0.0, atol=1e-6):
        raise PreconditionError("Probability rows must sum to 1")
    clipped = np.clip(proba, PROBA_EPS, 1.0 - PROBA_EPS)
    return {
        "f1": float(f1_score(truth, pred, labels=classes, average="macro", zero_division=0)),
        "accuracy": float(accuracy_score(truth, pred)),
        "precision": float(precision_score(truth, pred, labels=classes, average="macro", zero_division=0)),
        "recall": float(recall_score(truth, pred, labels=classes, average="macro", zero_division=0)),
        "log_loss": float(log_loss(truth, clipped, labels=classes)),
    }


def _fold(table: FeatureTable, train_idx: npt.NDArray, test_idx: npt.NDArray, classes: List[int],
          l2: float, max_iter: int, tol: float) -> Tuple[Dict[str, float], bool]:
    model = fit_logreg(table.subset(train_idx), l2=l2, max_iter=max_iter, tol=tol)
    test = table.subset(test_idx)
    proba = np.zeros((len(test), len(classes)))
    proba[:, [classes.index(c) for c in model.classes]] = model.predict_proba(test.rows)
    pred = np.asarray(classes)[np.argmax(proba, axis=1)]
    return (metrics(test.labels, pred, proba, labels=classes), model.converged)


def cross_validate(table: FeatureTable, folds: int = 5, seed: int = 0, *, l2: float = 1.0,
                   max_iter: int = 1000, tol: float = 1e-8, n_jobs: int = 1) -> CvReport:
    """
    Stratified k-fold evaluation of the logistic regression classifier.

    Standardization statistics are fit on the training folds only.

    Raises
    ------
    StratificationError
        If a class has fewer rows than folds.
    """
    if folds < 2:
        raise ConfigError(f"folds must be >= 2, got {folds}")
    _check_classes(table, folds)
    classes = sorted(table.class_counts())
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    results = Parallel(n_jobs=n_jobs)(
        delayed(_fold)(table, train_idx, test_idx, classes, l2, max_iter, tol)
        for (train_idx, test_idx) in splitter.split(table.rows, table.labels)
    )
    report = CvReport(folds=[r[0] for r in results], converged=[r[1] for r in results], seed=seed)
    _LOG.info("Cross-validation (%d folds, seed %d): f1 %.4f +- %.4f, accuracy %.4f +- %.4f",
              folds, seed, report.mean("f1"), report.std("f1"), report.mean("accuracy"), report.std("accuracy"))
    return report


def append_size(table: FeatureTable, norms: Sequence[float]) -> FeatureTable:
    """
    Append the standardized Frobenius norms as an extra "size" feature column.

    Raises
    ------
    ShapeError
        If the norms are not aligned with the rows.
    ConfigError
        If the table already has a size column.
    """
    if table.size_column:
        raise ConfigError("Feature table already has a size column")
    values = np.asarray(norms, dtype=np.float64)
    if values.shape != (len(table),):
        raise ShapeError(f"Got {values.shape} norms for {len(table)} rows")
    std = float(values.std())
    column = (values - values.mean()) / std if std > 0 else np.zeros_like(values)
    return replace(table, rows=np.column_stack([table.rows, column]),
                   feature_names=(*table.feature_names, SIZE_COLUMN), size_column=True)
