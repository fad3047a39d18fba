#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Mask dataset ingestion, stratified splits, and synthetic desk-scale datasets.

On disk a dataset is a directory with one subdirectory per class, each holding
8-bit grayscale mask images where nonzero pixels are foreground.
"""

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import pandas as pd
from PIL import Image

from edmshape_core.contour import DEFAULT_N_POINTS, ContourSequence, Polygon, resample_uniform
from edmshape_core.distmat import DistanceMatrix, Reindexing, reindex
from edmshape_core.exceptions import (
    ConfigError,
    DecodeError,
    LabelError,
    NoData,
    PreconditionError,
    StratificationError,
)
from edmshape_core.masks import BinaryMask, rasterize_contour
from edmshape_core.transforms import SimilarityTransform, transform_contour
from edmshape_core.util import seeded_rng

from edmshape_bench.storage import read_csv, write_csv

_LOG = logging.getLogger(__name__)

MANIFEST_COLUMNS = ["object_id", "label", "source_path"]

SHAPE_CLASSES = ("ellipse", "rectangle", "star")

# Vertex count of the dense canonical outlines before arc-length resampling.
_CANONICAL_VERTICES = 256

_ASPECT_RANGE = (1.5, 3.0)


@dataclass(frozen=True)
class ManifestRecord:
    """
    One object of a dataset.
    """

    object_id: str
    label: str
    source_path: str = ""


@dataclass(frozen=True)
class Manifest:
    """
    Ordered dataset records and the label to class index table.

    Attributes
    ----------
    records : Tuple[ManifestRecord, ...]
        Non-empty, with unique object ids.
    class_table : Dict[str, int]
        Class index of every label; defaults to the sorted labels numbered from 0.
    """

    records: Tuple[ManifestRecord, ...]
    class_table: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        records = tuple(self.records)
        if not records:
            raise NoData("Manifest has no records")
        ids = [r.object_id for r in records]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise PreconditionError(f"Duplicate object ids in manifest: {dupes[:5]}")
        table = dict(self.class_table) or {label: i for (i, label) in enumerate(sorted({r.label for r in records}))}
        missing = sorted({r.label for r in records} - set(table))
        if missing:
            raise LabelError(f"Labels missing from the class table: {missing}")
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "class_table", table)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[ManifestRecord]:
        return iter(self.records)

    @property
    def object_ids(self) -> List[str]:
        """Object ids in record order."""
        return [r.object_id for r in self.records]

    @property
    def class_names(self) -> Tuple[str, ...]:
        """Labels ordered by class index."""
        return tuple(sorted(self.class_table, key=self.class_table.__getitem__))

    @property
    def labels(self) -> npt.NDArray[np.int64]:
        """Class index of every record."""
        return np.array([self.class_table[r.label] for r in self.records], dtype=np.int64)

    def subset(self, index: Sequence[int]) -> "Manifest":
        """Records at the given positions, sharing this manifest's class table."""
        return Manifest(tuple(self.records[i] for i in index), self.class_table)

    def to_frame(self) -> pd.DataFrame:
        """Manifest CSV table: object_id, label, source_path."""
        return pd.DataFrame([(r.object_id, r.label, r.source_path) for r in self.records],
                            columns=MANIFEST_COLUMNS)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "Manifest":
        """Inverse of `to_frame`; the class table is rebuilt from the sorted labels."""
        missing = [c for c in MANIFEST_COLUMNS[:2] if c not in frame.columns]
        if missing:
            raise PreconditionError(f"Manifest table is missing columns {missing}")
        paths = frame["source_path"].fillna("") if "source_path" in frame.columns else [""] * len(frame)
        return cls(tuple(ManifestRecord(str(i), str(label), str(path))
                         for (i, label, path) in zip(frame["object_id"], frame["label"], paths)))


def _is_hidden(name: str) -> bool:
    return name.startswith(".")


def _decode(path: str) -> Image.Image:
    try:
        with Image.open(path) as image:
            image.load()
            return image.convert("L")
    except (OSError, SyntaxError, ValueError, Image.DecompressionBombError) as ex:
        raise DecodeError(path, str(ex)) from ex


def scan_dataset(root_dir: str) -> Manifest:
    """
    Build a manifest from a root/<class>/<image> directory tree.

    Classes and files are ordered lexicographically; the object id is the
    "<class>/<file name>" path relative to the root. Every file is decoded once
    so that broken images are reported before any processing starts.

    Raises
    ------
    NoData
        If the root holds no image files.
    DecodeError
        Naming the first file that cannot be decoded.
    """
    if not os.path.isdir(root_dir):
        raise NoData(f"Dataset root {root_dir} is not a directory")
    records = []
    for label in sorted(os.listdir(root_dir)):
        class_dir = os.path.join(root_dir, label)
        if _is_hidden(label) or not os.path.isdir(class_dir):
            continue
        for name in sorted(os.listdir(class_dir)):
            path = os.path.join(class_dir, name)
            if _is_hidden(name) or not os.path.isfile(path):
                continue
            _decode(path)
            records.append(ManifestRecord(f"{label}/{name}", label, path))
    if not records:
        raise NoData(f"No image files found under {root_dir}")
    manifest = Manifest(tuple(records))
    _LOG.info("Scanned %s: %d objects in %d classes", root_dir, len(manifest), len(manifest.class_table))
    return manifest


def load_mask(path: str, name: str = "") -> BinaryMask:
    """
    Decode one grayscale mask image, keeping its largest 4-connected component.
    """
    mask = BinaryMask.from_array(np.asarray(_decode(path)))
    return mask.largest_component(name or path)


def save_mask(mask: BinaryMask, path: str) -> None:
    """
    Write a mask as an 8-bit grayscale PNG (foreground 255).
    """
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    Image.fromarray(mask.pixels.astype(np.uint8) * 255).save(path)


def read_manifest(path: str) -> Manifest:
    """Read a manifest CSV file."""
    return Manifest.from_frame(read_csv(path, MANIFEST_COLUMNS[:2]))


def write_manifest(manifest: Manifest, path: str) -> None:
    """Write a manifest CSV file."""
    write_csv(manifest.to_frame(), path)


def rasterize_dataset(contours: Sequence[ContourSequence], size: int, margin: int = 2) -> List[BinaryMask]:
    """
    Fill every contour into a size x size mask at one common pixel scale, so
    relative object sizes survive rasterization.
    """
    if size < 2 * margin + 4:
        raise ConfigError(f"Mask size {size} is too small for a margin of {margin}")
    extent = max(float(np.max(np.ptp(c.points, axis=0))) for c in contours)
    scale = (size - 1 - 2 * margin) / extent
    return [rasterize_contour(c.points, size, scale=scale, margin=margin) for c in contours]


def _test_count(count: int, test_fraction: float) -> int:
    # Half-up rounding, clamped so both sides keep at least one record.
    return min(max(int(math.floor(count * test_fraction + 0.5)), 1), count - 1)


def split_stratified(manifest: Manifest, test_fraction: float = 0.2, seed: int = 0) -> Tuple[Manifest, Manifest]:
    """
    Split a manifest into train and test parts with per-class proportions.

    Parameters
    ----------
    manifest : Manifest
    test_fraction : float
        Share of every class sent to the test part, 0 < test_fraction < 1.
    seed : int

    Returns
    -------
    (train, test) : Tuple[Manifest, Manifest]
        Disjoint manifests in the input record order, sharing its class table.

    Raises
    ------
    StratificationError
        If a class has fewer than 2 records.
    """
    if not 0 < test_fraction < 1:
        raise ConfigError(f"test_fraction must be in (0, 1), got {test_fraction}")
    labels = manifest.labels
    rng = seeded_rng(seed)
    test_idx: List[int] = []
    for (label, index) in sorted(manifest.class_table.items(), key=lambda item: item[1]):
        members = np.flatnonzero(labels == index)
        if len(members) == 0:
            continue
        if len(members) < 2:
            raise StratificationError(f"Class {label} has {len(members)} record(s); at least 2 are needed to split")
        chosen = rng.permutation(members)[:_test_count(len(members), test_fraction)]
        test_idx.extend(int(i) for i in chosen)
    test_set = set(test_idx)
    train_idx = [i for i in range(len(manifest)) if i not in test_set]
    return (manifest.subset(train_idx), manifest.subset(sorted(test_set)))


@dataclass(frozen=True)
class Randomization:
    """
    Ranges of the random similarity transform given to every synthetic instance.

    Attributes
    ----------
    scale_range : Tuple[float, float]
        Inclusive range of the scale factor.
    rotation : bool
        Uniform random rotation angle.
    translation : float
        Translation components are drawn from [-translation, translation].
    """

    scale_range: Tuple[float, float] = (0.5, 2.0)
    rotation: bool = True
    translation: float = 10.0

    def __post_init__(self) -> None:
        (lo, hi) = self.scale_range
        if not 0 < lo <= hi:
            raise ConfigError(f"scale_range must satisfy 0 < lo <= hi, got {self.scale_range}")
        if self.translation < 0:
            raise ConfigError(f"translation must be >= 0, got {self.translation}")

    def draw(self, rng: np.random.Generator) -> SimilarityTransform:
        """One random transform."""
        return SimilarityTransform.random(rng, scale_range=self.scale_range, rotation=self.rotation,
                                          translation=self.translation)


CANONICAL = Randomization(scale_range=(1.0, 1.0), rotation=False, translation=0.0)


def _ellipse(rng: np.random.Generator) -> npt.NDArray[np.float64]:
    ratio = rng.uniform(*_ASPECT_RANGE)
    phi = 2.0 * np.pi * np.arange(_CANONICAL_VERTICES) / _CANONICAL_VERTICES
    return np.column_stack([ratio * np.cos(phi), np.sin(phi)])


def _rectangle(rng: np.random.Generator) -> npt.NDArray[np.float64]:
    (w, h) = (rng.uniform(*_ASPECT_RANGE) / 2.0, 0.5)
    return np.array([[-w, -h], [w, -h], [w, h], [-w, h]])


def _star(_rng: np.random.Generator) -> npt.NDArray[np.float64]:
    phi = 2.0 * np.pi * np.arange(_CANONICAL_VERTICES) / _CANONICAL_VERTICES
    radius = 1.0 + 0.4 * np.cos(3.0 * phi)
    return np.column_stack([radius * np.cos(phi), radius * np.sin(phi)])


_GENERATORS = {"ellipse": _ellipse, "rectangle": _rectangle, "star": _star}


def canonical_shape(kind: str, rng: np.random.Generator, n_points: int = DEFAULT_N_POINTS) -> ContourSequence:
    """
    A centered, unrotated instance of one synthetic shape class.
    """
    if kind not in _GENERATORS:
        raise ConfigError(f"Unknown synthetic shape {kind!r}; expected one of {SHAPE_CLASSES}")
    return resample_uniform(Polygon(_GENERATORS[kind](rng)), n_points)


def make_synthetic_shapes(n_per_class: int, seed: int = 0, randomize: Randomization = Randomization(), *,
                          n_points: int = DEFAULT_N_POINTS) -> Tuple[Manifest, List[ContourSequence]]:
    """
    Three-class synthetic dataset: ellipses, rectangles, and three-lobed stars.

    Ellipse axis ratios and rectangle aspects are drawn from [1.5, 3]; stars follow
    r(phi) = 1 + 0.4 cos(3 phi). Every instance then gets a random similarity
    transform from `randomize`.

    Returns
    -------
    (manifest, contours) : Tuple[Manifest, List[ContourSequence]]
        Records grouped by class, ids "<class>-<index>".
    """
    if n_per_class < 1:
        raise ConfigError(f"n_per_class must be >= 1, got {n_per_class}")
    rng = seeded_rng(seed)
    records = []
    contours = []
    for kind in SHAPE_CLASSES:
        for i in range(n_per_class):
            shape = canonical_shape(kind, rng, n_points)
            contours.append(transform_contour(shape, randomize.draw(rng)))
            records.append(ManifestRecord(f"{kind}-{i:04d}", kind))
    _LOG.info("Generated %d synthetic contours (seed %d, N=%d)", len(contours), seed, n_points)
    return (Manifest(tuple(records)), contours)   # type: ignore[return-value]


def make_size_variant(n_per_class: int, seed: int = 0, *, n_points: int = DEFAULT_N_POINTS,
                      small: Tuple[float, float] = (1.0, 1.5),
                      large: Tuple[float, float] = (2.0, 3.0)) -> Tuple[Manifest, List[ContourSequence]]:
    """
    Two classes, "small" and "large", with the same shape distribution.

    Each instance is a random synthetic shape with a random rotation and
    translation; only the scale ranges of the two classes differ.
    """
    if n_per_class < 1:
        raise ConfigError(f"n_per_class must be >= 1, got {n_per_class}")
    if small[1] >= large[0]:
        _LOG.warning("Scale ranges %s and %s overlap: the classes are not separable by size", small, large)
    rng = seeded_rng(seed)
    records = []
    contours = []
    for (label, scale_range) in (("small", small), ("large", large)):
        ranges = Randomization(scale_range=scale_range, rotation=True, translation=10.0)
        for i in range(n_per_class):
            kind = SHAPE_CLASSES[int(rng.integers(len(SHAPE_CLASSES)))]
            contours.append(transform_contour(canonical_shape(kind, rng, n_points), ranges.draw(rng)))
            records.append(ManifestRecord(f"{label}-{i:04d}", label))
    return (Manifest(tuple(records), {"small": 0, "large": 1}), contours)   # type: ignore[return-value]


def augment_reindex(matrices: Sequence[DistanceMatrix], seed: int = 0) -> Tuple[List[DistanceMatrix], List[Reindexing]]:
    """
    Give every contour's distance matrix a random origin and direction.

    Returns
    -------
    (matrices, reindexings) : Tuple[List[DistanceMatrix], List[Reindexing]]
        The reindexed matrices and the (k, o) drawn for each.
    """
    rng = seeded_rng(seed)
    drawn = [Reindexing(k=int(rng.integers(d.n)), o=int(rng.choice([1, -1]))) for d in matrices]
    return ([reindex(d, r) for (d, r) in zip(matrices, drawn)], drawn)
