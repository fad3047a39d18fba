#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Tests for mask dataset scanning, stratified splits and synthetic datasets.
"""

import logging
import os

import numpy as np
import pytest

from edmshape_core.contour import signed_area
from edmshape_core.distmat import edm, equivalence_class, normalize, reindex
from edmshape_core.exceptions import DecodeError, NoData, StratificationError

from edmshape_bench.datasets import (
    CANONICAL,
    Manifest,
    ManifestRecord,
    Randomization,
    augment_reindex,
    load_mask,
    make_size_variant,
    make_synthetic_shapes,
    rasterize_dataset,
    read_manifest,
    scan_dataset,
    split_stratified,
    write_manifest,
)
from edmshape_bench.tests import SEED, disc, write_png


def _manifest(counts: dict) -> Manifest:
    return Manifest(tuple(ManifestRecord(f"{label}-{i}", label)
                          for (label, count) in counts.items() for i in range(count)))


def test_scan_dataset(mask_root: str) -> None:
    """
    One record per image, labels from the class directories, sorted ids.
    """
    manifest = scan_dataset(mask_root)
    assert len(manifest) == 5
    assert manifest.class_table == {"a": 0, "b": 1}
    assert manifest.object_ids == ["a/0.png", "a/1.png", "b/0.png", "b/1.png", "b/2.png"]
    assert list(manifest.labels) == [0, 0, 1, 1, 1]
    assert all(os.path.isfile(r.source_path) for r in manifest)


def test_scan_empty_dataset(tmp_path: str) -> None:
    """
    An empty root (or one with only empty class dirs) has no data.
    """
    with pytest.raises(NoData):
        scan_dataset(str(tmp_path))
    os.makedirs(os.path.join(tmp_path, "a"))
    with pytest.raises(NoData):
        scan_dataset(str(tmp_path))


def test_scan_truncated_image(mask_root: str) -> None:
    """
    A truncated PNG is reported with its path.
    """
    good = os.path.join(mask_root, "b", "1.png")
    bad = os.path.join(mask_root, "b", "3.png")
    with open(good, "rb") as fh:
        blob = fh.read()
    with open(bad, "wb") as fh:
        fh.write(blob[:len(blob) // 2])
    with pytest.raises(DecodeError) as ex_info:
        scan_dataset(mask_root)
    assert ex_info.value.path == bad
    assert bad in str(ex_info.value)


def test_load_mask_keeps_largest_component(tmp_path: str, caplog: pytest.LogCaptureFixture) -> None:
    """
    Two blobs: only the larger one survives, with a warning.
    """
    pixels = np.maximum(disc(40, 8.0, center=-8.0), disc(40, 3.0, center=12.0))
    path = write_png(os.path.join(tmp_path, "two.png"), pixels)
    with caplog.at_level(logging.WARNING):
        mask = load_mask(path)
    assert mask.component_count() == 1
    assert mask.area == int(np.count_nonzero(disc(40, 8.0, center=-8.0)))
    assert "connected components" in caplog.text


def test_manifest_csv_keeps_empty_paths(tmp_path: str) -> None:
    """
    Records without a source path read back with an empty string, not NaN.
    """
    path = os.path.join(tmp_path, "manifest.csv")
    write_manifest(_manifest({"NA": 2, "b": 1}), path)
    manifest = read_manifest(path)
    assert [r.source_path for r in manifest] == ["", "", ""]
    assert manifest.class_names == ("NA", "b")


def test_split_stratified_counts() -> None:
    """
    100 records per class at 20% gives 80/20 in every class.
    """
    manifest = _manifest({"a": 100, "b": 100, "c": 100})
    (train, test) = split_stratified(manifest, 0.2, seed=SEED)
    for label in ("a", "b", "c"):
        assert sum(r.label == label for r in test) == 20
        assert sum(r.label == label for r in train) == 80
    assert set(train.object_ids).isdisjoint(test.object_ids)
    assert set(train.object_ids) | set(test.object_ids) == set(manifest.object_ids)
    assert train.class_table == test.class_table == manifest.class_table


@pytest.mark.parametrize(("count", "fraction"), [(2, 0.5), (3, 0.2), (7, 0.9), (11, 0.35)])
def test_split_stratified_bounds(count: int, fraction: float) -> None:
    """
    Every class keeps at least one record on both sides, within one record of the target.
    """
    manifest = _manifest({"a": count, "b": count + 1})
    (train, test) = split_stratified(manifest, fraction, seed=SEED)
    for (label, size) in (("a", count), ("b", count + 1)):
        n_test = sum(r.label == label for r in test)
        assert 1 <= n_test <= size - 1
        assert abs(n_test / size - fraction) <= 1.0 / size
    assert len(train) + len(test) == len(manifest)


def test_split_stratified_deterministic() -> None:
    """
    Same seed, same partition; another seed usually differs.
    """
    manifest = _manifest({"a": 30, "b": 30})
    (_, test_1) = split_stratified(manifest, 0.2, seed=SEED)
    (_, test_2) = split_stratified(manifest, 0.2, seed=SEED)
    (_, test_3) = split_stratified(manifest, 0.2, seed=SEED + 1)
    assert test_1.object_ids == test_2.object_ids
    assert test_1.object_ids != test_3.object_ids


def test_split_stratified_singleton_class() -> None:
    """
    A class with one record cannot be split.
    """
    with pytest.raises(StratificationError):
        split_stratified(_manifest({"a": 5, "b": 1}), 0.2, seed=SEED)


def test_make_synthetic_shapes_counts() -> None:
    """
    200 per class over three classes.
    """
    (manifest, contours) = make_synthetic_shapes(200, seed=7, n_points=32)
    assert len(manifest) == len(contours) == 600
    assert manifest.class_names == ("ellipse", "rectangle", "star")
    assert np.bincount(manifest.labels).tolist() == [200, 200, 200]
    assert all(c.n == 32 and signed_area(c.points) > 0 for c in contours)


def test_make_synthetic_shapes_deterministic() -> None:
    """
    Two calls with the same seed produce identical contours.
    """
    (_, first) = make_synthetic_shapes(5, seed=SEED, n_points=16)
    (_, second) = make_synthetic_shapes(5, seed=SEED, n_points=16)
    for (a, b) in zip(first, second):
        assert np.array_equal(a.points, b.points)


def test_make_synthetic_shapes_canonical() -> None:
    """
    Degenerate ranges leave the shapes centered and unrotated; stars are all alike.
    """
    (manifest, contours) = make_synthetic_shapes(4, seed=SEED, randomize=CANONICAL, n_points=64)
    stars = [c.points for (r, c) in zip(manifest, contours) if r.label == "star"]
    for star in stars[1:]:
        assert np.array_equal(star, stars[0])
    for (record, contour) in zip(manifest, contours):
        np.testing.assert_allclose(contour.points.mean(axis=0), 0.0, atol=0.05)
        if record.label == "star":
            continue
        # Unrotated: the long axis of ellipses and rectangles lies along x.
        extent = np.ptp(contour.points, axis=0)
        assert extent[0] >= extent[1] - 1e-9


def test_randomization_scales_distances() -> None:
    """
    Scale-only randomization scales every distance matrix by the drawn factor.
    """
    (_, canonical) = make_synthetic_shapes(3, seed=SEED, randomize=CANONICAL, n_points=16)
    (_, scaled) = make_synthetic_shapes(3, seed=SEED, n_points=16,
                                        randomize=Randomization(scale_range=(2.0, 2.0), rotation=False, translation=0.0))
    for (a, b) in zip(canonical, scaled):
        np.testing.assert_allclose(edm(b).entries, 2.0 * edm(a).entries, rtol=1e-12, atol=1e-12)


def test_make_size_variant() -> None:
    """
    The two classes differ in scale only: the typical norm of the large class is
    about twice that of the small one.
    """
    (manifest, contours) = make_size_variant(20, seed=SEED, n_points=16)
    assert manifest.class_table == {"small": 0, "large": 1}
    norms = np.array([normalize(edm(c)).frobenius_norm for c in contours])
    small = norms[manifest.labels == 0]
    large = norms[manifest.labels == 1]
    assert 1.5 < np.median(large) / np.median(small) < 3.0


def test_augment_reindex() -> None:
    """
    Every augmented matrix is a member of its equivalence class, reproducibly.
    """
    (_, contours) = make_synthetic_shapes(2, seed=SEED, n_points=16)
    matrices = [normalize(edm(c)) for c in contours]
    (augmented, drawn) = augment_reindex(matrices, seed=SEED)
    assert len(augmented) == len(drawn) == len(matrices)
    for (orig, aug, r) in zip(matrices, augmented, drawn):
        assert np.array_equal(aug.entries, reindex(orig, r).entries)
        assert any(np.array_equal(aug.entries, m.entries) for m in equivalence_class(orig))
        assert aug.frobenius_norm == orig.frobenius_norm
    (repeat, drawn_repeat) = augment_reindex(matrices, seed=SEED)
    assert drawn_repeat == drawn
    assert all(np.array_equal(a.entries, b.entries) for (a, b) in zip(repeat, augmented))


def test_rasterize_dataset_keeps_relative_size() -> None:
    """
    A shape scaled by 2 covers about 4 times the pixels of the original.
    """
    (_, contours) = make_synthetic_shapes(1, seed=SEED, randomize=CANONICAL, n_points=64)
    (_, doubled) = make_synthetic_shapes(1, seed=SEED, n_points=64,
                                         randomize=Randomization(scale_range=(2.0, 2.0), rotation=False,
                                                                 translation=0.0))
    masks = rasterize_dataset([contours[2], doubled[2]], size=96)
    ratio = masks[1].area / masks[0].area
    assert 3.5 < ratio < 4.5
