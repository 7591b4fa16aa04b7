"""Tests for the directory-backed phantom dataset store."""

import json
from pathlib import Path

import numpy as np
import pytest

from data.dataset_store import DatasetStore
from phantom.generator import DatasetBundle, generate_dataset


@pytest.fixture(scope="module")
def bundle() -> DatasetBundle:
    return generate_dataset(3, seed=2)


def test_write_then_load(tmp_path: Path, bundle: DatasetBundle) -> None:
    store = DatasetStore(tmp_path / "ds")
    assert not store.exists()
    index_path = store.write_bundle(bundle)
    assert index_path == store.index_path
    assert (tmp_path / "ds" / "cases" / "case_0002_tumor.pgm").is_file()

    loaded = store.load()
    assert loaded.seed == 2
    assert loaded.train_indices == bundle.train_indices
    assert loaded.validation_indices == bundle.validation_indices
    for (ra, ma), (rb, mb) in zip(loaded.pairs, bundle.pairs):
        np.testing.assert_array_equal(ra.pixels, rb.pixels)
        np.testing.assert_array_equal(ma.bits, mb.bits)
    assert loaded.cases[0]["pixels_per_mm"] == pytest.approx(bundle.cases[0].pixels_per_mm)
    assert len(loaded.train_pairs()) + len(loaded.validation_pairs()) == 3


def test_index_layout(tmp_path: Path, bundle: DatasetBundle) -> None:
    store = DatasetStore(tmp_path)
    store.write_bundle(bundle)
    index = json.loads(store.index_path.read_text())
    assert index["format_version"] == 1
    assert index["count"] == 3
    assert index["cases"][1]["roi"] == "cases/case_0001_roi.pgm"


def test_missing_index(tmp_path: Path) -> None:
    with pytest.raises(FileNotFoundError):
        DatasetStore(tmp_path).load()


def test_unknown_version(tmp_path: Path) -> None:
    (tmp_path / "dataset.json").write_text(json.dumps({"format_version": 99, "cases": []}))
    with pytest.raises(ValueError, match="unsupported"):
        DatasetStore(tmp_path).load()


def test_split_out_of_range(tmp_path: Path, bundle: DatasetBundle) -> None:
    store = DatasetStore(tmp_path)
    store.write_bundle(bundle)
    index = json.loads(store.index_path.read_text())
    index["validation"] = [7]
    store.index_path.write_text(json.dumps(index))
    with pytest.raises(ValueError, match="out of range"):
        store.load()
