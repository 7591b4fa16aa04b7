"""
Persist and load phantom training datasets as a directory:

    <root>/dataset.json          index: seed, split, per-case metadata
    <root>/cases/case_0000_roi.pgm
    <root>/cases/case_0000_tumor.pgm
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from data.netpbm import read_gray, read_mask, write_gray, write_mask
from margin_core.contracts import BinaryMask, GrayImage
from phantom.generator import DatasetBundle

logger = logging.getLogger("margin.data.dataset_store")

INDEX_NAME = "dataset.json"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class StoredDataset:
    pairs: list[tuple[GrayImage, BinaryMask]]
    train_indices: list[int]
    validation_indices: list[int]
    seed: int
    cases: list[dict[str, Any]]

    def train_pairs(self) -> list[tuple[GrayImage, BinaryMask]]:
        return [self.pairs[i] for i in self.train_indices]

    def validation_pairs(self) -> list[tuple[GrayImage, BinaryMask]]:
        return [self.pairs[i] for i in self.validation_indices]


class DatasetStore:
    """Directory-backed dataset storage. One dataset per root."""

    def __init__(self, root: str | Path) -> None:
        self._root = Path(root)

    @property
    def index_path(self) -> Path:
        return self._root / INDEX_NAME

    def exists(self) -> bool:
        return self.index_path.is_file()

    def write_bundle(self, bundle: DatasetBundle) -> Path:
        """Write every case's ROI image and tumor mask plus the index; returns the index path."""
        cases_dir = self._root / "cases"
        cases_dir.mkdir(parents=True, exist_ok=True)
        entries: list[dict[str, Any]] = []
        for i, ((roi, tumor), meta) in enumerate(zip(bundle.pairs, bundle.cases)):
            roi_name = f"cases/case_{i:04d}_roi.pgm"
            tumor_name = f"cases/case_{i:04d}_tumor.pgm"
            write_gray(roi, self._root / roi_name)
            write_mask(tumor, self._root / tumor_name)
            entries.append({
                "id": i,
                "roi": roi_name,
                "tumor": tumor_name,
                "pixels_per_mm": meta.pixels_per_mm,
                "min_margin_mm": meta.min_margin_mm,
                "clock_margins_mm": meta.clock_margins_mm,
                "spec": meta.spec,
            })
        index = {
            "format_version": FORMAT_VERSION,
            "seed": bundle.seed,
            "count": len(entries),
            "train": list(bundle.train_indices),
            "validation": list(bundle.validation_indices),
            "cases": entries,
        }
        self.index_path.write_text(json.dumps(index, indent=2) + "\n")
        logger.info("wrote %d cases to %s", len(entries), self._root)
        return self.index_path

    def load(self) -> StoredDataset:
        """Read the index and every case raster.

        Raises
        ------
        FileNotFoundError
            No ``dataset.json`` under the root.
        ValueError
            Malformed index (unknown version, bad split indices, size mismatch).
        """
        if not self.exists():
            raise FileNotFoundError(f"no {INDEX_NAME} in {self._root}")
        index = json.loads(self.index_path.read_text())
        if not isinstance(index, dict) or index.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"{self.index_path}: unsupported dataset format")
        cases = index.get("cases") or []
        pairs: list[tuple[GrayImage, BinaryMask]] = []
        for entry in cases:
            roi = read_gray(self._root / entry["roi"])
            tumor = read_mask(self._root / entry["tumor"])
            if roi.shape != tumor.shape:
                raise ValueError(f"case {entry.get('id')}: roi {roi.shape} and tumor {tumor.shape} differ")
            pairs.append((roi, tumor))
        train = [int(i) for i in index.get("train", range(len(pairs)))]
        validation = [int(i) for i in index.get("validation", [])]
        for i in train + validation:
            if not 0 <= i < len(pairs):
                raise ValueError(f"{self.index_path}: split index {i} out of range")
        return StoredDataset(pairs, train, validation, int(index.get("seed", 0)), cases)
