"""
Binary NetPBM I/O through Pillow: "P5" gray images and masks, "P6" overlays.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from margin_core.contracts import BinaryMask, GrayImage, RgbImage
from margin_core.errors import RasterError


def _open_gray(path: Path, what: str) -> np.ndarray:
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode not in ("L", "1"):
                raise RasterError(
                    f"{path}: expected an 8-bit grayscale {what}, found Pillow mode {mode!r}"
                )
            return np.asarray(im.convert("L"), dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise RasterError(f"{path}: not a readable image") from exc


def read_gray(path: str | Path) -> GrayImage:
    """Read an 8-bit "P5" file. RGB and 16-bit inputs are rejected."""
    return GrayImage(_open_gray(Path(path), "image"))


def read_mask(path: str | Path) -> BinaryMask:
    """Read a mask PGM; any nonzero value is foreground."""
    return BinaryMask(_open_gray(Path(path), "mask") > 0)


def _save(array: np.ndarray, path: str | Path) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(array)).save(out, format="PPM")
    return out


def write_gray(img: GrayImage, path: str | Path) -> Path:
    return _save(img.pixels, path)


def write_mask(mask: BinaryMask, path: str | Path) -> Path:
    """Masks are stored as 0/255 gray images."""
    return _save(np.where(mask.bits, 255, 0).astype(np.uint8), path)


def write_rgb(img: RgbImage, path: str | Path) -> Path:
    return _save(img.pixels, path)
