"""Tests for overlay rendering."""

from pathlib import Path

import numpy as np

from data.netpbm import write_rgb
from margin_core.contracts import BinaryMask, Contour, GrayImage, PixelDensity, SafetyPolicy
from margin_core.margins import caution_region, margin_profile
from margin_core.overlay import BLUE, RED, YELLOW, render_overlay
from margin_core.raster import trace_boundary

GOLDEN_OVERLAY = Path(__file__).resolve().parent.parent / "docs" / "config" / "fixtures" / "overlay" / "concentric_overlay.ppm"


def _gray() -> GrayImage:
    return GrayImage(np.full((20, 20), 90, dtype=np.uint8))


def test_boundaries_are_coloured() -> None:
    specimen = Contour(np.array([[1, 1], [2, 1], [3, 1]]))
    tumor = Contour(np.array([[10, 10], [11, 10]]))
    rgb = render_overlay(_gray(), specimen, tumor).pixels
    assert tuple(rgb[1, 2]) == BLUE
    assert tuple(rgb[10, 11]) == RED
    assert tuple(rgb[5, 5]) == (90, 90, 90)
    assert rgb.shape == (20, 20, 3)


def test_tumor_drawn_over_specimen() -> None:
    shared = Contour(np.array([[4, 4]]))
    rgb = render_overlay(_gray(), shared, shared).pixels
    assert tuple(rgb[4, 4]) == RED


def test_caution_band_is_dilated() -> None:
    rgb = render_overlay(_gray(), None, None, [(10, 10)]).pixels
    yellow = np.all(rgb == YELLOW, axis=-1)
    assert yellow[10, 12] and yellow[12, 10]
    assert not yellow[12, 12]
    assert int(yellow.sum()) == 13


def test_out_of_frame_points_skipped() -> None:
    contour = Contour(np.array([[-1, 3], [25, 3], [3, 3]]))
    rgb = render_overlay(_gray(), contour, None, [(30, 30)]).pixels
    blue = np.all(rgb == BLUE, axis=-1)
    assert int(blue.sum()) == 1
    assert not np.all(rgb == YELLOW, axis=-1).any()


def test_source_image_untouched() -> None:
    img = _gray()
    render_overlay(img, Contour(np.array([[0, 0]])), None, [(5, 5)])
    assert (img.pixels == 90).all()


def test_concentric_scene_matches_golden_ppm(tmp_path: Path) -> None:
    # 28x24 frame: specimen x 2..25, y 2..21; tumor x 11..16, y 7..16 share a centre.
    specimen = np.zeros((24, 28), dtype=bool)
    specimen[2:22, 2:26] = True
    tumor = np.zeros_like(specimen)
    tumor[7:17, 11:17] = True
    pixels = np.full(specimen.shape, 20, dtype=np.uint8)
    pixels[specimen] = 110
    pixels[tumor] = 180

    profile = margin_profile(BinaryMask(tumor), BinaryMask(specimen), PixelDensity(1.0),
                             SafetyPolicy(threshold_mm=6.5))
    caution = caution_region(profile)
    assert profile.min_margin_mm == 6.0
    assert sorted({y for _, y in caution}) == [7, 16]

    rgb = render_overlay(GrayImage(pixels), trace_boundary(BinaryMask(specimen)), profile.tumor_contour, caution)
    out = write_rgb(rgb, tmp_path / "overlay.ppm")
    assert out.read_bytes() == GOLDEN_OVERLAY.read_bytes()

    colours = rgb.pixels.reshape(-1, 3)
    assert int(np.all(colours == RED, axis=-1).sum()) == 8
    assert int(np.all(colours == YELLOW, axis=-1).sum()) == 76
