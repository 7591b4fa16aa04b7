"""Tests for coin detection and pixel-density conversion."""

import math

import numpy as np
import pytest

from tests.conftest import disk_bits
from margin_core.calibration import (
    calibrate,
    circularity,
    detect_coin,
    estimate_density,
    mm_to_px,
    px_to_mm,
)
from margin_core.contracts import CoinDetection, GrayImage, PixelDensity
from margin_core.errors import CalibrationError, CoinNotFoundError, NoCircularComponentError
from margin_core.specimen import foreground_components


def _frame_with(extra: np.ndarray | None = None) -> GrayImage:
    img = np.full((200, 200), 20, dtype=np.uint8)
    img[disk_bits(img.shape, (80, 100), 60)] = 110
    if extra is not None:
        img[extra] = 240
    return GrayImage(img)


class TestCircularity:
    def test_clamped_to_one(self) -> None:
        assert circularity(1000, 10.0) == 1.0

    def test_zero_perimeter(self) -> None:
        assert circularity(1, 0.0) == 1.0

    def test_square_value(self) -> None:
        assert circularity(100, 40.0) == pytest.approx(math.pi / 4)


class TestDetectCoin:
    def test_finds_coin_in_scene(self, scene_image: GrayImage) -> None:
        coin, density = calibrate(scene_image)
        assert coin.center[0] == pytest.approx(165.0, abs=0.01)
        assert coin.center[1] == pytest.approx(35.0, abs=0.01)
        assert coin.radius_px == pytest.approx(20.0, abs=0.1)
        assert coin.circularity >= 0.85
        assert density.pixels_per_mm == pytest.approx(2.0, rel=0.01)

    def test_specimen_never_chosen(self, scene_image: GrayImage) -> None:
        _, labels = foreground_components(scene_image)
        coin = detect_coin(labels)
        assert coin.label != labels.largest_label()

    def test_missing_coin(self) -> None:
        with pytest.raises(CoinNotFoundError):
            calibrate(_frame_with())

    def test_small_blobs_ignored(self) -> None:
        blob = np.zeros((200, 200), dtype=bool)
        blob[10:20, 170:180] = True  # 100 px stitch clip
        with pytest.raises(CoinNotFoundError):
            calibrate(_frame_with(blob))

    def test_elongated_blob_is_not_a_coin(self) -> None:
        bar = np.zeros((200, 200), dtype=bool)
        bar[170:180, 120:190] = True
        with pytest.raises(NoCircularComponentError):
            calibrate(_frame_with(bar))

    def test_most_circular_candidate_wins(self) -> None:
        shapes = np.zeros((200, 200), dtype=bool)
        shapes[170:180, 120:190] = True
        shapes |= disk_bits(shapes.shape, (170, 30), 18)
        coin, _ = calibrate(_frame_with(shapes))
        assert coin.center == pytest.approx((170.0, 30.0), abs=0.01)

    def test_custom_coin_diameter(self, scene_image: GrayImage) -> None:
        _, density = calibrate(scene_image, coin_diameter_mm=40.0)
        assert density.pixels_per_mm == pytest.approx(1.0, rel=0.01)


class TestConversions:
    def test_density_from_radius(self) -> None:
        coin = CoinDetection(center=(0.0, 0.0), radius_px=95.0, circularity=0.9, label=2, area_px=28353)
        assert estimate_density(coin).pixels_per_mm == pytest.approx(9.5)

    def test_rejects_bad_diameter(self) -> None:
        coin = CoinDetection(center=(0.0, 0.0), radius_px=10.0, circularity=0.9, label=2, area_px=314)
        with pytest.raises(CalibrationError):
            estimate_density(coin, 0.0)

    def test_px_mm_inverse(self) -> None:
        density = PixelDensity(2.5)
        assert px_to_mm(10.0, density) == pytest.approx(4.0)
        assert mm_to_px(px_to_mm(37.0, density), density) == pytest.approx(37.0)

    def test_density_must_be_positive(self) -> None:
        with pytest.raises(CalibrationError):
            PixelDensity(0.0)
