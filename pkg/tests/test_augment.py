"""Tests for training-set augmentation."""

import numpy as np
import pytest

from margin_core.contracts import BinaryMask, GrayImage
from segnet.augment import AugmentationSpec, AugmentParams, apply_augmentation, augment_case
from segnet.errors import ShapeError
from segnet.trainer import augment_pairs
from tests.conftest import disk_bits


@pytest.fixture
def case() -> tuple[GrayImage, BinaryMask]:
    bits = disk_bits((48, 40), (18, 22), 9)
    img = np.where(bits, 200, 90).astype(np.uint8)
    return GrayImage(img), BinaryMask(bits)


class TestAugmentCase:
    def test_default_gives_twenty_matching_pairs(self, case) -> None:
        img, mask = case
        pairs = augment_case(img, mask, seed=1)
        assert len(pairs) == 20
        for p in pairs:
            assert p.image.shape == p.mask.shape == img.shape
            assert p.mask.bits.dtype == bool

    def test_deterministic_per_seed(self, case) -> None:
        img, mask = case
        a = augment_case(img, mask, seed=4)
        b = augment_case(img, mask, seed=4)
        c = augment_case(img, mask, seed=5)
        for pa, pb in zip(a, b):
            np.testing.assert_array_equal(pa.image.pixels, pb.image.pixels)
            np.testing.assert_array_equal(pa.mask.bits, pb.mask.bits)
        assert any(pa.params != pc.params for pa, pc in zip(a, c))

    def test_identity_spec_copies_input(self, case) -> None:
        img, mask = case
        for p in augment_case(img, mask, AugmentationSpec.identity(count=3)):
            np.testing.assert_array_equal(p.image.pixels, img.pixels)
            np.testing.assert_array_equal(p.mask.bits, mask.bits)

    def test_parameters_stay_in_range(self, case) -> None:
        img, mask = case
        spec = AugmentationSpec(rotation_deg=15.0, zoom_range=(0.95, 1.05))
        for p in augment_case(img, mask, spec, seed=9):
            assert -15.0 <= p.params.angle_deg <= 15.0
            assert 0.95 <= p.params.zoom <= 1.05

    def test_mismatched_pair(self, case) -> None:
        img, _ = case
        with pytest.raises(ShapeError):
            augment_case(img, BinaryMask.empty(3, 3))


class TestApplyAugmentation:
    def test_flips_move_image_and_mask_together(self, case) -> None:
        img, mask = case
        params = AugmentParams(flip_h=True, flip_v=True, angle_deg=0.0, zoom=1.0, elastic_seed=0)
        out = apply_augmentation(img, mask, params)
        np.testing.assert_array_equal(out.mask.bits, mask.bits[::-1, ::-1])
        np.testing.assert_array_equal(out.image.pixels, img.pixels[::-1, ::-1])

    def test_rotation_keeps_mask_under_bright_pixels(self, case) -> None:
        img, mask = case
        params = AugmentParams(flip_h=False, flip_v=False, angle_deg=10.0, zoom=1.05, elastic_seed=3,
                               elastic_amplitude_px=2.0, elastic_sigma_px=8.0)
        out = apply_augmentation(img, mask, params)
        assert abs(out.mask.area - mask.area) < 0.2 * mask.area
        assert out.image.pixels[out.mask.bits].mean() > 150


def test_spec_validation() -> None:
    with pytest.raises(ValueError):
        AugmentationSpec(count=0)
    with pytest.raises(ValueError):
        AugmentationSpec(zoom_range=(1.1, 0.9))
    with pytest.raises(ValueError):
        AugmentationSpec(elastic_sigma_px=0.0)


def test_augment_pairs_expands_every_case(case) -> None:
    pairs = [case, case, case]
    out = augment_pairs(pairs, AugmentationSpec(count=4), seed=2)
    assert len(out) == 12
    again = augment_pairs(pairs, AugmentationSpec(count=4), seed=2)
    for (ia, ma), (ib, mb) in zip(out, again):
        np.testing.assert_array_equal(ia.pixels, ib.pixels)
        np.testing.assert_array_equal(ma.bits, mb.bits)
    # identical inputs still get distinct draws per case
    assert not np.array_equal(out[0][0].pixels, out[4][0].pixels)


def test_mask_area_scales_with_zoom_squared() -> None:
    bits = disk_bits((80, 80), (39.5, 39.5), 24)
    img, mask = GrayImage(np.where(bits, 210, 40).astype(np.uint8)), BinaryMask(bits)
    spec = AugmentationSpec(elastic_amplitude_px=0.0)
    for p in augment_case(img, mask, spec, seed=1):
        expected = p.params.zoom**2 * mask.area
        assert abs(p.mask.area - expected) <= 0.15 * expected
