"""Tests for specimen extraction, ROI cropping and mask pasting."""

import numpy as np
import pytest

from tests.conftest import disk_bits
from margin_core.contracts import BinaryMask, GrayImage
from margin_core.errors import SpecimenError
from margin_core.raster import connected_components, distance_transform, fill_holes
from margin_core.specimen import (
    DEFAULT_SMOOTH_RADIUS,
    crop_mask,
    crop_roi,
    extract_specimen,
    foreground_components,
    paste_roi_mask,
)
from phantom.generator import Phantom, PhantomRanges, generate, sample_spec


def _phantom(seed: int) -> Phantom:
    return generate(sample_spec(np.random.default_rng(seed), PhantomRanges()))


def _boundary(bits: np.ndarray) -> np.ndarray:
    """Foreground pixels with a background 4-neighbour; beyond the frame is background."""
    padded = np.pad(bits, 1, constant_values=False)
    interior = padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    return bits & ~interior


def _hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    to_b = distance_transform(BinaryMask(b)).values
    to_a = distance_transform(BinaryMask(a)).values
    return float(max(to_b[a].max(), to_a[b].max()))


class TestExtractSpecimen:
    def test_scene_specimen_is_the_disk(self, scene_image: GrayImage) -> None:
        ext = extract_specimen(scene_image)
        expected = disk_bits(scene_image.shape, (80, 100), 60)
        assert ext.threshold == 20
        assert abs(ext.mask.area - int(expected.sum())) <= 40
        assert not ext.mask.bits[35, 165]  # coin excluded
        assert connected_components(ext.mask).count == 1

    def test_bbox_pads_tight_box(self, scene_image: GrayImage) -> None:
        x0, y0, x1, y1 = extract_specimen(scene_image, padding=16).bbox
        assert x0 == pytest.approx(4, abs=1)
        assert y0 == pytest.approx(24, abs=1)
        assert x1 == pytest.approx(156, abs=1)
        assert y1 == pytest.approx(176, abs=1)

    def test_bbox_clipped_to_frame(self, scene_image: GrayImage) -> None:
        x0, y0, x1, y1 = extract_specimen(scene_image, padding=100).bbox
        assert (x0, y0, x1, y1) == (0, 0, 199, 199)

    def test_contour_starts_top_left(self, scene_image: GrayImage) -> None:
        ext = extract_specimen(scene_image)
        rows, cols = np.nonzero(ext.mask.bits)
        assert ext.contour.as_list()[0] == (int(cols[0]), int(rows[0]))

    def test_dark_cavity_is_filled(self) -> None:
        img = np.full((200, 200), 20, dtype=np.uint8)
        img[disk_bits(img.shape, (100, 100), 60)] = 110
        img[disk_bits(img.shape, (100, 100), 8)] = 20
        ext = extract_specimen(GrayImage(img), smooth_radius=0)
        assert ext.mask.bits[100, 100]

    def test_reuses_components(self, scene_image: GrayImage) -> None:
        components = foreground_components(scene_image)
        a = extract_specimen(scene_image, components=components)
        b = extract_specimen(scene_image)
        np.testing.assert_array_equal(a.mask.bits, b.mask.bits)

    def test_blank_frame(self) -> None:
        with pytest.raises(SpecimenError, match="no specimen found"):
            extract_specimen(GrayImage(np.full((50, 50), 30, dtype=np.uint8)))

    def test_negative_padding(self, scene_image: GrayImage) -> None:
        with pytest.raises(SpecimenError):
            extract_specimen(scene_image, padding=-1)


class TestExtractSpecimenOnPhantoms:
    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_mask_overlaps_ground_truth(self, seed: int) -> None:
        p = _phantom(seed)
        mask = extract_specimen(p.image).mask.bits
        truth = p.specimen_gt.bits
        iou = np.count_nonzero(mask & truth) / np.count_nonzero(mask | truth)
        assert iou >= 0.98

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_rendered_mask_is_a_fixed_point(self, seed: int) -> None:
        first = extract_specimen(_phantom(seed).image)
        rendered = GrayImage(np.where(first.mask.bits, 255, 0).astype(np.uint8))
        second = extract_specimen(rendered)
        np.testing.assert_array_equal(second.mask.bits, first.mask.bits)
        assert second.bbox == first.bbox

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_smoothing_moves_boundary_by_at_most_two_radii(self, seed: int) -> None:
        p = _phantom(seed)
        t, labels = foreground_components(p.image)
        raw = fill_holes(labels.component(labels.largest_label())).bits
        smoothed = extract_specimen(p.image, components=(t, labels)).mask.bits
        assert _hausdorff(_boundary(raw), _boundary(smoothed)) <= 2 * DEFAULT_SMOOTH_RADIUS


class TestRoi:
    def test_crop_zeroes_outside_specimen(self, scene_image: GrayImage) -> None:
        ext = extract_specimen(scene_image)
        roi = crop_roi(scene_image, ext)
        x0, y0, _, _ = ext.bbox
        assert roi.shape == ext.roi_shape
        assert roi.pixels[100 - y0, 80 - x0] == 180
        assert roi.pixels[0, 0] == 0
        assert ext.offset == (x0, y0)

    def test_paste_inverts_crop(self, scene_image: GrayImage) -> None:
        ext = extract_specimen(scene_image)
        tumor = BinaryMask(disk_bits(scene_image.shape, (80, 100), 20))
        back = paste_roi_mask(crop_mask(tumor, ext), ext, scene_image.shape)
        np.testing.assert_array_equal(back.bits, tumor.bits)

    def test_paste_rejects_wrong_shape(self, scene_image: GrayImage) -> None:
        ext = extract_specimen(scene_image)
        with pytest.raises(SpecimenError):
            paste_roi_mask(BinaryMask.empty(3, 3), ext, scene_image.shape)

    def test_crop_rejects_mismatched_frame(self, scene_image: GrayImage) -> None:
        ext = extract_specimen(scene_image)
        with pytest.raises(SpecimenError):
            crop_roi(GrayImage(np.zeros((20, 20), dtype=np.uint8)), ext)
