"""Tests for margin profiles, clock-direction widths and agreement statistics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from margin_core.contracts import (
    BinaryMask,
    Clock,
    ClockMargins,
    ImageDirection,
    PixelDensity,
    SafetyPolicy,
)
from margin_core.errors import MarginError
from margin_core.margins import (
    caution_region,
    clock_direction,
    clock_margins,
    exterior_distance,
    margin_agreement,
    margin_profile,
    prepare_tumor,
)
from phantom.generator import Phantom, PhantomRanges, generate, sample_spec
from tests.conftest import disk_bits

UNIT = PixelDensity(1.0)


def _scaled_phantom(seed: int) -> Phantom:
    """Sampled phantom at 5.5 to 7.5 px/mm."""
    return generate(sample_spec(np.random.default_rng(seed), PhantomRanges().scaled(2.5)))


def _point_margins(tumor: np.ndarray, specimen: np.ndarray) -> dict[tuple[int, int], float]:
    profile = margin_profile(BinaryMask(tumor), BinaryMask(specimen), UNIT)
    return {e.point: e.margin_mm for e in profile.entries}


def _march_oracle(
    tumor: np.ndarray,
    specimen: np.ndarray,
    origin: tuple[float, float],
    step: tuple[int, int],
    dt: float = 0.25,
) -> float | None:
    """Edge-to-edge gap (px) found by sampling the ray every *dt* px from the continuous centroid."""
    h, w = tumor.shape
    last_tumor: float | None = None
    t = 0.0
    while True:
        sx = math.floor(origin[0] + t * step[0] + 0.5)
        sy = math.floor(origin[1] + t * step[1] + 0.5)
        if not (0 <= sx < w and 0 <= sy < h):
            return None
        if not specimen[sy, sx]:
            return None if last_tumor is None else t - last_tumor - dt
        if tumor[sy, sx]:
            last_tumor = t
        t += dt


@pytest.fixture
def box_pair() -> tuple[BinaryMask, BinaryMask]:
    """Specimen y 5..34, x 5..54 in a 40x60 frame; tumor y 15..24, x 20..29."""
    specimen = np.zeros((40, 60), dtype=bool)
    specimen[5:35, 5:55] = True
    tumor = np.zeros_like(specimen)
    tumor[15:25, 20:30] = True
    return BinaryMask(tumor), BinaryMask(specimen)


class TestPrepareTumor:
    def test_clean_pair_has_no_warnings(self, box_pair) -> None:
        tumor, specimen = box_pair
        cleaned, warnings = prepare_tumor(tumor, specimen)
        assert warnings == []
        np.testing.assert_array_equal(cleaned.bits, tumor.bits)

    def test_clips_outside_pixels(self, box_pair) -> None:
        tumor, specimen = box_pair
        bits = tumor.bits.copy()
        bits[15:25, 0:30] = True
        cleaned, warnings = prepare_tumor(BinaryMask(bits), specimen)
        assert any("clipped 50" in w for w in warnings)
        assert not (cleaned.bits & ~specimen.bits).any()

    def test_keeps_largest_component(self, box_pair) -> None:
        tumor, specimen = box_pair
        bits = tumor.bits.copy()
        bits[30, 45] = True
        cleaned, warnings = prepare_tumor(BinaryMask(bits), specimen)
        assert cleaned.area == 100
        assert any("2 components" in w for w in warnings)

    def test_empty_tumor(self, box_pair) -> None:
        _, specimen = box_pair
        with pytest.raises(MarginError, match="no tumor mask"):
            prepare_tumor(BinaryMask.empty(40, 60), specimen)

    def test_tumor_outside_specimen(self, box_pair) -> None:
        _, specimen = box_pair
        bits = np.zeros((40, 60), dtype=bool)
        bits[0:3, 0:3] = True
        with pytest.raises(MarginError, match="no tumor mask"):
            prepare_tumor(BinaryMask(bits), specimen)

    def test_shape_mismatch(self, box_pair) -> None:
        tumor, _ = box_pair
        with pytest.raises(MarginError):
            prepare_tumor(tumor, BinaryMask(np.ones((10, 10), dtype=bool)))


class TestMarginProfile:
    def test_min_margin_is_centre_distance_to_exterior(self, box_pair) -> None:
        tumor, specimen = box_pair
        profile = margin_profile(tumor, specimen, UNIT)
        assert profile.min_margin_mm == pytest.approx(11.0)
        assert len(profile.entries) == 36
        assert profile.tumor_contour.as_list()[0] == (20, 15)

    def test_density_scales_margins(self, box_pair) -> None:
        tumor, specimen = box_pair
        profile = margin_profile(tumor, specimen, PixelDensity(2.0))
        assert profile.min_margin_mm == pytest.approx(5.5)
        assert all(e.caution for e in profile.entries if e.margin_mm < 10.0)

    def test_caution_is_strictly_below_threshold(self, box_pair) -> None:
        tumor, specimen = box_pair
        policy = SafetyPolicy(threshold_mm=12.0)
        profile = margin_profile(tumor, specimen, UNIT, policy)
        caution = caution_region(profile)
        assert len(caution) == 20
        assert all(y in (15, 24) for _, y in caution)
        assert caution == [e.point for e in profile.entries if e.caution]

    def test_frame_edge_counts_as_exterior(self) -> None:
        specimen = BinaryMask(np.ones((10, 10), dtype=bool))
        tumor = np.zeros((10, 10), dtype=bool)
        tumor[5, 2] = True
        profile = margin_profile(BinaryMask(tumor), specimen, UNIT)
        assert profile.min_margin_mm == pytest.approx(3.0)
        assert exterior_distance(specimen).at(0, 0) == pytest.approx(1.0)

    def test_policy_rejects_nonpositive_threshold(self) -> None:
        with pytest.raises(MarginError):
            SafetyPolicy(threshold_mm=0.0)


class TestClockMargins:
    def test_directions_with_twelve_up(self, box_pair) -> None:
        tumor, specimen = box_pair
        clock = clock_margins(tumor, specimen, UNIT)
        assert clock.widths_mm == {Clock.TWELVE: 10.0, Clock.THREE: 25.0, Clock.SIX: 10.0, Clock.NINE: 15.0}
        assert clock.failures == {}
        assert clock.origin == pytest.approx((24.5, 19.5))

    def test_rotated_orientation(self, box_pair) -> None:
        tumor, specimen = box_pair
        clock = clock_margins(tumor, specimen, PixelDensity(2.0), ImageDirection.RIGHT)
        assert clock.get(Clock.TWELVE) == pytest.approx(12.5)
        assert clock.get(Clock.THREE) == pytest.approx(5.0)
        assert clock.get(Clock.SIX) == pytest.approx(7.5)
        assert clock.get(Clock.NINE) == pytest.approx(5.0)

    def test_ray_missing_tumor_is_reported(self) -> None:
        specimen = np.zeros((40, 40), dtype=bool)
        specimen[2:38, 2:38] = True
        tumor = np.zeros_like(specimen)
        tumor[10, 10:20] = True
        tumor[10:20, 10] = True
        clock = clock_margins(BinaryMask(tumor), BinaryMask(specimen), UNIT)
        assert clock.get(Clock.TWELVE) is not None
        assert clock.get(Clock.THREE) is None
        assert "never crossed" in clock.failures[Clock.THREE]
        assert set(clock.present()) == {Clock.TWELVE, Clock.NINE}

    def test_ray_leaving_frame_is_reported(self) -> None:
        specimen = BinaryMask(np.ones((12, 12), dtype=bool))
        tumor = np.zeros((12, 12), dtype=bool)
        tumor[5:7, 5:7] = True
        clock = clock_margins(BinaryMask(tumor), specimen, UNIT)
        assert clock.present() == {}
        assert all("left the frame" in reason for reason in clock.failures.values())

    def test_clock_direction_rotation(self) -> None:
        assert clock_direction(Clock.TWELVE) is ImageDirection.UP
        assert clock_direction(Clock.THREE) is ImageDirection.RIGHT
        assert clock_direction(Clock.NINE) is ImageDirection.LEFT
        assert clock_direction(Clock.THREE, ImageDirection.LEFT) is ImageDirection.UP
        assert clock_direction(Clock.SIX, ImageDirection.DOWN) is ImageDirection.UP


class TestPhantomGeometry:
    def test_concentric_margin_close_to_analytic(self, concentric_12mm: Phantom) -> None:
        p = concentric_12mm
        profile = margin_profile(p.tumor_gt, p.specimen_gt, p.density_gt)
        assert profile.min_margin_mm == pytest.approx(p.min_margin_mm, abs=0.5)
        assert profile.min_margin_mm >= p.min_margin_mm - 0.01

    def test_concentric_clock_widths(self, concentric_12mm: Phantom) -> None:
        p = concentric_12mm
        clock = clock_margins(p.tumor_gt, p.specimen_gt, p.density_gt)
        for c, expected in p.clock_margins_mm.items():
            assert clock.get(c) == pytest.approx(expected, abs=0.5)


class TestAgreement:
    def test_per_direction_and_pooled(self) -> None:
        auto_a = ClockMargins({Clock.TWELVE: 10.0, Clock.THREE: 5.0, Clock.SIX: None, Clock.NINE: 2.0})
        ref_a = ClockMargins({Clock.TWELVE: 8.0, Clock.THREE: 5.0, Clock.SIX: 4.0, Clock.NINE: None})
        auto_b = ClockMargins({Clock.TWELVE: 12.0, Clock.THREE: 6.0, Clock.SIX: 3.0, Clock.NINE: 1.0})
        ref_b = ClockMargins({Clock.TWELVE: 8.0, Clock.THREE: 5.0, Clock.SIX: 4.0, Clock.NINE: 1.0})
        agreement = margin_agreement([(auto_a, ref_a), (auto_b, ref_b)])

        twelve = agreement.per_direction[Clock.TWELVE]
        assert twelve.mean_mm == pytest.approx(3.0)
        assert twelve.std_mm == pytest.approx(np.sqrt(2.0))
        assert twelve.count == 2
        assert agreement.per_direction[Clock.SIX].count == 1
        assert agreement.per_direction[Clock.SIX].std_mm == 0.0
        assert agreement.per_direction[Clock.NINE].mean_mm == 0.0
        # pooled: 2, 4, 0, 1, 1, 0
        assert agreement.overall.count == 6
        assert agreement.overall.mean_mm == pytest.approx(8.0 / 6.0)

    def test_no_pairs(self) -> None:
        agreement = margin_agreement([])
        assert agreement.overall is None
        assert all(v is None for v in agreement.per_direction.values())


class TestOffsetDisks:
    """Specimen r=300 px and tumor r=200 px at 10 px/mm; tumor centre shifted 50 px right."""

    @pytest.fixture(scope="class")
    def offset_pair(self) -> tuple[BinaryMask, BinaryMask]:
        specimen = disk_bits((800, 800), (400, 400), 300)
        tumor = disk_bits((800, 800), (450, 400), 200)
        return BinaryMask(tumor), BinaryMask(specimen)

    def test_clock_widths_follow_the_shift(self, offset_pair) -> None:
        tumor, specimen = offset_pair
        clock = clock_margins(tumor, specimen, PixelDensity(10.0))
        assert clock.get(Clock.THREE) == pytest.approx(5.0, abs=0.2)
        assert clock.get(Clock.NINE) == pytest.approx(15.0, abs=0.2)

    def test_min_margin_on_the_shift_side(self, offset_pair) -> None:
        tumor, specimen = offset_pair
        profile = margin_profile(tumor, specimen, PixelDensity(10.0))
        assert profile.min_margin_mm == pytest.approx(5.0, abs=0.15)


class TestMarginProperties:
    def test_point_margins_match_nearest_exterior_scan(self) -> None:
        specimen = disk_bits((48, 48), (23, 24), 20)
        tumor = disk_bits((48, 48), (29, 21), 7)
        margins = _point_margins(tumor, specimen)

        # Exterior pixels, including a one-pixel ring beyond the frame.
        yy, xx = np.mgrid[-1:49, -1:49]
        inside = np.zeros(yy.shape, dtype=bool)
        inside[1:-1, 1:-1] = specimen
        ex_x, ex_y = xx[~inside], yy[~inside]
        for (x, y), m in margins.items():
            nearest = float(np.sqrt((ex_x - x) ** 2 + (ex_y - y) ** 2).min())
            assert m == pytest.approx(nearest, abs=0.01)

    @pytest.mark.parametrize("turns", [1, 2, 3])
    def test_rotation_permutes_point_margins(self, sampled_phantom: Phantom, turns: int) -> None:
        tumor, specimen = sampled_phantom.tumor_gt.bits, sampled_phantom.specimen_gt.bits
        before = _point_margins(tumor, specimen)
        after = _point_margins(np.rot90(tumor, turns), np.rot90(specimen, turns))
        assert len(after) == len(before)
        np.testing.assert_allclose(sorted(after.values()), sorted(before.values()), atol=0.01)

    def test_quarter_turn_maps_each_point(self, sampled_phantom: Phantom) -> None:
        tumor, specimen = sampled_phantom.tumor_gt.bits, sampled_phantom.specimen_gt.bits
        width = tumor.shape[1]
        before = _point_margins(tumor, specimen)
        after = _point_margins(np.rot90(tumor), np.rot90(specimen))
        # np.rot90 sends (x, y) to (y, width - 1 - x).
        for (x, y), m in before.items():
            assert after[(y, width - 1 - x)] == pytest.approx(m, abs=0.01)

    def test_upsampling_keeps_mm_values(self, sampled_phantom: Phantom) -> None:
        p = sampled_phantom
        density = p.density_gt.pixels_per_mm
        grow = np.ones((2, 2), dtype=bool)
        tumor2 = BinaryMask(np.kron(p.tumor_gt.bits, grow))
        specimen2 = BinaryMask(np.kron(p.specimen_gt.bits, grow))
        one_px_mm = 1.0 / density

        base = margin_profile(p.tumor_gt, p.specimen_gt, p.density_gt)
        doubled = margin_profile(tumor2, specimen2, PixelDensity(2.0 * density))
        assert doubled.min_margin_mm == pytest.approx(base.min_margin_mm, abs=one_px_mm)

        clock = clock_margins(p.tumor_gt, p.specimen_gt, p.density_gt)
        clock2 = clock_margins(tumor2, specimen2, PixelDensity(2.0 * density))
        for c, width in clock.present().items():
            assert clock2.get(c) == pytest.approx(width, abs=one_px_mm)

    @settings(max_examples=4, deadline=None)
    @given(st.integers(0, 10_000))
    def test_clock_widths_match_dense_ray_march(self, seed: int) -> None:
        p = _scaled_phantom(seed)
        tumor, specimen = p.tumor_gt.bits, p.specimen_gt.bits
        density = p.density_gt.pixels_per_mm
        clock = clock_margins(p.tumor_gt, p.specimen_gt, p.density_gt)
        for c in Clock:
            oracle_px = _march_oracle(tumor, specimen, clock.origin, clock_direction(c).step)
            width = clock.get(c)
            if oracle_px is None:
                assert width is None
            else:
                assert width * density == pytest.approx(oracle_px, abs=0.25 + 1e-9)

    @settings(max_examples=4, deadline=None)
    @given(st.integers(0, 10_000))
    def test_clock_widths_never_undercut_min_margin(self, seed: int) -> None:
        p = _scaled_phantom(seed)
        profile = margin_profile(p.tumor_gt, p.specimen_gt, p.density_gt)
        present = clock_margins(p.tumor_gt, p.specimen_gt, p.density_gt).present()
        assert present
        assert min(present.values()) >= profile.min_margin_mm - 0.2
