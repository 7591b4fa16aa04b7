"""
Training-set augmentation: random flips, rotation, zoom and elastic distortion.

Each augmented pair applies one independently sampled combination to an
image (bilinear) and its mask (nearest neighbour). Sampling is driven by a
seeded generator so a case always expands to the same pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi

from margin_core.contracts import BinaryMask, GrayImage
from segnet.errors import ShapeError


@dataclass(frozen=True)
class AugmentationSpec:
    count: int = 20
    flip_horizontal: bool = True
    flip_vertical: bool = True
    rotation_deg: float = 20.0
    zoom_range: tuple[float, float] = (0.9, 1.1)
    elastic_amplitude_px: float = 2.0
    elastic_sigma_px: float = 8.0

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError(f"augmentation count must be >= 1, got {self.count}")
        lo, hi = self.zoom_range
        if lo <= 0 or hi <= 0 or lo > hi:
            raise ValueError(f"zoom range must be positive and ordered, got {self.zoom_range}")
        if self.elastic_amplitude_px < 0 or self.elastic_sigma_px <= 0:
            raise ValueError("elastic amplitude must be >= 0 and sigma > 0")

    @classmethod
    def identity(cls, count: int = 20) -> AugmentationSpec:
        return cls(count=count, flip_horizontal=False, flip_vertical=False, rotation_deg=0.0,
                   zoom_range=(1.0, 1.0), elastic_amplitude_px=0.0)


@dataclass(frozen=True)
class AugmentParams:
    """One sampled transform combination."""

    flip_h: bool
    flip_v: bool
    angle_deg: float
    zoom: float
    elastic_seed: int
    elastic_amplitude_px: float = 0.0
    elastic_sigma_px: float = 8.0

    @property
    def is_geometric_identity(self) -> bool:
        return self.angle_deg == 0.0 and self.zoom == 1.0 and self.elastic_amplitude_px == 0.0


@dataclass(frozen=True)
class AugmentedPair:
    image: GrayImage
    mask: BinaryMask
    params: AugmentParams


def sample_params(rng: np.random.Generator, spec: AugmentationSpec) -> AugmentParams:
    """Draw one combination; always consumes the same number of variates."""
    u_h, u_v = rng.random(), rng.random()
    angle = rng.uniform(-spec.rotation_deg, spec.rotation_deg)
    zoom = rng.uniform(*spec.zoom_range)
    seed = int(rng.integers(0, 2**31 - 1))
    return AugmentParams(
        flip_h=spec.flip_horizontal and u_h < 0.5,
        flip_v=spec.flip_vertical and u_v < 0.5,
        angle_deg=float(angle) if spec.rotation_deg > 0 else 0.0,
        zoom=float(zoom) if spec.zoom_range[0] < spec.zoom_range[1] else float(spec.zoom_range[0]),
        elastic_seed=seed,
        elastic_amplitude_px=spec.elastic_amplitude_px,
        elastic_sigma_px=spec.elastic_sigma_px,
    )


def _elastic_field(shape: tuple[int, int], params: AugmentParams) -> tuple[np.ndarray, np.ndarray]:
    """Smoothed random displacement, rescaled so its largest component equals the amplitude."""
    rng = np.random.default_rng(params.elastic_seed)
    fields = []
    for _ in range(2):
        noise = rng.uniform(-1.0, 1.0, size=shape)
        smooth = ndi.gaussian_filter(noise, sigma=params.elastic_sigma_px, mode="constant")
        peak = np.abs(smooth).max()
        fields.append(smooth * (params.elastic_amplitude_px / peak) if peak > 0 else smooth)
    return fields[0], fields[1]


def apply_augmentation(img: GrayImage, mask: BinaryMask, params: AugmentParams) -> AugmentedPair:
    """Apply one combination: flips, then rotation about the centre with zoom, then elastic shift."""
    if img.shape != mask.shape:
        raise ShapeError(f"image {img.shape} and mask {mask.shape} differ in shape")
    pixels = img.pixels
    bits = mask.bits
    if params.flip_h:
        pixels, bits = pixels[:, ::-1], bits[:, ::-1]
    if params.flip_v:
        pixels, bits = pixels[::-1, :], bits[::-1, :]
    if params.is_geometric_identity:
        return AugmentedPair(GrayImage(pixels.copy()), BinaryMask(bits.copy()), params)

    h, w = img.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    dy, dx = yy - cy, xx - cx
    theta = math.radians(params.angle_deg)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    # Inverse map: source = R(-theta) (dest - centre) / zoom + centre + displacement.
    src_x = (cos_t * dx + sin_t * dy) / params.zoom + cx
    src_y = (-sin_t * dx + cos_t * dy) / params.zoom + cy
    if params.elastic_amplitude_px > 0:
        ex, ey = _elastic_field((h, w), params)
        src_x = src_x + ex
        src_y = src_y + ey
    coords = [src_y, src_x]

    out_img = ndi.map_coordinates(pixels.astype(np.float64), coords, order=1, mode="constant", cval=0.0)
    out_mask = ndi.map_coordinates(bits.astype(np.uint8), coords, order=0, mode="constant", cval=0)
    return AugmentedPair(
        GrayImage(np.clip(np.rint(out_img), 0, 255).astype(np.uint8)),
        BinaryMask(out_mask > 0),
        params,
    )


def augment_case(
    img: GrayImage,
    mask: BinaryMask,
    spec: AugmentationSpec | None = None,
    seed: int = 0,
) -> list[AugmentedPair]:
    """Expand one case into ``spec.count`` augmented pairs, deterministic per seed."""
    spec = spec or AugmentationSpec()
    if img.shape != mask.shape:
        raise ShapeError(f"image {img.shape} and mask {mask.shape} differ in shape")
    rng = np.random.default_rng(seed)
    return [apply_augmentation(img, mask, sample_params(rng, spec)) for _ in range(spec.count)]
