"""
Synthetic specimen-mammogram phantoms with analytic ground truth.

A phantom is an elliptical specimen holding a star-convex tumor (radius
perturbed by a few low-order harmonics), a 20 mm reference coin outside the
specimen, an optional dark cavity and an optional strip of marker glyphs.
Shapes are rasterized at pixel centres; margins are computed from the
continuous shapes before rasterization.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from margin_core.contracts import BinaryMask, Clock, GrayImage, ImageDirection, PixelDensity
from margin_core.errors import MarginEngineError
from margin_core.margins import CLOCK_ORDER, clock_direction
from margin_core.specimen import crop_mask, crop_roi, extract_specimen

logger = logging.getLogger("margin.phantom")

COIN_DIAMETER_MM = 20.0
_BOUNDARY_SAMPLES = 2048
_CLEARANCE_PX = 3.0


class PhantomError(MarginEngineError):
    """A phantom spec violates its geometric constraints."""


# ---------------------------------------------------------------------------
# Spec
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Ellipse:
    center: tuple[float, float]
    semi_axes: tuple[float, float]
    rotation_deg: float = 0.0

    def implicit(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """< 1 inside, 1 on the boundary, > 1 outside."""
        t = math.radians(self.rotation_deg)
        dx, dy = x - self.center[0], y - self.center[1]
        u = math.cos(t) * dx + math.sin(t) * dy
        v = -math.sin(t) * dx + math.cos(t) * dy
        a, b = self.semi_axes
        return (u / a) ** 2 + (v / b) ** 2

    def boundary(self, n: int = _BOUNDARY_SAMPLES) -> np.ndarray:
        s = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        a, b = self.semi_axes
        t = math.radians(self.rotation_deg)
        u, v = a * np.cos(s), b * np.sin(s)
        x = self.center[0] + math.cos(t) * u - math.sin(t) * v
        y = self.center[1] + math.sin(t) * u + math.cos(t) * v
        return np.stack([x, y], axis=1)

    def exit_distance(self, origin: tuple[float, float], direction: tuple[float, float]) -> float:
        """Distance from an inside *origin* to the boundary along *direction*."""
        t = math.radians(self.rotation_deg)
        a, b = self.semi_axes
        ox, oy = origin[0] - self.center[0], origin[1] - self.center[1]
        dx, dy = direction
        ou, ov = math.cos(t) * ox + math.sin(t) * oy, -math.sin(t) * ox + math.cos(t) * oy
        du, dv = math.cos(t) * dx + math.sin(t) * dy, -math.sin(t) * dx + math.cos(t) * dy
        qa = (du / a) ** 2 + (dv / b) ** 2
        qb = 2.0 * (ou * du / a**2 + ov * dv / b**2)
        qc = (ou / a) ** 2 + (ov / b) ** 2 - 1.0
        disc = qb * qb - 4.0 * qa * qc
        return (-qb + math.sqrt(max(disc, 0.0))) / (2.0 * qa)


@dataclass(frozen=True)
class Harmonic:
    order: int
    amplitude: float  # fraction of the base radius
    phase: float


@dataclass(frozen=True)
class TumorShape:
    center: tuple[float, float]
    base_radius: float
    harmonics: tuple[Harmonic, ...] = ()

    def radius_at(self, theta: np.ndarray) -> np.ndarray:
        r = np.ones_like(theta, dtype=np.float64)
        for h in self.harmonics:
            r = r + h.amplitude * np.cos(h.order * theta + h.phase)
        return self.base_radius * r

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        dx, dy = x - self.center[0], y - self.center[1]
        return np.hypot(dx, dy) <= self.radius_at(np.arctan2(dy, dx))

    def boundary(self, n: int = _BOUNDARY_SAMPLES) -> np.ndarray:
        theta = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        r = self.radius_at(theta)
        return np.stack([self.center[0] + r * np.cos(theta), self.center[1] + r * np.sin(theta)], axis=1)

    def centroid(self, n: int = 8192) -> tuple[float, float]:
        """Centroid of the continuous star-shaped region."""
        theta = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        r = self.radius_at(theta)
        area = 0.5 * np.sum(r**2)
        cx = np.sum(r**3 * np.cos(theta)) / 3.0 / area
        cy = np.sum(r**3 * np.sin(theta)) / 3.0 / area
        return (self.center[0] + float(cx), self.center[1] + float(cy))


@dataclass(frozen=True)
class Disk:
    center: tuple[float, float]
    radius: float

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.hypot(x - self.center[0], y - self.center[1]) <= self.radius


@dataclass(frozen=True)
class IntensityLevels:
    background: int = 25
    specimen: int = 110
    tumor: int = 185
    coin: int = 242
    marker: int = 240


@dataclass(frozen=True)
class PhantomSpec:
    frame: tuple[int, int]  # (width, height)
    specimen: Ellipse
    tumor: TumorShape
    coin: Disk
    cavity: Disk | None = None
    levels: IntensityLevels = field(default_factory=IntensityLevels)
    noise_sigma: float = 0.0
    markers: bool = False
    seed: int = 0

    @property
    def density(self) -> PixelDensity:
        return PixelDensity(2.0 * self.coin.radius / COIN_DIAMETER_MM)

    def marker_box(self) -> tuple[float, float, float, float]:
        """(x0, y0, x1, y1) of the marker strip in the lower-left of the frame."""
        w, h = self.frame
        return (0.05 * w, 0.91 * h, 0.45 * w, min(0.97 * h, 0.91 * h + 40.0))

    def to_dict(self) -> dict:
        return asdict(self)


def _min_distance(points: np.ndarray, others: np.ndarray) -> float:
    best = math.inf
    for start in range(0, len(points), 256):
        chunk = points[start : start + 256]
        d = np.hypot(chunk[:, None, 0] - others[None, :, 0], chunk[:, None, 1] - others[None, :, 1])
        best = min(best, float(d.min()))
    return best


def validate_spec(spec: PhantomSpec) -> None:
    """Raise PhantomError unless the scene satisfies every containment/disjointness rule."""
    w, h = spec.frame
    if w < 16 or h < 16:
        raise PhantomError(f"frame {spec.frame} too small")
    lv = spec.levels
    if not (lv.background < lv.specimen < lv.tumor < lv.coin <= 255):
        raise PhantomError("intensity levels must satisfy background < specimen < tumor < coin")
    if spec.noise_sigma < 0:
        raise PhantomError("noise sigma must be >= 0")

    ell = spec.specimen.boundary()
    if ell[:, 0].min() < _CLEARANCE_PX or ell[:, 0].max() > w - 1 - _CLEARANCE_PX or \
            ell[:, 1].min() < _CLEARANCE_PX or ell[:, 1].max() > h - 1 - _CLEARANCE_PX:
        raise PhantomError("specimen ellipse leaves the frame")

    tumor = spec.tumor
    if tumor.base_radius <= 0 or sum(abs(hm.amplitude) for hm in tumor.harmonics) >= 1.0:
        raise PhantomError("tumor radius must stay positive")
    tb = tumor.boundary()
    if np.any(spec.specimen.implicit(tb[:, 0], tb[:, 1]) >= 1.0) or _min_distance(tb, ell) < _CLEARANCE_PX:
        raise PhantomError("tumor is not inside the specimen")

    coin = spec.coin
    cx, cy = coin.center
    if cx - coin.radius < 0 or cy - coin.radius < 0 or cx + coin.radius > w - 1 or cy + coin.radius > h - 1:
        raise PhantomError("coin leaves the frame")
    if spec.specimen.implicit(np.array(cx), np.array(cy)) <= 1.0 or \
            _min_distance(np.array([coin.center]), ell) <= coin.radius + _CLEARANCE_PX:
        raise PhantomError("coin overlaps the specimen")

    if spec.cavity is not None:
        cav = spec.cavity
        ring = Disk(cav.center, cav.radius)
        pts = TumorShape(ring.center, ring.radius).boundary(512)
        if np.any(spec.specimen.implicit(pts[:, 0], pts[:, 1]) >= 1.0) or _min_distance(pts, ell) < _CLEARANCE_PX:
            raise PhantomError("cavity is not inside the specimen")
        if np.any(tumor.contains(pts[:, 0], pts[:, 1])) or _min_distance(pts, tb) < _CLEARANCE_PX:
            raise PhantomError("cavity overlaps the tumor")

    if spec.markers:
        x0, y0, x1, y1 = spec.marker_box()
        if ell[:, 1].max() >= y0 - _CLEARANCE_PX and ell[:, 0].min() <= x1:
            raise PhantomError("marker strip overlaps the specimen")
        if cy + coin.radius >= y0 - _CLEARANCE_PX and cx - coin.radius <= x1:
            raise PhantomError("marker strip overlaps the coin")


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Phantom:
    image: GrayImage
    specimen_gt: BinaryMask
    tumor_gt: BinaryMask
    density_gt: PixelDensity
    clock_margins_mm: dict[Clock, float]
    min_margin_mm: float
    tumor_centroid: tuple[float, float]
    spec: PhantomSpec

    def meta(self) -> dict:
        return {
            "pixels_per_mm": self.density_gt.pixels_per_mm,
            "clock_margins_mm": {c.value: m for c, m in self.clock_margins_mm.items()},
            "min_margin_mm": self.min_margin_mm,
            "tumor_centroid": list(self.tumor_centroid),
            "spec": self.spec.to_dict(),
        }


def _marker_mask(spec: PhantomSpec, xx: np.ndarray, yy: np.ndarray) -> np.ndarray:
    """Row of thin vertical bars (each well under the coin area filter)."""
    x0, y0, x1, y1 = spec.marker_box()
    bar_w = max(2.0, 0.006 * spec.frame[0])
    pitch = 3.0 * bar_w
    in_band = (yy >= y0) & (yy <= y1) & (xx >= x0) & (xx <= x1)
    return in_band & (((xx - x0) % pitch) < bar_w)


def analytic_clock_margins(
    spec: PhantomSpec,
    twelve_oclock: ImageDirection = ImageDirection.UP,
    step_px: float = 0.05,
) -> tuple[dict[Clock, float], tuple[float, float]]:
    """Ray widths (mm) from the continuous tumor centroid to the specimen boundary."""
    origin = spec.tumor.centroid()
    density = spec.density.pixels_per_mm
    out: dict[Clock, float] = {}
    for clock in CLOCK_ORDER:
        dx, dy = clock_direction(clock, twelve_oclock).step
        t_exit = spec.specimen.exit_distance(origin, (dx, dy))
        ts = np.arange(0.0, t_exit, step_px)
        inside = spec.tumor.contains(origin[0] + ts * dx, origin[1] + ts * dy)
        last = int(np.flatnonzero(inside)[-1]) if inside.any() else 0
        lo, hi = ts[last], min(ts[last] + step_px, t_exit)
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if spec.tumor.contains(np.array(origin[0] + mid * dx), np.array(origin[1] + mid * dy)):
                lo = mid
            else:
                hi = mid
        out[clock] = (t_exit - 0.5 * (lo + hi)) / density
    return out, origin


def analytic_min_margin(spec: PhantomSpec, samples: int = 1024) -> float:
    """Shortest tumor-boundary to specimen-boundary distance (mm)."""
    tb = spec.tumor.boundary(samples)
    ell = spec.specimen.boundary(4 * samples)
    return _min_distance(tb, ell) / spec.density.pixels_per_mm


def generate(spec: PhantomSpec) -> Phantom:
    """Render *spec*; identical specs give bitwise-identical phantoms."""
    validate_spec(spec)
    w, h = spec.frame
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    lv = spec.levels

    specimen = spec.specimen.implicit(xx, yy) <= 1.0
    tumor = spec.tumor.contains(xx, yy) & specimen
    coin = spec.coin.contains(xx, yy)

    img = np.full((h, w), float(lv.background))
    img[specimen] = lv.specimen
    if spec.cavity is not None:
        img[spec.cavity.contains(xx, yy) & specimen] = lv.background
    img[tumor] = lv.tumor
    img[coin] = lv.coin
    if spec.markers:
        img[_marker_mask(spec, xx, yy)] = lv.marker
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        img = img + rng.normal(0.0, spec.noise_sigma, size=img.shape)
    pixels = np.clip(np.rint(img), 0, 255).astype(np.uint8)

    clock, centroid = analytic_clock_margins(spec)
    return Phantom(
        image=GrayImage(pixels),
        specimen_gt=BinaryMask(specimen),
        tumor_gt=BinaryMask(tumor),
        density_gt=spec.density,
        clock_margins_mm=clock,
        min_margin_mm=analytic_min_margin(spec),
        tumor_centroid=centroid,
        spec=spec,
    )


def concentric_spec(
    margin_mm: float,
    *,
    frame: tuple[int, int] = (800, 800),
    specimen_radius: float = 250.0,
    specimen_center: tuple[float, float] = (300.0, 400.0),
    coin_radius: float = 95.0,
    coin_center: tuple[float, float] = (680.0, 130.0),
    noise_sigma: float = 0.0,
    markers: bool = False,
    seed: int = 0,
) -> PhantomSpec:
    """Circular specimen and tumor sharing a centre, *margin_mm* apart."""
    density = 2.0 * coin_radius / COIN_DIAMETER_MM
    tumor_radius = specimen_radius - margin_mm * density
    if tumor_radius <= 0:
        raise PhantomError(f"margin {margin_mm} mm does not fit inside a {specimen_radius} px specimen")
    return PhantomSpec(
        frame=frame,
        specimen=Ellipse(specimen_center, (specimen_radius, specimen_radius)),
        tumor=TumorShape(specimen_center, tumor_radius),
        coin=Disk(coin_center, coin_radius),
        noise_sigma=noise_sigma,
        markers=markers,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhantomRanges:
    """Uniform sampling ranges; lengths are fractions of the frame unless noted."""

    frame: int = 320
    specimen_center_jitter: float = 0.04
    specimen_major: tuple[float, float] = (0.26, 0.32)
    specimen_aspect: tuple[float, float] = (0.75, 1.0)
    tumor_radius_fraction: tuple[float, float] = (0.25, 0.4)  # of the specimen minor axis
    tumor_offset_fraction: tuple[float, float] = (0.0, 0.35)
    harmonics: tuple[int, int] = (3, 5)
    harmonic_amplitude_total: tuple[float, float] = (0.05, 0.2)
    coin_radius_px: tuple[float, float] = (22.0, 30.0)
    cavity_probability: float = 0.3
    cavity_radius: tuple[float, float] = (0.02, 0.035)
    noise_sigma: tuple[float, float] = (0.0, 3.0)
    markers: bool = True

    def scaled(self, factor: float) -> PhantomRanges:
        """Same scene proportions on a frame *factor* times larger (coin scales too)."""
        lo, hi = self.coin_radius_px
        return replace(self, frame=int(round(self.frame * factor)), coin_radius_px=(lo * factor, hi * factor))


def _u(rng: np.random.Generator, bounds: tuple[float, float]) -> float:
    return float(rng.uniform(bounds[0], bounds[1])) if bounds[0] < bounds[1] else float(bounds[0])


def sample_spec(rng: np.random.Generator, ranges: PhantomRanges | None = None, max_tries: int = 200) -> PhantomSpec:
    """Draw one valid spec; rejected draws are redrawn from the same generator."""
    ranges = ranges or PhantomRanges()
    n = ranges.frame
    for _ in range(max_tries):
        a = _u(rng, ranges.specimen_major) * n
        b = a * _u(rng, ranges.specimen_aspect)
        jx, jy = rng.uniform(-1, 1, size=2) * ranges.specimen_center_jitter * n
        spec_center = (0.42 * n + jx, 0.45 * n + jy)
        ellipse = Ellipse(spec_center, (a, b), float(rng.uniform(0.0, 180.0)))

        base = _u(rng, ranges.tumor_radius_fraction) * b
        count = int(rng.integers(ranges.harmonics[0], ranges.harmonics[1] + 1))
        orders = rng.choice(np.arange(2, 8), size=count, replace=False)
        split = rng.dirichlet(np.ones(count)) * _u(rng, ranges.harmonic_amplitude_total)
        phases = rng.uniform(0.0, 2.0 * math.pi, size=count)
        harmonics = tuple(Harmonic(int(o), float(s), float(p)) for o, s, p in zip(orders, split, phases))
        off_r = _u(rng, ranges.tumor_offset_fraction) * (b - base)
        off_t = rng.uniform(0.0, 2.0 * math.pi)
        tumor = TumorShape((spec_center[0] + off_r * math.cos(off_t), spec_center[1] + off_r * math.sin(off_t)),
                           base, harmonics)

        coin_r = _u(rng, ranges.coin_radius_px)
        margin = 8.0 + float(rng.uniform(0.0, 0.03 * n))
        coin = Disk((n - coin_r - margin, coin_r + margin), coin_r)

        cavity = None
        if rng.random() < ranges.cavity_probability:
            cav_r = _u(rng, ranges.cavity_radius) * n
            cav_t = rng.uniform(0.0, 2.0 * math.pi)
            cav_d = rng.uniform(0.55, 0.8)
            cavity = Disk((spec_center[0] + cav_d * b * math.cos(cav_t),
                           spec_center[1] + cav_d * b * math.sin(cav_t)), cav_r)

        levels = IntensityLevels(
            background=int(rng.integers(15, 36)),
            specimen=int(rng.integers(100, 121)),
            tumor=int(rng.integers(170, 201)),
            coin=int(rng.integers(235, 251)),
        )
        spec = PhantomSpec(
            frame=(n, n), specimen=ellipse, tumor=tumor, coin=coin, cavity=cavity, levels=levels,
            noise_sigma=_u(rng, ranges.noise_sigma), markers=ranges.markers,
            seed=int(rng.integers(0, 2**31 - 1)),
        )
        try:
            validate_spec(spec)
        except PhantomError as exc:
            if cavity is not None:
                try:
                    spec = replace(spec, cavity=None)
                    validate_spec(spec)
                    return spec
                except PhantomError:
                    pass
            logger.debug("rejected phantom draw: %s", exc)
            continue
        return spec
    raise PhantomError(f"could not draw a valid phantom in {max_tries} tries")


@dataclass(frozen=True)
class CaseMeta:
    pixels_per_mm: float
    min_margin_mm: float
    clock_margins_mm: dict[str, float]
    spec: dict


@dataclass(frozen=True)
class DatasetBundle:
    """ROI image / ROI tumor mask pairs with metadata and a seeded train/validation split."""

    pairs: list[tuple[GrayImage, BinaryMask]]
    cases: list[CaseMeta]
    train_indices: list[int]
    validation_indices: list[int]
    seed: int

    def __len__(self) -> int:
        return len(self.pairs)

    def train_pairs(self) -> list[tuple[GrayImage, BinaryMask]]:
        return [self.pairs[i] for i in self.train_indices]

    def validation_pairs(self) -> list[tuple[GrayImage, BinaryMask]]:
        return [self.pairs[i] for i in self.validation_indices]


def split_indices(n: int, validation_fraction: float, rng: np.random.Generator) -> tuple[list[int], list[int]]:
    if not 0.0 <= validation_fraction < 1.0:
        raise PhantomError(f"validation fraction must be in [0, 1), got {validation_fraction}")
    n_val = int(round(n * validation_fraction))
    if n >= 2:
        n_val = min(max(n_val, 1 if validation_fraction > 0 else 0), n - 1)
    else:
        n_val = 0
    perm = rng.permutation(n)
    return sorted(int(i) for i in perm[n_val:]), sorted(int(i) for i in perm[:n_val])


def generate_dataset(
    n: int,
    ranges: PhantomRanges | None = None,
    seed: int = 0,
    validation_fraction: float = 0.2,
    *,
    smooth_radius: int = 5,
    padding: int = 16,
) -> DatasetBundle:
    """Sample *n* phantoms and reduce each to its (ROI image, ROI tumor mask) pair."""
    if n < 1:
        raise PhantomError(f"dataset size must be >= 1, got {n}")
    ranges = ranges or PhantomRanges()
    rng = np.random.default_rng(seed)
    pairs: list[tuple[GrayImage, BinaryMask]] = []
    cases: list[CaseMeta] = []
    for i in range(n):
        phantom = generate(sample_spec(rng, ranges))
        extraction = extract_specimen(phantom.image, smooth_radius, padding)
        roi = crop_roi(phantom.image, extraction)
        tumor = BinaryMask(phantom.tumor_gt.bits & extraction.mask.bits)
        pairs.append((roi, crop_mask(tumor, extraction)))
        cases.append(CaseMeta(
            pixels_per_mm=phantom.density_gt.pixels_per_mm,
            min_margin_mm=phantom.min_margin_mm,
            clock_margins_mm={c.value: m for c, m in phantom.clock_margins_mm.items()},
            spec=phantom.spec.to_dict(),
        ))
        logger.debug("phantom %d: roi %dx%d", i, roi.width, roi.height)
    train_idx, val_idx = split_indices(n, validation_fraction, rng)
    return DatasetBundle(pairs, cases, train_idx, val_idx, seed)
