"""Pytest fixtures: small rasters, phantoms and a temp app config for deterministic tests."""

from pathlib import Path

import numpy as np
import pytest

from margin_core.contracts import BinaryMask, GrayImage
from phantom.generator import Phantom, PhantomRanges, concentric_spec, generate, sample_spec


def disk_bits(shape: tuple[int, int], center: tuple[float, float], radius: float) -> np.ndarray:
    """Pixels whose centre lies within *radius* of (x, y) *center*."""
    yy, xx = np.mgrid[0 : shape[0], 0 : shape[1]]
    return (xx - center[0]) ** 2 + (yy - center[1]) ** 2 <= radius * radius


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def square_mask() -> BinaryMask:
    """10x10 frame with a 4x4 foreground square at x, y in 3..6."""
    bits = np.zeros((10, 10), dtype=bool)
    bits[3:7, 3:7] = True
    return BinaryMask(bits)


@pytest.fixture
def scene_image() -> GrayImage:
    """200x200 frame: specimen disk r=60 at (80, 100), coin disk r=20 at (165, 35)."""
    img = np.full((200, 200), 20, dtype=np.uint8)
    img[disk_bits(img.shape, (80, 100), 60)] = 110
    img[disk_bits(img.shape, (80, 100), 20)] = 180
    img[disk_bits(img.shape, (165, 35), 20)] = 240
    return GrayImage(img)


@pytest.fixture(scope="session")
def concentric_12mm() -> Phantom:
    return generate(concentric_spec(12.0))


@pytest.fixture(scope="session")
def concentric_8mm() -> Phantom:
    return generate(concentric_spec(8.0))


@pytest.fixture(scope="session")
def sampled_phantom() -> Phantom:
    return generate(sample_spec(np.random.default_rng(7), PhantomRanges()))


@pytest.fixture
def cli_config(tmp_path: Path) -> Path:
    """Temp config.yaml: journal and outputs under tmp_path, structured events off."""
    config_path = tmp_path / "config.yaml"
    config_path.write_text(
        f"""
model_path: "{tmp_path / 'models' / 'segnet.msg1'}"
output_dir: "{tmp_path / 'out'}"
journal:
  path: "{tmp_path / 'journal.jsonl'}"
  echo_stdout: false
logging:
  level: INFO
  structured_events: false
"""
    )
    return config_path
