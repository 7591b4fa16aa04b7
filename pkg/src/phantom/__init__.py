"""
phantom: synthetic specimen-mammogram scenes with ground-truth masks and analytic margins.
"""

from phantom.generator import (
    DatasetBundle,
    Phantom,
    PhantomError,
    PhantomRanges,
    PhantomSpec,
    concentric_spec,
    generate,
    generate_dataset,
)

__all__ = [
    "concentric_spec",
    "DatasetBundle",
    "generate",
    "generate_dataset",
    "Phantom",
    "PhantomError",
    "PhantomRanges",
    "PhantomSpec",
]
