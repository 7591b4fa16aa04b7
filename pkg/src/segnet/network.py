"""
Encoder-decoder segmenter with max-pooling-index unpooling.

Encoder stage i: conv 3x3 -> batch-norm -> ReLU -> 2x2 max-pool (indices kept).
Decoder stage i: unpool with the indices of encoder stage (depth - 1 - i)
-> conv 3x3 -> batch-norm -> ReLU. A 1x1 conv head maps to class logits.

Parameter names: ``enc{i}.conv.w``, ``enc{i}.conv.b``, ``enc{i}.bn.gamma``,
``enc{i}.bn.beta``, the same for ``dec{i}``, then ``head.conv.w/b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from segnet.errors import ShapeError
from segnet.layers import (
    BatchNormCache,
    BatchNormStats,
    ConvCache,
    Mode,
    PoolIndices,
    batchnorm_backward,
    batchnorm_forward,
    conv_backward,
    conv_forward,
    pool_backward,
    pool_with_indices,
    relu_backward,
    relu_forward,
    softmax,
    unpool_backward,
    unpool_with_indices,
)


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture: input channels, encoder widths, classes and square input size."""

    in_channels: int = 1
    widths: tuple[int, ...] = (16, 32, 64)
    num_classes: int = 2
    input_size: int = 64
    kernel_size: int = 3

    def __post_init__(self) -> None:
        if not self.widths:
            raise ShapeError("network needs at least one encoder stage")
        if self.input_size % (2 ** len(self.widths)):
            raise ShapeError(
                f"input size {self.input_size} is not divisible by 2^{len(self.widths)}"
            )
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))

    @property
    def depth(self) -> int:
        return len(self.widths)

    def decoder_widths(self) -> tuple[int, ...]:
        """Output channels of decoder stage i mirror the encoder: widths[depth-2-i], ending at widths[0]."""
        return tuple(self.widths[max(self.depth - 2 - i, 0)] for i in range(self.depth))

    def conv_layers(self) -> list[tuple[str, int, int, int]]:
        """``(prefix, out, in, k)`` for every conv in weights-file order."""
        layers: list[tuple[str, int, int, int]] = []
        c_in = self.in_channels
        for i, w in enumerate(self.widths):
            layers.append((f"enc{i}", w, c_in, self.kernel_size))
            c_in = w
        for i, w in enumerate(self.decoder_widths()):
            layers.append((f"dec{i}", w, c_in, self.kernel_size))
            c_in = w
        layers.append(("head", self.num_classes, c_in, 1))
        return layers


@dataclass(frozen=True)
class _BlockCache:
    conv: ConvCache
    bn: BatchNormCache
    relu: np.ndarray
    pool: PoolIndices | None = None


@dataclass(frozen=True)
class ForwardPass:
    logits: np.ndarray
    encoder: tuple[_BlockCache, ...]
    decoder: tuple[_BlockCache, ...]
    head: ConvCache
    stats: dict[str, BatchNormStats]


class Network:
    """Parameter set plus batch-norm running statistics.

    The trainer owns a network exclusively and swaps in new parameter dicts;
    forward/backward never mutate it.
    """

    def __init__(
        self,
        spec: NetworkSpec,
        params: dict[str, np.ndarray],
        stats: dict[str, BatchNormStats],
    ) -> None:
        self.spec = spec
        self.params = params
        self.stats = stats

    # -- construction -------------------------------------------------------

    @classmethod
    def initialize(cls, spec: NetworkSpec | None = None, seed: int = 0, dtype: str = "float64") -> Network:
        """He-normal conv weights from *seed*, zero biases, gamma 1, beta 0."""
        spec = spec or NetworkSpec()
        rng = np.random.default_rng(seed)
        dt = np.dtype(dtype)
        params: dict[str, np.ndarray] = {}
        stats: dict[str, BatchNormStats] = {}
        for prefix, out_c, in_c, k in spec.conv_layers():
            std = math.sqrt(2.0 / (in_c * k * k))
            params[f"{prefix}.conv.w"] = (rng.standard_normal((out_c, in_c, k, k)) * std).astype(dt)
            params[f"{prefix}.conv.b"] = np.zeros(out_c, dtype=dt)
            if prefix != "head":
                params[f"{prefix}.bn.gamma"] = np.ones(out_c, dtype=dt)
                params[f"{prefix}.bn.beta"] = np.zeros(out_c, dtype=dt)
                stats[prefix] = BatchNormStats.initial(out_c, dt)
        return cls(spec, params, stats)

    def copy(self) -> Network:
        return Network(
            self.spec,
            {k: v.copy() for k, v in self.params.items()},
            {k: BatchNormStats(s.running_mean.copy(), s.running_var.copy()) for k, s in self.stats.items()},
        )

    @property
    def dtype(self) -> np.dtype:
        return self.params["head.conv.w"].dtype

    # -- forward / backward -------------------------------------------------

    def _block(self, prefix: str, x: np.ndarray, mode: Mode, new_stats: dict[str, BatchNormStats]):
        p = self.params
        y, conv_cache = conv_forward(x, p[f"{prefix}.conv.w"], p[f"{prefix}.conv.b"])
        y, bn_cache, new_stats[prefix] = batchnorm_forward(
            y, p[f"{prefix}.bn.gamma"], p[f"{prefix}.bn.beta"], self.stats[prefix], mode
        )
        y, active = relu_forward(y)
        return y, conv_cache, bn_cache, active

    def forward(self, x: np.ndarray, mode: Mode = "infer") -> ForwardPass:
        """Logits ``[b, classes, h, w]`` plus caches and the updated running stats."""
        spec = self.spec
        if x.ndim != 4 or x.shape[1] != spec.in_channels or x.shape[2:] != (spec.input_size, spec.input_size):
            raise ShapeError(
                f"network expects [b, {spec.in_channels}, {spec.input_size}, {spec.input_size}], got {x.shape}"
            )
        x = x.astype(self.dtype, copy=False)
        new_stats: dict[str, BatchNormStats] = {}
        encoder: list[_BlockCache] = []
        for i in range(spec.depth):
            y, conv_c, bn_c, active = self._block(f"enc{i}", x, mode, new_stats)
            x, indices = pool_with_indices(y)
            encoder.append(_BlockCache(conv_c, bn_c, active, indices))

        decoder: list[_BlockCache] = []
        for i in range(spec.depth):
            indices = encoder[spec.depth - 1 - i].pool
            up = unpool_with_indices(x, indices)
            x, conv_c, bn_c, active = self._block(f"dec{i}", up, mode, new_stats)
            decoder.append(_BlockCache(conv_c, bn_c, active, indices))

        logits, head_cache = conv_forward(x, self.params["head.conv.w"], self.params["head.conv.b"])
        return ForwardPass(logits, tuple(encoder), tuple(decoder), head_cache, new_stats)

    def backward(self, fp: ForwardPass, grad_logits: np.ndarray) -> dict[str, np.ndarray]:
        """Parameter gradients for the loss whose logits-gradient is *grad_logits*."""
        grads: dict[str, np.ndarray] = {}
        g, grads["head.conv.w"], grads["head.conv.b"] = conv_backward(fp.head, grad_logits)

        def block_back(prefix: str, cache: _BlockCache, g: np.ndarray) -> np.ndarray:
            g = relu_backward(cache.relu, g)
            g, grads[f"{prefix}.bn.gamma"], grads[f"{prefix}.bn.beta"] = batchnorm_backward(cache.bn, g)
            g, grads[f"{prefix}.conv.w"], grads[f"{prefix}.conv.b"] = conv_backward(cache.conv, g)
            return g

        for i in reversed(range(self.spec.depth)):
            cache = fp.decoder[i]
            g = block_back(f"dec{i}", cache, g)
            g = unpool_backward(g, cache.pool)
        for i in reversed(range(self.spec.depth)):
            cache = fp.encoder[i]
            g = pool_backward(g, cache.pool)
            g = block_back(f"enc{i}", cache, g)
        return grads

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        """Per-pixel class probabilities in inference mode."""
        return softmax(self.forward(x, "infer").logits, axis=1)
