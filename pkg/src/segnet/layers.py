"""
Layer primitives with manual backpropagation.

Tensors are numpy arrays shaped ``[batch, channels, height, width]``.
Every forward returns its output plus whatever the matching backward needs;
no layer holds state. Batch-norm running statistics are passed in and the
updated statistics are returned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from segnet.errors import ShapeError

BN_EPS = 1e-5
BN_MOMENTUM = 0.9

Mode = Literal["train", "infer"]


def _require_4d(x: np.ndarray, what: str) -> None:
    if x.ndim != 4:
        raise ShapeError(f"{what} must be 4-D [b, c, h, w], got shape {x.shape}")


# ---------------------------------------------------------------------------
# Convolution (cross-correlation, stride 1, same padding)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvCache:
    windows: np.ndarray  # [b, c, h, w, kh, kw] view into the padded input
    weights: np.ndarray


def conv_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> tuple[np.ndarray, ConvCache]:
    """Same-padded cross-correlation; *weights* is ``[out, in, k, k]`` with odd k."""
    _require_4d(x, "conv input")
    if weights.ndim != 4 or weights.shape[2] != weights.shape[3] or weights.shape[2] % 2 == 0:
        raise ShapeError(f"conv kernel must be [out, in, k, k] with odd k, got {weights.shape}")
    if x.shape[1] != weights.shape[1]:
        raise ShapeError(f"channel mismatch: input has {x.shape[1]}, kernel expects {weights.shape[1]}")
    if bias.shape != (weights.shape[0],):
        raise ShapeError(f"bias shape {bias.shape} does not match {weights.shape[0]} output channels")
    k = weights.shape[2]
    p = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    windows = sliding_window_view(xp, (k, k), axis=(2, 3))
    out = np.tensordot(windows, weights, axes=([1, 4, 5], [1, 2, 3]))  # [b, h, w, out]
    out = out.transpose(0, 3, 1, 2) + bias[None, :, None, None]
    return np.ascontiguousarray(out), ConvCache(windows=windows, weights=weights)


def conv_backward(cache: ConvCache, grad_out: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients ``(grad_x, grad_w, grad_b)`` of a :func:`conv_forward` call."""
    w = cache.weights
    k = w.shape[2]
    p = k // 2
    grad_b = grad_out.sum(axis=(0, 2, 3))
    grad_w = np.tensordot(grad_out, cache.windows, axes=([0, 2, 3], [0, 2, 3]))  # [out, in, k, k]
    gp = np.pad(grad_out, ((0, 0), (0, 0), (p, p), (p, p)))
    g_windows = sliding_window_view(gp, (k, k), axis=(2, 3))
    flipped = w[:, :, ::-1, ::-1]
    grad_x = np.tensordot(g_windows, flipped, axes=([1, 4, 5], [0, 2, 3]))  # [b, h, w, in]
    return np.ascontiguousarray(grad_x.transpose(0, 3, 1, 2)), grad_w, grad_b


# ---------------------------------------------------------------------------
# Batch normalization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BatchNormStats:
    running_mean: np.ndarray
    running_var: np.ndarray

    @classmethod
    def initial(cls, channels: int, dtype: np.dtype | type = np.float64) -> BatchNormStats:
        return cls(np.zeros(channels, dtype=dtype), np.ones(channels, dtype=dtype))


@dataclass(frozen=True)
class BatchNormCache:
    x_hat: np.ndarray
    inv_std: np.ndarray
    gamma: np.ndarray
    mode: Mode


def batchnorm_forward(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    stats: BatchNormStats,
    mode: Mode,
    *,
    eps: float = BN_EPS,
    momentum: float = BN_MOMENTUM,
) -> tuple[np.ndarray, BatchNormCache, BatchNormStats]:
    """Per-channel normalization over batch and spatial axes.

    Train mode uses batch statistics and returns updated running statistics
    (``running = momentum * running + (1 - momentum) * batch``); infer mode
    uses the running statistics and returns them unchanged.
    """
    _require_4d(x, "batch-norm input")
    c = x.shape[1]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ShapeError(f"batch-norm parameters must have shape ({c},)")
    if mode == "train":
        count = x.shape[0] * x.shape[2] * x.shape[3]
        if count < 2:
            raise ShapeError("batch-norm needs at least 2 values per channel in train mode")
        mean = x.mean(axis=(0, 2, 3))
        var = x.var(axis=(0, 2, 3))
        new_stats = BatchNormStats(
            running_mean=momentum * stats.running_mean + (1.0 - momentum) * mean,
            running_var=momentum * stats.running_var + (1.0 - momentum) * var,
        )
    elif mode == "infer":
        mean, var = stats.running_mean, stats.running_var
        new_stats = stats
    else:
        raise ShapeError(f"unknown batch-norm mode {mode!r}")

    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
    y = gamma[None, :, None, None] * x_hat + beta[None, :, None, None]
    return y, BatchNormCache(x_hat=x_hat, inv_std=inv_std, gamma=gamma, mode=mode), new_stats


def batchnorm_backward(cache: BatchNormCache, grad_out: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients ``(grad_x, grad_gamma, grad_beta)``."""
    x_hat = cache.x_hat
    grad_gamma = (grad_out * x_hat).sum(axis=(0, 2, 3))
    grad_beta = grad_out.sum(axis=(0, 2, 3))
    g_hat = grad_out * cache.gamma[None, :, None, None]
    inv_std = cache.inv_std[None, :, None, None]
    if cache.mode == "infer":
        return g_hat * inv_std, grad_gamma, grad_beta
    m = x_hat.shape[0] * x_hat.shape[2] * x_hat.shape[3]
    sum_g = g_hat.sum(axis=(0, 2, 3), keepdims=True)
    sum_gx = (g_hat * x_hat).sum(axis=(0, 2, 3), keepdims=True)
    grad_x = inv_std / m * (m * g_hat - sum_g - x_hat * sum_gx)
    return grad_x, grad_gamma, grad_beta


# ---------------------------------------------------------------------------
# ReLU
# ---------------------------------------------------------------------------


def relu_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    active = x > 0
    return np.where(active, x, 0.0).astype(x.dtype, copy=False), active


def relu_backward(active: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    return np.where(active, grad_out, 0.0).astype(grad_out.dtype, copy=False)


# ---------------------------------------------------------------------------
# Max pooling with indices
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PoolIndices:
    """Winner of every 2x2 window as a flat index into the pooled layer's input."""

    input_shape: tuple[int, int, int, int]
    flat: np.ndarray  # int64, shape of the pooled tensor

    @property
    def pooled_shape(self) -> tuple[int, ...]:
        return tuple(self.flat.shape)


def pool_with_indices(x: np.ndarray) -> tuple[np.ndarray, PoolIndices]:
    """2x2 max-pool, stride 2; ties go to the first cell in scan order.

    Raises
    ------
    ShapeError
        "shape not poolable" when height or width is odd.
    """
    _require_4d(x, "pool input")
    b, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"shape not poolable: {x.shape}")
    ho, wo = h // 2, w // 2
    # Window cells in scan order: (0,0), (0,1), (1,0), (1,1).
    windows = x.reshape(b, c, ho, 2, wo, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, ho, wo, 4)
    arg = windows.argmax(axis=-1)
    pooled = np.take_along_axis(windows, arg[..., None], axis=-1)[..., 0]

    bi = np.arange(b)[:, None, None, None]
    ci = np.arange(c)[None, :, None, None]
    rows = 2 * np.arange(ho)[None, None, :, None] + arg // 2
    cols = 2 * np.arange(wo)[None, None, None, :] + arg % 2
    flat = ((bi * c + ci) * h + rows) * w + cols
    return pooled, PoolIndices(input_shape=(b, c, h, w), flat=flat.astype(np.int64))


def unpool_with_indices(
    p: np.ndarray,
    idx: PoolIndices,
    out_shape: tuple[int, ...] | None = None,
) -> np.ndarray:
    """Scatter pooled values back to their recorded positions; zeros elsewhere."""
    target = tuple(out_shape) if out_shape is not None else idx.input_shape
    if p.shape != idx.pooled_shape:
        raise ShapeError(f"pooled tensor {p.shape} does not match indices {idx.pooled_shape}")
    if target != idx.input_shape:
        raise ShapeError(f"unpool output {target} does not match recorded input {idx.input_shape}")
    out = np.zeros(int(np.prod(target)), dtype=p.dtype)
    out[idx.flat.ravel()] = p.ravel()
    return out.reshape(target)


def gather_with_indices(x: np.ndarray, idx: PoolIndices) -> np.ndarray:
    """Read the recorded window winners out of a full-size tensor."""
    if x.shape != idx.input_shape:
        raise ShapeError(f"tensor {x.shape} does not match recorded input {idx.input_shape}")
    return x.ravel()[idx.flat]


def pool_backward(grad_pooled: np.ndarray, idx: PoolIndices) -> np.ndarray:
    """Route pooled gradients to the window winners."""
    return unpool_with_indices(grad_pooled, idx)


def unpool_backward(grad_out: np.ndarray, idx: PoolIndices) -> np.ndarray:
    """Gradient of an unpool is a gather at the same indices."""
    return gather_with_indices(grad_out, idx)


# ---------------------------------------------------------------------------
# Loss
# ---------------------------------------------------------------------------


def softmax(logits: np.ndarray, axis: int = 1) -> np.ndarray:
    z = logits - logits.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def softmax_cross_entropy(
    logits: np.ndarray,
    target: np.ndarray,
    class_weights: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    """Mean class-weighted pixel NLL and its gradient w.r.t. *logits*.

    *target* is ``[b, h, w]`` of class indices (a boolean mask means
    background/tumor). Both loss and gradient are divided by the pixel count.
    """
    _require_4d(logits, "logits")
    b, k, h, w = logits.shape
    labels = np.asarray(target).astype(np.int64)
    if labels.shape != (b, h, w):
        raise ShapeError(f"target shape {labels.shape} does not match logits {logits.shape}")
    weights = np.ones(k, dtype=logits.dtype) if class_weights is None else np.asarray(class_weights, dtype=logits.dtype)
    if weights.shape != (k,):
        raise ShapeError(f"class weights must have shape ({k},), got {weights.shape}")

    z = logits - logits.max(axis=1, keepdims=True)
    log_sum = np.log(np.exp(z).sum(axis=1, keepdims=True))
    log_p = z - log_sum
    n = b * h * w
    pix_w = weights[labels]  # [b, h, w]
    picked = np.take_along_axis(log_p, labels[:, None, :, :], axis=1)[:, 0]
    loss = float(-(pix_w * picked).sum() / n)

    grad = np.exp(log_p)
    np.put_along_axis(grad, labels[:, None, :, :],
                      np.take_along_axis(grad, labels[:, None, :, :], axis=1) - 1.0, axis=1)
    grad *= pix_w[:, None, :, :] / n
    return loss, grad
