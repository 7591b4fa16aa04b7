"""
Mini-batch Adam training with held-out early stopping.

Batches are drawn from a seeded permutation each epoch, so identical seed,
config and data give a bitwise-identical loss history at 64-bit.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from margin_core.contracts import BinaryMask, GrayImage
from margin_core.raster import resample
from segnet.augment import AugmentationSpec, augment_case
from segnet.errors import ShapeError
from segnet.layers import softmax_cross_entropy
from segnet.network import Network
from segnet.optim import AdamState, adam_step

logger = logging.getLogger("margin.segnet.train")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 10
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 60
    patience: int = 10
    seed: int = 0
    class_weights: tuple[float, float] | None = None
    dtype: str = "float64"

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Stacked network inputs ``[n, 1, s, s]`` scaled to 0..1 and integer targets ``[n, s, s]``."""

    images: np.ndarray
    masks: np.ndarray

    def __len__(self) -> int:
        return int(self.images.shape[0])

    def subset(self, indices: Sequence[int]) -> SampleSet:
        idx = np.asarray(indices, dtype=np.int64)
        return SampleSet(self.images[idx], self.masks[idx])


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    validation_loss: float | None = None

    def to_dict(self) -> dict:
        return {"epoch": self.epoch, "train_loss": self.train_loss, "validation_loss": self.validation_loss}


@dataclass(frozen=True)
class TrainResult:
    network: Network
    history: tuple[EpochRecord, ...]
    best_epoch: int | None
    stopped_early: bool
    class_weights: tuple[float, float]

    def history_dict(self) -> dict:
        """Loss history as plain data; contains no timings so reruns compare byte-for-byte."""
        return {
            "epochs": [r.to_dict() for r in self.history],
            "best_epoch": self.best_epoch,
            "stopped_early": self.stopped_early,
            "class_weights": list(self.class_weights),
        }


def prepare_samples(
    pairs: Sequence[tuple[GrayImage, BinaryMask]],
    input_size: int,
    dtype: str = "float64",
) -> SampleSet:
    """Resize ROI/mask pairs to the network input (bilinear image, nearest mask) and stack them."""
    if not pairs:
        raise ShapeError("no samples to prepare")
    images = np.empty((len(pairs), 1, input_size, input_size), dtype=np.dtype(dtype))
    masks = np.empty((len(pairs), input_size, input_size), dtype=np.int64)
    for i, (img, mask) in enumerate(pairs):
        if img.shape != mask.shape:
            raise ShapeError(f"sample {i}: image {img.shape} and mask {mask.shape} differ in shape")
        images[i, 0] = resample(img.pixels, (input_size, input_size), order=1) / 255.0
        masks[i] = resample(mask.bits, (input_size, input_size), order=0)
    return SampleSet(images, masks)


def default_class_weights(samples: SampleSet) -> tuple[float, float]:
    """Background weight 1, tumor weight = background/tumor pixel ratio."""
    tumor = int(samples.masks.sum())
    background = int(samples.masks.size) - tumor
    if tumor == 0 or background == 0:
        return (1.0, 1.0)
    return (1.0, background / tumor)


def _mean_loss(net: Network, samples: SampleSet, weights: np.ndarray, batch_size: int) -> float:
    total = 0.0
    for start in range(0, len(samples), batch_size):
        xb = samples.images[start : start + batch_size]
        yb = samples.masks[start : start + batch_size]
        loss, _ = softmax_cross_entropy(net.forward(xb, "infer").logits, yb, weights)
        total += loss * xb.shape[0]
    return total / len(samples)


def train(
    net: Network,
    samples: SampleSet,
    cfg: TrainConfig | None = None,
    validation: SampleSet | None = None,
    on_epoch: Callable[[EpochRecord], None] | None = None,
) -> TrainResult:
    """Train *net* in place and return it with the per-epoch loss history.

    With a validation set, training stops after ``cfg.patience`` epochs
    without a new best held-out loss and the best-validation weights are
    restored. Zero epochs leave the network untouched.
    """
    cfg = cfg or TrainConfig()
    if len(samples) == 0:
        raise ShapeError("training set is empty")
    dtype = np.dtype(cfg.dtype)
    weights_t = cfg.class_weights or default_class_weights(samples)
    weights = np.asarray(weights_t, dtype=dtype)
    images = samples.images.astype(dtype, copy=False)
    rng = np.random.default_rng(cfg.seed)
    state = AdamState.zeros_like(net.params)
    step = 0

    history: list[EpochRecord] = []
    best_val = float("inf")
    best_epoch: int | None = None
    best_snapshot: Network | None = None
    waited = 0
    stopped_early = False

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(samples))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = images[idx], samples.masks[idx]
            fp = net.forward(xb, "train")
            loss, grad = softmax_cross_entropy(fp.logits, yb, weights)
            grads = net.backward(fp, grad)
            step += 1
            net.params, state = adam_step(
                net.params, grads, state, step,
                lr=cfg.learning_rate, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps,
            )
            net.stats = fp.stats
            total += loss * len(idx)

        val_loss = _mean_loss(net, validation, weights, cfg.batch_size) if validation is not None and len(validation) else None
        record = EpochRecord(epoch=epoch, train_loss=total / len(samples), validation_loss=val_loss)
        history.append(record)
        logger.info("epoch %d: train=%.5f val=%s", epoch, record.train_loss,
                    f"{val_loss:.5f}" if val_loss is not None else "n/a")
        if on_epoch is not None:
            on_epoch(record)

        if val_loss is None:
            best_epoch = epoch
            continue
        if val_loss < best_val:
            best_val, best_epoch, waited = val_loss, epoch, 0
            best_snapshot = net.copy()
        else:
            waited += 1
            if waited >= cfg.patience:
                stopped_early = True
                logger.warning("early stop at epoch %d; best validation loss %.5f at epoch %s",
                               epoch, best_val, best_epoch)
                break

    if best_snapshot is not None:
        net.params, net.stats = best_snapshot.params, best_snapshot.stats
    return TrainResult(
        network=net,
        history=tuple(history),
        best_epoch=best_epoch,
        stopped_early=stopped_early,
        class_weights=(float(weights_t[0]), float(weights_t[1])),
    )


def augment_pairs(
    pairs: Sequence[tuple[GrayImage, BinaryMask]],
    spec: AugmentationSpec | None = None,
    seed: int = 0,
) -> list[tuple[GrayImage, BinaryMask]]:
    """Replace each pair by ``spec.count`` augmented copies; case *i* draws from seed (seed, i)."""
    out: list[tuple[GrayImage, BinaryMask]] = []
    for i, (img, mask) in enumerate(pairs):
        case_seed = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        out.extend((p.image, p.mask) for p in augment_case(img, mask, spec, seed=case_seed))
    return out
