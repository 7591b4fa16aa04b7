"""
segnet: from-scratch encoder-decoder segmenter with max-pooling-index unpooling.

Manual backpropagation on numpy tensors, Adam training, augmentation and the
MSG1 weights codec. Depends on margin_core only for raster types and resampling.
"""

from segnet.augment import AugmentationSpec, AugmentParams, augment_case
from segnet.errors import ShapeError, WeightsFormatError
from segnet.inference import PredictionResult, predict_tumor_mask
from segnet.network import Network, NetworkSpec
from segnet.trainer import EpochRecord, TrainConfig, TrainResult, prepare_samples, train
from segnet.weights import load_weights, save_weights

__all__ = [
    "augment_case",
    "AugmentationSpec",
    "AugmentParams",
    "EpochRecord",
    "load_weights",
    "Network",
    "NetworkSpec",
    "predict_tumor_mask",
    "PredictionResult",
    "prepare_samples",
    "save_weights",
    "ShapeError",
    "train",
    "TrainConfig",
    "TrainResult",
    "WeightsFormatError",
]
