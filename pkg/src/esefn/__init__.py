"""Expansion-squeeze-excitation fusion of two feature modalities."""

from .attention import CNetParams, MNetParams, SEBlockParams, cnet_forward, mnet_forward, se_attention
from .checkpoint import load_checkpoint, save_checkpoint
from .data import MultiModalFeature, SynthSpec, generate_xor_pair, read_features, write_features
from .fusion import Branch, EseFnParams, LossBreakdown, LossWeights, batch_loss, fuse_forward, multimodal_loss, predict
from .gradcheck import finite_diff_grad
from .tensor import Tensor, backward
from .trainer import SGD, OptimConfig, TrainReport, train

__all__ = [
    "Branch",
    "CNetParams",
    "EseFnParams",
    "LossBreakdown",
    "LossWeights",
    "MNetParams",
    "MultiModalFeature",
    "OptimConfig",
    "SEBlockParams",
    "SGD",
    "SynthSpec",
    "Tensor",
    "TrainReport",
    "backward",
    "batch_loss",
    "cnet_forward",
    "finite_diff_grad",
    "fuse_forward",
    "generate_xor_pair",
    "load_checkpoint",
    "mnet_forward",
    "multimodal_loss",
    "predict",
    "read_features",
    "save_checkpoint",
    "se_attention",
    "train",
    "write_features",
]
