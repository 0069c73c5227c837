from . import tensor
from .blocks import (LOG_STD_MAX, LOG_STD_MIN, MLP, GaussianHead, LayerNorm, Linear,
                     Module, MultiHeadSelfAttention, NetworkSpec, TransformerEncoder,
                     TransformerLayer)
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .gaussians import DiagGaussian, entropy, kl, log_prob, sample, w2sq
from .optim import Adam, clip_grad_norm
from .tensor import Tensor, set_default_dtype

__all__ = [
    "tensor", "Tensor", "set_default_dtype",
    "Module", "Linear", "MLP", "LayerNorm", "MultiHeadSelfAttention",
    "TransformerLayer", "TransformerEncoder", "GaussianHead", "NetworkSpec",
    "LOG_STD_MIN", "LOG_STD_MAX",
    "DiagGaussian", "sample", "log_prob", "entropy", "kl", "w2sq",
    "Adam", "clip_grad_norm",
    "save_checkpoint", "load_checkpoint", "CheckpointError",
]
