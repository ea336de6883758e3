from .model import (
    ModelDims,
    ToyModel,
    classify,
    encoder_forward,
    init_model,
    lstm_step,
    reconstruct,
)
from .losses import cgan_losses
from .training import MetricRecord, TrainConfig, evaluate, grad_check, pretrain, train
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "ModelDims",
    "ToyModel",
    "classify",
    "encoder_forward",
    "init_model",
    "lstm_step",
    "reconstruct",
    "cgan_losses",
    "MetricRecord",
    "TrainConfig",
    "evaluate",
    "grad_check",
    "pretrain",
    "train",
    "load_checkpoint",
    "save_checkpoint",
]
