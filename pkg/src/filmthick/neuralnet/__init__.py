"""From-scratch 1-D convolutional regressor: layers, model, optimizer, training."""

from .config import NetworkConfig, TrainSchedule, check_same_architecture
from .model import ModelWeights, init_weights, forward, loss_and_gradients, conv_features
from .adagrad import adagrad_step, reset_accumulators
from .training import TrainResult, evaluate_loss, predict, single_thread_mode, train
from .checkpoint import load_checkpoint, require_architecture, save_checkpoint

__all__ = [
    "NetworkConfig", "TrainSchedule", "check_same_architecture", "ModelWeights",
    "init_weights", "forward", "loss_and_gradients", "conv_features",
    "adagrad_step", "reset_accumulators", "TrainResult", "evaluate_loss",
    "predict", "single_thread_mode", "train",
    "load_checkpoint", "require_architecture", "save_checkpoint",
]
