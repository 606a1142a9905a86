"""Minimal feed-forward network engine: dense layers with optional batch
normalization and inverted dropout, ELU/LReLU/ReLU/linear/softmax
activations, MSE and base-10 cross-entropy losses, Adam and RMSProp,
early-stopping training, finite-difference gradient checking, and an exact
binary checkpoint format. Everything is float64 numpy and fully
deterministic under a fixed seed."""

from .network import LayerSpec, Mlp, NnError, ACTIVATIONS
from .losses import mse_loss, cross_entropy10, softmax_ce_grad, accuracy, onehot
from .optim import Adam, RmsProp
from .train import TrainConfig, TrainResult, train_early_stopping
from .gradcheck import gradient_check
from .checkpoint import save_model, load_model

__all__ = [
    "LayerSpec", "Mlp", "NnError", "ACTIVATIONS",
    "mse_loss", "cross_entropy10", "softmax_ce_grad", "accuracy", "onehot",
    "Adam", "RmsProp",
    "TrainConfig", "TrainResult", "train_early_stopping",
    "gradient_check",
    "save_model", "load_model",
]
