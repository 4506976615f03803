"""Learned corrections to BP association messages."""
from .losses import loss_affinity, loss_far, loss_far_grad, loss_far_logits
from .mlp import MLP, MlpGrads, mlp_forward, mlp_gradient
from .networks import (
    Features,
    NetworkSizes,
    NeuralEnhancer,
    NeuralStack,
    affinity_coefficients,
    coefficient_matrix,
    enhance_messages,
    false_alarm_coefficients,
)
from .training import TrainConfig, TrainResult, collect_samples, mean_loss, train

__all__ = [
    "MLP", "MlpGrads", "mlp_forward", "mlp_gradient",
    "Features", "NetworkSizes", "NeuralEnhancer", "NeuralStack",
    "affinity_coefficients", "coefficient_matrix", "enhance_messages", "false_alarm_coefficients",
    "loss_affinity", "loss_far", "loss_far_grad", "loss_far_logits",
    "TrainConfig", "TrainResult", "collect_samples", "mean_loss", "train",
]
