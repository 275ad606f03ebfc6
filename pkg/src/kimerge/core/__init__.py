from .checkpoint import load_model, save_model
from .dist import Distribution, entropy, entropy_rows, kl_divergence, kl_terms, one_hot, softmax, softmax_rows
from .mlp import MlpModel, backward_batch, forward, forward_batch, init_mlp, sample_masks
from .optim import OptimizerState, apply_gradients, init_optimizer
from .rng import RngStream
from .train import train_step, weighted_kl_loss

__all__ = [
    "Distribution",
    "MlpModel",
    "OptimizerState",
    "RngStream",
    "apply_gradients",
    "backward_batch",
    "entropy",
    "entropy_rows",
    "forward",
    "forward_batch",
    "init_mlp",
    "init_optimizer",
    "kl_divergence",
    "kl_terms",
    "load_model",
    "one_hot",
    "sample_masks",
    "save_model",
    "softmax",
    "softmax_rows",
    "train_step",
    "weighted_kl_loss",
]
