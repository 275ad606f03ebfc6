"""One gradient step of the weighted distillation objective.

The loss for a batch is mean_i v_i * KL(t_i || softmax(logits_i)) where t_i
is the target distribution and v_i the per-instance weight. The returned
loss is evaluated before the parameter update.
"""

from __future__ import annotations

import numpy as np

from ..errors import InputError, ShapeMismatch, TrainingDivergedError
from .dist import softmax_rows
from .mlp import MlpModel, backward_batch, forward_batch, sample_masks
from .optim import OptimizerState, apply_gradients
from .rng import RngStream


def weighted_kl_loss(targets: np.ndarray, probs: np.ndarray, weights: np.ndarray) -> float:
    """mean_i w_i * KL(t_i || p_i) over rows; 0*log 0 contributes nothing."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(targets > 0, targets * (np.log(np.where(targets > 0, targets, 1.0)) - np.log(probs)), 0.0)
    return float(np.mean(weights * terms.sum(axis=1)))


def train_step(
    model: MlpModel,
    features: np.ndarray,
    targets: np.ndarray,
    weights: np.ndarray,
    opt: OptimizerState,
    rng: RngStream,
) -> float:
    features = np.asarray(features, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    n = features.shape[0]
    if targets.shape != (n, model.output_dim):
        raise ShapeMismatch(f"targets shape {targets.shape} != ({n}, {model.output_dim})")
    if weights.shape != (n,):
        raise ShapeMismatch(f"weights shape {weights.shape} != ({n},)")
    if np.any(weights < 0) or np.any(weights > 1):
        raise InputError("instance weights must lie in [0, 1]")

    masks = sample_masks(model, n, rng)
    logits, info = forward_batch(model, features, masks, cache=True)
    probs = softmax_rows(logits)
    loss = weighted_kl_loss(targets, probs, weights)
    if not np.isfinite(loss):
        raise TrainingDivergedError(f"non-finite batch loss: {loss}")

    dlogits = (weights / n)[:, None] * (probs - targets)
    grads = backward_batch(model, info, dlogits)
    apply_gradients(opt, model.parameters(), grads)
    return loss
