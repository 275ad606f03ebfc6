"""Plain SGD and Adam over flat parameter lists."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError
from .mlp import MlpModel


@dataclass
class OptimizerState:
    kind: str
    learning_rate: float
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def init_optimizer(model: MlpModel, kind: str = "adam", learning_rate: float = 1e-3) -> OptimizerState:
    if kind not in ("sgd", "adam"):
        raise InputError(f"unknown optimizer kind {kind!r}")
    if learning_rate <= 0:
        raise InputError(f"learning_rate must be > 0, got {learning_rate}")
    state = OptimizerState(kind, learning_rate)
    if kind == "adam":
        state.m = [np.zeros_like(p) for p in model.parameters()]
        state.v = [np.zeros_like(p) for p in model.parameters()]
    return state


def apply_gradients(state: OptimizerState, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
    """One in-place update step."""
    state.step_count += 1
    if state.kind == "sgd":
        for p, g in zip(params, grads):
            p -= state.learning_rate * g
        return
    t = state.step_count
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
