"""Dense feed-forward classifier with inverted dropout and manual backprop.

Weights are float64 arrays of shape (fan_in, fan_out); the final layer is
linear and produces logits. Dropout masks apply to hidden activations only
and are scaled by 1/(1-rate) at sample time, so deterministic inference
needs no rescaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError, ShapeMismatch
from .rng import RngStream

ACTIVATIONS = ("relu",)


@dataclass
class MlpModel:
    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    dropout_rate: float = 0.1
    activation: str = "relu"

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        if len(dims) < 2 or any(d <= 0 for d in dims):
            raise InputError(f"layer_dims must list >= 2 positive sizes, got {dims}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise InputError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.activation not in ACTIVATIONS:
            raise InputError(f"unknown activation {self.activation!r}")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ShapeMismatch("one weight matrix and bias vector required per layer")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[l], dims[l + 1]) or b.shape != (dims[l + 1],):
                raise ShapeMismatch(
                    f"layer {l}: weights {w.shape} / bias {b.shape} do not chain {dims[l]}->{dims[l + 1]}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise InputError(f"layer {l} parameters must be finite")
        self.layer_dims = dims

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list [W0, b0, W1, b1, ...] (live views)."""
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy_parameters(self) -> list[np.ndarray]:
        return [p.copy() for p in self.parameters()]

    def load_parameters(self, snapshot: list[np.ndarray]) -> None:
        for p, s in zip(self.parameters(), snapshot):
            np.copyto(p, s)

    def freeze(self) -> None:
        """Make all parameter arrays read-only."""
        for p in self.parameters():
            p.setflags(write=False)


def init_mlp(
    layer_dims,
    dropout_rate: float,
    rng: RngStream,
    activation: str = "relu",
) -> MlpModel:
    """Symmetric uniform fan-in initialization: W ~ U(-1/sqrt(d_in), 1/sqrt(d_in)), b = 0."""
    dims = tuple(int(d) for d in layer_dims)
    gen = rng.generator()
    weights, biases = [], []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(d_in)
        weights.append(gen.uniform(-bound, bound, size=(d_in, d_out)))
        biases.append(np.zeros(d_out))
    return MlpModel(dims, weights, biases, dropout_rate, activation)


def sample_masks(model: MlpModel, n: int, rng: RngStream) -> list[np.ndarray] | None:
    """Inverted-dropout scale masks for the hidden layers, one row per instance.

    Entries are 0 or 1/(1-rate); keep probability is 1-rate. Returns None when
    the rate is zero, in which case dropout mode is exactly deterministic mode.
    """
    rate = model.dropout_rate
    if rate == 0.0:
        return None
    gen = rng.generator()
    scale = 1.0 / (1.0 - rate)
    return [
        (gen.random((n, width)) >= rate) * scale
        for width in model.layer_dims[1:-1]
    ]


@dataclass
class ForwardCache:
    x: np.ndarray
    pre: list[np.ndarray] = field(default_factory=list)     # pre-activations per hidden layer
    post: list[np.ndarray] = field(default_factory=list)    # masked activations per hidden layer
    masks: list[np.ndarray] | None = None


def forward_batch(
    model: MlpModel,
    x: np.ndarray,
    masks: list[np.ndarray] | None = None,
    cache: bool = False,
):
    """Batched forward pass; returns logits, or (logits, cache) when caching."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ShapeMismatch(f"expected input of shape (n, {model.input_dim}), got {x.shape}")
    info = ForwardCache(x, masks=masks) if cache else None
    a = x
    n_hidden = len(model.weights) - 1
    for l in range(n_hidden):
        z = a @ model.weights[l] + model.biases[l]
        a = np.maximum(z, 0.0)
        if masks is not None:
            a = a * masks[l]
        if info is not None:
            info.pre.append(z)
            info.post.append(a)
    logits = a @ model.weights[-1] + model.biases[-1]
    return (logits, info) if cache else logits


def forward(model: MlpModel, x, mode: str = "deterministic", rng: RngStream | None = None) -> np.ndarray:
    """Single-instance forward pass returning a 1-D logits vector.

    ``dropout`` mode samples fresh unit keep-masks from ``rng``; the same
    stream state always reproduces the same logits bit for bit.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeMismatch(f"expected a 1-D feature vector, got shape {x.shape}")
    if mode == "deterministic":
        masks = None
    elif mode == "dropout":
        if rng is None and model.dropout_rate > 0:
            raise InputError("dropout mode requires an RngStream")
        masks = sample_masks(model, 1, rng) if model.dropout_rate > 0 else None
    else:
        raise InputError(f"unknown mode {mode!r}")
    return forward_batch(model, x[None, :], masks)[0]


def backward_batch(model: MlpModel, info: ForwardCache, dlogits: np.ndarray) -> list[np.ndarray]:
    """Gradients of a scalar loss wrt all parameters, given d(loss)/d(logits).

    Returns a flat list aligned with ``model.parameters()``.
    """
    grads: list[np.ndarray] = [None] * (2 * len(model.weights))  # type: ignore[list-item]
    delta = dlogits
    for l in range(len(model.weights) - 1, -1, -1):
        a_prev = info.x if l == 0 else info.post[l - 1]
        grads[2 * l] = a_prev.T @ delta
        grads[2 * l + 1] = delta.sum(axis=0)
        if l == 0:
            break
        da = delta @ model.weights[l].T
        if info.masks is not None:
            da = da * info.masks[l - 1]
        delta = da * (info.pre[l - 1] > 0)
    return grads
