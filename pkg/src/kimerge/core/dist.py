"""Probability distributions over label index spans, and the information
measures the rest of the package is built from.

All accumulation is in float64; entropy and KL use natural log with the
0*log(0) = 0 convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergenceError, InputError, ShapeMismatch

SIMPLEX_ATOL = 1e-9


@dataclass(frozen=True)
class Distribution:
    """A probability vector together with the label indices it covers.

    ``span`` holds the global label index of each entry; a plain local
    distribution over k entries uses the trivial span (0..k-1).
    """

    probs: np.ndarray
    span: tuple[int, ...] = field(default=())

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1:
            raise ShapeMismatch(f"probability vector must be 1-D, got shape {p.shape}")
        span = tuple(self.span) if self.span else tuple(range(p.size))
        if len(span) != p.size:
            raise ShapeMismatch(f"span has {len(span)} indices for {p.size} probabilities")
        if not np.all(np.isfinite(p)):
            raise InputError("probabilities must be finite")
        if np.any(p < 0):
            raise InputError("probabilities must be non-negative")
        total = float(p.sum())
        if abs(total - 1.0) > SIMPLEX_ATOL:
            raise InputError(f"probabilities sum to {total!r}, expected 1 within {SIMPLEX_ATOL}")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "span", span)

    def __len__(self) -> int:
        return self.probs.size

    def argmax(self) -> int:
        """Global index of the most probable entry (ties: lowest index)."""
        return self.span[int(np.argmax(self.probs))]


def softmax(logits, temperature: float = 1.0, span: tuple[int, ...] = ()) -> Distribution:
    """Temperature softmax computed via max-subtraction.

    Stable for arbitrarily large logits and arbitrarily small positive
    temperatures.
    """
    if temperature <= 0:
        raise InputError(f"temperature must be > 0, got {temperature}")
    z = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise InputError("logits must be finite")
    return Distribution(softmax_rows(z[None, :], temperature)[0], span)


def softmax_rows(logits: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    """Row-wise stable softmax on a 2-D array; returns a float64 array."""
    z = np.asarray(logits, dtype=np.float64) / temperature
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def entropy(d) -> float:
    """Shannon entropy -sum(p log p) in nats. Accepts a Distribution or 1-D array."""
    p = d.probs if isinstance(d, Distribution) else np.asarray(d, dtype=np.float64)
    return float(entropy_rows(p[None, :])[0])


def entropy_rows(p: np.ndarray) -> np.ndarray:
    """Row-wise entropy of a 2-D array of probability vectors."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    return -terms.sum(axis=1)


def kl_divergence(target: Distribution, prediction: Distribution) -> float:
    """KL(target || prediction) in nats.

    Argument order is target-first: zero entries in the target contribute
    nothing, while a zero prediction entry under positive target mass is
    undefined and raises.
    """
    if target.span != prediction.span:
        raise ShapeMismatch(f"span mismatch: {target.span} vs {prediction.span}")
    return kl_terms(target.probs, prediction.probs)


def kl_terms(t: np.ndarray, p: np.ndarray) -> float:
    """KL between raw probability arrays of equal length."""
    support = t > 0
    ts, ps = t[support], p[support]
    if np.any(ps == 0):
        raise DivergenceError("prediction has zero mass where the target is positive")
    return float(np.sum(ts * (np.log(ts) - np.log(ps))))


def one_hot(index: int, size: int, span: tuple[int, ...] = ()) -> Distribution:
    p = np.zeros(size)
    p[index] = 1.0
    return Distribution(p, span)
