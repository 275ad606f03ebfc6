"""Synthetic Gaussian-mixture classification data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.rng import RngStream
from ..errors import InputError
from .dataset import Dataset

_MIXTURE_STREAM = 0x6D697874


@dataclass(frozen=True)
class MixtureSpec:
    """One isotropic Gaussian per class: mean row c, shared spread."""

    means: np.ndarray
    spread: float
    per_class: int
    seed: int

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        if means.ndim != 2 or means.shape[0] < 2:
            raise InputError(f"means must be (k >= 2, dim), got shape {means.shape}")
        if not np.all(np.isfinite(means)):
            raise InputError("class means must be finite")
        if self.spread < 0:
            raise InputError(f"spread must be >= 0, got {self.spread}")
        if self.per_class <= 0:
            raise InputError(f"per_class must be positive, got {self.per_class}")
        object.__setattr__(self, "means", means)

    @property
    def n_classes(self) -> int:
        return self.means.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.means.shape[1]


def basis_means(n_classes: int, dim: int, separation: float) -> np.ndarray:
    """Class means on scaled coordinate axes, pairwise distance separation*sqrt(2)."""
    if dim < n_classes:
        raise InputError(f"dim {dim} < n_classes {n_classes}; axes would collide")
    means = np.zeros((n_classes, dim))
    means[np.arange(n_classes), np.arange(n_classes)] = separation
    return means


def generate_mixture(spec: MixtureSpec) -> Dataset:
    """Sample per_class instances from each class Gaussian, class-block order."""
    gen = RngStream(spec.seed, _MIXTURE_STREAM).generator()
    blocks = []
    for c in range(spec.n_classes):
        noise = gen.normal(size=(spec.per_class, spec.feature_dim))
        blocks.append(spec.means[c] + spec.spread * noise)
    features = np.concatenate(blocks, axis=0)
    labels = np.repeat(np.arange(spec.n_classes), spec.per_class)
    tag = f"mixture(k={spec.n_classes}, per_class={spec.per_class}, seed={spec.seed})"
    return Dataset(features, labels, provenance=tag)
