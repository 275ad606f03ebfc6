"""Subset-specialist teachers: training, deterministic and MC-dropout inference.

Each teacher owns one label subset Y_i of the global space, trains only on
instances whose label falls inside it (remapped to local indices), and is
frozen afterwards. Monte-Carlo prediction averages softmax outputs over K
dropout-masked forward passes; its randomness is fully determined by the
caller's RngStream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core.dist import Distribution, softmax, softmax_rows
from .core.mlp import MlpModel, forward, forward_batch, init_mlp, sample_masks
from .core.optim import init_optimizer
from .core.rng import RngStream
from .core.train import train_step
from .data.dataset import Dataset
from .data.labels import LabelSpace
from .errors import CoverageError, InputError

_TEACHER_STREAM = 0x74656163


@dataclass(frozen=True)
class TeacherConfig:
    hidden_dims: tuple[int, ...] = (64,)
    dropout_rate: float = 0.1
    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.epochs <= 0 or self.batch_size <= 0:
            raise InputError("epochs and batch_size must be positive")
        if self.learning_rate <= 0:
            raise InputError("learning_rate must be positive")


@dataclass
class TeacherModel:
    model: MlpModel
    subset_index: int
    label_space: LabelSpace

    def __post_init__(self):
        expected = len(self.label_space.subsets[self.subset_index])
        if self.model.output_dim != expected:
            raise InputError(
                f"teacher {self.subset_index} output width {self.model.output_dim} != |Y_i| {expected}"
            )

    @property
    def span(self) -> tuple[int, ...]:
        """Global label indices this teacher can predict."""
        return self.label_space.subsets[self.subset_index]


def teacher_training_view(ds: Dataset, space: LabelSpace, i: int) -> Dataset:
    """Instances of subset i only, labels remapped to local indices."""
    if not ds.labeled:
        raise InputError("teacher training needs a labeled dataset")
    subset = space.subsets[i]
    to_local = {g: j for j, g in enumerate(subset)}
    mask = np.isin(ds.labels, subset)
    view = ds.subset(np.flatnonzero(mask))
    view.labels = np.array([to_local[int(g)] for g in view.labels], dtype=np.int64)
    present = set(view.labels.tolist())
    missing = [space.labels[subset[j]] for j in range(len(subset)) if j not in present]
    if missing:
        raise CoverageError(f"subset {i} classes absent from dataset: {missing}")
    return view


def train_teacher(ds: Dataset, space: LabelSpace, i: int, config: TeacherConfig) -> TeacherModel:
    """Train and freeze the specialist for subset i."""
    view = teacher_training_view(ds, space, i)
    root = RngStream(config.seed, _TEACHER_STREAM).child(i)
    dims = (ds.feature_dim, *config.hidden_dims, len(space.subsets[i]))
    model = init_mlp(dims, config.dropout_rate, root.child(0))
    opt = init_optimizer(model, kind="adam", learning_rate=config.learning_rate)
    targets = np.eye(model.output_dim)[view.labels]
    weights = np.ones(len(view))
    step = 0
    for epoch in range(config.epochs):
        order = root.child(1).at(epoch).generator().permutation(len(view))
        for start in range(0, len(view), config.batch_size):
            idx = order[start:start + config.batch_size]
            train_step(model, view.features[idx], targets[idx], weights[idx],
                       opt, root.child(2).at(step))
            step += 1
    model.freeze()
    return TeacherModel(model, i, space)


def predict(teacher: TeacherModel, x) -> Distribution:
    """Deterministic local distribution over Y_i."""
    logits = forward(teacher.model, x, mode="deterministic")
    return softmax(logits, span=teacher.span)


def predict_logits(teacher: TeacherModel, features: np.ndarray) -> np.ndarray:
    """Deterministic local logits for a feature batch, shape (n, |Y_i|)."""
    return forward_batch(teacher.model, features)


def mc_predict(teacher: TeacherModel, x, k: int, rng: RngStream) -> Distribution:
    """Average of softmax outputs over k dropout-masked passes.

    Pass j uses row j of one batched mask draw, so the result is a pure
    function of (teacher, x, k, rng). With k=1 and dropout rate 0 this equals
    predict() bitwise.
    """
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    x = np.asarray(x, dtype=np.float64)
    masks = sample_masks(teacher.model, k, rng)
    logits = forward_batch(teacher.model, np.tile(x, (k, 1)), masks)
    probs = softmax_rows(logits)
    return Distribution(probs.mean(axis=0), span=teacher.span)
