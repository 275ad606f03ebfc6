"""Token tagging pipeline: single-type teachers, integration, student tagger.

Taggers are per-token MLP classifiers. Each teacher tagger sees only its own
entity types (foreign entity tokens are relabeled O), mirroring the
classification teachers' disjoint subsets. Integration scores per-token
uncertainty over entity tags and pads the winning (or mixed) local
distribution into the global tag set; the student trains on the flattened
token cache with the shared weighted-KL engine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core.dist import softmax_rows
from .core.mlp import MlpModel, forward_batch, init_mlp, sample_masks
from .core.optim import init_optimizer
from .core.rng import RngStream
from .core.train import train_step
from .data.tagging import OUTSIDE, TagDataset, TagSpace
from .errors import EvalError, InputError
from .integration import token_level_integrate
from .student import SpanF1, TargetCache, TrainConfig, fit_cached_targets, span_f1
from .teacher import TeacherConfig

_TAGGER_STREAM = 0x74616767


@dataclass
class TaggerModel:
    model: MlpModel
    teacher_index: int
    space: TagSpace

    def __post_init__(self):
        expected = len(self.space.teacher_tags(self.teacher_index))
        if self.model.output_dim != expected:
            raise InputError(
                f"tagger {self.teacher_index} output width {self.model.output_dim} "
                f"!= local tag count {expected}"
            )

    @property
    def tags(self) -> tuple[str, ...]:
        return self.space.teacher_tags(self.teacher_index)


@dataclass
class StudentTagger:
    model: MlpModel
    space: TagSpace

    def __post_init__(self):
        if self.model.output_dim != len(self.space.global_tags):
            raise InputError("student tagger output width must equal the global tag count")


def _local_token_view(ds: TagDataset, space: TagSpace, i: int) -> tuple[np.ndarray, np.ndarray]:
    """Flatten tokens; tags outside teacher i's entity types collapse to O."""
    if ds.tags is None:
        raise InputError("tagger training needs gold tags")
    local = space.teacher_tags(i)
    index = {tag: j for j, tag in enumerate(local)}
    features = np.concatenate(ds.sentences, axis=0)
    labels = np.array(
        [index.get(tag, index[OUTSIDE]) for row in ds.tags for tag in row],
        dtype=np.int64,
    )
    return features, labels


def train_tagger(ds: TagDataset, space: TagSpace, i: int, config: TeacherConfig) -> TaggerModel:
    """Train and freeze the single-specialty tagger for teacher i."""
    features, labels = _local_token_view(ds, space, i)
    root = RngStream(config.seed, _TAGGER_STREAM).child(i)
    n_tags = len(space.teacher_tags(i))
    model = init_mlp((features.shape[1], *config.hidden_dims, n_tags),
                     config.dropout_rate, root.child(0))
    opt = init_optimizer(model, kind="adam", learning_rate=config.learning_rate)
    targets = np.eye(n_tags)[labels]
    weights = np.ones(len(labels))
    step = 0
    for epoch in range(config.epochs):
        order = root.child(1).at(epoch).generator().permutation(len(labels))
        for start in range(0, len(labels), config.batch_size):
            idx = order[start:start + config.batch_size]
            train_step(model, features[idx], targets[idx], weights[idx],
                       opt, root.child(2).at(step))
            step += 1
    model.freeze()
    return TaggerModel(model, i, space)


def mc_token_dists(tagger: TaggerModel, sentence: np.ndarray, k: int, rng: RngStream) -> np.ndarray:
    """MC-averaged local tag distribution per token, shape (length, |tags|).

    All length*k masked passes come from one batched mask draw, so the rows
    are a pure function of (tagger, sentence, k, rng).
    """
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    sentence = np.asarray(sentence, dtype=np.float64)
    length = len(sentence)
    masks = sample_masks(tagger.model, length * k, rng)
    tiled = np.repeat(sentence, k, axis=0)
    probs = softmax_rows(forward_batch(tagger.model, tiled, masks))
    return probs.reshape(length, k, -1).mean(axis=1)


def predict_tags(tagger: TaggerModel, sentence: np.ndarray) -> list[str]:
    """Deterministic local tags; foreign entities are invisible to this tagger."""
    logits = forward_batch(tagger.model, np.asarray(sentence, dtype=np.float64))
    local = tagger.tags
    return [local[j] for j in np.argmax(logits, axis=1)]


def build_token_cache(
    ds: TagDataset,
    taggers: list[TaggerModel],
    space: TagSpace,
    strategy: str = "hard",
    k: int = 16,
    tau: float = 0.2,
    rng: RngStream | None = None,
) -> TargetCache:
    """Flattened per-token targets; sentence s draws MC masks from rng.child(s, i)."""
    if rng is None:
        raise InputError("token cache building needs an RngStream for MC dropout")
    rows, weights = [], []
    for s, sentence in enumerate(ds.sentences):
        dists = [mc_token_dists(t, sentence, k, rng.child(s, i))
                 for i, t in enumerate(taggers)]
        for item in token_level_integrate(space, dists, strategy=strategy, tau=tau):
            rows.append(item.target.probs)
            weights.append(item.weight)
    return TargetCache(strategy, np.stack(rows), np.array(weights))


def train_student_tagger(
    ds: TagDataset,
    cache: TargetCache,
    space: TagSpace,
    config: TrainConfig,
) -> tuple[StudentTagger, list[tuple[int, float, float]]]:
    features = np.concatenate(ds.sentences, axis=0)
    model, log = fit_cached_targets(features, cache, len(space.global_tags), config)
    return StudentTagger(model, space), log


def predict_student_tags(student: StudentTagger, sentence: np.ndarray) -> list[str]:
    logits = forward_batch(student.model, np.asarray(sentence, dtype=np.float64))
    tags = student.space.global_tags
    return [tags[j] for j in np.argmax(logits, axis=1)]


def evaluate_span_f1(model: TaggerModel | StudentTagger, ds: TagDataset) -> SpanF1:
    """Span F1 of a tagger against gold BIO tags."""
    if len(ds) == 0:
        raise EvalError("cannot evaluate on an empty dataset")
    if ds.tags is None:
        raise EvalError("span evaluation needs gold tags")
    if isinstance(model, StudentTagger):
        preds = [predict_student_tags(model, s) for s in ds.sentences]
    else:
        preds = [predict_tags(model, s) for s in ds.sentences]
    return span_f1(ds.tags, preds)
