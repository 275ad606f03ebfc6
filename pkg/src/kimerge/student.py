"""Student training over the union label set from cached supervision.

A target cache fixes one global target row and one instance weight per
transfer-set instance, so students train without teachers loaded. Training
minimizes the mean weighted KL to the cached targets (or the per-subset KL
sum for uhc caches), evaluates pseudo-label agreement on a held-out slice
every eval_every steps, and restores the best-scoring snapshot at the end.
Checkpoint selection uses the cache's own argmax as pseudo-labels, so the
pipeline never reads labels of the transfer set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core.dist import softmax_rows
from .core.mlp import MlpModel, backward_batch, forward_batch, init_mlp, sample_masks
from .core.optim import init_optimizer, apply_gradients
from .core.rng import RngStream
from .core.train import train_step
from .data.dataset import Dataset
from .data.labels import LabelSpace
from .errors import (
    DataError,
    DatasetFormatError,
    EvalError,
    InputError,
    ShapeMismatch,
    TrainingDivergedError,
)
from .integration import (
    STRATEGIES,
    concat_logits,
    estimate_uncertainty,
    integrate_hard,
    integrate_soft,
    uhc_targets,
)

_STUDENT_STREAM = 0x73747564


@dataclass
class StudentModel:
    model: MlpModel
    label_space: LabelSpace

    def __post_init__(self):
        if self.model.output_dim != self.label_space.n_labels:
            raise InputError(
                f"student output width {self.model.output_dim} != |Y| {self.label_space.n_labels}"
            )


@dataclass(frozen=True)
class TrainConfig:
    strategy: str
    seed: int = 0
    epochs: int = 3
    batch_size: int = 32
    learning_rate: float = 1e-3
    eval_every: int = 100
    hidden_dims: tuple[int, ...] = (64,)
    dropout_rate: float = 0.1
    val_fraction: float = 0.05

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InputError(f"unknown strategy {self.strategy!r}")
        if min(self.epochs, self.batch_size, self.eval_every) <= 0:
            raise InputError("epochs, batch_size, and eval_every must be positive")
        if self.learning_rate <= 0:
            raise InputError("learning_rate must be positive")
        if not 0.0 < self.val_fraction < 1.0:
            raise InputError("val_fraction must be in (0, 1)")


@dataclass
class TargetCache:
    """Per-instance supervision: strategy, global target rows, weights.

    For uhc the row holds every teacher's local distribution in its subset's
    columns (each block sums to 1); for all other strategies the row is one
    global distribution.
    """

    strategy: str
    targets: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InputError(f"unknown strategy {self.strategy!r}")
        self.targets = np.asarray(self.targets, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.targets.ndim != 2 or self.weights.shape != (len(self.targets),):
            raise ShapeMismatch("targets must be (n, |Y|) with one weight per row")
        if np.any(self.weights < 0) or np.any(self.weights > 1):
            raise InputError("weights must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.targets)

    def pseudo_labels(self) -> np.ndarray:
        return np.argmax(self.targets, axis=1)


def build_target_cache(
    ds: Dataset,
    teachers,
    space: LabelSpace,
    strategy: str,
    k: int = 16,
    tau: float = 0.2,
    rng: RngStream | None = None,
) -> TargetCache:
    """One target row per instance; instance i draws MC masks from rng.child(i)."""
    n = len(ds)
    if strategy == "supervised":
        if not ds.labeled:
            raise InputError("supervised strategy needs a labeled dataset")
        targets = np.eye(space.n_labels)[ds.labels]
        return TargetCache(strategy, targets, np.ones(n))
    if strategy == "vanilla_kd":
        targets = softmax_rows(concat_logits(teachers, space, ds.features))
        return TargetCache(strategy, targets, np.ones(n))
    if strategy == "uhc":
        targets = np.empty((n, space.n_labels))
        for i in range(n):
            for d in uhc_targets(teachers, ds.features[i]):
                targets[i, list(d.span)] = d.probs
        return TargetCache(strategy, targets, np.ones(n))
    if strategy not in ("hard", "soft"):
        raise InputError(f"unknown strategy {strategy!r}")
    if rng is None:
        raise InputError(f"strategy {strategy!r} needs an RngStream for MC dropout")
    targets = np.empty((n, space.n_labels))
    weights = np.empty(n)
    for i in range(n):
        report = estimate_uncertainty(teachers, ds.features[i], k, rng.child(i))
        if strategy == "hard":
            item = integrate_hard(report, space)
        else:
            item = integrate_soft(report, space, tau)
        targets[i] = item.target.probs
        weights[i] = item.weight
    return TargetCache(strategy, targets, weights)


def with_unit_weights(cache: TargetCache) -> TargetCache:
    """Ablation: keep the targets, drop the margin weighting (v = 1)."""
    return TargetCache(cache.strategy, cache.targets.copy(), np.ones(len(cache)))


def save_cache(cache: TargetCache, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(len(cache)):
            fh.write(json.dumps({
                "index": i,
                "strategy": cache.strategy,
                "target": [float(v) for v in cache.targets[i]],
                "weight": float(cache.weights[i]),
            }) + "\n")


def load_cache(path) -> TargetCache:
    targets, weights, strategy = [], [], None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(f"line {lineno}: not valid JSON ({exc.msg})") from exc
            if strategy is None:
                strategy = record["strategy"]
            elif record["strategy"] != strategy:
                raise DatasetFormatError(f"line {lineno}: mixed strategies in one cache")
            if record.get("index") != len(targets):
                raise DatasetFormatError(f"line {lineno}: indices must be 0..n-1 in order")
            targets.append(record["target"])
            weights.append(record["weight"])
    if strategy is None:
        raise DatasetFormatError("cache file contains no records")
    return TargetCache(strategy, np.array(targets), np.array(weights))


def _uhc_step(model, features, targets, space, opt, rng) -> float:
    """One update on the summed per-subset KL objective."""
    masks = sample_masks(model, len(features), rng)
    logits, info = forward_batch(model, features, masks=masks, cache=True)
    dlogits = np.zeros_like(logits)
    n = len(features)
    loss = 0.0
    for subset in space.subsets:
        cols = list(subset)
        probs = softmax_rows(logits[:, cols])
        t = targets[:, cols]
        terms = np.where(t > 0, t * (np.log(np.where(t > 0, t, 1.0)) - np.log(probs)), 0.0)
        loss += float(terms.sum()) / n
        dlogits[:, cols] = (probs - t) / n
    if not math.isfinite(loss):
        raise TrainingDivergedError(f"uhc loss became {loss}")
    grads = backward_batch(model, info, dlogits)
    apply_gradients(opt, model.parameters(), grads)
    return loss


def _pseudo_accuracy(model: MlpModel, features, pseudo) -> float:
    preds = np.argmax(forward_batch(model, features), axis=1)
    return float(np.mean(preds == pseudo))


def fit_cached_targets(
    features: np.ndarray,
    cache: TargetCache,
    n_outputs: int,
    config: TrainConfig,
    uhc_space: LabelSpace | None = None,
) -> tuple[MlpModel, list[tuple[int, float, float]]]:
    """Shared training engine over any cached targets.

    Returns the model restored to its best-validation snapshot plus the
    (step, loss, val_accuracy) log.
    """
    features = np.asarray(features, dtype=np.float64)
    if len(cache) != len(features):
        raise ShapeMismatch(f"cache covers {len(cache)} instances, got {len(features)}")
    if cache.targets.shape[1] != n_outputs:
        raise ShapeMismatch("cache width must equal the output width")
    if cache.strategy == "uhc" and uhc_space is None:
        raise InputError("uhc training needs the label space for its subset blocks")
    root = RngStream(config.seed, _STUDENT_STREAM)
    model = init_mlp(
        (features.shape[1], *config.hidden_dims, n_outputs),
        config.dropout_rate, root.child(0),
    )
    opt = init_optimizer(model, kind="adam", learning_rate=config.learning_rate)

    n = len(features)
    perm = root.child(3).generator().permutation(n)
    n_val = max(1, math.ceil(config.val_fraction * n))
    if n_val >= n:
        raise InputError(f"validation fraction {config.val_fraction} consumes all {n} instances")
    val_idx, fit_idx = np.sort(perm[:n_val]), np.sort(perm[n_val:])
    pseudo = cache.pseudo_labels()
    val_x, val_pseudo = features[val_idx], pseudo[val_idx]

    log: list[tuple[int, float, float]] = []
    best_acc = -1.0
    best_params = model.copy_parameters()
    step = 0

    def evaluate(loss: float) -> None:
        nonlocal best_acc, best_params
        acc = _pseudo_accuracy(model, val_x, val_pseudo)
        log.append((step, loss, acc))
        if acc > best_acc:
            best_acc = acc
            best_params = model.copy_parameters()

    loss = math.nan
    for epoch in range(config.epochs):
        order = fit_idx[root.child(1).at(epoch).generator().permutation(len(fit_idx))]
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            step_rng = root.child(2).at(step)
            if cache.strategy == "uhc":
                loss = _uhc_step(model, features[idx], cache.targets[idx],
                                 uhc_space, opt, step_rng)
            else:
                loss = train_step(model, features[idx], cache.targets[idx],
                                  cache.weights[idx], opt, step_rng)
            step += 1
            if step % config.eval_every == 0:
                evaluate(loss)
    if not log or log[-1][0] != step:
        evaluate(loss)
    model.load_parameters(best_params)
    return model, log


def train_student(
    ds: Dataset,
    cache: TargetCache,
    space: LabelSpace,
    config: TrainConfig,
) -> tuple[StudentModel, list[tuple[int, float, float]]]:
    """Returns the best-validation student and the (step, loss, val_acc) log."""
    model, log = fit_cached_targets(
        ds.features, cache, space.n_labels, config, uhc_space=space)
    return StudentModel(model, space), log


def write_training_log(log, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step,loss,val_accuracy\n")
        for step, loss, acc in log:
            fh.write(f"{step},{loss!r},{acc!r}\n")


def predict_labels(student: StudentModel, features: np.ndarray) -> np.ndarray:
    return np.argmax(forward_batch(student.model, np.atleast_2d(features)), axis=1)


def evaluate_accuracy(student: StudentModel, ds: Dataset) -> tuple[float, np.ndarray]:
    """Accuracy plus a (true, predicted) confusion matrix on a labeled set."""
    if len(ds) == 0:
        raise EvalError("cannot evaluate on an empty dataset")
    if not ds.labeled:
        raise EvalError("accuracy evaluation needs labels")
    preds = predict_labels(student, ds.features)
    k = student.label_space.n_labels
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (ds.labels, preds), 1)
    return float(np.mean(preds == ds.labels)), confusion


def extract_spans(tags, repair: bool = False) -> set[tuple[str, int, int]]:
    """Maximal (type, start, end) spans of a BIO sequence; end is exclusive.

    With repair=True a stray I- tag opens a new span (prediction cleanup);
    without it, malformed input raises DataError (gold must be clean).
    """
    spans: set[tuple[str, int, int]] = set()
    current: tuple[str, int] | None = None

    def close(end: int) -> None:
        nonlocal current
        if current is not None:
            spans.add((current[0], current[1], end))
            current = None

    for pos, tag in enumerate(tags):
        if tag == "O":
            close(pos)
        elif tag.startswith("B-"):
            close(pos)
            current = (tag[2:], pos)
        elif tag.startswith("I-"):
            if current is not None and current[0] == tag[2:]:
                continue
            if not repair:
                raise DataError(f"position {pos}: stray {tag} without matching B-")
            close(pos)
            current = (tag[2:], pos)
        else:
            raise DataError(f"position {pos}: {tag!r} is not a BIO tag")
    close(len(tags))
    return spans


@dataclass(frozen=True)
class SpanF1:
    precision: float
    recall: float
    f1: float
    matched: int
    predicted: int
    gold: int


def span_f1(gold_seqs, pred_seqs) -> SpanF1:
    """Micro span F1 over exact (type, start, end) matches."""
    if len(gold_seqs) != len(pred_seqs):
        raise ShapeMismatch("gold and predicted sequence counts differ")
    matched = predicted = gold = 0
    for g_tags, p_tags in zip(gold_seqs, pred_seqs):
        if len(g_tags) != len(p_tags):
            raise ShapeMismatch("gold and predicted sequence lengths differ")
        g_spans = extract_spans(g_tags, repair=False)
        p_spans = extract_spans(p_tags, repair=True)
        matched += len(g_spans & p_spans)
        predicted += len(p_spans)
        gold += len(g_spans)
    if predicted == 0 and gold == 0:
        return SpanF1(1.0, 1.0, 1.0, 0, 0, 0)
    precision = matched / predicted if predicted else 0.0
    recall = matched / gold if gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return SpanF1(precision, recall, f1, matched, predicted, gold)
