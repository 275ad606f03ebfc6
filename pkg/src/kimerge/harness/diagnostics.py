"""Label-dependent diagnostics.

Everything here reads gold labels and is meant for analysis runs; the
integration pipeline itself never touches labels of the transfer set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core.dist import kl_terms, softmax_rows
from ..core.mlp import forward_batch
from ..core.rng import RngStream
from ..data.dataset import Dataset
from ..data.labels import LabelSpace
from ..errors import EvalError, InputError
from ..integration import estimate_uncertainty
from ..student import StudentModel, TargetCache, evaluate_accuracy
from ..teacher import TeacherModel, mc_predict, predict_logits, teacher_training_view


def compute_ece(confidences, correct, bins: int = 10) -> float:
    """Expected calibration error over equal-width confidence bins.

    ECE = sum_b (|b|/n) * |accuracy(b) - mean_confidence(b)|, empty bins
    skipped. Confidence 1.0 falls into the top bin.
    """
    confidences = np.asarray(confidences, dtype=np.float64)
    correct = np.asarray(correct, dtype=bool)
    if confidences.size == 0:
        raise EvalError("cannot compute calibration on empty input")
    if confidences.shape != correct.shape:
        raise InputError("confidences and correctness must align")
    if np.any(confidences < 0) or np.any(confidences > 1):
        raise InputError("confidences must lie in [0, 1]")
    if bins < 1:
        raise InputError(f"bins must be >= 1, got {bins}")
    idx = np.minimum((confidences * bins).astype(np.int64), bins - 1)
    n = confidences.size
    ece = 0.0
    for b in range(bins):
        mask = idx == b
        count = int(mask.sum())
        if count == 0:
            continue
        acc = float(correct[mask].mean())
        conf = float(confidences[mask].mean())
        ece += (count / n) * abs(acc - conf)
    return ece


@dataclass(frozen=True)
class TeacherCalibration:
    """Mean per-teacher ECE on own-subset instances, with and without MC."""

    ece_deterministic: float
    ece_mc: float


def teacher_calibration(
    teachers: list[TeacherModel],
    ds: Dataset,
    k: int,
    rng: RngStream,
    bins: int = 10,
) -> TeacherCalibration:
    """Compare deterministic and MC-averaged confidence calibration.

    Each teacher is scored only on instances of its own subset, where its
    local prediction has a well-defined correct answer.
    """
    if not ds.labeled:
        raise EvalError("calibration needs labels")
    det_scores, mc_scores = [], []
    for t_index, teacher in enumerate(teachers):
        view = teacher_training_view(ds, teacher.label_space, teacher.subset_index)
        det_probs = softmax_rows(predict_logits(teacher, view.features))
        det_conf = det_probs.max(axis=1)
        det_correct = det_probs.argmax(axis=1) == view.labels
        det_scores.append(compute_ece(det_conf, det_correct, bins))
        mc_rows = np.stack([
            mc_predict(teacher, view.features[i], k, rng.child(t_index, i)).probs
            for i in range(len(view))
        ])
        mc_scores.append(compute_ece(mc_rows.max(axis=1),
                                     mc_rows.argmax(axis=1) == view.labels, bins))
    return TeacherCalibration(float(np.mean(det_scores)), float(np.mean(mc_scores)))


@dataclass(frozen=True)
class SupervisionQuality:
    """Mean KL from synthesized targets to the oracle, split by margin."""

    high_margin_kl: float
    low_margin_kl: float
    high_count: int
    low_count: int
    vanilla_kl: float


def _mean_kl_to_oracle(targets: np.ndarray, oracle_probs: np.ndarray) -> float:
    vals = [kl_terms(t, o) for t, o in zip(targets, oracle_probs)]
    return float(np.mean(vals)) if vals else math.nan


def supervision_quality(
    oracle: StudentModel,
    ds: Dataset,
    cache: TargetCache,
    vanilla: TargetCache,
    threshold: float = 0.5,
) -> SupervisionQuality:
    """Group instances by margin and measure target quality against the oracle.

    KL is taken target-first, so zero entries in the target are benign. Hard
    caches are rejected: their padded zeros make the reverse direction
    undefined and the comparison meaningless for them.
    """
    if cache.strategy == "hard":
        raise EvalError("supervision quality is undefined for hard caches")
    if len(cache) != len(ds) or len(vanilla) != len(ds):
        raise InputError("caches must cover the dataset")
    oracle_probs = softmax_rows(forward_batch(oracle.model, ds.features))
    high = cache.weights >= threshold
    return SupervisionQuality(
        high_margin_kl=_mean_kl_to_oracle(cache.targets[high], oracle_probs[high]),
        low_margin_kl=_mean_kl_to_oracle(cache.targets[~high], oracle_probs[~high]),
        high_count=int(high.sum()),
        low_count=int((~high).sum()),
        vanilla_kl=_mean_kl_to_oracle(vanilla.targets, oracle_probs),
    )


@dataclass(frozen=True)
class SelectionErrorReport:
    """How often the lowest-uncertainty teacher does not own the true label."""

    error_rate: float
    error_histogram: np.ndarray
    mean_margin_on_errors: float
    selections: np.ndarray
    oracle_confusion: np.ndarray | None


def selection_error_report(
    teachers: list[TeacherModel],
    ds: Dataset,
    space: LabelSpace,
    k: int,
    rng: RngStream,
    oracle: StudentModel | None = None,
) -> SelectionErrorReport:
    if not ds.labeled:
        raise EvalError("selection-error analysis needs labels")
    owners = np.array([space.owner_of(int(g)) for g in ds.labels])
    selections = np.empty(len(ds), dtype=np.int64)
    margins = np.empty(len(ds))
    for i in range(len(ds)):
        report = estimate_uncertainty(teachers, ds.features[i], k, rng.child(i))
        selections[i] = report.selected
        margins[i] = report.margin
    errors = selections != owners
    histogram = np.zeros(space.n_labels, dtype=np.int64)
    np.add.at(histogram, ds.labels[errors], 1)
    mean_margin = float(margins[errors].mean()) if errors.any() else math.nan
    confusion = evaluate_accuracy(oracle, ds)[1] if oracle is not None else None
    return SelectionErrorReport(
        error_rate=float(errors.mean()),
        error_histogram=histogram,
        mean_margin_on_errors=mean_margin,
        selections=selections,
        oracle_confusion=confusion,
    )
