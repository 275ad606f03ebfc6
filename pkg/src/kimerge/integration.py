"""Synthesizing student supervision from frozen teachers.

Per instance, each teacher's MC-dropout mean distribution is scored by its
normalized entropy n_i = H(p_i)/log|Y_i|; confidence is c_i = 1 - n_i. The
hard strategy pads the most confident teacher's distribution into the global
label space; the soft strategy mixes all padded distributions with weights
softmax(c/tau). Both carry the instance weight v = c_max - c_second, the
confidence margin between the top two teachers. Baseline constructors
(vanilla KD, per-subset targets, ensemble, single teacher) use deterministic
teacher outputs and no uncertainty machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core.dist import Distribution, entropy, softmax
from .core.rng import RngStream
from .data.labels import LabelSpace
from .data.tagging import TagSpace
from .errors import InputError, NormalizationError, ShapeMismatch
from .teacher import TeacherModel, mc_predict, predict, predict_logits

STRATEGIES = ("hard", "soft", "vanilla_kd", "uhc", "supervised")


@dataclass(frozen=True)
class UncertaintyReport:
    """Per-teacher MC distributions and the derived selection quantities."""

    dists: tuple[Distribution, ...]
    uncertainties: np.ndarray
    normalized: np.ndarray
    confidences: np.ndarray
    selected: int
    margin: float

    def __post_init__(self):
        n = len(self.dists)
        if not (len(self.uncertainties) == len(self.normalized) == len(self.confidences) == n):
            raise ShapeMismatch("report fields must align with the teacher count")
        if not 0 <= self.selected < n:
            raise InputError(f"selected index {self.selected} out of range")


@dataclass(frozen=True)
class IntegratedTarget:
    target: Distribution
    weight: float
    strategy: str

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InputError(f"unknown strategy {self.strategy!r}")
        if not math.isfinite(self.weight):
            raise InputError("weight must be finite")


def pad(local: Distribution, space: LabelSpace, i: int) -> Distribution:
    """Embed a local distribution at subset i's global indices, zeros elsewhere."""
    subset = space.subsets[i]
    if len(local) != len(subset):
        raise ShapeMismatch(
            f"distribution of length {len(local)} does not cover subset {i} "
            f"of size {len(subset)}"
        )
    if local.span != subset and local.span != tuple(range(len(local))):
        raise ShapeMismatch(f"distribution span {local.span} is not subset {i}")
    probs = np.zeros(space.n_labels)
    probs[list(subset)] = local.probs
    return Distribution(probs)


def confidence_from_normalized(normalized: np.ndarray) -> np.ndarray:
    return 1.0 - normalized


def _selection(normalized: np.ndarray) -> tuple[int, float]:
    confidences = confidence_from_normalized(normalized)
    selected = int(np.argmin(normalized))  # argmin takes the lowest index on ties
    top_two = np.sort(confidences)[-2:]
    margin = float(top_two[1] - top_two[0])
    return selected, margin


def report_from_dists(dists) -> UncertaintyReport:
    """Score already-computed per-teacher mean distributions."""
    dists = tuple(dists)
    if len(dists) < 2:
        raise InputError("need at least 2 teachers")
    uncertainties = np.array([entropy(d) for d in dists])
    sizes = np.array([len(d) for d in dists])
    if np.any(sizes < 2):
        raise NormalizationError("every teacher must cover >= 2 labels")
    normalized = np.clip(uncertainties / np.log(sizes), 0.0, 1.0)
    selected, margin = _selection(normalized)
    return UncertaintyReport(
        dists, uncertainties, normalized,
        confidence_from_normalized(normalized), selected, margin,
    )


def estimate_uncertainty(
    teachers: list[TeacherModel], x, k: int, rng: RngStream
) -> UncertaintyReport:
    """MC-dropout uncertainty of every teacher on one instance.

    Teacher i draws its masks from rng.child(i), so reports are pure in
    (teachers, x, k, rng) and independent of evaluation order.
    """
    return report_from_dists(
        mc_predict(t, x, k, rng.child(i)) for i, t in enumerate(teachers)
    )


def integrate_hard(report: UncertaintyReport, space: LabelSpace) -> IntegratedTarget:
    """Pad the most confident teacher's distribution; weight by the margin."""
    chosen = report.dists[report.selected]
    return IntegratedTarget(pad(chosen, space, report.selected), report.margin, "hard")


def integrate_soft(report: UncertaintyReport, space: LabelSpace, tau: float) -> IntegratedTarget:
    """Confidence-weighted mixture of all padded distributions."""
    if tau <= 0:
        raise InputError(f"tau must be positive, got {tau}")
    weights = softmax(report.confidences, temperature=tau).probs
    probs = np.zeros(space.n_labels)
    for i, d in enumerate(report.dists):
        probs += weights[i] * pad(d, space, i).probs
    return IntegratedTarget(Distribution(probs), report.margin, "soft")


def _ordered_teachers(teachers: list[TeacherModel], space: LabelSpace) -> list[TeacherModel]:
    if len(teachers) != space.n_subsets:
        raise InputError(f"need {space.n_subsets} teachers, got {len(teachers)}")
    by_subset = {t.subset_index: t for t in teachers}
    if sorted(by_subset) != list(range(space.n_subsets)):
        raise InputError("teachers must cover every subset exactly once")
    return [by_subset[i] for i in range(space.n_subsets)]


def concat_logits(teachers: list[TeacherModel], space: LabelSpace, features: np.ndarray) -> np.ndarray:
    """Deterministic logits of all teachers arranged by global label index."""
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    out = np.empty((len(features), space.n_labels))
    for i, teacher in enumerate(_ordered_teachers(teachers, space)):
        out[:, list(space.subsets[i])] = predict_logits(teacher, features)
    return out


def vanilla_kd_target(teachers: list[TeacherModel], space: LabelSpace, x) -> IntegratedTarget:
    """Softmax over the concatenated deterministic logits, weight 1."""
    logits = concat_logits(teachers, space, x)[0]
    return IntegratedTarget(softmax(logits), 1.0, "vanilla_kd")


def uhc_targets(teachers: list[TeacherModel], x) -> list[Distribution]:
    """Each teacher's deterministic local distribution, in subset order.

    The student consumes these by softmaxing its logits restricted to each
    Y_i (the span recorded on each distribution) and summing per-subset KL.
    """
    ordered = sorted(teachers, key=lambda t: t.subset_index)
    return [predict(t, x) for t in ordered]


def ensemble_predict(teachers: list[TeacherModel], space: LabelSpace, x) -> int:
    """Argmax over concatenated deterministic logits (ties to lowest index)."""
    return int(np.argmax(concat_logits(teachers, space, x)[0]))


def ensemble_predict_batch(teachers, space: LabelSpace, features: np.ndarray) -> np.ndarray:
    return np.argmax(concat_logits(teachers, space, features), axis=1)


def single_teacher_predict(teacher: TeacherModel, x) -> int:
    """Global argmax of the padded single-teacher distribution.

    Padding with zeros never beats a positive local probability, so this is
    the local argmax mapped to its global index.
    """
    local = predict(teacher, x)
    return local.argmax()


def single_teacher_predict_batch(teacher: TeacherModel, features: np.ndarray) -> np.ndarray:
    logits = predict_logits(teacher, features)
    subset = np.array(teacher.span)
    return subset[np.argmax(logits, axis=1)]


def entity_confidences(space: TagSpace, token_dists: list[np.ndarray], t: int) -> np.ndarray:
    """Per-teacher confidence for token t, scored over entity tags only.

    Each teacher's distribution is renormalized over its B-/I- tags (index 0
    is always O), and the entropy of that restriction is normalized by
    log(#entity tags). A teacher putting all residual mass uniformly on its
    entity tags is maximally uncertain regardless of its O mass.
    """
    confidences = np.empty(len(token_dists))
    for i, dists in enumerate(token_dists):
        row = dists[t]
        ent = row[1:]
        if len(ent) < 2:
            raise NormalizationError(f"teacher {i} has {len(ent)} entity tags, need >= 2")
        mass = float(ent.sum())
        if mass <= 0.0:
            normalized = 1.0
        else:
            normalized = min(1.0, entropy(ent / mass) / math.log(len(ent)))
        confidences[i] = 1.0 - normalized
    return confidences


def token_level_integrate(
    space: TagSpace,
    token_dists: list[np.ndarray],
    strategy: str = "hard",
    tau: float = 0.2,
) -> list[IntegratedTarget]:
    """Per-token integrated targets over the global tag set.

    token_dists[i] holds teacher i's MC-averaged rows over its local tags
    (O first), one row per token. Selection and weighting mirror the
    classification case but score uncertainty over entity tags only; the
    padded target keeps each teacher's own O mass, so it is already a valid
    global distribution.
    """
    if strategy not in ("hard", "soft"):
        raise InputError(f"token-level strategy must be hard or soft, got {strategy!r}")
    if tau <= 0:
        raise InputError(f"tau must be positive, got {tau}")
    lengths = {len(d) for d in token_dists}
    if len(token_dists) < 2 or len(lengths) != 1:
        raise ShapeMismatch("need aligned token rows from >= 2 teachers")
    n_global = len(space.global_tags)
    index_maps = [list(space.teacher_global_indices(i)) for i in range(len(token_dists))]
    targets = []
    for t in range(lengths.pop()):
        confidences = entity_confidences(space, token_dists, t)
        selected, margin = _selection(1.0 - confidences)
        if strategy == "hard":
            probs = np.zeros(n_global)
            probs[index_maps[selected]] = token_dists[selected][t]
        else:
            weights = softmax(confidences, temperature=tau).probs
            probs = np.zeros(n_global)
            for i, dists in enumerate(token_dists):
                padded = np.zeros(n_global)
                padded[index_maps[i]] = dists[t]
                probs += weights[i] * padded
        targets.append(IntegratedTarget(Distribution(probs), margin, strategy))
    return targets
