"""Config-driven end-to-end pipeline.

Stages: data -> teachers -> integrate -> students -> baselines ->
diagnostics -> report. Any stage failure is re-raised as a StageError naming
the stage. Reruns with the same config produce identical artifacts: every
random draw descends from config.seed (teachers, caches) or the per-student
seeds, through counter-based streams.
"""

from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core.rng import RngStream
from ..data.dataset import Dataset, load_jsonl, load_text_jsonl, save_jsonl
from ..data.labels import LabelSpace, partition_label_space
from ..data.mixture import MixtureSpec, basis_means, generate_mixture
from ..errors import InputError, KimergeError, StageError
from ..integration import (
    ensemble_predict_batch,
    estimate_uncertainty,
    integrate_hard,
    integrate_soft,
    single_teacher_predict_batch,
)
from ..student import (
    TargetCache,
    TrainConfig,
    build_target_cache,
    evaluate_accuracy,
    save_cache,
    train_student,
    write_training_log,
)
from ..teacher import TeacherConfig, TeacherModel, train_teacher
from .artifacts import save_student, save_teachers, space_to_dict
from .config import ExperimentConfig, config_to_dict
from .diagnostics import (
    SelectionErrorReport,
    SupervisionQuality,
    TeacherCalibration,
    selection_error_report,
    supervision_quality,
    teacher_calibration,
)

_INTEGRATE_STREAM = 0x696E7467
_DIAG_STREAM = 0x64696167
_TEST_SEED_OFFSET = 1000003


@dataclass
class MetricsReport:
    accuracies: dict[str, dict[int, float]] = field(default_factory=dict)
    per_class: dict[str, dict[int, list[float]]] = field(default_factory=dict)
    baselines: dict[str, float] = field(default_factory=dict)
    calibration: TeacherCalibration | None = None
    quality: SupervisionQuality | None = None
    selection: SelectionErrorReport | None = None
    artifacts: dict[str, str] = field(default_factory=dict)

    def summary(self, strategy: str) -> tuple[float, float | None]:
        """Mean accuracy across seeds; stddev only when >= 2 seeds ran."""
        values = list(self.accuracies[strategy].values())
        mean = float(np.mean(values))
        std = float(np.std(values)) if len(values) >= 2 else None
        return mean, std


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (KimergeError, OSError) as exc:
        raise StageError(name, exc) from exc


def _class_names(n: int) -> list[str]:
    return [f"class_{i:02d}" for i in range(n)]


def _prepare_data(config: ExperimentConfig) -> tuple[Dataset, Dataset, LabelSpace]:
    d = config.data
    if d.source == "mixture":
        means = basis_means(d.n_classes, d.feature_dim, d.separation)
        train = generate_mixture(MixtureSpec(means, d.spread, d.per_class_train, config.seed))
        test = generate_mixture(
            MixtureSpec(means, d.spread, d.per_class_test, config.seed + _TEST_SEED_OFFSET))
        names = _class_names(d.n_classes)
    elif d.source == "jsonl":
        train, test = load_jsonl(d.path), load_jsonl(d.test_path)
        names = _class_names(int(max(train.labels.max(), test.labels.max())) + 1)
    else:
        train = load_text_jsonl(d.path, d.hash_dim)
        test = load_text_jsonl(d.test_path, d.hash_dim)
        names = _class_names(int(max(train.labels.max(), test.labels.max())) + 1)
    if not train.labeled or not test.labeled:
        raise InputError("experiment data must be labeled (teachers need gold labels)")
    if config.partition is not None:
        space = LabelSpace(tuple(sorted(names)), config.partition)
    else:
        space = partition_label_space(names, config.teacher_count)
    if space.n_subsets != config.teacher_count:
        raise InputError(
            f"partition has {space.n_subsets} subsets but teacher_count is {config.teacher_count}")
    return train, test, space


def _build_caches(
    config: ExperimentConfig,
    train: Dataset,
    transfer: Dataset,
    teachers: list[TeacherModel],
    space: LabelSpace,
) -> dict[str, TargetCache]:
    """One cache per strategy; hard and soft share the same MC reports."""
    caches: dict[str, TargetCache] = {}
    mc_needed = [s for s in config.strategies if s in ("hard", "soft")]
    if mc_needed:
        rng = RngStream(config.seed, _INTEGRATE_STREAM)
        n = len(transfer)
        rows = {s: np.empty((n, space.n_labels)) for s in mc_needed}
        weights = {s: np.empty(n) for s in mc_needed}
        for i in range(n):
            report = estimate_uncertainty(teachers, transfer.features[i], config.k, rng.child(i))
            for s in mc_needed:
                item = (integrate_hard(report, space) if s == "hard"
                        else integrate_soft(report, space, config.tau))
                rows[s][i] = item.target.probs
                weights[s][i] = item.weight
        for s in mc_needed:
            caches[s] = TargetCache(s, rows[s], weights[s])
    for s in config.strategies:
        if s in caches:
            continue
        source = train if s == "supervised" else transfer
        caches[s] = build_target_cache(source, teachers, space, s, k=config.k, tau=config.tau)
    return caches


def run_experiment(config: ExperimentConfig, out_dir) -> MetricsReport:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = MetricsReport()

    with _stage("data"):
        train, test, space = _prepare_data(config)
        transfer = train.without_labels(provenance=train.provenance + " [labels stripped]")
        save_jsonl(train, out / "train.jsonl")
        save_jsonl(test, out / "test.jsonl")
        (out / "label_space.json").write_text(json.dumps(space_to_dict(space), indent=2))
        (out / "config.json").write_text(json.dumps(config_to_dict(config), indent=2))
        report.artifacts.update(
            train_data=str(out / "train.jsonl"),
            test_data=str(out / "test.jsonl"),
            label_space=str(out / "label_space.json"),
            config=str(out / "config.json"),
        )

    with _stage("teachers"):
        tc = TeacherConfig(
            hidden_dims=config.teacher.hidden_dims,
            dropout_rate=config.teacher.dropout_rate,
            epochs=config.teacher.epochs,
            batch_size=config.teacher.batch_size,
            learning_rate=config.teacher.learning_rate,
            seed=config.seed,
        )
        teachers = [train_teacher(train, space, i, tc) for i in range(space.n_subsets)]
        for i, path in enumerate(save_teachers(teachers, out / "teachers")):
            report.artifacts[f"teacher_{i}"] = path

    with _stage("integrate"):
        caches = _build_caches(config, train, transfer, teachers, space)
        for strategy, cache in caches.items():
            path = out / f"cache_{strategy}.jsonl"
            save_cache(cache, path)
            report.artifacts[f"cache_{strategy}"] = str(path)

    with _stage("students"):
        students: dict[tuple[str, int], object] = {}
        for strategy in config.strategies:
            report.accuracies[strategy] = {}
            report.per_class[strategy] = {}
            for seed in config.seeds:
                sc = TrainConfig(
                    strategy,
                    seed=seed,
                    epochs=config.student.epochs,
                    batch_size=config.student.batch_size,
                    learning_rate=config.student.learning_rate,
                    eval_every=config.student.eval_every,
                    hidden_dims=config.student.hidden_dims,
                    dropout_rate=config.student.dropout_rate,
                    val_fraction=config.student.val_fraction,
                )
                student, log = train_student(transfer, caches[strategy], space, sc)
                students[(strategy, seed)] = student
                acc, confusion = evaluate_accuracy(student, test)
                row_totals = confusion.sum(axis=1)
                per_class = np.divide(
                    np.diag(confusion), row_totals,
                    out=np.zeros(space.n_labels), where=row_totals > 0)
                report.accuracies[strategy][seed] = acc
                report.per_class[strategy][seed] = [float(v) for v in per_class]
                stem = out / "students" / f"student_{strategy}_{seed}"
                report.artifacts[f"student_{strategy}_{seed}"] = save_student(student, stem)
                log_path = stem.with_suffix(".log.csv")
                write_training_log(log, log_path)
                report.artifacts[f"log_{strategy}_{seed}"] = str(log_path)

    with _stage("baselines"):
        report.baselines["ensemble"] = float(
            np.mean(ensemble_predict_batch(teachers, space, test.features) == test.labels))
        for teacher in teachers:
            preds = single_teacher_predict_batch(teacher, test.features)
            report.baselines[f"teacher_{teacher.subset_index}"] = float(
                np.mean(preds == test.labels))

    if config.diagnostics.enabled:
        with _stage("diagnostics"):
            rng = RngStream(config.seed, _DIAG_STREAM)
            report.calibration = teacher_calibration(
                teachers, test, config.k, rng, bins=config.diagnostics.ece_bins)
            report.selection = selection_error_report(
                teachers, train, space, config.k, RngStream(config.seed, _INTEGRATE_STREAM))
            oracle = students.get(("supervised", config.seeds[0]))
            if oracle is not None and "soft" in caches and "vanilla_kd" in caches:
                report.quality = supervision_quality(
                    oracle, train, caches["soft"], caches["vanilla_kd"])

    with _stage("report"):
        metrics_path = out / "metrics.csv"
        _write_metrics_csv(report, metrics_path)
        report_path = out / "report.txt"
        report_path.write_text(render_report(config, report))
        report.artifacts["metrics_csv"] = str(metrics_path)
        report.artifacts["report"] = str(report_path)

    return report


def _write_metrics_csv(report: MetricsReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("strategy,seed,accuracy\n")
        for strategy, by_seed in report.accuracies.items():
            for seed, acc in by_seed.items():
                fh.write(f"{strategy},{seed},{acc!r}\n")
        for name, acc in report.baselines.items():
            fh.write(f"{name},-,{acc!r}\n")


def render_report(config: ExperimentConfig, report: MetricsReport) -> str:
    lines = ["knowledge integration run", "=" * 30, ""]
    lines.append(f"teachers: {config.teacher_count}  k: {config.k}  tau: {config.tau}")
    lines.append(f"seeds: {list(config.seeds)}")
    lines.append("")
    lines.append("strategy accuracies (mean over seeds):")
    for strategy in report.accuracies:
        mean, std = report.summary(strategy)
        spread = f" +- {std:.4f}" if std is not None else ""
        per_seed = ", ".join(
            f"{seed}: {acc:.4f}" for seed, acc in report.accuracies[strategy].items())
        lines.append(f"  {strategy:<12} {mean:.4f}{spread}   [{per_seed}]")
    lines.append("")
    lines.append("baselines:")
    for name, acc in report.baselines.items():
        lines.append(f"  {name:<12} {acc:.4f}")
    if report.calibration is not None:
        lines.append("")
        lines.append("teacher calibration (mean ECE on own subsets):")
        lines.append(f"  deterministic: {report.calibration.ece_deterministic:.4f}")
        lines.append(f"  mc-dropout:    {report.calibration.ece_mc:.4f}")
    if report.selection is not None:
        sel = report.selection
        lines.append("")
        lines.append("teacher selection on the transfer set:")
        lines.append(f"  error rate: {sel.error_rate:.4f}")
        lines.append(f"  mean margin on errors: {sel.mean_margin_on_errors:.4f}")
        lines.append(f"  errors by true label: {sel.error_histogram.tolist()}")
    if report.quality is not None:
        q = report.quality
        lines.append("")
        lines.append("soft-target quality vs supervised oracle (mean KL):")
        lines.append(f"  margin >= 0.5 ({q.high_count} inst): {q.high_margin_kl:.4f}")
        lines.append(f"  margin <  0.5 ({q.low_count} inst): {q.low_margin_kl:.4f}")
        lines.append(f"  vanilla KD: {q.vanilla_kl:.4f}")
    lines.append("")
    lines.append("artifacts:")
    for name, path in sorted(report.artifacts.items()):
        lines.append(f"  {name}: {path}")
    lines.append("")
    return "\n".join(lines)


DEFAULT_TAUS = (0.01, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0)


def sweep_tau(config: ExperimentConfig, out_dir, taus=DEFAULT_TAUS) -> dict[float, dict[int, float]]:
    """Train the soft-strategy student at each temperature and compare.

    MC uncertainty reports are estimated once and shared across temperatures,
    so the sweep isolates the effect of the weighting softmax. Results land in
    out_dir/sweep.csv as tau,seed,accuracy rows.
    """
    if not taus:
        raise InputError("need at least one temperature")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with _stage("data"):
        train, test, space = _prepare_data(config)
        transfer = train.without_labels(provenance=train.provenance + " [labels stripped]")
    with _stage("teachers"):
        tc = TeacherConfig(
            hidden_dims=config.teacher.hidden_dims,
            dropout_rate=config.teacher.dropout_rate,
            epochs=config.teacher.epochs,
            batch_size=config.teacher.batch_size,
            learning_rate=config.teacher.learning_rate,
            seed=config.seed,
        )
        teachers = [train_teacher(train, space, i, tc) for i in range(space.n_subsets)]
    results: dict[float, dict[int, float]] = {}
    with _stage("sweep"):
        rng = RngStream(config.seed, _INTEGRATE_STREAM)
        reports = [
            estimate_uncertainty(teachers, transfer.features[i], config.k, rng.child(i))
            for i in range(len(transfer))
        ]
        for tau in taus:
            rows = np.empty((len(reports), space.n_labels))
            weights = np.empty(len(reports))
            for i, report in enumerate(reports):
                item = integrate_soft(report, space, tau)
                rows[i] = item.target.probs
                weights[i] = item.weight
            cache = TargetCache("soft", rows, weights)
            results[tau] = {}
            for seed in config.seeds:
                sc = TrainConfig(
                    "soft",
                    seed=seed,
                    epochs=config.student.epochs,
                    batch_size=config.student.batch_size,
                    learning_rate=config.student.learning_rate,
                    eval_every=config.student.eval_every,
                    hidden_dims=config.student.hidden_dims,
                    dropout_rate=config.student.dropout_rate,
                    val_fraction=config.student.val_fraction,
                )
                student, _ = train_student(transfer, cache, space, sc)
                results[tau][seed] = evaluate_accuracy(student, test)[0]
        with open(out / "sweep.csv", "w", encoding="utf-8") as fh:
            fh.write("tau,seed,accuracy\n")
            for tau, by_seed in results.items():
                for seed, acc in by_seed.items():
                    fh.write(f"{tau!r},{seed},{acc!r}\n")
    return results
