"""HTTP facade over the integration pipeline.

Endpoints operate on server-side files so the CLI can drive the same
workflow either in-process or against a remote host. Domain errors map to
400 with the error class name; request-shape errors are FastAPI's usual 422.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..core.dist import softmax_rows
from ..core.rng import RngStream
from ..data.dataset import load_jsonl, save_jsonl
from ..data.labels import LabelSpace, partition_label_space
from ..data.mixture import MixtureSpec, basis_means, generate_mixture
from ..errors import DataError, KimergeError
from ..harness.artifacts import (
    load_student,
    load_teachers,
    save_student,
    save_teachers,
    space_from_dict,
    space_to_dict,
)
from ..harness.config import config_from_dict
from ..harness.diagnostics import selection_error_report, teacher_calibration
from ..harness.experiment import (
    DEFAULT_TAUS,
    _class_names,
    _DIAG_STREAM,
    _INTEGRATE_STREAM,
    _TEST_SEED_OFFSET,
    run_experiment,
    sweep_tau,
)
from ..student import (
    TrainConfig,
    build_target_cache,
    evaluate_accuracy,
    load_cache,
    save_cache,
    train_student,
    write_training_log,
)
from ..teacher import TeacherConfig, predict_logits, teacher_training_view, train_teacher
from . import schemas


def _load_space(path) -> LabelSpace:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return space_from_dict(raw)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"{path}: not a label-space file ({exc})") from exc


def _per_class(confusion: np.ndarray) -> list[float]:
    totals = confusion.sum(axis=1)
    rates = np.divide(np.diag(confusion), totals,
                      out=np.zeros(len(totals)), where=totals > 0)
    return [float(v) for v in rates]


def create_app() -> FastAPI:
    app = FastAPI(title="kimerge", version=__version__)

    @app.exception_handler(KimergeError)
    async def _domain_error(request: Request, exc: KimergeError):
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "detail": str(exc)})

    @app.exception_handler(OSError)
    async def _os_error(request: Request, exc: OSError):
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "detail": str(exc)})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/data/generate", response_model=schemas.GenerateDataResponse)
    def generate_data(req: schemas.GenerateDataRequest):
        means = basis_means(req.n_classes, req.feature_dim, req.separation)
        train = generate_mixture(
            MixtureSpec(means, req.spread, req.per_class_train, req.seed))
        test = generate_mixture(
            MixtureSpec(means, req.spread, req.per_class_test,
                        req.seed + _TEST_SEED_OFFSET))
        space = partition_label_space(_class_names(req.n_classes), req.teachers)
        out = Path(req.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_jsonl(train, out / "train.jsonl")
        save_jsonl(test, out / "test.jsonl")
        space_path = out / "label_space.json"
        space_path.write_text(json.dumps(space_to_dict(space), indent=2))
        return schemas.GenerateDataResponse(
            train_path=str(out / "train.jsonl"),
            test_path=str(out / "test.jsonl"),
            space_path=str(space_path),
            labels=list(space.labels),
            subsets=[list(s) for s in space.subsets],
            n_train=len(train),
            n_test=len(test),
            feature_dim=train.feature_dim,
        )

    @app.post("/teachers/train", response_model=schemas.TrainTeachersResponse)
    def teachers_train(req: schemas.TrainTeachersRequest):
        train = load_jsonl(req.train_path)
        if not train.labeled:
            raise DataError("teacher training needs a labeled dataset")
        names = _class_names(int(train.labels.max()) + 1)
        if req.partition is not None:
            space = LabelSpace(tuple(sorted(names)),
                               tuple(tuple(int(g) for g in s) for s in req.partition))
        else:
            space = partition_label_space(names, req.teachers)
        cfg = TeacherConfig(
            hidden_dims=tuple(req.hidden_dims),
            dropout_rate=req.dropout_rate,
            epochs=req.epochs,
            batch_size=req.batch_size,
            learning_rate=req.learning_rate,
            seed=req.seed,
        )
        teachers = [train_teacher(train, space, i, cfg)
                    for i in range(space.n_subsets)]
        paths = save_teachers(teachers, req.out_dir)
        fits = []
        for teacher in teachers:
            view = teacher_training_view(train, space, teacher.subset_index)
            preds = softmax_rows(predict_logits(teacher, view.features)).argmax(axis=1)
            fits.append(float(np.mean(preds == view.labels)))
        return schemas.TrainTeachersResponse(
            teacher_paths=paths,
            labels=list(space.labels),
            subsets=[list(s) for s in space.subsets],
            fit_accuracies=fits,
        )

    @app.post("/integrate", response_model=schemas.IntegrateResponse)
    def integrate(req: schemas.IntegrateRequest):
        ds = load_jsonl(req.data_path)
        teachers, space = load_teachers(req.teachers_dir)
        if req.strategy != "supervised" and ds.labeled:
            ds = ds.without_labels()
        cache = build_target_cache(
            ds, teachers, space, req.strategy, k=req.k, tau=req.tau,
            rng=RngStream(req.seed, _INTEGRATE_STREAM))
        save_cache(cache, req.out_path)
        return schemas.IntegrateResponse(
            cache_path=req.out_path,
            strategy=cache.strategy,
            n_instances=len(cache),
            mean_weight=float(cache.weights.mean()),
            min_weight=float(cache.weights.min()),
            max_weight=float(cache.weights.max()),
        )

    @app.post("/student/train", response_model=schemas.TrainStudentResponse)
    def student_train(req: schemas.TrainStudentRequest):
        ds = load_jsonl(req.data_path)
        cache = load_cache(req.cache_path)
        space = _load_space(req.space_path)
        cfg = TrainConfig(
            cache.strategy,
            seed=req.seed,
            epochs=req.epochs,
            batch_size=req.batch_size,
            learning_rate=req.learning_rate,
            eval_every=req.eval_every,
            hidden_dims=tuple(req.hidden_dims),
            dropout_rate=req.dropout_rate,
            val_fraction=req.val_fraction,
        )
        student, log = train_student(ds, cache, space, cfg)
        stem = Path(req.out_stem)
        student_path = save_student(student, stem)
        log_path = stem.with_suffix(".log.csv")
        write_training_log(log, log_path)
        return schemas.TrainStudentResponse(
            student_path=student_path,
            log_path=str(log_path),
            steps_logged=len(log),
            best_val_accuracy=max(row[2] for row in log),
            final_loss=log[-1][1],
        )

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate(req: schemas.EvaluateRequest):
        student = load_student(req.student_path)
        ds = load_jsonl(req.data_path)
        acc, confusion = evaluate_accuracy(student, ds)
        return schemas.EvaluateResponse(
            accuracy=acc,
            n_instances=len(ds),
            labels=list(student.label_space.labels),
            per_class_accuracy=_per_class(confusion),
            confusion=[[int(v) for v in row] for row in confusion],
        )

    @app.post("/analyze", response_model=schemas.AnalyzeResponse)
    def analyze(req: schemas.AnalyzeRequest):
        teachers, space = load_teachers(req.teachers_dir)
        ds = load_jsonl(req.data_path)
        oracle = load_student(req.student_path) if req.student_path else None
        sel = selection_error_report(
            teachers, ds, space, req.k,
            RngStream(req.seed, _INTEGRATE_STREAM), oracle=oracle)
        cal = teacher_calibration(
            teachers, ds, req.k, RngStream(req.seed, _DIAG_STREAM),
            bins=req.ece_bins)
        margin = sel.mean_margin_on_errors
        return schemas.AnalyzeResponse(
            selection_error_rate=sel.error_rate,
            mean_margin_on_errors=None if math.isnan(margin) else margin,
            error_histogram=[int(v) for v in sel.error_histogram],
            ece_deterministic=cal.ece_deterministic,
            ece_mc=cal.ece_mc,
            oracle_confusion=(None if sel.oracle_confusion is None else
                              [[int(v) for v in row] for row in sel.oracle_confusion]),
        )

    @app.post("/run", response_model=schemas.RunResponse)
    def run(req: schemas.RunRequest):
        config = config_from_dict(req.config)
        report = run_experiment(config, req.out_dir)
        summary = {}
        for strategy in report.accuracies:
            mean, std = report.summary(strategy)
            summary[strategy] = schemas.StrategySummary(mean=mean, std=std)
        return schemas.RunResponse(
            accuracies=report.accuracies,
            summary=summary,
            baselines=report.baselines,
            artifacts=report.artifacts,
        )

    @app.post("/sweep-tau", response_model=schemas.SweepTauResponse)
    def sweep(req: schemas.SweepTauRequest):
        config = config_from_dict(req.config)
        taus = tuple(req.taus) if req.taus else DEFAULT_TAUS
        results = sweep_tau(config, req.out_dir, taus)
        return schemas.SweepTauResponse(
            results={str(tau): accs for tau, accs in results.items()},
            csv_path=str(Path(req.out_dir) / "sweep.csv"),
        )

    return app
