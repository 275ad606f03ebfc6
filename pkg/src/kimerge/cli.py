"""Command-line client for the integration service.

Every subcommand is a thin HTTP client. By default requests are served
in-process (the service app mounted on an ASGI transport); pass --server to
target a running `kimerge serve` instance instead, in which case all paths
are interpreted on the server's filesystem.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - 3.10 fallback
    import tomli as tomllib

from .errors import ConfigError


def _send(server: str | None, method: str, path: str, payload: dict | None) -> httpx.Response:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            return client.request(method, path, json=payload)

    async def go() -> httpx.Response:
        from .service import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
                transport=transport, base_url="http://kimerge.local",
                timeout=None) as client:
            return await client.request(method, path, json=payload)

    return asyncio.run(go())


def _call(args, method: str, path: str, payload: dict | None = None) -> dict:
    response = _send(args.server, method, path, payload)
    try:
        body = response.json()
    except json.JSONDecodeError:
        body = {"error": "BadResponse", "detail": response.text}
    if response.status_code >= 400:
        detail = body.get("detail", body)
        name = body.get("error", response.status_code)
        print(f"error ({name}): {detail}", file=sys.stderr)
        raise SystemExit(1)
    return body


def _emit(args, body: dict, lines: list[str]) -> None:
    if args.json:
        print(json.dumps(body, indent=2))
    else:
        print("\n".join(lines))


def _hidden(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad layer list {text!r}") from None


def _taus(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad temperature list {text!r}") from None


def _load_toml(path: str) -> dict:
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc


# ------------------------------------------------------------- subcommands

def cmd_gen_data(args) -> None:
    payload = {
        "out_dir": args.out,
        "n_classes": args.classes,
        "feature_dim": args.dim,
        "separation": args.separation,
        "spread": args.spread,
        "per_class_train": args.train,
        "per_class_test": args.test,
        "teachers": args.teachers,
        "seed": args.seed,
    }
    body = _call(args, "POST", "/data/generate", payload)
    _emit(args, body, [
        f"wrote {body['n_train']} train / {body['n_test']} test instances "
        f"(dim {body['feature_dim']})",
        f"labels: {', '.join(body['labels'])}",
        f"subsets: {body['subsets']}",
        f"train: {body['train_path']}",
        f"test: {body['test_path']}",
        f"label space: {body['space_path']}",
    ])


def cmd_train_teachers(args) -> None:
    payload = {
        "train_path": args.data,
        "out_dir": args.out,
        "teachers": args.teachers,
        "hidden_dims": args.hidden,
        "dropout_rate": args.dropout,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "learning_rate": args.lr,
        "seed": args.seed,
    }
    body = _call(args, "POST", "/teachers/train", payload)
    lines = [f"trained {len(body['teacher_paths'])} teachers over "
             f"{len(body['labels'])} labels"]
    for i, (path, fit) in enumerate(zip(body["teacher_paths"],
                                        body["fit_accuracies"])):
        subset = body["subsets"][i]
        lines.append(f"  teacher {i} (labels {subset}): "
                     f"fit {fit:.4f} -> {path}")
    _emit(args, body, lines)


def cmd_integrate(args) -> None:
    payload = {
        "data_path": args.data,
        "teachers_dir": args.teachers_dir,
        "out_path": args.out,
        "strategy": args.strategy,
        "k": args.k,
        "tau": args.tau,
        "seed": args.seed,
    }
    body = _call(args, "POST", "/integrate", payload)
    _emit(args, body, [
        f"cached {body['n_instances']} {body['strategy']} targets "
        f"-> {body['cache_path']}",
        f"instance weights: mean {body['mean_weight']:.4f}, "
        f"min {body['min_weight']:.4f}, max {body['max_weight']:.4f}",
    ])


def cmd_train_student(args) -> None:
    payload = {
        "data_path": args.data,
        "cache_path": args.cache,
        "space_path": args.space,
        "out_stem": args.out,
        "seed": args.seed,
        "hidden_dims": args.hidden,
        "dropout_rate": args.dropout,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "learning_rate": args.lr,
        "eval_every": args.eval_every,
        "val_fraction": args.val_fraction,
    }
    body = _call(args, "POST", "/student/train", payload)
    _emit(args, body, [
        f"student -> {body['student_path']}",
        f"log ({body['steps_logged']} evals) -> {body['log_path']}",
        f"best val accuracy {body['best_val_accuracy']:.4f}, "
        f"final loss {body['final_loss']:.6f}",
    ])


def cmd_evaluate(args) -> None:
    payload = {"student_path": args.student, "data_path": args.data}
    body = _call(args, "POST", "/evaluate", payload)
    lines = [f"accuracy {body['accuracy']:.4f} on {body['n_instances']} instances"]
    for label, acc in zip(body["labels"], body["per_class_accuracy"]):
        lines.append(f"  {label}: {acc:.4f}")
    lines.append("confusion (rows = gold):")
    for label, row in zip(body["labels"], body["confusion"]):
        lines.append(f"  {label}: {row}")
    _emit(args, body, lines)


def cmd_analyze(args) -> None:
    payload = {
        "teachers_dir": args.teachers_dir,
        "data_path": args.data,
        "k": args.k,
        "ece_bins": args.bins,
        "seed": args.seed,
        "student_path": args.student,
    }
    body = _call(args, "POST", "/analyze", payload)
    margin = body["mean_margin_on_errors"]
    lines = [
        f"teacher selection error rate {body['selection_error_rate']:.4f}",
        "mean margin on errors "
        + ("n/a (no errors)" if margin is None else f"{margin:.4f}"),
        f"errors by true label: {body['error_histogram']}",
        f"teacher ECE deterministic {body['ece_deterministic']:.4f}, "
        f"mc-dropout {body['ece_mc']:.4f}",
    ]
    if body["oracle_confusion"] is not None:
        lines.append("oracle confusion (rows = gold):")
        for row in body["oracle_confusion"]:
            lines.append(f"  {row}")
    _emit(args, body, lines)


def _apply_overrides(raw: dict, args) -> dict:
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.k is not None:
        raw["k"] = args.k
    if args.tau is not None:
        raw["tau"] = args.tau
    if args.teachers is not None:
        raw["teacher_count"] = args.teachers
    if args.strategy is not None:
        raw["strategies"] = [args.strategy]
    return raw


def cmd_run(args) -> None:
    raw = _apply_overrides(_load_toml(args.config), args)
    body = _call(args, "POST", "/run", {"config": raw, "out_dir": args.out})
    lines = ["strategy accuracies (mean over seeds):"]
    for strategy, stats in body["summary"].items():
        spread = "" if stats["std"] is None else f" +- {stats['std']:.4f}"
        lines.append(f"  {strategy:<12} {stats['mean']:.4f}{spread}")
    lines.append("baselines:")
    for name, acc in body["baselines"].items():
        lines.append(f"  {name:<12} {acc:.4f}")
    lines.append(f"report: {body['artifacts'].get('report', '')}")
    lines.append(f"metrics: {body['artifacts'].get('metrics_csv', '')}")
    _emit(args, body, lines)


def cmd_sweep_tau(args) -> None:
    raw = _apply_overrides(_load_toml(args.config), args)
    payload = {"config": raw, "out_dir": args.out, "taus": args.taus}
    body = _call(args, "POST", "/sweep-tau", payload)
    lines = ["soft-strategy accuracy by temperature:"]
    for tau, by_seed in body["results"].items():
        accs = list(by_seed.values())
        lines.append(f"  tau {tau:>6}: mean {sum(accs) / len(accs):.4f} "
                     f"({', '.join(f'{a:.4f}' for a in accs)})")
    lines.append(f"csv: {body['csv_path']}")
    _emit(args, body, lines)


def cmd_serve(args) -> None:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)


# ------------------------------------------------------------- parser

def _add_common(parser) -> None:
    parser.add_argument("--server", default=None,
                        help="base URL of a running service; default in-process")
    parser.add_argument("--json", action="store_true",
                        help="print the raw response JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kimerge",
        description="Merge specialist classifiers into one student "
                    "without labels.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic benchmark")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--separation", type=float, default=2.5)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--train", type=int, default=500, help="instances per class")
    p.add_argument("--test", type=int, default=125, help="instances per class")
    p.add_argument("--teachers", type=int, default=2)
    p.add_argument("--seed", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train-teachers", help="train one teacher per label subset")
    p.add_argument("--data", required=True, help="labeled train JSONL")
    p.add_argument("--out", required=True, help="teacher checkpoint directory")
    p.add_argument("--teachers", type=int, default=2)
    p.add_argument("--hidden", type=_hidden, default=[64])
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_train_teachers)

    p = sub.add_parser("integrate", help="synthesize student targets")
    p.add_argument("--data", required=True, help="transfer-set JSONL")
    p.add_argument("--teachers-dir", required=True)
    p.add_argument("--out", required=True, help="target cache JSONL path")
    p.add_argument("--strategy", default="hard",
                   choices=["hard", "soft", "vanilla_kd", "uhc", "supervised"])
    p.add_argument("--k", type=int, default=16, help="dropout passes per teacher")
    p.add_argument("--tau", type=float, default=0.2,
                   help="confidence-weighting temperature (soft strategy)")
    p.add_argument("--seed", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("train-student", help="fit a student to cached targets")
    p.add_argument("--data", required=True, help="transfer-set JSONL")
    p.add_argument("--cache", required=True, help="target cache JSONL")
    p.add_argument("--space", required=True, help="label_space.json path")
    p.add_argument("--out", required=True, help="student checkpoint stem")
    p.add_argument("--hidden", type=_hidden, default=[64])
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--eval-every", type=int, default=100)
    p.add_argument("--val-fraction", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_train_student)

    p = sub.add_parser("evaluate", help="accuracy and confusion on labeled data")
    p.add_argument("--student", required=True, help="student checkpoint .bin")
    p.add_argument("--data", required=True, help="labeled JSONL")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="selection-error and calibration diagnostics")
    p.add_argument("--teachers-dir", required=True)
    p.add_argument("--data", required=True, help="labeled JSONL")
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--bins", type=int, default=10, help="calibration bins")
    p.add_argument("--student", default=None,
                   help="optional student checkpoint for an oracle confusion")
    p.add_argument("--seed", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("run", help="full pipeline from a config file")
    p.add_argument("--config", required=True, help="TOML experiment config")
    p.add_argument("--out", required=True, help="run artifact directory")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--k", type=int, default=None, help="override config k")
    p.add_argument("--tau", type=float, default=None, help="override config tau")
    p.add_argument("--teachers", type=int, default=None,
                   help="override config teacher_count")
    p.add_argument("--strategy", default=None,
                   help="run only this strategy")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep-tau", help="soft-strategy temperature sweep")
    p.add_argument("--config", required=True, help="TOML experiment config")
    p.add_argument("--out", required=True, help="sweep artifact directory")
    p.add_argument("--taus", type=_taus, default=None,
                   help="comma-separated list, default 0.01..10")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--k", type=int, default=None, help="override config k")
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--teachers", type=int, default=None)
    p.add_argument("--strategy", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_sweep_tau)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> None:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        raise SystemExit(1) from exc
    except httpx.HTTPError as exc:
        print(f"error (connection): {exc}", file=sys.stderr)
        raise SystemExit(2) from exc


if __name__ == "__main__":
    main()
