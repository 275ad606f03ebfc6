"""HTTP facade: endpoint contracts, error mapping, determinism."""

import asyncio
import json
from pathlib import Path

import httpx
import pytest

from kimerge.service import create_app


def call(method: str, path: str, payload: dict | None = None) -> httpx.Response:
    async def go() -> httpx.Response:
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://test") as client:
            return await client.request(method, path, json=payload)

    return asyncio.run(go())


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Generate data, train teachers, cache targets, train one student."""
    root = tmp_path_factory.mktemp("svc")
    gen = call("POST", "/data/generate", {
        "out_dir": str(root), "n_classes": 4, "feature_dim": 4,
        "separation": 3.0, "spread": 0.8, "per_class_train": 25,
        "per_class_test": 8, "seed": 3}).json()
    teachers = call("POST", "/teachers/train", {
        "train_path": gen["train_path"], "out_dir": str(root / "teachers"),
        "hidden_dims": [8], "epochs": 3, "seed": 3}).json()
    cache = call("POST", "/integrate", {
        "data_path": gen["train_path"], "teachers_dir": str(root / "teachers"),
        "out_path": str(root / "cache_hard.jsonl"), "strategy": "hard",
        "k": 2, "seed": 3}).json()
    student = call("POST", "/student/train", {
        "data_path": gen["train_path"], "cache_path": cache["cache_path"],
        "space_path": gen["space_path"], "out_stem": str(root / "student_hard_3"),
        "hidden_dims": [8], "epochs": 1, "eval_every": 5, "seed": 3}).json()
    return root, gen, teachers, cache, student


def test_health():
    body = call("GET", "/health").json()
    assert body["status"] == "ok"
    assert body["version"]


def test_generate_contract(workspace):
    root, gen, *_ = workspace
    assert gen["n_train"] == 100 and gen["n_test"] == 32
    assert gen["labels"] == ["class_00", "class_01", "class_02", "class_03"]
    assert gen["subsets"] == [[0, 1], [2, 3]]
    for key in ("train_path", "test_path", "space_path"):
        assert Path(gen[key]).is_file()


def test_teachers_contract(workspace):
    _, _, teachers, *_ = workspace
    assert len(teachers["teacher_paths"]) == 2
    for path, fit in zip(teachers["teacher_paths"], teachers["fit_accuracies"]):
        assert Path(path).is_file()
        assert 0.0 <= fit <= 1.0


def test_integrate_contract(workspace):
    root, gen, _, cache, _ = workspace
    assert cache["strategy"] == "hard"
    assert cache["n_instances"] == 100
    assert 0.0 <= cache["min_weight"] <= cache["mean_weight"] <= cache["max_weight"] <= 1.0
    assert Path(cache["cache_path"]).is_file()


def test_integrate_supervised_unit_weights(workspace):
    root, gen, *_ = workspace
    body = call("POST", "/integrate", {
        "data_path": gen["train_path"], "teachers_dir": str(root / "teachers"),
        "out_path": str(root / "cache_sup.jsonl"), "strategy": "supervised",
        "seed": 3}).json()
    assert body["min_weight"] == body["max_weight"] == 1.0


def test_integrate_deterministic(workspace, tmp_path):
    root, gen, *_ = workspace
    paths = []
    for name in ("a.jsonl", "b.jsonl"):
        body = call("POST", "/integrate", {
            "data_path": gen["train_path"],
            "teachers_dir": str(root / "teachers"),
            "out_path": str(tmp_path / name), "strategy": "soft",
            "k": 2, "tau": 0.2, "seed": 3}).json()
        paths.append(Path(body["cache_path"]))
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_student_and_evaluate(workspace):
    root, gen, _, _, student = workspace
    assert Path(student["student_path"]).is_file()
    assert Path(student["log_path"]).is_file()
    assert student["steps_logged"] >= 1
    body = call("POST", "/evaluate", {
        "student_path": student["student_path"],
        "data_path": gen["test_path"]}).json()
    assert body["n_instances"] == 32
    assert 0.0 <= body["accuracy"] <= 1.0
    assert sum(sum(row) for row in body["confusion"]) == 32
    assert len(body["per_class_accuracy"]) == 4


def test_analyze_contract(workspace):
    root, gen, _, _, student = workspace
    body = call("POST", "/analyze", {
        "teachers_dir": str(root / "teachers"), "data_path": gen["test_path"],
        "k": 2, "seed": 3, "student_path": student["student_path"]}).json()
    assert 0.0 <= body["selection_error_rate"] <= 1.0
    assert len(body["error_histogram"]) == 4
    assert 0.0 <= body["ece_deterministic"] <= 1.0
    assert 0.0 <= body["ece_mc"] <= 1.0
    assert body["oracle_confusion"] is not None
    if body["selection_error_rate"] == 0.0:
        assert body["mean_margin_on_errors"] is None


def test_run_endpoint(tmp_path):
    body = call("POST", "/run", {
        "config": {
            "seed": 5, "seeds": [5], "strategies": ["hard", "supervised"],
            "k": 2,
            "data": {"n_classes": 4, "feature_dim": 4, "separation": 3.0,
                     "spread": 0.8, "per_class_train": 20, "per_class_test": 5},
            "teacher": {"hidden_dims": [8], "epochs": 2},
            "student": {"hidden_dims": [8], "epochs": 1, "eval_every": 5},
        },
        "out_dir": str(tmp_path)}).json()
    assert set(body["accuracies"]) == {"hard", "supervised"}
    assert body["summary"]["hard"]["std"] is None
    assert "ensemble" in body["baselines"]
    assert Path(body["artifacts"]["metrics_csv"]).is_file()


def test_sweep_endpoint(tmp_path):
    body = call("POST", "/sweep-tau", {
        "config": {
            "seed": 5, "seeds": [5], "strategies": ["soft"], "k": 2,
            "data": {"n_classes": 4, "feature_dim": 4, "separation": 3.0,
                     "spread": 0.8, "per_class_train": 20, "per_class_test": 5},
            "teacher": {"hidden_dims": [8], "epochs": 2},
            "student": {"hidden_dims": [8], "epochs": 1, "eval_every": 5},
        },
        "out_dir": str(tmp_path), "taus": [0.1, 1.0]}).json()
    assert set(body["results"]) == {"0.1", "1.0"}
    assert Path(body["csv_path"]).is_file()
    text = Path(body["csv_path"]).read_text()
    assert text.splitlines()[0] == "tau,seed,accuracy"


def test_domain_errors_map_to_400(workspace, tmp_path):
    root, gen, *_ = workspace
    r = call("POST", "/integrate", {
        "data_path": gen["train_path"], "teachers_dir": str(root / "teachers"),
        "out_path": str(tmp_path / "x.jsonl"), "strategy": "nosuch"})
    assert r.status_code == 400
    assert r.json()["error"] == "InputError"
    r = call("POST", "/evaluate", {
        "student_path": "/does/not/exist.bin", "data_path": gen["test_path"]})
    assert r.status_code == 400
    assert "error" in r.json()
    r = call("POST", "/run", {"config": {"tau": 0.0}, "out_dir": str(tmp_path)})
    assert r.status_code == 400
    assert r.json()["error"] == "ConfigError"


def test_bad_partition_maps_to_400(workspace, tmp_path):
    _, gen, *_ = workspace
    r = call("POST", "/teachers/train", {
        "train_path": gen["train_path"], "out_dir": str(tmp_path / "t"),
        "partition": [[0], [1, 2, 3]], "epochs": 1})
    assert r.status_code == 400


def test_unknown_fields_rejected(workspace):
    _, gen, *_ = workspace
    r = call("POST", "/evaluate", {
        "student_path": "x", "data_path": gen["test_path"], "bogus": 1})
    assert r.status_code == 422


def test_space_file_validation(workspace, tmp_path):
    root, gen, _, cache, _ = workspace
    bad = tmp_path / "space.json"
    bad.write_text(json.dumps({"wrong": True}))
    r = call("POST", "/student/train", {
        "data_path": gen["train_path"], "cache_path": cache["cache_path"],
        "space_path": str(bad), "out_stem": str(tmp_path / "s"), "epochs": 1})
    assert r.status_code == 400
    assert r.json()["error"] == "DataError"
