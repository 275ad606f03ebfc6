"""CLI subcommands as an embedded client: happy paths and error exits."""

import json

import pytest

from kimerge.cli import build_parser, main


def run_cli(capsys, *argv):
    main(list(argv))
    return capsys.readouterr()


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """gen-data -> train-teachers -> integrate, shared by the later commands."""
    root = tmp_path_factory.mktemp("cli")
    main(["gen-data", "--out", str(root), "--dim", "4",
          "--separation", "3.0", "--spread", "0.8",
          "--train", "25", "--test", "8", "--seed", "3"])
    main(["train-teachers", "--data", str(root / "train.jsonl"),
          "--out", str(root / "teachers"), "--hidden", "8",
          "--epochs", "3", "--seed", "3"])
    main(["integrate", "--data", str(root / "train.jsonl"),
          "--teachers-dir", str(root / "teachers"),
          "--out", str(root / "cache_hard.jsonl"),
          "--strategy", "hard", "--k", "2", "--seed", "3"])
    return root


def test_gen_data_output(capsys, tmp_path):
    out = run_cli(capsys, "gen-data", "--out", str(tmp_path), "--dim", "4",
                  "--train", "10", "--test", "5", "--seed", "1")
    assert "wrote 40 train / 20 test" in out.out and "train.jsonl" in out.out
    assert (tmp_path / "label_space.json").is_file()


def test_workflow_files(workdir):
    assert (workdir / "teachers" / "teacher_0.bin").is_file()
    assert (workdir / "teachers" / "teacher_1.bin").is_file()
    assert (workdir / "cache_hard.jsonl").is_file()


def test_train_student_and_evaluate(capsys, workdir):
    out = run_cli(capsys, "train-student",
                  "--data", str(workdir / "train.jsonl"),
                  "--cache", str(workdir / "cache_hard.jsonl"),
                  "--space", str(workdir / "label_space.json"),
                  "--out", str(workdir / "student_hard_3"),
                  "--hidden", "8", "--epochs", "1",
                  "--eval-every", "5", "--seed", "3")
    assert "student" in out.out and "val accuracy" in out.out
    out = run_cli(capsys, "evaluate",
                  "--student", str(workdir / "student_hard_3.bin"),
                  "--data", str(workdir / "test.jsonl"))
    assert "accuracy" in out.out and "confusion" in out.out


def test_analyze_output(capsys, workdir):
    out = run_cli(capsys, "analyze", "--teachers-dir", str(workdir / "teachers"),
                  "--data", str(workdir / "test.jsonl"), "--k", "2",
                  "--seed", "3")
    assert "selection error rate" in out.out
    assert "ECE" in out.out


def test_json_flag(capsys, workdir):
    out = run_cli(capsys, "evaluate",
                  "--student", str(workdir / "student_hard_3.bin"),
                  "--data", str(workdir / "test.jsonl"), "--json")
    body = json.loads(out.out)
    assert set(body) >= {"accuracy", "confusion", "labels"}


CONFIG = """\
seed = 5
seeds = [5]
strategies = ["hard", "supervised"]
k = 2

[data]
n_classes = 4
feature_dim = 4
separation = 3.0
spread = 0.8
per_class_train = 20
per_class_test = 5

[teacher]
hidden_dims = [8]
epochs = 2

[student]
hidden_dims = [8]
epochs = 1
eval_every = 5
"""


def test_run_command(capsys, tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(CONFIG)
    out = run_cli(capsys, "run", "--config", str(cfg),
                  "--out", str(tmp_path / "run"))
    assert "hard" in out.out and "supervised" in out.out
    assert "ensemble" in out.out
    assert (tmp_path / "run" / "metrics.csv").is_file()


def test_run_strategy_override(capsys, tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(CONFIG)
    out = run_cli(capsys, "run", "--config", str(cfg),
                  "--out", str(tmp_path / "run"), "--strategy", "hard", "--json")
    body = json.loads(out.out)
    assert set(body["accuracies"]) == {"hard"}


def test_sweep_tau_command(capsys, tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(CONFIG.replace('["hard", "supervised"]', '["soft"]'))
    out = run_cli(capsys, "sweep-tau", "--config", str(cfg),
                  "--out", str(tmp_path / "sweep"), "--taus", "0.1,1.0")
    assert "tau" in out.out
    assert (tmp_path / "sweep" / "sweep.csv").is_file()


def test_domain_error_exit_code(capsys, workdir):
    with pytest.raises(SystemExit) as info:
        main(["evaluate", "--student", "/missing.bin",
              "--data", str(workdir / "test.jsonl")])
    assert info.value.code == 1
    err = capsys.readouterr().err
    assert "error" in err


def test_missing_config_exit_code(capsys, tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["run", "--config", str(tmp_path / "nope.toml"),
              "--out", str(tmp_path)])
    assert info.value.code == 1


def test_bad_toml_exit_code(capsys, tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("seed = [unclosed\n")
    with pytest.raises(SystemExit) as info:
        main(["run", "--config", str(cfg), "--out", str(tmp_path)])
    assert info.value.code == 1
    assert "ConfigError" in capsys.readouterr().err


def test_parser_rejects_unknown_command():
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args(["frobnicate"])
    assert info.value.code == 2


def test_parser_rejects_bad_hidden_list():
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args(["train-teachers", "--data", "x",
                                   "--out", "y", "--hidden", "a,b"])
    assert info.value.code == 2


def test_parser_defaults():
    args = build_parser().parse_args(["integrate", "--data", "d",
                                      "--teachers-dir", "t", "--out", "o"])
    assert args.strategy == "hard" and args.k == 16 and args.tau == 0.2
    assert args.server is None
