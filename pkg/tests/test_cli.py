"""Command line entry: output files and exit codes."""

import pandas as pd
import pytest

from apps.verifier.suites import SUITES
from cli.main import build_parser, main
from kit.constant import ExitCode


def test_decay_small_dimension(tmp_path, capsys):
    out = tmp_path / "d4.csv"
    assert main(["decay", "--dim", "4", "--max-dist", "10", "--out", str(out)]) == ExitCode.SUCCESS

    df = pd.read_csv(out)
    assert df["mean_abs_S"].iloc[0] == 1.5
    assert len(df) == 11
    out = capsys.readouterr().out
    assert "# decay seed=42" in out
    assert "verdict skipped: needs --max-dist >= 100" in out
    assert "windowed means" not in out


def test_decay_default_curve(tmp_path, capsys):
    out = tmp_path / "d128.csv"
    assert main(["decay", "--out", str(out)]) == ExitCode.SUCCESS

    df = pd.read_csv(out)
    assert len(df) == 251
    assert df["mean_abs_S"].iloc[0] == 32.5
    out = capsys.readouterr().out
    assert "decreasing" in out
    assert "verdict skipped" not in out


def test_verify_subset(capsys):
    code = main(["verify", "--dims", "2", "4", "--trials", "5", "--suite", "abel", "--suite", "decay", "--seed", "3"])
    out = capsys.readouterr().out
    assert code == ExitCode.SUCCESS
    assert "# verify seed=3" in out
    assert "abel" in out and "PASS" in out


def test_verify_odd_dimension():
    assert main(["verify", "--dims", "3", "--trials", "2"]) == ExitCode.USAGE_ERROR


def test_verify_single_precision_rejected():
    assert main(["verify", "--precision", "32", "--trials", "2"]) == ExitCode.USAGE_ERROR


def test_verify_injected_failure(monkeypatch, capsys):
    def broken(rng, trials, dims):
        raise RuntimeError("injected fault")

    monkeypatch.setitem(SUITES, "orthogonality", broken)
    code = main(["verify", "--dims", "2", "--trials", "2", "--suite", "orthogonality"])
    assert code == ExitCode.CHECK_FAILED
    assert "FAIL" in capsys.readouterr().out


def test_bench_zero_reps():
    assert main(["bench", "--dim", "8", "--seq", "4", "--reps", "0"]) == ExitCode.USAGE_ERROR


def test_bench(capsys):
    assert main(["bench", "--dim", "8", "--seq", "16", "--reps", "2"]) == ExitCode.SUCCESS
    assert "speedup" in capsys.readouterr().out


def test_unknown_flag():
    assert main(["decay", "--bogus"]) == ExitCode.USAGE_ERROR


def test_missing_command():
    assert main([]) == ExitCode.USAGE_ERROR


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == ExitCode.SUCCESS
    assert "verify" in capsys.readouterr().out


def test_train_without_corpus(tmp_path):
    assert main(["train", "--steps", "2", "--metrics", str(tmp_path / "m.csv")]) == ExitCode.USAGE_ERROR


def test_train_missing_corpus_file(tmp_path):
    code = main(["train", "--steps", "2", "--corpus", str(tmp_path / "absent.txt"), "--metrics", str(tmp_path / "m.csv")])
    assert code == ExitCode.USAGE_ERROR


def test_train_unknown_variant(corpus_file, tmp_path):
    code = main(["train", "--variant", "alibi", "--corpus", str(corpus_file), "--metrics", str(tmp_path / "m.csv")])
    assert code == ExitCode.USAGE_ERROR


def _train_args(corpus_file, metrics, variant):
    return [
        "train",
        "--variant", variant,
        "--d-model", "16",
        "--heads", "2",
        "--layers", "1",
        "--context", "8",
        "--steps", "4",
        "--batch-size", "2",
        "--eval-batches", "1",
        "--seed", "11",
        "--corpus", str(corpus_file),
        "--metrics", str(metrics),
        "--no-progress",
    ]


def test_train_then_compare(corpus_file, tmp_path, capsys):
    rope = tmp_path / "rope.csv"
    learned = tmp_path / "learned.csv"
    assert main(_train_args(corpus_file, rope, "rope")) == ExitCode.SUCCESS
    assert main(_train_args(corpus_file, learned, "learned")) == ExitCode.SUCCESS
    assert len(pd.read_csv(rope)) == 4

    table = tmp_path / "table.csv"
    assert main(["compare", str(rope), str(learned), "--out", str(table)]) == ExitCode.SUCCESS
    out = capsys.readouterr().out
    assert "lowest auc:" in out
    assert list(pd.read_csv(table).columns) == ["step", "rope", "learned"]


def test_train_config_file(corpus_file, tmp_path):
    config = tmp_path / "run.cfg"
    metrics = tmp_path / "m.csv"
    config.write_text(
        f"d_model=16\nheads=2\nlayers=1\ncontext_len=8\nsteps=9\nbatch_size=2\n"
        f"eval_batches=1\nshow_progress=false\ncorpus_path={corpus_file}\n"
    )
    code = main(["train", "--config", str(config), "--steps", "3", "--metrics", str(metrics)])
    assert code == ExitCode.SUCCESS
    assert len(pd.read_csv(metrics)) == 3


def test_compare_single_file(tmp_path):
    path = tmp_path / "a.csv"
    path.write_text("step,loss\n0,1.0\n")
    assert main(["compare", str(path)]) == ExitCode.USAGE_ERROR


@pytest.mark.parametrize("command", ["verify", "decay", "bench", "train", "compare"])
def test_every_command_takes_seed(command):
    extra = ["x.csv"] if command == "compare" else []
    args = build_parser().parse_args([command, "--seed", "5", *extra])
    assert args.seed == 5
