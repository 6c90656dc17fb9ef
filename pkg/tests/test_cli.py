import json

import pytest

from polycode.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from polycode.ingest import load_dataset, read_records
from polycode.training import read_embeddings

from conftest import DATA, TINY


def events(stderr):
    return [json.loads(line)["event"] for line in stderr.splitlines() if line.strip()]


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    ds = root / "ds"
    assert main(["ingest", "--input", str(DATA / "bilingual_split.jsonl"), "--task", "completion",
                 "--output", str(ds), "--min-count", "1"]) == EXIT_OK
    sets = [a for kv in TINY + ["train.epochs=2"] for a in ("--set", kv)]
    assert main(["train", "--config", "desk-completion", "--dataset", str(ds), "--output", str(root / "run"),
                 *sets]) == EXIT_OK
    return root


def test_ingest_output(run):
    ds = load_dataset(run / "ds")
    expected = {}
    for rec in read_records(DATA / "bilingual_split.jsonl"):
        expected[rec.get("split", "train")] = expected.get(rec.get("split", "train"), 0) + 1
    assert {k: len(v) for k, v in ds.splits.items()} == expected


def test_train_writes_run_directory(run):
    names = {p.name for p in (run / "run").iterdir()}
    assert {"config.yaml", "best.pt", "last.pt"} <= names


def test_evaluate_json(run, capsys):
    capsys.readouterr()
    assert main(["evaluate", "--checkpoint", str(run / "run" / "best.pt"), "--dataset", str(run / "ds")]) == EXIT_OK
    out, err = capsys.readouterr()
    report = json.loads(out)
    assert {"all", "python", "javascript"} <= set(report)
    assert events(err) == ["evaluate.done"]


def test_predict_topk(run, capsys):
    capsys.readouterr()
    assert main(["predict", "--checkpoint", str(run / "run" / "best.pt"), "--dataset", str(run / "ds"),
                 "--top-k", "3"]) == EXIT_OK
    lines = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert len(lines) == len(load_dataset(run / "ds").split("valid"))
    assert all(len(line["prediction"]) == 3 for line in lines)


def test_export_embeddings(run):
    dest = run / "emb.jsonl"
    assert main(["export-embeddings", "--checkpoint", str(run / "run" / "last.pt"), "--dataset", str(run / "ds"),
                 "--split", "train", "--output", str(dest)]) == EXIT_OK
    ids, langs, vectors = read_embeddings(dest)
    assert vectors.shape == (len(load_dataset(run / "ds").split("train")), 16)


def test_train_logs_epochs(tmp_path, run, capsys):
    capsys.readouterr()
    sets = [a for kv in TINY + ["train.epochs=1"] for a in ("--set", kv)]
    main(["train", "--config", "desk-completion", "--dataset", str(run / "ds"), "--output", str(tmp_path), *sets])
    out, err = capsys.readouterr()
    assert events(err) == ["train.start", "train.epoch", "train.done"]
    assert json.loads(out)["best_epoch"] == 1


@pytest.mark.parametrize("extra", [["--set", "model.heads=3"], ["--set", "model.bogus=1"],
                                   ["--config", "no-such-preset"]])
def test_config_errors_exit_2(tmp_path, run, extra, capsys):
    argv = ["train", "--config", "desk-completion", "--dataset", str(run / "ds"), "--output", str(tmp_path)]
    assert main(argv + extra) == EXIT_CONFIG
    assert events(capsys.readouterr().err) == ["error"]


def test_full_scale_summarization_preset_rejected(tmp_path, run):
    assert main(["train", "--config", "paper-summarization", "--dataset", str(run / "ds"),
                 "--output", str(tmp_path)]) == EXIT_CONFIG


def test_runtime_errors_exit_3(tmp_path, run):
    assert main(["evaluate", "--checkpoint", str(tmp_path / "missing.pt"), "--dataset", str(run / "ds")]) \
        == EXIT_RUNTIME
    assert main(["evaluate", "--checkpoint", str(run / "run" / "best.pt"), "--dataset", str(run / "ds"),
                 "--split", "test"]) == EXIT_RUNTIME
    assert main(["ingest", "--input", str(tmp_path / "none.jsonl"), "--task", "completion",
                 "--output", str(tmp_path / "x")]) == EXIT_RUNTIME


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["train"])
    assert exc.value.code == 2
