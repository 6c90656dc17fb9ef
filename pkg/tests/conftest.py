from pathlib import Path

import pytest

from polycode.config import load_config
from polycode.ingest import build_dataset, read_records

DATA = Path(__file__).parent / "data"

TINY = ["model.d=16", "model.word_dim=16", "model.node_dim=8", "model.path_hidden=8", "model.ffn_dim=32",
        "meta.d_T=8", "meta.d_P=8", "train.batch_size=8"]


def tiny_records(n=32):
    """``n`` functions, half per language, spread over all verbs."""
    recs = read_records(DATA / "bilingual.jsonl")
    by_lang = {}
    for rec in recs:
        by_lang.setdefault(rec["language"], []).append(rec)
    py, js = by_lang["python"][::12], by_lang["javascript"][::12]
    return py[:n // 2] + js[:n - n // 2]


@pytest.fixture(scope="session")
def records():
    return read_records(DATA / "bilingual.jsonl")


@pytest.fixture(scope="session")
def completion_ds():
    return build_dataset(tiny_records(), "completion", min_count=1)


@pytest.fixture(scope="session")
def summarization_ds():
    return build_dataset(tiny_records(), "summarization", min_count=1)


def tiny_config(task, *overrides):
    return load_config(f"desk-{task}", [*TINY, *overrides]).validate()


ACCEPTANCE = []


def record_criterion(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
