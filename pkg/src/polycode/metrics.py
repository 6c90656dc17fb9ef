"""Subtoken precision/recall/F1 and top-k accuracy with mergeable per-language counts."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence

import numpy as np

ALL = "all"


class PRF(NamedTuple):
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


def prf_from_counts(tp: int, fp: int, fn: int) -> PRF:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return PRF(tp, fp, fn, precision, recall, f1)


def _is_flat(seqs) -> bool:
    return len(seqs) == 0 or isinstance(seqs[0], (str, int, np.integer))


def sample_counts(pred: Sequence, gold: Sequence, ignore=()) -> tuple:
    """Multiset overlap for one sample; tokens in ``ignore`` never count as hits."""
    overlap = Counter(t for t in pred if t not in ignore) & Counter(gold)
    tp = sum(overlap.values())
    return tp, len(pred) - tp, len(gold) - tp


def subtoken_prf(predictions, targets, ignore=()) -> PRF:
    """Micro-aggregated precision, recall and F1 over subtoken multisets.

    Accepts a single prediction/gold pair or parallel lists of them.
    """
    predictions, targets = list(predictions), list(targets)
    if _is_flat(predictions) and _is_flat(targets):
        predictions, targets = [predictions], [targets]
    if len(predictions) != len(targets):
        raise ValueError("predictions and targets differ in length")
    tp = fp = fn = 0
    for pred, gold in zip(predictions, targets):
        a, b, c = sample_counts(pred, gold, ignore)
        tp, fp, fn = tp + a, fp + b, fn + c
    return prf_from_counts(tp, fp, fn)


def topk_ranks(logits: np.ndarray, answers: Sequence[int]) -> np.ndarray:
    """0-based rank of each answer; ties are ordered by lower id first."""
    logits = np.asarray(logits, dtype=np.float64)
    answers = np.asarray(answers)
    if logits.ndim == 1:
        logits = logits[None]
        answers = answers.reshape(1)
    rows = np.arange(len(answers))
    target = logits[rows, answers][:, None]
    ids = np.arange(logits.shape[1])[None, :]
    ahead = (logits > target) | ((logits == target) & (ids < answers[:, None]))
    return ahead.sum(axis=1)


def topk_accuracy(logits_batch, answers, k: int) -> float:
    """Fraction of rows whose answer is among the ``k`` largest logits."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ranks = topk_ranks(logits_batch, answers)
    return float((ranks < k).mean()) if len(ranks) else 0.0


@dataclass
class MetricsReport:
    """Raw per-language counts; rates are always derived from them."""

    task: str
    counts: Dict[str, Counter] = field(default_factory=dict)

    def _row(self, language: str) -> Counter:
        return self.counts.setdefault(language, Counter())

    def add_summary(self, language: str, pred: Sequence, gold: Sequence, ignore=()) -> None:
        tp, fp, fn = sample_counts(pred, gold, ignore)
        self._row(language).update({"tp": tp, "fp": fp, "fn": fn, "n": 1})

    def add_completion(self, language: str, rank: int) -> None:
        self._row(language).update({"hit1": int(rank < 1), "hit5": int(rank < 5), "n": 1})

    def merge(self, other: "MetricsReport") -> "MetricsReport":
        if other.task != self.task:
            raise ValueError("cannot merge reports of different tasks")
        out = MetricsReport(self.task, {k: Counter(v) for k, v in self.counts.items()})
        for lang, c in other.counts.items():
            out._row(lang).update(c)
        return out

    def total(self) -> Counter:
        agg: Counter = Counter()
        for c in self.counts.values():
            agg.update(c)
        return agg

    def _rates(self, c: Counter) -> Dict:
        n = c.get("n", 0)
        if self.task == "summarization":
            prf = prf_from_counts(c.get("tp", 0), c.get("fp", 0), c.get("fn", 0))
            return {"n": n, "tp": prf.tp, "fp": prf.fp, "fn": prf.fn, "precision": prf.precision,
                    "recall": prf.recall, "f1": prf.f1}
        return {"n": n, "hit1": c.get("hit1", 0), "hit5": c.get("hit5", 0),
                "top1": c.get("hit1", 0) / n if n else 0.0, "top5": c.get("hit5", 0) / n if n else 0.0}

    def to_dict(self) -> Dict[str, Dict]:
        out = {lang: self._rates(self.counts[lang]) for lang in sorted(self.counts)}
        out[ALL] = self._rates(self.total())
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    def __getitem__(self, language: str) -> Dict:
        return self.to_dict()[language]

    @property
    def headline(self) -> float:
        """F1 for summarization, top-1 accuracy for completion (over all languages)."""
        row = self.to_dict()[ALL]
        return row["f1"] if self.task == "summarization" else row["top1"]

    @classmethod
    def from_dict(cls, task: str, data: Dict[str, Dict]) -> "MetricsReport":
        keys = ("tp", "fp", "fn", "n") if task == "summarization" else ("hit1", "hit5", "n")
        report = cls(task)
        for lang, row in data.items():
            if lang != ALL:
                report.counts[lang] = Counter({k: row[k] for k in keys})
        return report
