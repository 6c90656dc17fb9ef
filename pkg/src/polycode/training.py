"""Batching, the training loop, checkpoints, evaluation and embedding export."""
from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Sequence

import numpy as np
import torch

from .config import RunConfig
from .exceptions import ConfigError, DivergenceError, VocabMismatch
from .ingest.samples import CodeSample, CompletionTarget, SummaryTarget
from .ingest.storage import SampleSet
from .ingest.vocab import EOS_ID, PAD_ID, UNK_ID
from .metrics import MetricsReport, topk_ranks
from .nn.heads import completion_loss, sequence_loss
from .nn.model import Batch, CodeModel

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


def collate(samples: Sequence[CodeSample], task: Optional[str] = None) -> Batch:
    """Pad a list of samples into one :class:`Batch` (PAD id and empty path are both 0)."""
    B = len(samples)
    n = max(len(s) for s in samples)
    tokens = torch.zeros(B, n, dtype=torch.long)
    rel = torch.zeros(B, n, n, dtype=torch.long)
    ab = torch.zeros(B, n, dtype=torch.long)
    for b, s in enumerate(samples):
        k = len(s)
        tokens[b, :k] = torch.from_numpy(np.asarray(s.subtokens, dtype=np.int64))
        rel[b, :k, :k] = torch.from_numpy(np.asarray(s.rel_path_ref, dtype=np.int64))
        ab[b, :k] = torch.from_numpy(np.asarray(s.abs_path_ref, dtype=np.int64))
    pad_mask = torch.ones(B, n, dtype=torch.bool)
    for b, s in enumerate(samples):
        pad_mask[b, :len(s)] = False
    language = torch.tensor([s.language.code for s in samples], dtype=torch.long)
    batch = Batch(tokens, pad_mask, language, rel, ab)
    task = task or samples[0].task
    if task == "completion":
        batch.mask_position = torch.tensor([s.target.mask_position for s in samples], dtype=torch.long)
        batch.answer = torch.tensor([s.target.answer_id for s in samples], dtype=torch.long)
    else:
        T = max(len(s.target.ids) for s in samples)
        target = torch.full((B, T), PAD_ID, dtype=torch.long)
        for b, s in enumerate(samples):
            target[b, :len(s.target.ids)] = torch.tensor(s.target.ids, dtype=torch.long)
        batch.target = target
    return batch


def batch_indices(samples: Sequence[CodeSample], batch_size: int, rng: Optional[np.random.Generator] = None,
                  per_language: bool = False) -> List[np.ndarray]:
    """Mini-batch index lists; shuffled when ``rng`` is given.

    With ``per_language`` every batch holds a single language.
    """
    order = np.arange(len(samples)) if rng is None else rng.permutation(len(samples))
    if not per_language:
        return [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
    groups: Dict[int, List[int]] = {}
    for i in order:
        groups.setdefault(samples[i].language.code, []).append(int(i))
    batches = [np.asarray(g[i:i + batch_size]) for _, g in sorted(groups.items())
               for i in range(0, len(g), batch_size)]
    if rng is not None:
        batches = [batches[i] for i in rng.permutation(len(batches))]
    return batches


def table_hash(table) -> str:
    blob = json.dumps(table.to_dict(), separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def dataset_hashes(samples: SampleSet) -> Dict[str, str]:
    return {"vocab": samples.vocab.hash(), "path_table": table_hash(samples.path_table),
            "languages": hashlib.sha256(json.dumps(samples.languages.to_dict(), sort_keys=True).encode()).hexdigest()}


def build_model(config: RunConfig, samples: SampleSet) -> CodeModel:
    config.validate()
    if samples.task != config.task:
        raise ConfigError(f"config task {config.task!r} does not match dataset task {samples.task!r}")
    model = CodeModel(config, len(samples.vocab), samples.vocab.n_node_types, len(samples.languages),
                      samples.path_table.max_len)
    model.encoder.set_path_table(samples.path_table)
    return model


def loss_on(model: CodeModel, batch: Batch) -> torch.Tensor:
    out = model(batch)
    if model.task == "completion":
        return completion_loss(out, batch.answer)
    return sequence_loss(out, batch.target)


@torch.no_grad()
def mean_loss(model: CodeModel, samples: Sequence[CodeSample], batch_size: int = 32) -> float:
    was = model.training
    model.eval()
    total, count = 0.0, 0
    for idx in batch_indices(samples, batch_size):
        chunk = [samples[i] for i in idx]
        total += float(loss_on(model, collate(chunk, model.task))) * len(chunk)
        count += len(chunk)
    model.train(was)
    return total / max(count, 1)


@dataclass
class Checkpoint:
    model_state: Dict
    optimizer_state: Optional[Dict]
    config: Dict
    epoch: int
    hashes: Dict[str, str]
    metrics: Dict = field(default_factory=dict)

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        torch.save({"version": CHECKPOINT_VERSION, **self.__dict__}, path)
        return path

    @classmethod
    def load(cls, path) -> "Checkpoint":
        data = torch.load(path, map_location="cpu", weights_only=False)
        if data.pop("version", None) != CHECKPOINT_VERSION:
            raise ValueError(f"{path} is not a supported checkpoint")
        return cls(**data)

    @property
    def run_config(self) -> RunConfig:
        return RunConfig.from_dict(self.config)

    def check_compatible(self, samples: SampleSet) -> None:
        theirs = dataset_hashes(samples)
        bad = [k for k, v in self.hashes.items() if theirs.get(k) != v]
        if bad:
            raise VocabMismatch(f"checkpoint and dataset disagree on {', '.join(bad)}")

    def restore(self, samples: SampleSet) -> CodeModel:
        self.check_compatible(samples)
        model = build_model(self.run_config, samples)
        model.load_state_dict(self.model_state)
        model.eval()
        return model


def snapshot(model: CodeModel, config: RunConfig, samples: SampleSet, epoch: int,
             optimizer=None, metrics=None) -> Checkpoint:
    state = {k: v.detach().clone() for k, v in model.state_dict().items()}
    opt = None
    if optimizer is not None:
        opt = torch.utils._pytree.tree_map(
            lambda v: v.detach().clone() if torch.is_tensor(v) else v, optimizer.state_dict())
    return Checkpoint(state, opt, config.to_dict(), epoch, dataset_hashes(samples), dict(metrics or {}))


@dataclass
class TrainResult:
    model: CodeModel
    best: Checkpoint
    last: Checkpoint
    history: List[Dict]
    initial_loss: float


def _seed_everything(seed: int, deterministic: bool) -> None:
    torch.manual_seed(seed)
    np.random.seed(seed % (2 ** 32))
    if deterministic:
        torch.use_deterministic_algorithms(True)


def train(config: RunConfig, train_set: SampleSet, valid_set: Optional[SampleSet] = None,
          out_dir=None, log_fn: Optional[Callable[[Dict], None]] = None) -> TrainResult:
    """Adam with constant learning rate over shuffled mini-batches.

    Keeps the checkpoint with the best validation headline metric (F1 or
    top-1) or, without a validation split, the last one. ``log_fn``
    receives one dict per epoch.
    """
    config.validate()
    tc = config.train
    _seed_everything(tc.seed, tc.deterministic)
    model = build_model(config, train_set)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.optim.lr)
    rng = np.random.default_rng(tc.seed)
    initial = mean_loss(model, train_set, tc.batch_size)
    history: List[Dict] = []
    best: Optional[Checkpoint] = None
    best_score = -math.inf
    for epoch in range(1, tc.epochs + 1):
        model.train()
        started = time.perf_counter()
        total, seen = 0.0, 0
        for step, idx in enumerate(batch_indices(train_set, tc.batch_size, rng, tc.per_language_batches)):
            chunk = [train_set[i] for i in idx]
            loss = loss_on(model, collate(chunk, config.task))
            if not torch.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss {float(loss.detach())} at epoch {epoch}, step {step}; "
                    f"samples {[s.id for s in chunk][:8]}, lr {config.optim.lr}")
            optimizer.zero_grad()
            loss.backward()
            if config.optim.grad_clip:
                torch.nn.utils.clip_grad_norm_(model.parameters(), config.optim.grad_clip)
            optimizer.step()
            total += float(loss.detach()) * len(chunk)
            seen += len(chunk)
        record = {"epoch": epoch, "train_loss": total / max(seen, 1),
                  "seconds": round(time.perf_counter() - started, 3)}
        score = None
        if valid_set is not None and len(valid_set) and epoch % tc.eval_every == 0:
            report = evaluate(model, valid_set)
            score = report.headline
            record["valid"] = report.to_dict()["all"]
        history.append(record)
        if log_fn is not None:
            log_fn(record)
        if score is None and valid_set is not None and len(valid_set):
            continue
        score = epoch if score is None else score
        if score > best_score:
            best_score = score
            best = snapshot(model, config, train_set, epoch, optimizer, record)
            if out_dir is not None:
                best.save(Path(out_dir) / "best.pt")
    last = snapshot(model, config, train_set, tc.epochs, optimizer, history[-1] if history else {})
    if best is None:
        best = last
    if out_dir is not None:
        last.save(Path(out_dir) / "last.pt")
        if not (Path(out_dir) / "best.pt").exists():
            best.save(Path(out_dir) / "best.pt")
    model.eval()
    return TrainResult(model, best, last, history, initial)


def _model_for(model_or_ckpt, samples: SampleSet) -> CodeModel:
    if isinstance(model_or_ckpt, Checkpoint):
        return model_or_ckpt.restore(samples)
    if isinstance(model_or_ckpt, (str, Path)):
        return Checkpoint.load(model_or_ckpt).restore(samples)
    return model_or_ckpt


def _no_grad_eval(fn):
    def wrapper(model_or_ckpt, samples, *args, **kwargs):
        model = _model_for(model_or_ckpt, samples)
        was = model.training
        model.eval()
        try:
            with torch.no_grad():
                return fn(model, samples, *args, **kwargs)
        finally:
            model.train(was)
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_no_grad_eval
def predict(model: CodeModel, samples: SampleSet, batch_size: int = 32) -> List:
    """Completion: (B, V) logits per sample as numpy rows. Summarization: decoded id lists."""
    out: List = []
    for idx in batch_indices(samples, batch_size):
        batch = collate([samples[i] for i in idx], model.task)
        if model.task == "completion":
            out.extend(model(batch).double().numpy())
        else:
            out.extend(model.decode(batch))
    return out


@_no_grad_eval
def evaluate(model: CodeModel, samples: SampleSet, batch_size: int = 32) -> MetricsReport:
    """Per-language metrics for the model's task; parameters are left untouched."""
    report = MetricsReport(model.task)
    names = samples.languages.names
    for idx in batch_indices(samples, batch_size):
        chunk = [samples[i] for i in idx]
        batch = collate(chunk, model.task)
        if model.task == "completion":
            ranks = topk_ranks(model(batch).double().numpy(), batch.answer.numpy())
            for s, r in zip(chunk, ranks):
                report.add_completion(names[s.language.code], int(r))
        else:
            for s, pred in zip(chunk, model.decode(batch)):
                gold = [t for t in s.target.ids if t != EOS_ID]
                report.add_summary(names[s.language.code], pred, gold, ignore=(UNK_ID,))
    return report


@_no_grad_eval
def embed(model: CodeModel, samples: SampleSet, batch_size: int = 32) -> np.ndarray:
    rows = []
    for idx in batch_indices(samples, batch_size):
        rows.append(model.embed(collate([samples[i] for i in idx], model.task)).double().numpy())
    return np.concatenate(rows) if rows else np.zeros((0, model.encoder.d))


def export_embeddings(model_or_ckpt, samples: SampleSet, destination) -> Path:
    """Write one JSONL record per sample: id, language name, mean-pooled encoder vector."""
    vectors = embed(model_or_ckpt, samples)
    names = samples.languages.names
    dest = Path(destination)
    dest.parent.mkdir(parents=True, exist_ok=True)
    with open(dest, "w", encoding="utf-8") as fh:
        for s, v in zip(samples, vectors):
            fh.write(json.dumps({"id": s.id, "language": names[s.language.code],
                                 "vector": [float(x) for x in v]}) + "\n")
    return dest


def read_embeddings(path) -> tuple:
    ids, langs, vecs = [], [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            ids.append(rec["id"])
            langs.append(rec["language"])
            vecs.append(rec["vector"])
    return ids, langs, np.asarray(vecs, dtype=np.float64)
