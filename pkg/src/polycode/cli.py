"""Command-line entry point: ingest, train, evaluate, predict, export-embeddings.

Progress is logged as one JSON object per line on stderr. Exit codes are
0 on success, 2 for configuration errors and 3 for runtime failures.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional

from . import __version__
from .config import PRESETS, dump_config, load_config
from .exceptions import ConfigError, PolycodeError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def emit(event: str, stream=None, **fields) -> None:
    record = {"event": event, "time": round(time.time(), 3), **fields}
    print(json.dumps(record, sort_keys=True, default=str), file=stream or sys.stderr, flush=True)


def _out(obj, path: Optional[str] = None) -> None:
    text = json.dumps(obj, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def cmd_ingest(args) -> int:
    from .ingest import build_dataset, read_records, serialize_dataset

    records = read_records(args.input)
    emit("ingest.start", records=len(records), task=args.task)
    ds = build_dataset(records, args.task, min_count=args.min_count, seed=args.seed, max_len=args.max_len,
                       max_path_len=args.max_path_len, workers=args.workers)
    dest = serialize_dataset(ds, args.output, record_format=args.format)
    summary = {"output": str(dest), "splits": {k: len(v) for k, v in ds.splits.items()},
               "vocab": len(ds.vocab), "paths": len(ds.path_table), "stats": ds.stats}
    emit("ingest.done", **summary)
    _out(summary)
    return EXIT_OK


def _dataset_path(args, config) -> str:
    path = getattr(args, "dataset", None) or config.data.dataset
    if not path:
        raise ConfigError("no dataset given: pass --dataset or set data.dataset")
    return path


def cmd_train(args) -> int:
    from .ingest import load_dataset
    from .training import train

    config = load_config(args.config, args.set).validate()
    ds = load_dataset(_dataset_path(args, config))
    train_set = ds.split(config.data.train_split)
    valid_set = ds.split(config.data.valid_split) if config.data.valid_split in ds.splits else None
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    dump_config(config, out / "config.yaml")
    emit("train.start", samples=len(train_set), valid=len(valid_set) if valid_set is not None else 0,
         config=config.to_dict())
    result = train(config, train_set, valid_set, out_dir=out, log_fn=lambda rec: emit("train.epoch", **rec))
    summary = {"best_epoch": result.best.epoch, "initial_loss": result.initial_loss,
               "final_loss": result.history[-1]["train_loss"] if result.history else None,
               "checkpoint": str(out / "best.pt")}
    emit("train.done", **summary)
    _out(summary)
    return EXIT_OK


def _load(args):
    from .ingest import load_dataset
    from .training import Checkpoint

    ckpt = Checkpoint.load(args.checkpoint)
    path = args.dataset or ckpt.run_config.data.dataset
    if not path:
        raise ConfigError("no dataset given: pass --dataset")
    samples = load_dataset(path).split(args.split)
    return ckpt, samples, ckpt.restore(samples)


def cmd_evaluate(args) -> int:
    from .training import evaluate

    _, samples, model = _load(args)
    report = evaluate(model, samples)
    emit("evaluate.done", split=args.split, headline=report.headline)
    _out(report.to_dict(), args.output)
    return EXIT_OK


def cmd_predict(args) -> int:
    from .ingest.vocab import EOS_ID
    from .training import predict

    _, samples, model = _load(args)
    rows = predict(model, samples)
    vocab = samples.vocab
    lines: List[Dict] = []
    for s, row in zip(samples, rows):
        if model.task == "completion":
            top = [int(i) for i in (-row).argsort(kind="stable")[:args.top_k]]
            lines.append({"id": s.id, "prediction": vocab.decode(top)})
        else:
            lines.append({"id": s.id, "prediction": vocab.decode([t for t in row if t != EOS_ID])})
    text = "\n".join(json.dumps(line, sort_keys=True) for line in lines)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    emit("predict.done", split=args.split, samples=len(lines))
    return EXIT_OK


def cmd_export(args) -> int:
    from .training import export_embeddings

    _, samples, model = _load(args)
    dest = export_embeddings(model, samples, args.output)
    emit("export.done", split=args.split, records=len(samples), output=str(dest))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polycode", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse raw functions into a serialized dataset")
    p.add_argument("--input", required=True, help="JSONL with language, code and optional id, split")
    p.add_argument("--task", required=True, choices=("summarization", "completion"))
    p.add_argument("--output", required=True, help="dataset directory")
    p.add_argument("--min-count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-len", type=int, default=512)
    p.add_argument("--max-path-len", type=int, default=32)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("jsonl", "binary"), default="jsonl")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--config", help=f"YAML file or preset ({', '.join(PRESETS)})")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="dotted config override")
    p.add_argument("--dataset")
    p.add_argument("--output", required=True, help="run directory for checkpoints")
    p.set_defaults(func=cmd_train)

    for name, func, helptext in (("evaluate", cmd_evaluate, "per-language metrics for a split"),
                                 ("predict", cmd_predict, "predictions as JSONL"),
                                 ("export-embeddings", cmd_export, "mean-pooled encoder vectors as JSONL")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--checkpoint", required=True)
        p.add_argument("--dataset")
        p.add_argument("--split", default="valid")
        p.add_argument("--output", required=name == "export-embeddings")
        if name == "predict":
            p.add_argument("--top-k", type=int, default=5)
        p.set_defaults(func=func)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        emit("error", kind="config", message=str(exc))
        return EXIT_CONFIG
    except (PolycodeError, OSError, RuntimeError, ValueError, KeyError) as exc:
        emit("error", kind=type(exc).__name__, message=str(exc))
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
