"""Datasets: building them from raw functions, and their on-disk format.

A dataset directory holds ``manifest.json`` naming every other file (vocab,
language map, path table, one file per split) together with its sha256.
Split files are either JSONL or length-prefixed binary records; the
manifest's ``record_format`` says which.
"""
from __future__ import annotations

import hashlib
import json
import logging
import struct
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence

import numpy as np

from ..exceptions import CorruptFile, FormatVersionMismatch, NoName, ParseError, PolycodeError, TooShort
from .languages import LanguageId, LanguageMap
from .samples import (MAX_PATH_LEN, MAX_SEQ_LEN, CodeSample, CompletionTarget, ParsedFunction, PathTable,
                      SummaryTarget, make_completion_sample, make_summarization_sample, parse_function)
from .vocab import Vocabulary, build_vocabularies

log = logging.getLogger(__name__)

FORMAT_NAME = "polycode-dataset"
FORMAT_VERSION = 1
BINARY_MAGIC = b"PCDSREC1"
TASKS = ("summarization", "completion")


class SampleSet(Sequence):
    """A list of samples bound to the tables they reference."""

    def __init__(self, samples: List[CodeSample], dataset: "Dataset", name: str = ""):
        self.samples = list(samples)
        self.dataset = dataset
        self.name = name

    @property
    def vocab(self) -> Vocabulary:
        return self.dataset.vocab

    @property
    def path_table(self) -> PathTable:
        return self.dataset.path_table

    @property
    def languages(self) -> LanguageMap:
        return self.dataset.languages

    @property
    def task(self) -> str:
        return self.dataset.task

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return SampleSet(self.samples[idx], self.dataset, self.name)
        if isinstance(idx, (list, np.ndarray)):
            return SampleSet([self.samples[i] for i in idx], self.dataset, self.name)
        return self.samples[idx]

    def __len__(self) -> int:
        return len(self.samples)

    def __repr__(self) -> str:
        return f"SampleSet({self.name!r}, {len(self)} samples, task={self.task!r})"


class Dataset:
    def __init__(self, task: str, languages: LanguageMap, vocab: Vocabulary, path_table: PathTable,
                 splits: Mapping[str, List[CodeSample]], stats: Optional[Dict] = None):
        if task not in TASKS:
            raise ValueError(f"unknown task {task!r}")
        self.task = task
        self.languages = languages
        self.vocab = vocab
        self.path_table = path_table
        self.splits: Dict[str, List[CodeSample]] = {k: list(v) for k, v in splits.items()}
        self.stats = stats or {}

    def split(self, name: str) -> SampleSet:
        try:
            return SampleSet(self.splits[name], self, name)
        except KeyError:
            raise KeyError(f"dataset has no split {name!r}; available: {sorted(self.splits)}") from None

    def __eq__(self, other) -> bool:
        return (isinstance(other, Dataset) and self.task == other.task and self.languages == other.languages
                and self.vocab == other.vocab and self.path_table == other.path_table
                and self.splits.keys() == other.splits.keys()
                and all(self.splits[k] == other.splits[k] for k in self.splits))

    def __repr__(self) -> str:
        sizes = {k: len(v) for k, v in self.splits.items()}
        return f"Dataset(task={self.task!r}, languages={self.languages.names}, splits={sizes})"


def _parse_record(args):
    index, record, language = args
    try:
        return parse_function(record["code"], language, str(record.get("id", index)))
    except PolycodeError as exc:
        return exc


def build_dataset(records: Iterable[Mapping], task: str, *, min_count: int = 100, seed: int = 0,
                  max_len: int = MAX_SEQ_LEN, max_path_len: int = MAX_PATH_LEN,
                  languages: Optional[Sequence[str]] = None, workers: int = 1) -> Dataset:
    """Parse raw functions and turn them into task samples.

    ``records`` are mappings with ``language`` and ``code`` keys, plus
    optional ``id`` and ``split`` (default ``"train"``). Vocabularies are
    counted on the train split only. Functions that fail to parse, are
    anonymous (summarization) or too short (completion) are skipped and
    counted in ``dataset.stats``.
    """
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    records = list(records)
    lang_map = LanguageMap(languages if languages is not None
                           else sorted({r["language"] for r in records}))
    jobs = [(i, r, lang_map[r["language"]]) for i, r in enumerate(records)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            parsed = list(pool.map(_parse_record, jobs, chunksize=16))
    else:
        parsed = [_parse_record(j) for j in jobs]

    stats: Counter = Counter()
    by_split: Dict[str, List[ParsedFunction]] = {}
    order: Dict[str, List[int]] = {}
    for (i, record, _), fn in zip(jobs, parsed):
        split = record.get("split", "train")
        if isinstance(fn, ParseError):
            stats[f"{split}.parse_error"] += 1
            continue
        if isinstance(fn, Exception):
            raise fn
        by_split.setdefault(split, []).append(fn)
        order.setdefault(split, []).append(i)

    vocab = build_vocabularies(by_split.get("train", []), min_count)
    table = PathTable(max_path_len)
    splits: Dict[str, List[CodeSample]] = {}
    for split in sorted(by_split):
        out = splits[split] = []
        for fn, index in zip(by_split[split], order[split]):
            try:
                if task == "summarization":
                    out.append(make_summarization_sample(fn, vocab, table, max_len))
                else:
                    sample_seed = int(np.random.SeedSequence([seed, index]).generate_state(1)[0])
                    out.append(make_completion_sample(fn, sample_seed, vocab, table, max_len))
            except NoName:
                stats[f"{split}.anonymous"] += 1
            except TooShort:
                stats[f"{split}.too_short"] += 1
        stats[f"{split}.samples"] = len(out)
    log.info("built %s dataset: %s", task, dict(stats))
    return Dataset(task, lang_map, vocab, table, splits, dict(sorted(stats.items())))


# -- serialization -----------------------------------------------------------

def _dumps(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def _sample_to_json(s: CodeSample) -> Dict:
    if isinstance(s.target, SummaryTarget):
        target = {"ids": list(s.target.ids)}
    else:
        target = {"mask_position": s.target.mask_position, "answer_id": s.target.answer_id}
    return {"id": s.id, "language": s.language.name, "subtokens": s.subtokens.tolist(),
            "leaf_of": s.leaf_of.tolist(), "abs_path_ref": s.abs_path_ref.tolist(),
            "rel_path_ref": s.rel_path_ref.tolist(), "target": target}


def _sample_from_json(d: Mapping, languages: LanguageMap) -> CodeSample:
    t = d["target"]
    target = (SummaryTarget(tuple(t["ids"])) if "ids" in t
              else CompletionTarget(int(t["mask_position"]), int(t["answer_id"])))
    n = len(d["subtokens"])
    rel = np.array(d["rel_path_ref"], dtype=np.int32).reshape(n, n)
    return CodeSample(d["id"], languages[d["language"]], np.array(d["subtokens"], dtype=np.int64),
                      np.array(d["leaf_of"], dtype=np.int64), rel,
                      np.array(d["abs_path_ref"], dtype=np.int32), target)


def _sample_to_bytes(s: CodeSample) -> bytes:
    sid = s.id.encode("utf-8")
    n = len(s.subtokens)
    parts = [struct.pack("<H", len(sid)), sid, struct.pack("<HI", s.language.code, n)]
    for arr in (s.subtokens, s.leaf_of, s.abs_path_ref, s.rel_path_ref):
        parts.append(np.ascontiguousarray(arr, dtype="<i4").tobytes())
    if isinstance(s.target, SummaryTarget):
        parts.append(struct.pack("<BI", 0, len(s.target.ids)))
        parts.append(np.asarray(s.target.ids, dtype="<i4").tobytes())
    else:
        parts.append(struct.pack("<BIi", 1, s.target.mask_position, s.target.answer_id))
    return b"".join(parts)


def _sample_from_bytes(buf: bytes, languages: LanguageMap) -> CodeSample:
    off = 0

    def take(fmt):
        nonlocal off
        vals = struct.unpack_from(fmt, buf, off)
        off += struct.calcsize(fmt)
        return vals

    def ints(count):
        nonlocal off
        end = off + 4 * count
        if end > len(buf):
            raise struct.error("array runs past the record")
        arr = np.frombuffer(buf[off:end], dtype="<i4")
        off = end
        return arr

    (id_len,) = take("<H")
    sid = buf[off:off + id_len].decode("utf-8")
    off += id_len
    code, n = take("<HI")
    subtokens = ints(n).astype(np.int64)
    leaf_of = ints(n).astype(np.int64)
    absolute = ints(n).astype(np.int32)
    rel = ints(n * n).astype(np.int32).reshape(n, n)
    (kind,) = take("<B")
    if kind == 0:
        (m,) = take("<I")
        target = SummaryTarget(tuple(int(x) for x in ints(m)))
    elif kind == 1:
        pos, ans = take("<Ii")
        target = CompletionTarget(pos, ans)
    else:
        raise ValueError(f"unknown target kind {kind}")
    if off != len(buf):
        raise ValueError("trailing bytes in record")
    return CodeSample(sid, languages[code], subtokens, leaf_of, rel, absolute, target)


def _encode_split(samples: List[CodeSample], record_format: str) -> bytes:
    if record_format == "jsonl":
        return b"".join(_dumps(_sample_to_json(s)) + b"\n" for s in samples)
    chunks = [BINARY_MAGIC]
    for s in samples:
        rec = _sample_to_bytes(s)
        chunks.append(struct.pack("<I", len(rec)))
        chunks.append(rec)
    return b"".join(chunks)


def _decode_split(blob: bytes, record_format: str, languages: LanguageMap) -> Iterator[CodeSample]:
    if record_format == "jsonl":
        for line in blob.splitlines():
            yield _sample_from_json(json.loads(line), languages)
        return
    if not blob.startswith(BINARY_MAGIC):
        raise ValueError("bad record-file magic")
    off = len(BINARY_MAGIC)
    while off < len(blob):
        if off + 4 > len(blob):
            raise ValueError("truncated length prefix")
        (size,) = struct.unpack_from("<I", blob, off)
        off += 4
        if off + size > len(blob):
            raise ValueError("truncated record")
        yield _sample_from_bytes(blob[off:off + size], languages)
        off += size


def serialize_dataset(dataset: Dataset, destination, record_format: str = "jsonl") -> Path:
    """Write ``dataset`` into the directory ``destination``; output is byte-stable."""
    if record_format not in ("jsonl", "binary"):
        raise ValueError("record_format must be 'jsonl' or 'binary'")
    dest = Path(destination)
    dest.mkdir(parents=True, exist_ok=True)
    ext = "jsonl" if record_format == "jsonl" else "bin"
    blobs = {
        "languages.json": _dumps(dataset.languages.to_dict()),
        "vocab.json": _dumps(dataset.vocab.to_dict()),
        "paths.json": _dumps(dataset.path_table.to_dict()),
    }
    split_files = {}
    for name in sorted(dataset.splits):
        fname = f"{name}.{ext}"
        blobs[fname] = _encode_split(dataset.splits[name], record_format)
        split_files[name] = {"file": fname, "count": len(dataset.splits[name])}
    manifest = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "task": dataset.task,
        "record_format": record_format,
        "languages": "languages.json",
        "vocab": "vocab.json",
        "path_table": "paths.json",
        "splits": split_files,
        "sha256": {f: hashlib.sha256(b).hexdigest() for f, b in sorted(blobs.items())},
        "stats": dataset.stats,
    }
    for fname, blob in blobs.items():
        (dest / fname).write_bytes(blob)
    (dest / "manifest.json").write_bytes(_dumps(manifest) + b"\n")
    return dest


def _read_checked(root: Path, fname: str, manifest: Mapping) -> bytes:
    try:
        blob = (root / fname).read_bytes()
    except OSError as exc:
        raise CorruptFile(f"cannot read {fname}: {exc}") from exc
    expected = manifest.get("sha256", {}).get(fname)
    if expected is not None and hashlib.sha256(blob).hexdigest() != expected:
        raise CorruptFile(f"{fname} does not match its manifest checksum")
    return blob


def load_dataset(source) -> Dataset:
    """Load a dataset directory written by :func:`serialize_dataset`."""
    root = Path(source)
    if root.is_file():
        root = root.parent
    try:
        manifest = json.loads((root / "manifest.json").read_bytes())
    except (OSError, ValueError) as exc:
        raise CorruptFile(f"unreadable manifest in {root}: {exc}") from exc
    if manifest.get("format") != FORMAT_NAME:
        raise CorruptFile(f"{root} is not a {FORMAT_NAME} directory")
    if manifest.get("version") != FORMAT_VERSION:
        raise FormatVersionMismatch(
            f"dataset format version {manifest.get('version')} != supported {FORMAT_VERSION}")
    try:
        languages = LanguageMap.from_dict(json.loads(_read_checked(root, manifest["languages"], manifest)))
        vocab = Vocabulary.from_dict(json.loads(_read_checked(root, manifest["vocab"], manifest)))
        table = PathTable.from_dict(json.loads(_read_checked(root, manifest["path_table"], manifest)))
        splits = {}
        for name, info in manifest["splits"].items():
            blob = _read_checked(root, info["file"], manifest)
            samples = list(_decode_split(blob, manifest["record_format"], languages))
            if len(samples) != info["count"]:
                raise CorruptFile(f"split {name!r}: expected {info['count']} records, found {len(samples)}")
            splits[name] = samples
    except CorruptFile:
        raise
    except (KeyError, ValueError, TypeError, struct.error, UnicodeDecodeError) as exc:
        raise CorruptFile(f"malformed dataset in {root}: {exc}") from exc
    for name, samples in splits.items():
        for s in samples:
            if (s.rel_path_ref.size and s.rel_path_ref.max() >= len(table)) or \
                    (s.abs_path_ref.size and s.abs_path_ref.max() >= len(table)):
                raise CorruptFile(f"sample {s.id!r} in {name!r} references a missing path")
    return Dataset(manifest["task"], languages, vocab, table, splits, manifest.get("stats", {}))


def read_records(path) -> List[Dict]:
    """Read raw functions from a JSONL file (one ``{"language", "code", ...}`` per line)."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(json.loads(line))
    return out
