"""Task samples: parsed functions turned into id sequences plus path references."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import NoName, TooShort
from .languages import LanguageId, get_adapter
from .subtokens import split_identifier
from .syntax import (DOWN, UP, Path, SyntaxTree, absolute_path, leaf_tokens, relative_path,
                     resample_path, reverse_path, tree_from_node, ts_parse)
from .vocab import EOS_ID, MASK_ID, NAME, SPECIALS, Vocabulary

MAX_SEQ_LEN = 512
MAX_PATH_LEN = 32


class PathTable:
    """Deduplicated node-type-id sequences; id 0 is the empty path."""

    def __init__(self, max_len: int = MAX_PATH_LEN):
        self.max_len = max_len
        self.entries: List[Tuple[int, ...]] = [()]
        self._index: Dict[Tuple[int, ...], int] = {(): 0}

    def add(self, seq: Sequence[int]) -> int:
        key = tuple(int(x) for x in seq)
        found = self._index.get(key)
        if found is not None:
            return found
        if len(key) > self.max_len:
            raise ValueError(f"path of length {len(key)} exceeds the cap of {self.max_len}")
        self._index[key] = len(self.entries)
        self.entries.append(key)
        return self._index[key]

    def id_of(self, seq: Sequence[int]) -> int:
        return self._index[tuple(int(x) for x in seq)]

    def __getitem__(self, idx: int) -> Tuple[int, ...]:
        return self.entries[idx]

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, seq) -> bool:
        return tuple(seq) in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, PathTable) and self.entries == other.entries and self.max_len == other.max_len

    def to_dict(self) -> Dict:
        return {"max_len": self.max_len, "entries": [list(e) for e in self.entries]}

    @classmethod
    def from_dict(cls, data) -> "PathTable":
        table = cls(data["max_len"])
        entries = data["entries"]
        if not entries or list(entries[0]):
            raise ValueError("path table must start with the empty path")
        for e in entries[1:]:
            if table.add(e) != len(table) - 1:
                raise ValueError("duplicate path table entry")
        return table

    def __repr__(self) -> str:
        return f"PathTable({len(self)} entries, max_len={self.max_len})"


@dataclass(frozen=True)
class SummaryTarget:
    ids: Tuple[int, ...]  # name subtokens followed by <EOS>


@dataclass(frozen=True)
class CompletionTarget:
    mask_position: int
    answer_id: int


Target = Union[SummaryTarget, CompletionTarget]


@dataclass(eq=False)
class CodeSample:
    id: str
    language: LanguageId
    subtokens: np.ndarray
    leaf_of: np.ndarray
    rel_path_ref: np.ndarray
    abs_path_ref: np.ndarray
    target: Target

    def __len__(self) -> int:
        return len(self.subtokens)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CodeSample):
            return NotImplemented
        return (self.id == other.id and self.language == other.language and self.target == other.target
                and all(np.array_equal(getattr(self, f), getattr(other, f))
                        for f in ("subtokens", "leaf_of", "rel_path_ref", "abs_path_ref")))

    @property
    def task(self) -> str:
        return "summarization" if isinstance(self.target, SummaryTarget) else "completion"


@dataclass
class ParsedFunction:
    """One function with its tree, retained leaf tokens and (optional) name."""

    language: LanguageId
    source: bytes
    tree: SyntaxTree
    name: Optional[str]
    id: str = ""
    tokens: List[Tuple[str, int]] = field(init=False)
    _paths: Dict[Tuple[int, int], Path] = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        self.tokens = leaf_tokens(self.tree, self.source)

    def subtoken_counts(self) -> Counter:
        counts: Counter = Counter()
        for text, _ in self.tokens:
            counts.update(split_identifier(text))
        return counts

    def node_type_counts(self) -> Counter:
        counts: Counter = Counter()
        for t in self.tree.types:
            counts[t] += 1
            counts[t + UP] += 1
            counts[t + DOWN] += 1
        return counts

    def rel_path(self, a: int, b: int) -> Path:
        if a == b:
            return ()
        key = (a, b) if a < b else (b, a)
        p = self._paths.get(key)
        if p is None:
            p = self._paths[key] = relative_path(self.tree, *key)
        return p if a < b else reverse_path(p)


def parse_function(source_text: str, language: LanguageId, sample_id: str = "") -> ParsedFunction:
    """Parse a function and locate its name (``None`` for anonymous functions)."""
    adapter = get_adapter(language)
    raw, root = ts_parse(source_text, language)
    name = None
    stack = [root]
    while stack:
        node = stack.pop()
        if node.type in adapter.function_types:
            name_node = adapter.name_of(node)
            if name_node is not None:
                name = raw[name_node.start_byte:name_node.end_byte].decode("utf-8")
            break
        stack.extend(reversed(node.children))
    return ParsedFunction(language, raw, tree_from_node(root), name, sample_id)


def _encode_path(path: Path, vocab: Vocabulary, table: PathTable) -> int:
    if not path:
        return 0
    return table.add([vocab.node_type_id(t) for t in resample_path(path, table.max_len)])


def _path_refs(fn: ParsedFunction, leaf_of: Sequence[int], vocab: Vocabulary,
               table: PathTable) -> Tuple[np.ndarray, np.ndarray]:
    leaves = list(dict.fromkeys(leaf_of))
    slot = {leaf: k for k, leaf in enumerate(leaves)}
    pair = np.zeros((len(leaves), len(leaves)), dtype=np.int32)
    for a in range(len(leaves)):
        for b in range(len(leaves)):
            if a != b:
                pair[a, b] = _encode_path(fn.rel_path(leaves[a], leaves[b]), vocab, table)
    absolute = np.array([_encode_path(absolute_path(fn.tree, leaf), vocab, table) for leaf in leaves],
                        dtype=np.int32)
    idx = np.array([slot[leaf] for leaf in leaf_of], dtype=np.int64)
    # subtokens of one leaf inherit its paths; pairs within a leaf get the empty path
    return pair[np.ix_(idx, idx)], absolute[idx]


def _positions(fn: ParsedFunction, substitute_name: bool, max_len: int) -> Tuple[List[str], List[int]]:
    subs, leaves = [], []
    for text, leaf in fn.tokens:
        if substitute_name and text == fn.name:
            pieces = [NAME]
        else:
            pieces = split_identifier(text)
        subs.extend(pieces)
        leaves.extend([leaf] * len(pieces))
    return subs[:max_len], leaves[:max_len]


def make_summarization_sample(fn: ParsedFunction, vocab: Vocabulary, table: PathTable,
                              max_len: int = MAX_SEQ_LEN) -> CodeSample:
    """Body subtokens with every occurrence of the function's name replaced by ``<NAME>``;
    the target is the name's subtokens terminated by ``<EOS>``."""
    if not fn.name:
        raise NoName(f"anonymous {fn.language.name} function {fn.id!r}")
    subs, leaves = _positions(fn, True, max_len)
    rel, absolute = _path_refs(fn, leaves, vocab, table)
    target = tuple(vocab.encode(split_identifier(fn.name))) + (EOS_ID,)
    return CodeSample(fn.id, fn.language, np.array(vocab.encode(subs), dtype=np.int64),
                      np.array(leaves, dtype=np.int64), rel, absolute, SummaryTarget(target))


def mask_eligible(subtokens: Sequence[str]) -> List[int]:
    return [i for i, s in enumerate(subtokens) if s not in SPECIALS]


def choose_mask_position(eligible: Sequence[int], seed: int) -> int:
    if not eligible:
        raise TooShort("no eligible position to mask")
    rng = np.random.default_rng(seed)
    return int(eligible[int(rng.integers(len(eligible)))])


def make_completion_sample(fn: ParsedFunction, seed: int, vocab: Vocabulary, table: PathTable,
                           max_len: int = MAX_SEQ_LEN, substitute_name: bool = False) -> CodeSample:
    """Replace one uniformly chosen subtoken with ``<MASK>``; the answer is its id."""
    subs, leaves = _positions(fn, substitute_name, max_len)
    if len(subs) < 2:
        raise TooShort(f"function {fn.id!r} has {len(subs)} subtoken(s)")
    pos = choose_mask_position(mask_eligible(subs), seed)
    ids = np.array(vocab.encode(subs), dtype=np.int64)
    answer = int(ids[pos])
    ids[pos] = MASK_ID
    rel, absolute = _path_refs(fn, leaves, vocab, table)
    return CodeSample(fn.id, fn.language, ids, np.array(leaves, dtype=np.int64), rel, absolute,
                      CompletionTarget(pos, answer))
