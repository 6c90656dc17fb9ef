"""Subtoken and node-type vocabularies."""
from __future__ import annotations

import hashlib
import json
from collections import Counter
from typing import Dict, Iterable, List, Mapping, Sequence

from ..exceptions import EmptyCorpus

PAD, UNK, MASK, BOS, EOS, NAME = "<PAD>", "<UNK>", "<MASK>", "<BOS>", "<EOS>", "<NAME>"
SPECIALS = (PAD, UNK, MASK, BOS, EOS, NAME)
PAD_ID, UNK_ID, MASK_ID, BOS_ID, EOS_ID, NAME_ID = range(len(SPECIALS))

NODE_SPECIALS = (PAD, UNK)
NODE_PAD_ID, NODE_UNK_ID = 0, 1


def _rank(counts: Mapping[str, int], min_count: int) -> List[str]:
    kept = [(tok, c) for tok, c in counts.items() if c >= min_count]
    kept.sort(key=lambda tc: (-tc[1], tc[0]))
    return [tok for tok, _ in kept]


class Vocabulary:
    """Subtoken and node-type id maps with the specials at fixed low ids."""

    def __init__(self, subtokens: Sequence[str], node_types: Sequence[str], min_count: int = 1):
        self.subtokens: List[str] = list(subtokens)
        self.node_types: List[str] = list(node_types)
        self.min_count = min_count
        if tuple(self.subtokens[:len(SPECIALS)]) != SPECIALS:
            raise ValueError("subtoken vocabulary must start with the special tokens")
        if tuple(self.node_types[:len(NODE_SPECIALS)]) != NODE_SPECIALS:
            raise ValueError("node-type vocabulary must start with <PAD>, <UNK>")
        self._sub_index: Dict[str, int] = {t: i for i, t in enumerate(self.subtokens)}
        self._node_index: Dict[str, int] = {t: i for i, t in enumerate(self.node_types)}

    @classmethod
    def from_counts(cls, subtoken_counts: Mapping[str, int], node_counts: Mapping[str, int],
                    min_count: int) -> "Vocabulary":
        subs = [t for t in _rank(subtoken_counts, min_count) if t not in SPECIALS]
        nodes = [t for t in _rank(node_counts, 1) if t not in NODE_SPECIALS]
        return cls(list(SPECIALS) + subs, list(NODE_SPECIALS) + nodes, min_count)

    def __len__(self) -> int:
        return len(self.subtokens)

    @property
    def n_node_types(self) -> int:
        return len(self.node_types)

    def subtoken_id(self, token: str) -> int:
        return self._sub_index.get(token, UNK_ID)

    def node_type_id(self, node_type: str) -> int:
        return self._node_index.get(node_type, NODE_UNK_ID)

    def encode(self, tokens: Iterable[str]) -> List[int]:
        return [self.subtoken_id(t) for t in tokens]

    def decode(self, ids: Iterable[int]) -> List[str]:
        return [self.subtokens[int(i)] for i in ids]

    def __contains__(self, token: str) -> bool:
        return token in self._sub_index

    def __eq__(self, other) -> bool:
        return (isinstance(other, Vocabulary) and self.subtokens == other.subtokens
                and self.node_types == other.node_types and self.min_count == other.min_count)

    def to_dict(self) -> Dict:
        return {"min_count": self.min_count, "subtokens": self.subtokens, "node_types": self.node_types}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Vocabulary":
        return cls(data["subtokens"], data["node_types"], data["min_count"])

    def hash(self) -> str:
        """Content hash used to pair checkpoints with datasets."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def __repr__(self) -> str:
        return f"Vocabulary(subtokens={len(self.subtokens)}, node_types={len(self.node_types)}, min_count={self.min_count})"


def build_vocabularies(corpus, min_count: int = 100) -> Vocabulary:
    """Count subtokens and node types over the training functions.

    ``corpus`` yields objects exposing ``subtoken_counts()`` and
    ``node_type_counts()`` (see :class:`~polycode.ingest.samples.ParsedFunction`).
    Subtokens below ``min_count`` are left out and later map to ``<UNK>``;
    node types are kept regardless of frequency.
    """
    subs: Counter = Counter()
    nodes: Counter = Counter()
    seen = 0
    for fn in corpus:
        subs.update(fn.subtoken_counts())
        nodes.update(fn.node_type_counts())
        seen += 1
    if not seen:
        raise EmptyCorpus("cannot build vocabularies from an empty training split")
    return Vocabulary.from_counts(subs, nodes, min_count)
