"""Syntax trees, leaf tokens and AST paths.

Trees are flattened into pre-order arrays so they serialize cheaply and
compare by value. Lowest common ancestors come from an Euler tour with a
sparse-table range-minimum index, built once per tree.
"""
from __future__ import annotations

import json
from typing import Dict, List, Optional, Sequence, Tuple

from ..exceptions import ParseError
from .languages import get_adapter
from .subtokens import is_punctuation

UP = "↑"
DOWN = "↓"

Path = Tuple[str, ...]


def flip(node_type: str) -> str:
    """Swap the direction marker of a relative-path element."""
    if node_type.endswith(UP):
        return node_type[:-1] + DOWN
    if node_type.endswith(DOWN):
        return node_type[:-1] + UP
    return node_type


def reverse_path(path: Sequence[str]) -> Path:
    return tuple(flip(t) for t in reversed(path))


class SyntaxTree:
    """A parsed function as flat pre-order arrays (root is node 0)."""

    __slots__ = ("types", "children", "spans", "parents", "depths", "leaves", "root", "_lca")

    def __init__(self, types, children, spans):
        self.types: List[str] = list(types)
        self.children: List[Tuple[int, ...]] = [tuple(c) for c in children]
        self.spans: List[Tuple[int, int]] = [tuple(s) for s in spans]
        self.root = 0
        n = len(self.types)
        self.parents: List[int] = [-1] * n
        self.depths: List[int] = [0] * n
        for node in range(n):
            for child in self.children[node]:
                self.parents[child] = node
                self.depths[child] = self.depths[node] + 1
        self.leaves: List[int] = [i for i in range(n) if not self.children[i]]
        self._lca: Optional[_LcaIndex] = None

    def __len__(self) -> int:
        return len(self.types)

    def __eq__(self, other) -> bool:
        return (isinstance(other, SyntaxTree) and self.types == other.types
                and self.children == other.children and self.spans == other.spans)

    def __repr__(self) -> str:
        return f"SyntaxTree(root={self.types[0]!r}, nodes={len(self)}, leaves={len(self.leaves)})"

    def is_leaf(self, node: int) -> bool:
        return 0 <= node < len(self.types) and not self.children[node]

    def _check_leaf(self, node: int) -> None:
        if not isinstance(node, int) or not self.is_leaf(node):
            raise IndexError(f"node {node!r} is not a leaf of this tree")

    def lca(self, a: int, b: int) -> int:
        if self._lca is None:
            self._lca = _LcaIndex(self)
        return self._lca.query(a, b)

    def to_dict(self) -> Dict:
        return {"types": self.types, "children": [list(c) for c in self.children],
                "spans": [list(s) for s in self.spans]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: Dict) -> "SyntaxTree":
        return cls(data["types"], data["children"], data["spans"])


class _LcaIndex:
    def __init__(self, tree: SyntaxTree):
        euler: List[int] = []
        first = [0] * len(tree)
        stack = [(tree.root, 0)]
        # iterative Euler tour: re-emit a node after each child returns
        while stack:
            node, k = stack.pop()
            if k == 0:
                first[node] = len(euler)
            euler.append(node)
            kids = tree.children[node]
            if k < len(kids):
                stack.append((node, k + 1))
                stack.append((kids[k], 0))
        self.first = first
        depth = tree.depths
        table = [euler]
        span = 1
        while 2 * span <= len(euler):
            prev = table[-1]
            row = []
            for i in range(len(euler) - 2 * span + 1):
                x, y = prev[i], prev[i + span]
                row.append(x if depth[x] <= depth[y] else y)
            table.append(row)
            span *= 2
        self.table = table
        self.depth = depth

    def query(self, a: int, b: int) -> int:
        lo, hi = sorted((self.first[a], self.first[b]))
        level = (hi - lo + 1).bit_length() - 1
        row = self.table[level]
        x, y = row[lo], row[hi - (1 << level) + 1]
        return x if self.depth[x] <= self.depth[y] else y


def tree_from_node(ts_node) -> SyntaxTree:
    """Flatten a tree-sitter node (and its subtree) into a SyntaxTree."""
    types, children, spans = [], [], []
    stack = [(ts_node, -1)]
    while stack:
        node, parent = stack.pop()
        idx = len(types)
        types.append(node.type)
        children.append([])
        spans.append((node.start_byte, node.end_byte))
        if parent >= 0:
            children[parent].append(idx)
        kids = [c for c in node.children if c.end_byte > c.start_byte or c.child_count]
        for child in reversed(kids):
            stack.append((child, idx))
    return SyntaxTree(types, children, spans)


def parse_source(source_text: str, language) -> SyntaxTree:
    """Parse one complete function with the language's tree-sitter grammar.

    Raises ParseError on empty input or when the grammar reports ERROR or
    MISSING nodes, and UnsupportedLanguage when no adapter is registered.
    """
    _, root = ts_parse(source_text, language)
    return tree_from_node(root)


def ts_parse(source_text: str, language):
    """Run the grammar; returns the encoded source and the tree-sitter root."""
    adapter = get_adapter(language)
    if not source_text.strip():
        raise ParseError("empty source")
    raw = source_text.encode("utf-8")
    root = adapter.parser().parse(raw).root_node
    if root.has_error:
        raise ParseError(f"{adapter.name} grammar rejected the input")
    return raw, root


def leaf_text(tree: SyntaxTree, leaf: int, source: bytes) -> str:
    start, end = tree.spans[leaf]
    return source[start:end].decode("utf-8", errors="replace")


def leaf_tokens(tree: SyntaxTree, source) -> List[Tuple[str, int]]:
    """Source-ordered ``(token, leaf index)`` pairs with punctuation dropped."""
    if isinstance(source, str):
        source = source.encode("utf-8")
    out = []
    for leaf in tree.leaves:
        text = leaf_text(tree, leaf, source)
        if not is_punctuation(text):
            out.append((text, leaf))
    return out


def relative_path(tree: SyntaxTree, leaf_i: int, leaf_j: int) -> Path:
    """Node types from ``leaf_i`` up to the common ancestor and down to ``leaf_j``.

    Ascending elements carry an up marker, descending ones a down marker,
    the common ancestor none. A leaf's path to itself is empty.
    """
    tree._check_leaf(leaf_i)
    tree._check_leaf(leaf_j)
    if leaf_i == leaf_j:
        return ()
    top = tree.lca(leaf_i, leaf_j)
    up = []
    node = leaf_i
    while node != top:
        up.append(tree.types[node] + UP)
        node = tree.parents[node]
    down = []
    node = leaf_j
    while node != top:
        down.append(tree.types[node] + DOWN)
        node = tree.parents[node]
    return tuple(up) + (tree.types[top],) + tuple(reversed(down))


def absolute_path(tree: SyntaxTree, leaf_i: int) -> Path:
    """Node types from the root down to ``leaf_i``, both inclusive."""
    tree._check_leaf(leaf_i)
    chain = []
    node = leaf_i
    while node != -1:
        chain.append(tree.types[node])
        node = tree.parents[node]
    return tuple(reversed(chain))


def resample_path(path: Sequence, max_len: int = 32) -> tuple:
    """Keep at most ``max_len`` elements, sampled at equal intervals.

    Element ``k`` of a shortened path is ``path[floor(k * len(path) / max_len)]``.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    n = len(path)
    if n <= max_len:
        return tuple(path)
    return tuple(path[(k * n) // max_len] for k in range(max_len))


def pairwise_relative_paths(tree: SyntaxTree, leaves: Sequence[int]) -> Dict[Tuple[int, int], Path]:
    """Relative paths between every ordered pair of distinct leaves.

    Each unordered pair is traversed once; the reverse direction is the
    flipped reversal.
    """
    uniq = sorted(set(leaves))
    out: Dict[Tuple[int, int], Path] = {}
    for a_pos, a in enumerate(uniq):
        for b in uniq[a_pos + 1:]:
            p = relative_path(tree, a, b)
            out[(a, b)] = p
            out[(b, a)] = reverse_path(p)
    return out
