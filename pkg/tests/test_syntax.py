import json
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from polycode.exceptions import ParseError, UnsupportedLanguage
from polycode.ingest import (DOWN, UP, SyntaxTree, absolute_path, leaf_tokens, pairwise_relative_paths,
                             parse_source, relative_path, resample_path, reverse_path)

from oracles import resample_indices

GOLDEN = Path(__file__).parent / "data" / "golden"
PY = "def f(x):\n  return x"


@pytest.fixture(scope="module")
def py_tree():
    return parse_source(PY, "python")


def test_python_golden_shape(py_tree):
    assert py_tree.types[0] == "module"
    assert py_tree.types[1] == "function_definition"
    src = PY.encode()
    leaves = [src[slice(*py_tree.spans[i])].decode() for i in py_tree.leaves]
    assert leaves == ["def", "f", "(", "x", ")", ":", "return", "x"]


@pytest.mark.parametrize("language", ["python", "javascript", "go", "ruby"])
def test_golden_files(language):
    golden = json.loads((GOLDEN / f"{language}.json").read_text())
    tree = parse_source(golden["source"], language)
    assert list(tree.types) == golden["types"]
    assert [list(p) for p in leaf_tokens(tree, golden["source"])] == golden["leaf_tokens"]


def test_empty_source_rejected():
    with pytest.raises(ParseError):
        parse_source("", "python")


def test_syntax_error_rejected():
    with pytest.raises(ParseError):
        parse_source("def f(:\n", "python")


def test_unknown_language():
    with pytest.raises(UnsupportedLanguage):
        parse_source("x", "cobol")


def test_deterministic(py_tree):
    again = parse_source(PY, "python")
    assert again == py_tree
    assert again.to_json() == py_tree.to_json()
    assert SyntaxTree.from_dict(json.loads(py_tree.to_json())) == py_tree


def test_leaf_tokens_drop_punctuation(py_tree):
    toks = leaf_tokens(py_tree, PY)
    assert [t for t, _ in toks] == ["def", "f", "x", "return", "x"]
    assert len(toks) <= len(py_tree.leaves)


def test_punctuation_only_tree():
    tree = SyntaxTree(["root", "(", ")"], [[1, 2], [], []], [(0, 2), (0, 1), (1, 2)])
    assert leaf_tokens(tree, "()") == []


def test_relative_path_golden(py_tree):
    f, x_ret = 3, 12
    assert relative_path(py_tree, f, x_ret) == (
        "identifier" + UP, "function_definition", "block" + DOWN, "return_statement" + DOWN, "identifier" + DOWN)


def test_relative_path_self_and_siblings():
    tree = SyntaxTree(["P", "A", "B"], [[1, 2], [], []], [(0, 2), (0, 1), (1, 2)])
    assert relative_path(tree, 1, 1) == ()
    assert relative_path(tree, 1, 2) == ("A" + UP, "P", "B" + DOWN)
    assert relative_path(tree, 2, 1) == reverse_path(relative_path(tree, 1, 2))


def test_relative_path_rejects_internal_nodes(py_tree):
    with pytest.raises(IndexError):
        relative_path(py_tree, 1, 3)


def test_absolute_path_golden(py_tree):
    assert absolute_path(py_tree, 11) == ("module", "function_definition", "block", "return_statement", "return")


def test_absolute_path_single_node():
    tree = SyntaxTree(["root"], [[]], [(0, 1)])
    assert absolute_path(tree, 0) == ("root",)


def test_pairwise_matches_direct(py_tree):
    leaves = py_tree.leaves
    paths = pairwise_relative_paths(py_tree, leaves)
    for (a, b), p in paths.items():
        assert p == relative_path(py_tree, a, b)
        assert absolute_path(py_tree, a)[0] == "module"


def naive_lca(tree, a, b):
    anc = set()
    while a != -1:
        anc.add(a)
        a = tree.parents[a]
    while b not in anc:
        b = tree.parents[b]
    return b


@st.composite
def random_trees(draw):
    n = draw(st.integers(1, 40))
    parents = [-1] + [draw(st.integers(0, i - 1)) for i in range(1, n)]
    # relabel into pre-order by DFS
    kids = [[] for _ in range(n)]
    for i in range(1, n):
        kids[parents[i]].append(i)
    order, stack = [], [0]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(reversed(kids[v]))
    pos = {v: i for i, v in enumerate(order)}
    children = [[pos[c] for c in kids[v]] for v in order]
    return SyntaxTree([f"t{v % 5}" for v in order], children, [(0, 0)] * n)


@settings(max_examples=60, deadline=None)
@given(random_trees(), st.data())
def test_lca_matches_naive(tree, data):
    a = data.draw(st.integers(0, len(tree) - 1))
    b = data.draw(st.integers(0, len(tree) - 1))
    assert tree.lca(a, b) == naive_lca(tree, a, b)


@settings(max_examples=60, deadline=None)
@given(random_trees(), st.data())
def test_relative_path_structure(tree, data):
    leaves = tree.leaves
    a = data.draw(st.sampled_from(leaves))
    b = data.draw(st.sampled_from(leaves))
    p = relative_path(tree, a, b)
    if a == b:
        assert p == ()
        return
    unmarked = [t for t in p if not t.endswith((UP, DOWN))]
    assert len(unmarked) == 1
    top = p.index(unmarked[0])
    assert all(t.endswith(UP) for t in p[:top]) and all(t.endswith(DOWN) for t in p[top + 1:])
    assert len(p) == tree.depths[a] + tree.depths[b] - 2 * tree.depths[tree.lca(a, b)] + 1
    assert relative_path(tree, b, a) == reverse_path(p)


def test_resample_short_unchanged():
    p = tuple(range(10))
    assert resample_path(p, 32) == p


@pytest.mark.parametrize("n", [33, 64, 100])
def test_resample_floor_index(n):
    assert list(resample_path(list(range(n)), 32)) == resample_indices(n, 32)


def test_resample_frozen_values():
    assert list(resample_path(list(range(64)), 32)) == list(range(0, 64, 2))
    assert list(resample_path(list(range(33)), 32)) == list(range(32))


@given(st.integers(0, 300), st.integers(1, 40))
def test_resample_length_and_order(n, m):
    out = resample_path(list(range(n)), m)
    assert len(out) == min(n, m)
    assert list(out) == sorted(set(out))
    if n:
        assert out[0] == 0


def test_resample_rejects_zero():
    with pytest.raises(ValueError):
        resample_path([1], 0)
