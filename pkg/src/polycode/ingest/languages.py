"""Language identifiers and tree-sitter grammar adapters."""
from __future__ import annotations

import importlib
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Optional, Tuple

from ..exceptions import UnknownLanguage, UnsupportedLanguage


@dataclass(frozen=True, order=True)
class LanguageId:
    name: str
    code: int


class LanguageMap:
    """Dense, stable ``name <-> code`` mapping stored alongside a dataset."""

    def __init__(self, names: Iterable[str] = ()):
        self._names: List[str] = []
        self._codes: Dict[str, int] = {}
        for name in names:
            self.add(name)

    def add(self, name: str) -> LanguageId:
        if name not in self._codes:
            self._codes[name] = len(self._names)
            self._names.append(name)
        return LanguageId(name, self._codes[name])

    def __getitem__(self, key) -> LanguageId:
        if isinstance(key, LanguageId):
            key = key.name
        if isinstance(key, int):
            if not 0 <= key < len(self._names):
                raise UnknownLanguage(f"no language with code {key}")
            return LanguageId(self._names[key], key)
        try:
            return LanguageId(key, self._codes[key])
        except KeyError:
            raise UnknownLanguage(f"language {key!r} is not registered") from None

    def __contains__(self, name) -> bool:
        return name in self._codes

    def __len__(self) -> int:
        return len(self._names)

    def __iter__(self):
        return (LanguageId(n, i) for i, n in enumerate(self._names))

    def __eq__(self, other) -> bool:
        return isinstance(other, LanguageMap) and self._names == other._names

    @property
    def names(self) -> List[str]:
        return list(self._names)

    def to_dict(self) -> Dict[str, int]:
        return dict(self._codes)

    @classmethod
    def from_dict(cls, mapping: Dict[str, int]) -> "LanguageMap":
        names = sorted(mapping, key=mapping.__getitem__)
        if [mapping[n] for n in names] != list(range(len(names))):
            raise ValueError("language codes must be dense 0..L-1")
        return cls(names)

    def __repr__(self) -> str:
        return f"LanguageMap({self._names!r})"


def _field_name(node) -> Optional[object]:
    return node.child_by_field_name("name")


@dataclass(frozen=True)
class GrammarAdapter:
    """How to parse one language and where its function names live.

    ``function_types`` lists the node types that define a function; the
    first one met in pre-order is the function a sample is built from.
    """

    name: str
    module: str
    function_types: Tuple[str, ...]
    name_of: Callable = field(default=_field_name, compare=False)

    @lru_cache(maxsize=None)
    def language(self):
        from tree_sitter import Language

        try:
            mod = importlib.import_module(self.module)
        except ImportError as exc:  # grammar wheel missing
            raise UnsupportedLanguage(
                f"grammar package {self.module!r} for {self.name!r} is not installed") from exc
        return Language(mod.language())

    def parser(self):
        from tree_sitter import Parser

        return Parser(self.language())


ADAPTERS: Dict[str, GrammarAdapter] = {}


def register_adapter(adapter: GrammarAdapter) -> GrammarAdapter:
    ADAPTERS[adapter.name] = adapter
    return adapter


def get_adapter(language) -> GrammarAdapter:
    name = language.name if isinstance(language, LanguageId) else language
    try:
        return ADAPTERS[name]
    except KeyError:
        raise UnsupportedLanguage(f"no grammar adapter registered for {name!r}") from None


register_adapter(GrammarAdapter("python", "tree_sitter_python", ("function_definition",)))
register_adapter(GrammarAdapter(
    "javascript", "tree_sitter_javascript",
    ("function_declaration", "generator_function_declaration", "function_expression",
     "function", "generator_function", "arrow_function", "method_definition")))
register_adapter(GrammarAdapter("go", "tree_sitter_go", ("function_declaration", "method_declaration", "func_literal")))
register_adapter(GrammarAdapter("ruby", "tree_sitter_ruby", ("method", "singleton_method", "lambda")))
