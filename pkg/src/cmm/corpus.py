"""Treebank reading and the per-layer training material derived from each tree.

A tree is built from two node types: :class:`Leaf` (a word with its POS tag)
and :class:`Node` (a phrase category over an ordered, non-empty sequence of
children). The *layer* of a node is its height above the terminals, so a leaf
sits on layer 0 and ``(NP (ART Ein) (NN Posten))`` on layer 1.

From every tree we derive one category sequence per layer (the material for
that layer's context model) and the multiset of context-free rules it uses
(the material for the shared grammar).
"""

from __future__ import annotations

import io
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, TextIO, Union

__all__ = [
    "Token",
    "Leaf",
    "Node",
    "SyntaxTree",
    "Rule",
    "LayerSequence",
    "TreebankError",
    "read_treebank",
    "parse_tree",
    "to_brackets",
    "layer_sequences",
    "collect_rules",
    "nonterminals",
]

_ESCAPES = {"(": "-LRB-", ")": "-RRB-"}
_UNESCAPES = {v: k for k, v in _ESCAPES.items()}
_BAD_SYMBOL = re.compile(r"[\s()]")


class TreebankError(ValueError):
    """Malformed bracketed input."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Token:
    word: str
    tag: str

    def __post_init__(self):
        if not self.word:
            raise ValueError("empty word")
        _check_symbol(self.tag)


def _check_symbol(symbol):
    if not symbol or _BAD_SYMBOL.search(symbol):
        raise ValueError(f"invalid category symbol {symbol!r}")


@dataclass(frozen=True)
class Leaf:
    tag: str
    word: str

    layer = 0

    def __post_init__(self):
        _check_symbol(self.tag)
        if not self.word:
            raise ValueError("empty word")

    @property
    def category(self):
        return self.tag

    @property
    def children(self):
        return ()

    def leaves(self):
        yield self

    def __len__(self):
        return 1


@dataclass(frozen=True)
class Node:
    category: str
    children: tuple
    layer: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_symbol(self.category)
        if not isinstance(self.children, tuple):
            object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError(f"node {self.category} has no children")
        object.__setattr__(self, "layer", 1 + max(c.layer for c in self.children))

    def leaves(self):
        for child in self.children:
            yield from child.leaves()

    @cached_property
    def _length(self):
        return sum(len(c) for c in self.children)

    def __len__(self):
        return self._length


SyntaxTree = Union[Leaf, Node]


def tokens(tree: SyntaxTree) -> list[Token]:
    return [Token(leaf.word, leaf.tag) for leaf in tree.leaves()]


@dataclass(frozen=True, order=True)
class Rule:
    """A context-free rule. Lexical rules have ``rhs == (word,)``."""

    lhs: str
    rhs: tuple
    lexical: bool = False

    def __post_init__(self):
        if not isinstance(self.rhs, tuple):
            object.__setattr__(self, "rhs", tuple(self.rhs))
        if not self.rhs:
            raise ValueError("rule with empty right-hand side")
        if self.lexical and len(self.rhs) != 1:
            raise ValueError("lexical rule must rewrite to exactly one word")

    def __str__(self):
        rhs = f'"{self.rhs[0]}"' if self.lexical else " ".join(self.rhs)
        return f"{self.lhs} -> {rhs}"


@dataclass(frozen=True)
class LayerSequence:
    layer: int
    symbols: tuple
    spans: tuple  # (start, end) word offsets, one per symbol


# -- reading ----------------------------------------------------------------

_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def _lex(lines):
    for lineno, line in enumerate(lines, 1):
        if line.lstrip().startswith("#"):
            continue
        for m in _TOKEN.finditer(line):
            yield m.group(), lineno


def _unescape(word):
    return _UNESCAPES.get(word, word)


def _escape(word):
    return _ESCAPES.get(word, word)


def _strip(category, delimiter):
    if delimiter and not category.startswith(delimiter):
        return category.split(delimiter, 1)[0]
    return category


def read_treebank(source: Union[str, TextIO, Iterable[str]], strip_functions: str | None = None) -> list[SyntaxTree]:
    """Read every top-level bracketed tree from *source*.

    *source* may be a string of bracketed text, an open text file, or any
    iterable of lines. With ``strip_functions="-"`` a category like
    ``NP-SBJ`` is read as ``NP``.
    """
    return list(iter_treebank(source, strip_functions))


def iter_treebank(source, strip_functions=None) -> Iterator[SyntaxTree]:
    if isinstance(source, str):
        source = io.StringIO(source)
    stream = _lex(source)
    last_line = 0
    # stack of [category, children, line]; category None until read
    stack = []
    for tok, lineno in stream:
        last_line = lineno
        if tok == "(":
            stack.append([None, [], lineno])
        elif tok == ")":
            if not stack:
                raise TreebankError("unbalanced ')'", lineno)
            category, children, opened = stack.pop()
            tree = _close(category, children, opened, strip_functions)
            if tree is None:
                # label-less wrapper "( (S ...) )"
                if len(children) != 1 or isinstance(children[0], str):
                    raise TreebankError("empty node", opened)
                tree = children[0]
            if stack:
                stack[-1][1].append(tree)
            elif isinstance(tree, str):
                raise TreebankError("bare word at top level", opened)
            else:
                yield tree
        else:
            if not stack:
                raise TreebankError(f"text {tok!r} outside of brackets", lineno)
            top = stack[-1]
            if top[0] is None and not top[1]:
                top[0] = tok
            else:
                top[1].append(tok)
    if stack:
        raise TreebankError(f"unbalanced: end of input inside tree opened on line {stack[0][2]}", last_line)


def _close(category, children, opened, strip_functions):
    if category is None:
        if not children:
            raise TreebankError("empty node", opened)
        return None
    if not children:
        raise TreebankError(f"empty node ({category})", opened)
    words = [c for c in children if isinstance(c, str)]
    try:
        if words:
            if len(children) != 1:
                raise TreebankError(f"leaf ({category} ...) must hold exactly one word", opened)
            return Leaf(category, _unescape(words[0]))
        return Node(_strip(category, strip_functions), tuple(children))
    except ValueError as exc:
        if isinstance(exc, TreebankError):
            raise
        raise TreebankError(str(exc), opened) from None


def parse_tree(text: str, strip_functions=None) -> SyntaxTree:
    """Parse exactly one bracketed tree."""
    trees = read_treebank(text, strip_functions)
    if len(trees) != 1:
        raise TreebankError(f"expected one tree, found {len(trees)}")
    return trees[0]


def to_brackets(tree: SyntaxTree) -> str:
    if isinstance(tree, Leaf):
        return f"({tree.tag} {_escape(tree.word)})"
    return f"({tree.category} {' '.join(to_brackets(c) for c in tree.children)})"


# -- training material -------------------------------------------------------

def _cover(tree, layer, start, out):
    if tree.layer <= layer:
        out.append((tree.category, (start, start + len(tree))))
        return
    for child in tree.children:
        _cover(child, layer, start, out)
        start += len(child)


def layer_sequences(tree: SyntaxTree, max_layer: int) -> list[LayerSequence]:
    """Training sequences for layers ``0..max_layer``.

    Layer *l* lists, left to right, the highest node of layer <= *l* over
    each maximal span, so layer 0 is the tag sequence.
    """
    if max_layer < 0:
        raise ValueError("max_layer must be >= 0")
    result = []
    for layer in range(max_layer + 1):
        items = []
        _cover(tree, layer, 0, items)
        result.append(LayerSequence(layer, tuple(c for c, _ in items), tuple(s for _, s in items)))
    return result


def collect_rules(tree: SyntaxTree) -> Counter:
    """Multiset of phrase and lexical rules used in *tree*."""
    counts = Counter()
    todo = [tree]
    while todo:
        t = todo.pop()
        if isinstance(t, Leaf):
            counts[Rule(t.tag, (t.word,), lexical=True)] += 1
        else:
            counts[Rule(t.category, tuple(c.category for c in t.children))] += 1
            todo.extend(t.children)
    return counts


def nonterminals(tree: SyntaxTree, start: int = 0) -> Iterator[tuple]:
    """Yield ``(category, start, end, layer)`` for every phrase node."""
    if isinstance(tree, Leaf):
        return
    yield tree.category, start, start + len(tree), tree.layer
    for child in tree.children:
        yield from nonterminals(child, start)
        start += len(child)
