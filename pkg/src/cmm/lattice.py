"""Word lattices of tag and phrase hypotheses.

Nodes are the word boundaries ``0..T``; an edge ``<t, t', q>`` claims that
category ``q`` derives words ``t..t'-1``. Each edge carries its yield
probability (``log_delta``) and the derivation that produced it, so the
partial tree behind any hypothesis can be recovered.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from ._logmath import IMPOSSIBLE, close
from .corpus import Leaf, Node, Rule, _escape
from .model import Scfg

__all__ = ["Edge", "Lattice", "LatticeError", "pos_lattice", "expand_layer", "yield_log_prob"]


class LatticeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Edge:
    """One hypothesis. Leaf edges carry ``word``; phrase edges carry ``rule`` and ``children``.

    Edges hash by identity; use :attr:`fingerprint` to compare derivations.
    """

    start: int
    end: int
    category: str
    log_delta: float
    word: str | None = None
    rule: Rule | None = None
    children: tuple = ()
    origin_layer: int = 0

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise LatticeError(f"bad span {self.start}..{self.end}")
        if self.log_delta > 0.0:
            raise LatticeError(f"log yield probability {self.log_delta} > 0")
        if (self.word is None) == (self.rule is None):
            raise LatticeError("an edge needs exactly one of word or rule")
        if self.rule is not None:
            if not self.children:
                raise LatticeError("phrase edge without children")
            pos = self.start
            for child in self.children:
                if child.start != pos:
                    raise LatticeError("children do not tile the edge span")
                pos = child.end
            if pos != self.end:
                raise LatticeError("children do not tile the edge span")

    @property
    def is_leaf(self):
        return self.word is not None

    @cached_property
    def fingerprint(self) -> str:
        """Bracketed derivation, unique per (category, derivation)."""
        if self.is_leaf:
            return f"({self.category} {_escape(self.word)})"
        return f"({self.category} {' '.join(c.fingerprint for c in self.children)})"

    @property
    def key(self):
        """Deterministic tie-break key."""
        return (self.start, self.category, self.fingerprint)

    def to_tree(self):
        if self.is_leaf:
            return Leaf(self.category, self.word)
        return Node(self.category, tuple(c.to_tree() for c in self.children))

    def leaves(self):
        if self.is_leaf:
            yield self
        else:
            for child in self.children:
                yield from child.leaves()

    def __repr__(self):
        return f"Edge({self.start}, {self.end}, {self.category!r}, {self.log_delta:.4f})"


def _sort_key(edge):
    return (edge.start, edge.end, edge.category, edge.fingerprint)


class Lattice:
    """A set of edges over ``len(words)`` word positions.

    Edges are kept in a deterministic order; ``by_start[t]`` and
    ``by_end[t]`` list indices into :attr:`edges`.
    """

    def __init__(self, words: Sequence[str], edges: Iterable[Edge], layer: int = 0):
        self.words = tuple(words)
        self.T = len(self.words)
        self.layer = layer
        self.edges = sorted(edges, key=_sort_key)
        self.by_start = defaultdict(list)
        self.by_end = defaultdict(list)
        self._index = {}
        for i, e in enumerate(self.edges):
            if e.end > self.T:
                raise LatticeError(f"edge {e!r} extends past node {self.T}")
            self.by_start[e.start].append(i)
            self.by_end[e.end].append(i)
            self._index[id(e)] = i

    def __len__(self):
        return len(self.edges)

    def __iter__(self):
        return iter(self.edges)

    def __contains__(self, edge):
        return id(edge) in self._index

    def index(self, edge):
        return self._index[id(edge)]

    def is_new(self, edge):
        """True if *edge* was generated at this lattice's layer."""
        return edge.origin_layer == self.layer

    def reachable(self):
        """Indices of edges lying on some path from node 0 to node T."""
        fwd = {0}
        for t in range(self.T + 1):
            if t in fwd:
                for i in self.by_start.get(t, ()):
                    fwd.add(self.edges[i].end)
        bwd = {self.T}
        for t in range(self.T, -1, -1):
            if t in bwd:
                for i in self.by_end.get(t, ()):
                    bwd.add(self.edges[i].start)
        return {i for i, e in enumerate(self.edges) if e.start in fwd and e.end in bwd}

    def connected(self) -> "Lattice":
        """This lattice restricted to edges on complete paths."""
        keep = self.reachable()
        if len(keep) == len(self.edges):
            return self
        return Lattice(self.words, [self.edges[i] for i in sorted(keep)], self.layer)

    def restrict(self, indices) -> "Lattice":
        return Lattice(self.words, [self.edges[i] for i in sorted(indices)], self.layer).connected()

    def dump(self) -> str:
        """One line per edge: index, span, category, -log delta, new-flag, children."""
        lines = []
        for i, e in enumerate(self.edges):
            kids = []
            for c in e.children:
                kids.append(str(self.index(c)) if c in self else f"{c.category}@{c.start}-{c.end}")
            cost = -e.log_delta if e.log_delta != IMPOSSIBLE else float("inf")
            flag = "*" if self.is_new(e) else "-"
            word = f" {e.word}" if e.is_leaf else ""
            lines.append(f"{i} {e.start} {e.end} {e.category} {cost:.4f} {flag} [{' '.join(kids)}]{word}".rstrip())
        return "\n".join(lines)


def pos_lattice(words: Sequence[str], scfg: Scfg) -> Lattice:
    """Layer-0 lattice: one edge per word and candidate tag."""
    if not words:
        raise LatticeError("empty sentence")
    edges = []
    for i, word in enumerate(words):
        found = False
        for tag, lp in scfg.tags_for(word):
            if lp != IMPOSSIBLE:
                edges.append(Edge(i, i + 1, tag, lp, word=word))
                found = True
        if not found:
            raise LatticeError(f"no candidate tag for word {word!r} at position {i}")
    return Lattice(words, edges, layer=0)


def expand_layer(base: Lattice, scfg: Scfg, layer: int | None = None) -> Lattice:
    """Add every phrase hypothesis licensed by a grammar rule over a path of *base* edges.

    Only edges of *base* are matched, never edges created by this call. For
    each (span, category) only the most probable new derivation is kept, and
    it is dropped if *base* already holds an equally or more probable edge
    for that span and category.
    """
    layer = base.layer + 1 if layer is None else layer
    root = scfg.trie.root
    best = {}

    def offer(rule, children):
        lp = scfg.rules[rule] + sum(c.log_delta for c in children)
        key = (children[0].start, children[-1].end, rule.lhs)
        held = best.get(key)
        if held is not None:
            held_lp, held_rule, held_children = held
            if held_lp > lp or (close(held_lp, lp) and _fp(held_children) <= _fp(children)):
                return
        best[key] = (lp, rule, children)

    def walk(node, children):
        for rule in node.rules:
            offer(rule, children)
        if not node.children:
            return
        for j in base.by_start.get(children[-1].end, ()):
            nxt = base.edges[j]
            child_node = node.children.get(nxt.category)
            if child_node is not None:
                walk(child_node, children + (nxt,))

    for e in base.edges:
        node = root.get(e.category)
        if node is not None:
            walk(node, (e,))

    existing = defaultdict(list)
    for e in base.edges:
        existing[e.start, e.end, e.category].append(e)
    added = []
    for (start, end, cat), (lp, rule, children) in best.items():
        if any(old.log_delta >= lp or close(old.log_delta, lp) for old in existing.get((start, end, cat), ())):
            continue
        added.append(Edge(start, end, cat, lp, rule=rule, children=children, origin_layer=layer))
    return Lattice(base.words, list(base.edges) + added, layer=layer).connected()


def _fp(children):
    return " ".join(c.fingerprint for c in children)


def yield_log_prob(edge: Edge, scfg: Scfg | None = None) -> float:
    """Recompute log delta from the derivation: rule probability times child yields.

    Leaf edges are re-scored from the lexicon of *scfg* when it knows their
    tag, otherwise their stored value is used. Phrase edges need *scfg*.
    """
    if edge.is_leaf:
        if scfg is not None and edge.category in scfg.lexicon:
            return scfg.word_log_prob(edge.category, edge.word)
        return edge.log_delta
    if scfg is None:
        raise ValueError("a grammar is needed to re-score phrase edges")
    return scfg.rule_log_prob(edge.rule) + sum(yield_log_prob(c, scfg) for c in edge.children)
