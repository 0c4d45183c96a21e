"""Layer-by-layer parsing: tag, then alternately expand, decode and prune."""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import to_brackets
from .decoder import DecodeError, PathResult, best_path, prune
from .lattice import LatticeError, expand_layer, pos_lattice
from .model import ModelBundle

__all__ = ["ParseError", "PartialParse", "parse_sentence", "render", "FORMATS"]

FORMATS = ("brackets", "tsv", "lattice-dump")


class ParseError(ValueError):
    def __init__(self, message, sentence=None):
        self.sentence = sentence
        super().__init__(message)


@dataclass
class PartialParse:
    """Cascade output.

    ``paths[l]`` is the best path on layer *l* and ``lattices[l]`` the
    lattice it was decoded from. The parse itself is read off the top layer;
    :meth:`at_layer` gives the parse a shallower cascade would have produced.
    """

    words: tuple
    paths: list
    lattices: list

    @property
    def layers(self):
        return len(self.paths) - 1

    @property
    def path(self) -> PathResult:
        return self.paths[-1]

    @property
    def forest(self):
        """Top-layer edges as trees; unattached words are single leaves."""
        return [e.to_tree() for e in self.path.edges]

    @property
    def tags(self):
        return tuple(leaf.category for e in self.path.edges for leaf in e.leaves())

    def at_layer(self, layer: int) -> "PartialParse":
        if not 0 <= layer <= self.layers:
            raise IndexError(f"layer {layer} outside 0..{self.layers}")
        return PartialParse(self.words, self.paths[: layer + 1], self.lattices[: layer + 1])

    def chunks(self):
        """``(category, start, end)`` for every phrase in the forest."""
        out = []

        def visit(edge):
            if edge.is_leaf:
                return
            out.append((edge.category, edge.start, edge.end))
            for c in edge.children:
                visit(c)

        for e in self.path.edges:
            visit(e)
        return out


def parse_sentence(words, bundle: ModelBundle, theta: float = 5.0, layers: int | None = None) -> PartialParse:
    """Run the cascade for layers ``0..layers`` (default: all layers of *bundle*)."""
    if not theta >= 1.0:
        raise ValueError(f"theta must be >= 1, got {theta!r}")
    top = bundle.max_layer if layers is None else layers
    if not 0 <= top <= bundle.max_layer:
        raise ValueError(f"layers must lie in 0..{bundle.max_layer}, got {top}")
    words = tuple(words)
    scfg = bundle.scfg
    paths, lattices = [], []
    try:
        lattice = pos_lattice(words, scfg)
        for layer in range(top + 1):
            if layer:
                lattice = expand_layer(lattice, scfg, layer)
            model = bundle.context_models[layer]
            lattices.append(lattice)
            paths.append(best_path(lattice, model))
            if layer < top:
                lattice = prune(lattice, model, theta)
    except (LatticeError, DecodeError) as exc:
        raise ParseError(f"{exc} (sentence: {' '.join(words)!r})", words) from exc
    return PartialParse(words, paths, lattices)


def _chunk_labels(parse):
    """Innermost-phrase label per token with B-/I- marking, O outside phrases."""
    labels = ["O"] * len(parse.words)

    def visit(edge):
        if edge.is_leaf:
            return
        for pos in range(edge.start, edge.end):
            labels[pos] = ("B-" if pos == edge.start else "I-") + edge.category
        for c in edge.children:
            visit(c)

    for e in parse.path.edges:
        visit(e)
    return labels


def render(parse: PartialParse, format: str = "brackets") -> str:
    if format == "brackets":
        return " ".join(to_brackets(t) for t in parse.forest)
    if format == "tsv":
        rows = zip(parse.words, parse.tags, _chunk_labels(parse))
        return "\n".join("\t".join(r) for r in rows) + "\n"
    if format == "lattice-dump":
        blocks = []
        for layer, (lattice, path) in enumerate(zip(parse.lattices, parse.paths)):
            chosen = " ".join(str(lattice.index(e)) for e in path.edges)
            blocks.append(f"# layer {layer} best={chosen} logp={path.log_prob:.6f}\n{lattice.dump()}")
        return "\n".join(blocks) + "\n"
    raise ValueError(f"unknown format {format!r}; expected one of {', '.join(FORMATS)}")
