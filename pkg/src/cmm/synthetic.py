"""Synthetic corpora and random lattices for testing and demonstrations."""

from __future__ import annotations

import math
import random
from collections import defaultdict

from .corpus import Leaf, Node, Rule
from .lattice import Edge, Lattice, expand_layer
from .model import Scfg, _normalized, train_context_model
from .oracle import count_paths

__all__ = ["toy_corpus", "random_instance", "chain_lattice", "random_context_model"]

# share of ambiguous-mode PPs after an object that attach to the object
NP_ATTACH = 0.7

LEXICON = {
    "D": ["the", "a", "this", "every"],
    "A": ["big", "old", "red", "small", "quiet"],
    "N": ["dog", "cat", "park", "hill", "man", "telescope", "garden", "book"],
    "P": ["in", "on", "with", "near"],
    "V": ["saw", "liked", "found", "watched"],
}


def _leaf(rng, tag):
    return Leaf(tag, rng.choice(LEXICON[tag]))


def _np(rng):
    n_adj = rng.choices([0, 1, 2], weights=[5, 3, 2])[0]
    kids = [_leaf(rng, "D")] + [_leaf(rng, "A") for _ in range(n_adj)] + [_leaf(rng, "N")]
    return Node("NP", tuple(kids))


def _pp(rng, obj=None):
    return Node("PP", (_leaf(rng, "P"), obj or _np(rng)))


def _sentence(rng, ambiguous):
    shapes, weights = ["svo", "svo_pp", "sv_pp", "pp_svo", "s_pp_vo"], [3, 3, 2, 2, 4]
    if not ambiguous:
        shapes, weights = shapes[:-1], weights[:-1]
    shape = rng.choices(shapes, weights=weights)[0]
    v = _leaf(rng, "V")
    if shape == "svo":
        kids = (_np(rng), v, _np(rng))
    elif shape == "sv_pp":
        kids = (_np(rng), v, _pp(rng))
    elif shape == "pp_svo":
        kids = (_pp(rng), _np(rng), v, _np(rng))
    elif shape == "s_pp_vo":
        kids = (Node("NP", (_np(rng), _pp(rng))), v, _np(rng))
    elif ambiguous and rng.random() < NP_ATTACH:
        # same tag sequence as svo_pp, but the PP attaches to the object
        kids = (_np(rng), v, Node("NP", (_np(rng), _pp(rng))))
    else:
        kids = (_np(rng), v, _np(rng), _pp(rng))
    return Node("S", kids)


def toy_corpus(n: int, seed: int = 0, ambiguous: bool = False) -> list:
    """*n* sentences from a small grammar over D, A, N, P, V.

    Every tag sequence has exactly one analysis (maximum layer 3) unless
    *ambiguous* is set, in which case a PP after an object may attach either
    to the sentence or to the object NP (maximum layer 4).
    """
    rng = random.Random(seed)
    return [_sentence(rng, ambiguous) for _ in range(n)]


# -- random lattices -------------------------------------------------------------

def random_context_model(rng, categories, layer=1, sequences=30, max_len=6):
    seqs = [
        [rng.choice(categories) for _ in range(rng.randint(1, max_len))]
        for _ in range(sequences)
    ]
    lambdas = _normalized([rng.random() + 0.05 for _ in range(3)])
    return train_context_model(layer, seqs, lambdas)


def _random_scfg(rng, tags, phrases, n_rules, max_rhs):
    pool = tags + phrases
    weights = defaultdict(dict)
    for _ in range(n_rules):
        lhs = rng.choice(phrases)
        rhs = tuple(rng.choice(pool) for _ in range(rng.randint(1, max_rhs)))
        weights[lhs][Rule(lhs, rhs)] = rng.random() + 0.05
    rules = {}
    for lhs, table in weights.items():
        z = sum(table.values())
        for rule, w in table.items():
            rules[rule] = math.log(w / z)
    return Scfg(rules, {}, {})


def random_instance(rng: random.Random, max_words=8, max_categories=4, max_rhs=3, path_limit=10_000,
                    expansions=1):
    """A random lattice (tags plus grammar-generated phrases) and a random context model.

    Returns ``(lattice, model, scfg)``; retries until the lattice has at most
    *path_limit* complete paths.
    """
    tags = ["A", "B", "C", "D"]
    phrases = ["X", "Y", "Z"]
    while True:
        T = rng.randint(1, max_words)
        words = [f"w{i}" for i in range(T)]
        edges = []
        for i in range(T):
            for tag in rng.sample(tags, rng.randint(1, max_categories)):
                edges.append(Edge(i, i + 1, tag, math.log(rng.uniform(0.05, 1.0)), word=words[i]))
        scfg = _random_scfg(rng, tags, phrases, rng.randint(2, 10), max_rhs)
        lattice = Lattice(words, edges, layer=0)
        for k in range(expansions):
            lattice = expand_layer(lattice, scfg, k + 1)
        if count_paths(lattice) <= path_limit:
            model = random_context_model(rng, tags + phrases, layer=lattice.layer)
            return lattice, model, scfg


def chain_lattice(T: int, rng: random.Random, per_node=3, span2=1) -> Lattice:
    """Lattice with *per_node* one-word edges per position plus *span2* two-word edges."""
    tags = ["A", "B", "C", "D"]
    words = [f"w{i}" for i in range(T)]
    edges = []
    for i in range(T):
        for tag in tags[:per_node]:
            edges.append(Edge(i, i + 1, tag, math.log(rng.uniform(0.05, 1.0)), word=words[i]))
    rule = Rule("X", ("A", "B"))
    for i in range(T - 1):
        for _ in range(span2):
            kids = (Edge(i, i + 1, "A", -1.0, word=words[i]), Edge(i + 1, i + 2, "B", -1.0, word=words[i + 1]))
            edges.append(Edge(i, i + 2, "X", math.log(rng.uniform(0.01, 0.5)), rule=rule, children=kids))
    return Lattice(words, edges, layer=1)
