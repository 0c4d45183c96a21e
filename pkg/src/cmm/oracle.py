"""Brute-force references for the decoder, for tests and ``--oracle-check``.

Nothing here shares the decoder's recurrences: every complete path is listed
explicitly and scored by multiplying out its factors one by one.
"""

from __future__ import annotations

import math

from ._logmath import IMPOSSIBLE, close, tolerance
from .decoder import PathResult
from .lattice import Lattice
from .model import END, START, ContextModel

__all__ = ["OracleError", "EnumeratedPath", "enumerate_paths", "path_log_prob",
           "best_by_enumeration", "edge_scores_by_enumeration", "prune_by_enumeration", "count_paths"]

DEFAULT_LIMIT = 10_000


class OracleError(ValueError):
    pass


class EnumeratedPath(tuple):
    """Edge sequence plus its exact joint log probability (``.log_prob``)."""

    def __new__(cls, edges, log_prob):
        self = super().__new__(cls, edges)
        self.log_prob = log_prob
        return self


def path_log_prob(edges, model: ContextModel) -> float:
    """Joint log probability of one complete path, factor by factor."""
    history = [START, START]
    total = 0.0
    for e in edges:
        total += model.log_transition(e.category, history[-2], history[-1])
        total += e.log_delta
        history.append(e.category)
    total += model.log_transition(END, history[-2], history[-1])
    return total


def count_paths(lattice: Lattice) -> int:
    ways = [0] * (lattice.T + 1)
    ways[0] = 1
    for e in lattice.edges:  # sorted by start
        ways[e.end] += ways[e.start]
    return ways[lattice.T] if lattice.T else 0


def enumerate_paths(lattice: Lattice, model: ContextModel, limit: int = DEFAULT_LIMIT) -> list:
    if lattice.T == 0 or not lattice.edges:
        raise OracleError("no paths: empty lattice")
    paths = []
    stack = [(0, ())]
    while stack:
        node, prefix = stack.pop()
        if node == lattice.T:
            paths.append(prefix)
            if len(paths) > limit:
                raise OracleError(f"more than {limit} paths")
            continue
        for i in lattice.by_start.get(node, ()):
            e = lattice.edges[i]
            stack.append((e.end, prefix + (e,)))
    if not paths:
        raise OracleError("no paths from node 0 to the last node")
    return [EnumeratedPath(p, path_log_prob(p, model)) for p in paths]


def _tie_key(path):
    return [e.key for e in reversed(path)]


def best_by_enumeration(lattice: Lattice, model: ContextModel, limit: int = DEFAULT_LIMIT) -> PathResult:
    paths = [p for p in enumerate_paths(lattice, model, limit) if p.log_prob != IMPOSSIBLE]
    if not paths:
        raise OracleError("every path has probability zero")
    top = max(p.log_prob for p in paths)
    tied = [p for p in paths if close(p.log_prob, top)]
    winner = min(tied, key=_tie_key)
    return PathResult(tuple(winner), winner.log_prob)


def edge_scores_by_enumeration(lattice: Lattice, model: ContextModel, limit: int = DEFAULT_LIMIT) -> dict:
    scores = {e: IMPOSSIBLE for e in lattice.edges}
    for p in enumerate_paths(lattice, model, limit):
        for e in p:
            if p.log_prob > scores[e]:
                scores[e] = p.log_prob
    return scores


def prune_by_enumeration(lattice: Lattice, model: ContextModel, theta: float, limit: int = DEFAULT_LIMIT) -> set:
    """The edges a threshold of *theta* should keep, as a set of edges."""
    scores = edge_scores_by_enumeration(lattice, model, limit)
    top = max(scores.values())
    cut = IMPOSSIBLE if math.isinf(theta) else top - math.log(theta)
    return {
        e for e, s in scores.items()
        if s != IMPOSSIBLE and (s >= cut or s >= cut - tolerance(s, cut))
    }
