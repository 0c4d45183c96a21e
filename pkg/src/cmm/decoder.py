"""Viterbi search over lattices and threshold pruning of hypotheses.

The context model is a trigram over edge categories, so a search state is an
edge together with the category of the edge before it (``START`` at node 0).
``Accumulator`` maps each state to the best log probability of a partial path
ending in it, plus a back-reference to the predecessor state.

Ties (within float tolerance) are broken in favour of the path whose edge
keys, read from the last edge backwards, are lexicographically smallest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._logmath import IMPOSSIBLE, close, tolerance
from .lattice import Lattice
from .model import END, START, ContextModel

__all__ = ["DecodeError", "PathResult", "Accumulator", "forward", "best_path", "edge_viterbi_scores", "prune"]


class DecodeError(ValueError):
    pass


@dataclass(frozen=True)
class PathResult:
    edges: tuple
    log_prob: float

    @property
    def categories(self):
        return tuple(e.category for e in self.edges)

    def __post_init__(self):
        pos = 0
        for e in self.edges:
            if e.start != pos:
                raise DecodeError("path edges do not abut")
            pos = e.end


class Accumulator(dict):
    """``(edge index, previous category) -> (log prob, back-reference)``.

    The back-reference is the predecessor state, or ``None`` for edges that
    start at node 0.
    """

    def chain(self, lattice, state):
        """Edge keys from *state* back to node 0."""
        while state is not None:
            yield lattice.edges[state[0]].key
            state = self[state][1]

    def dump(self, lattice) -> str:
        lines = []
        for (i, prev), (score, back) in sorted(self.items()):
            e = lattice.edges[i]
            ref = "-" if back is None else f"{back[0]}/{back[1]}"
            lines.append(f"{i}\t{e.start}\t{e.end}\t{e.category}\t{prev}\t{score:.6f}\t{ref}")
        return "\n".join(lines)


def _prefer(acc, lattice, new_state, old_state):
    """True if the chain behind *new_state* beats *old_state* on the tie-break order."""
    return list(acc.chain(lattice, new_state)) < list(acc.chain(lattice, old_state))


def _prev_categories(lattice, edge):
    if edge.start == 0:
        return [START]
    return sorted({lattice.edges[j].category for j in lattice.by_end.get(edge.start, ())})


def _state_table(lattice):
    """Previous-category list for every edge, by edge index."""
    cache = {}
    table = []
    for e in lattice.edges:
        if e.start not in cache:
            cache[e.start] = _prev_categories(lattice, e)
        table.append(cache[e.start])
    return table


def forward(lattice: Lattice, model: ContextModel) -> Accumulator:
    """Fill the accumulators left to right."""
    acc = Accumulator()
    prevs = _state_table(lattice)
    for i, e in enumerate(lattice.edges):
        if e.start == 0:
            acc[i, START] = (model.log_transition(e.category, START, START) + e.log_delta, None)
            continue
        for j in lattice.by_end.get(e.start, ()):
            p = lattice.edges[j]
            for prev2 in prevs[j]:
                pstate = (j, prev2)
                pscore = acc[pstate][0]
                if pscore == IMPOSSIBLE:
                    continue
                score = pscore + model.log_transition(e.category, prev2, p.category) + e.log_delta
                state = (i, p.category)
                held = acc.get(state)
                if held is None or held[0] == IMPOSSIBLE:
                    acc[state] = (score, pstate)
                elif score > held[0] and not close(score, held[0]):
                    acc[state] = (score, pstate)
                elif close(score, held[0]) and _prefer(acc, lattice, pstate, held[1]):
                    acc[state] = (score, pstate)
        for prev in prevs[i]:
            acc.setdefault((i, prev), (IMPOSSIBLE, None))
    return acc


def _final_state(lattice, model, acc):
    best, best_state = IMPOSSIBLE, None
    for i in lattice.by_end.get(lattice.T, ()):
        e = lattice.edges[i]
        for prev in _prev_categories(lattice, e):
            state = (i, prev)
            score = acc[state][0]
            if score == IMPOSSIBLE:
                continue
            score += model.log_transition(END, prev, e.category)
            if best_state is None or (score > best and not close(score, best)):
                best, best_state = score, state
            elif close(score, best) and _prefer(acc, lattice, state, best_state):
                best, best_state = score, state
    return best, best_state


def best_path(lattice: Lattice, model: ContextModel, accumulator: Accumulator | None = None) -> PathResult:
    """Most probable edge sequence from node 0 to node T, with START/END transitions."""
    if lattice.T == 0 or not lattice.edges:
        raise DecodeError("empty lattice")
    acc = accumulator if accumulator is not None else forward(lattice, model)
    score, state = _final_state(lattice, model, acc)
    if state is None or score == IMPOSSIBLE:
        raise DecodeError(f"no complete path through the lattice over {lattice.T} words")
    edges = []
    while state is not None:
        edges.append(lattice.edges[state[0]])
        state = acc[state][1]
    edges.reverse()
    return PathResult(tuple(edges), score)


def _backward(lattice, model):
    """Best log probability of completing a path after each state's edge."""
    beta = {}
    T = lattice.T
    prevs = _state_table(lattice)
    for i in range(len(lattice.edges) - 1, -1, -1):
        e = lattice.edges[i]
        succ = lattice.by_start.get(e.end, ())
        for prev in prevs[i]:
            best = model.log_transition(END, prev, e.category) if e.end == T else IMPOSSIBLE
            for j in succ:
                s = lattice.edges[j]
                rest = beta[j, e.category]
                if rest == IMPOSSIBLE:
                    continue
                cand = model.log_transition(s.category, prev, e.category) + s.log_delta + rest
                if cand > best:
                    best = cand
            beta[i, prev] = best
    return beta


def edge_viterbi_scores(lattice: Lattice, model: ContextModel) -> dict:
    """For each edge, the log probability of the best complete path through it."""
    acc = forward(lattice, model)
    beta = _backward(lattice, model)
    prevs = _state_table(lattice)
    scores = {}
    for i, e in enumerate(lattice.edges):
        best = IMPOSSIBLE
        for prev in prevs[i]:
            a = acc[i, prev][0]
            b = beta[i, prev]
            if a != IMPOSSIBLE and b != IMPOSSIBLE and a + b > best:
                best = a + b
        scores[e] = best
    return scores


def prune(lattice: Lattice, model: ContextModel, theta: float) -> Lattice:
    """Keep the edges whose best containing path has probability >= P_best / theta."""
    if not theta >= 1.0:
        raise ValueError(f"theta must be >= 1, got {theta!r}")
    scores = edge_viterbi_scores(lattice, model)
    best = max(scores.values(), default=IMPOSSIBLE)
    if best == IMPOSSIBLE:
        raise DecodeError(f"no complete path through the lattice over {lattice.T} words")
    threshold = IMPOSSIBLE if math.isinf(theta) else best - math.log(theta)
    keep = [
        i for i, e in enumerate(lattice.edges)
        if scores[e] != IMPOSSIBLE and (scores[e] >= threshold or scores[e] >= threshold - tolerance(scores[e], threshold))
    ]
    return lattice.restrict(keep)
