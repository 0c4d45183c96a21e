"""Chunking precision/recall, topline recall and tagging accuracy, plus a cross-validation driver."""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .cascade import ParseError, PartialParse, parse_sentence
from .corpus import Leaf, Node, SyntaxTree, nonterminals
from .model import TrainConfig, train

__all__ = [
    "AlignmentError",
    "ChunkMetrics",
    "f_score",
    "compare",
    "topline_recall",
    "pos_accuracy",
    "ReportRow",
    "cross_validate",
    "format_report",
]


class AlignmentError(ValueError):
    pass


def f_score(precision: float, recall: float, beta: float = 1.0) -> float:
    """Weighted harmonic combination of precision and recall."""
    if beta <= 0:
        raise ValueError("beta must be > 0")
    if precision == 0 and recall == 0:
        return 0.0
    b2 = beta * beta
    return (b2 + 1) * precision * recall / (b2 * precision + recall)


@dataclass(frozen=True)
class ChunkMetrics:
    true_positives: int
    gold_count: int
    predicted_count: int
    labeled: bool = True
    beta: float = 1.0

    @property
    def precision(self):
        return self.true_positives / self.predicted_count if self.predicted_count else 1.0

    @property
    def recall(self):
        return self.true_positives / self.gold_count if self.gold_count else 1.0

    @property
    def f_score(self):
        return f_score(self.precision, self.recall, self.beta)

    def __add__(self, other):
        if (self.labeled, self.beta) != (other.labeled, other.beta):
            raise ValueError("cannot merge metrics with different settings")
        return ChunkMetrics(
            self.true_positives + other.true_positives,
            self.gold_count + other.gold_count,
            self.predicted_count + other.predicted_count,
            self.labeled,
            self.beta,
        )


def _forest(item):
    if isinstance(item, PartialParse):
        return item.forest
    if isinstance(item, (Leaf, Node)):
        return [item]
    return list(item)


def _spans(forest, labeled):
    spans = Counter()
    start = 0
    for tree in forest:
        for cat, s, e, _ in nonterminals(tree, start):
            spans[(cat, s, e) if labeled else (s, e)] += 1
        start += len(tree)
    return spans


def _leaves(forest):
    return [leaf for tree in forest for leaf in tree.leaves()]


def _check_alignment(gold, pred):
    gw = [leaf.word for leaf in _leaves(gold)]
    pw = [leaf.word for leaf in _leaves(pred)]
    if gw != pw:
        raise AlignmentError(f"token mismatch: gold has {len(gw)} tokens, predicted {len(pw)}")


def compare(gold, predicted, labeled: bool = True, beta: float = 1.0) -> ChunkMetrics:
    """Match phrase nodes by span (and category, if *labeled*).

    *gold* and *predicted* may each be a tree, a sequence of trees, or a
    :class:`PartialParse`.
    """
    g, p = _forest(gold), _forest(predicted)
    _check_alignment(g, p)
    gs, ps = _spans(g, labeled), _spans(p, labeled)
    tp = sum((gs & ps).values())
    return ChunkMetrics(tp, sum(gs.values()), sum(ps.values()), labeled, beta)


def topline_recall(gold: Iterable[SyntaxTree], layers: int) -> float:
    """Fraction of gold phrase nodes whose layer is at most *layers*."""
    if layers < 1:
        raise ValueError("layers must be >= 1")
    total = reachable = 0
    for tree in gold:
        for _, _, _, layer in nonterminals(tree):
            total += 1
            reachable += layer <= layers
    return reachable / total if total else 1.0


def pos_accuracy(gold, predicted) -> float:
    g, p = _forest(gold), _forest(predicted)
    _check_alignment(g, p)
    gl, pl = _leaves(g), _leaves(p)
    if not gl:
        return 1.0
    return sum(a.tag == b.tag for a, b in zip(gl, pl)) / len(gl)


# -- cross-validation ----------------------------------------------------------

@dataclass(frozen=True)
class ReportRow:
    layers: int
    recall: float
    precision: float
    f_score: float
    topline_recall: float
    pos_accuracy: float


def _split(n, rng, test_fraction):
    order = list(range(n))
    rng.shuffle(order)
    cut = max(1, round(n * test_fraction))
    return sorted(order[cut:]), sorted(order[:cut])


def cross_validate(trees: Sequence[SyntaxTree], max_layers: int, theta: float = 5.0, repetitions: int = 10,
                   seed: int = 0, labeled: bool = False, beta: float = 1.0, test_fraction: float = 0.1,
                   config: TrainConfig | None = None) -> list:
    """Averaged metrics for cascades of 1..max_layers layers over random train/test splits.

    Each repetition trains one bundle and parses the test part once; the
    result for *k* layers is read off layer *k* of the same cascade run.
    Sentences the cascade cannot parse count as having no phrases and no
    correct tags.
    """
    trees = list(trees)
    if len(trees) < 10:
        raise ValueError(f"corpus too small to split: {len(trees)} sentences (need >= 10)")
    rng = random.Random(seed)
    sums = [[0.0] * 5 for _ in range(max_layers)]
    for _ in range(repetitions):
        train_idx, test_idx = _split(len(trees), rng, test_fraction)
        bundle = train([trees[i] for i in train_idx], max_layers, config)
        test = [trees[i] for i in test_idx]
        metrics = [ChunkMetrics(0, 0, 0, labeled, beta) for _ in range(max_layers)]
        correct = [0] * max_layers
        n_tokens = 0
        for gold in test:
            words = [leaf.word for leaf in gold.leaves()]
            n_tokens += len(words)
            try:
                parse = parse_sentence(words, bundle, theta)
            except ParseError:
                gold_nodes = sum(1 for _ in nonterminals(gold))
                for k in range(max_layers):
                    metrics[k] = metrics[k] + ChunkMetrics(0, gold_nodes, 0, labeled, beta)
                continue
            for k in range(1, max_layers + 1):
                sub = parse.at_layer(k)
                metrics[k - 1] = metrics[k - 1] + compare(gold, sub, labeled, beta)
                correct[k - 1] += sum(a == b.tag for a, b in zip(sub.tags, gold.leaves()))
        for k in range(max_layers):
            m = metrics[k]
            row = (m.recall, m.precision, m.f_score, topline_recall(test, k + 1), correct[k] / n_tokens)
            for j, v in enumerate(row):
                sums[k][j] += v
    return [ReportRow(k + 1, *(v / repetitions for v in sums[k])) for k in range(max_layers)]


def format_report(rows: Sequence[ReportRow]) -> str:
    lines = ["layers\trecall\tprecision\tf_score\ttopline_recall\tpos_accuracy"]
    for r in rows:
        lines.append(
            f"{r.layers}\t{r.recall:.4f}\t{r.precision:.4f}\t{r.f_score:.4f}\t{r.topline_recall:.4f}\t{r.pos_accuracy:.4f}"
        )
    return "\n".join(lines) + "\n"
