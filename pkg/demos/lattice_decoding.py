"""Viterbi search over a lattice, and what the threshold passes upward.

A lattice here holds tag hypotheses for three words plus phrase hypotheses
built from them by a small grammar. We decode it with a context model,
list each edge's best complete path, and show which edges survive pruning
for a few thresholds. A brute-force enumeration of all paths confirms the
result.
"""

import math

from cmm.corpus import Rule
from cmm.decoder import best_path, edge_viterbi_scores, prune
from cmm.lattice import Edge, Lattice, expand_layer
from cmm.model import Scfg, train_context_model
from cmm.oracle import best_by_enumeration, enumerate_paths

words = ["time", "flies", "fast"]
tags = [
    (0, "N", 0.6), (0, "V", 0.4),
    (1, "V", 0.7), (1, "N", 0.3),
    (2, "ADV", 0.8), (2, "A", 0.2),
]
base = Lattice(words, [Edge(i, i + 1, t, math.log(p), word=words[i]) for i, t, p in tags])

grammar = Scfg(
    {
        Rule("NP", ("N",)): math.log(0.3),
        Rule("NP", ("N", "N")): math.log(0.7),
        Rule("VP", ("V", "ADV")): math.log(1.0),
    },
    {}, {},
)
lattice = expand_layer(base, grammar, 1)
print("layer-1 lattice (index, span, category, -log delta, new?, children):")
print(lattice.dump())

model = train_context_model(1, [
    ["NP", "VP"], ["NP", "VP"], ["NP", "V", "ADV"], ["V", "NP"], ["NP", "VP"], ["N", "VP"],
])
print("\ninterpolation weights:", tuple(round(x, 3) for x in model.lambdas))

best = best_path(lattice, model)
print(f"\nbest path: {' '.join(e.category for e in best.edges)}  (log p = {best.log_prob:.4f})")
paths = enumerate_paths(lattice, model)
print(f"all {len(paths)} paths agree:", best_by_enumeration(lattice, model).log_prob == best.log_prob)

scores = edge_viterbi_scores(lattice, model)
print("\nbest complete path through each edge, relative to the best path:")
for e in lattice.edges:
    ratio = math.exp(best.log_prob - scores[e]) if scores[e] > -math.inf else math.inf
    print(f"  {e.category:>4} {e.start}-{e.end}  P_best / P = {ratio:8.2f}")

for theta in (1, 3, 30, math.inf):
    kept = prune(lattice, model, theta)
    print(f"theta = {theta}: {len(kept)} of {len(lattice)} edges kept")
