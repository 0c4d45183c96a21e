"""Recall against precision as layers are added.

With ambiguous PP attachment in the toy grammar, every extra layer lets the
cascade build deeper phrases (recall goes up) while also giving it room to
attach PPs in the wrong place (precision comes down). The report has the
same columns as ``cmm eval``.
"""

from cmm.evaluation import cross_validate, format_report
from cmm.synthetic import toy_corpus

trees = toy_corpus(1000, seed=0, ambiguous=True)
rows = cross_validate(trees, max_layers=4, theta=5.0, repetitions=10, seed=0, labeled=True)
print(format_report(rows), end="")

best = max(rows, key=lambda r: r.f_score)
print(f"\nbest F-score {best.f_score:.3f} with {best.layers} layers")
print("the topline column is the share of gold phrases that fit into that many layers")
