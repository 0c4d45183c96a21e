"""Cascaded Markov Models for partial parsing.

Each layer of syntactic structure gets its own trigram Markov model over
categories. Phrase hypotheses come from a grammar read off a treebank, the
best sequence per layer is found by Viterbi search over a word lattice, and
every hypothesis close enough to the best one is passed to the next layer.

Typical use::

    from cmm import read_treebank, train, parse_sentence, render

    bundle = train(read_treebank(open("train.mrg")), max_layer=4)
    parse = parse_sentence("the dog saw the cat".split(), bundle, theta=5)
    print(render(parse))
"""

from .cascade import PartialParse, parse_sentence, render
from .corpus import collect_rules, layer_sequences, parse_tree, read_treebank, to_brackets
from .decoder import best_path, edge_viterbi_scores, prune
from .evaluation import compare, cross_validate, f_score, pos_accuracy, topline_recall
from .lattice import expand_layer, pos_lattice, yield_log_prob
from .model import ModelBundle, TrainConfig, load, save, train

__version__ = "0.1.0"

__all__ = [
    "PartialParse",
    "parse_sentence",
    "render",
    "collect_rules",
    "layer_sequences",
    "parse_tree",
    "read_treebank",
    "to_brackets",
    "best_path",
    "edge_viterbi_scores",
    "prune",
    "compare",
    "cross_validate",
    "f_score",
    "pos_accuracy",
    "topline_recall",
    "expand_layer",
    "pos_lattice",
    "yield_log_prob",
    "ModelBundle",
    "TrainConfig",
    "load",
    "save",
    "train",
]
