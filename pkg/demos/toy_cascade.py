"""A cascade trained on a generated treebank, watched layer by layer.

The toy grammar builds sentences from noun phrases, prepositional phrases and
a verb. The cascade tags the words, then adds one layer of structure per step.
"""

from cmm.cascade import parse_sentence, render
from cmm.corpus import to_brackets
from cmm.model import train
from cmm.synthetic import toy_corpus

trees = toy_corpus(800, seed=1)
print("two training trees:")
for tree in trees[:2]:
    print(" ", to_brackets(tree))

bundle = train(trees, max_layer=3)
print(f"\ntrained on {bundle.metadata['sentences']} sentences, {len(bundle.scfg.rules)} phrase rules")

sentence = "in the old garden a man watched the small dog".split()
parse = parse_sentence(sentence, bundle, theta=5.0)
for layer in range(parse.layers + 1):
    sub = parse.at_layer(layer)
    print(f"\nafter layer {layer}: {len(parse.lattices[layer])} hypotheses in the lattice")
    print(" ", render(sub))

print("\ntoken / tag / innermost chunk:")
print(render(parse, "tsv"))

print("lattice of layer 1 (edges marked * were built on this layer):")
print(parse.lattices[1].dump())
