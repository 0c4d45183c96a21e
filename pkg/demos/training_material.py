"""From one annotated sentence to the parameters of a cascade.

Every sentence of a treebank contributes one training sequence per layer and
a handful of context-free rules. This script shows both for a German example
sentence, trains a (tiny) model on it and prints part of the model file.
"""

from cmm.corpus import collect_rules, layer_sequences, parse_tree
from cmm.model import dumps, train

SENTENCE = (
    "(S (NP (ART Ein) (ADJA enormer) (NN Posten)"
    " (PP (APPR an) (CNP (NN Arbeit) (KON und) (NN Geld))))"
    " (VAFIN wird)"
    " (VP (PP (APPR von) (ART den) (CARD 37) (ADJA beteiligten) (NN Vereinigungen))"
    " (VVPP aufgebracht)))"
)

tree = parse_tree(SENTENCE)
print("words:", " ".join(leaf.word for leaf in tree.leaves()))
print("height of the root node:", tree.layer)

# A node's layer is its height above the words. The sequence for layer l
# keeps, over each stretch of words, the highest node that is at most l high.
print("\nlayer  sequence")
for seq in reversed(layer_sequences(tree, tree.layer)):
    print(f"{seq.layer:>5}  {' '.join(seq.symbols)}")

print("\nphrase rules read off the tree:")
rules = collect_rules(tree)
for rule, count in sorted(rules.items()):
    if not rule.lexical:
        print(f"  {rule}  ({count})")
print(f"plus {sum(n for r, n in rules.items() if r.lexical)} lexical rules, e.g. ART -> Ein")

# Two PP rules with one occurrence each: each gets probability 1/2.
bundle = train([tree], max_layer=4)
text = dumps(bundle)
print("\nexcerpt of the model file:")
for line in text.splitlines():
    if line.startswith(("CMM-MODEL", "RULE", "LAMBDAS layer=3", "END")):
        print(" ", line.replace("\t", "  "))
