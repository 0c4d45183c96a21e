"""Probabilistic parameters: one shared grammar plus one context model per layer.

All probabilities are kept as natural logs. ``IMPOSSIBLE`` (``-inf``) stands
for probability zero.
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from ._logmath import IMPOSSIBLE, exp, format_log, log, parse_log
from .corpus import Rule, SyntaxTree, collect_rules, layer_sequences

__all__ = [
    "START",
    "END",
    "FORMAT_VERSION",
    "ModelError",
    "ModelFormatError",
    "TrainConfig",
    "Scfg",
    "ContextModel",
    "ModelBundle",
    "train",
    "train_scfg",
    "train_context_model",
    "estimate_lambdas",
    "transition_prob",
    "rule_prob",
    "word_prob",
    "save",
    "load",
    "dumps",
    "loads",
]

START = "<s>"
END = "</s>"
FORMAT_VERSION = 1
MAGIC = "CMM-MODEL"

# unigram pseudo-count given to categories never seen on a layer
UNSEEN_CATEGORY_COUNT = 0.5


class ModelError(ValueError):
    pass


class ModelFormatError(ModelError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    open_class_threshold: int = 50
    lambdas: tuple | None = None  # fixed (uni, bi, tri) weights; None = deleted interpolation

    def __post_init__(self):
        if self.open_class_threshold < 0:
            raise ValueError("open_class_threshold must be >= 0")
        if self.lambdas is not None:
            _check_lambdas(self.lambdas)


def _check_lambdas(lambdas):
    if len(lambdas) != 3 or any(x < 0 for x in lambdas) or abs(sum(lambdas) - 1.0) > 1e-9:
        raise ValueError(f"lambdas must be three non-negative weights summing to 1, got {lambdas!r}")


# -- grammar -------------------------------------------------------------------

class Scfg:
    """Relative-frequency grammar read off a treebank.

    ``rules`` maps phrase rules to log probabilities, ``lexicon`` maps
    ``tag -> word -> log probability``, and ``unknown`` holds each tag's log
    mass for unseen words (``IMPOSSIBLE`` for closed-class tags).
    """

    def __init__(self, rules: Mapping[Rule, float], lexicon: Mapping[str, Mapping[str, float]],
                 unknown: Mapping[str, float]):
        self.rules = dict(rules)
        self.lexicon = {tag: dict(words) for tag, words in lexicon.items()}
        self.unknown = dict(unknown)
        if set(self.unknown) != set(self.lexicon):
            raise ModelError("unknown-word table must cover exactly the lexicon tags")
        self._by_word = defaultdict(list)
        for tag in sorted(self.lexicon):
            for word, lp in self.lexicon[tag].items():
                self._by_word[word].append((tag, lp))
        self.open_tags = tuple(sorted(t for t, lp in self.unknown.items() if lp != IMPOSSIBLE))
        self.trie = _RuleTrie(self.rules)

    @property
    def tags(self):
        return tuple(sorted(self.lexicon))

    @property
    def categories(self):
        cats = set(self.lexicon)
        for rule in self.rules:
            cats.add(rule.lhs)
            cats.update(rule.rhs)
        return tuple(sorted(cats))

    def rules_for(self, first):
        """Phrase rules whose right-hand side starts with *first*."""
        node = self.trie.root.get(first)
        return [] if node is None else list(node.all_rules())

    def rule_log_prob(self, rule: Rule) -> float:
        return self.rules.get(rule, IMPOSSIBLE)

    def rule_prob(self, rule: Rule) -> float:
        return exp(self.rule_log_prob(rule))

    def word_log_prob(self, tag: str, word: str) -> float:
        try:
            words = self.lexicon[tag]
        except KeyError:
            raise KeyError(f"unknown tag {tag!r}") from None
        if word in words:
            return words[word]
        if word in self._by_word:
            return IMPOSSIBLE  # known word, never seen with this tag
        return self.unknown[tag]

    def word_prob(self, tag: str, word: str) -> float:
        return exp(self.word_log_prob(tag, word))

    def is_known(self, word):
        return word in self._by_word

    def tags_for(self, word):
        """``(tag, log prob)`` candidates for *word*, unknown words included."""
        if word in self._by_word:
            return list(self._by_word[word])
        return [(tag, self.unknown[tag]) for tag in self.open_tags]


class _TrieNode:
    __slots__ = ("children", "rules")

    def __init__(self):
        self.children = {}
        self.rules = []

    def get(self, symbol):
        return self.children.get(symbol)

    def all_rules(self):
        yield from self.rules
        for sym in sorted(self.children):
            yield from self.children[sym].all_rules()


class _RuleTrie:
    """Prefix index over rule right-hand sides; the root level is the first-symbol index."""

    def __init__(self, rules):
        self.root = {}
        self.max_length = 0
        for rule in sorted(rules):
            node = self.root.get(rule.rhs[0])
            if node is None:
                node = self.root[rule.rhs[0]] = _TrieNode()
            for sym in rule.rhs[1:]:
                node = node.children.setdefault(sym, _TrieNode())
            node.rules.append(rule)
            self.max_length = max(self.max_length, len(rule.rhs))


def train_scfg(rule_counts: Mapping[Rule, int], open_class_threshold: int = 50) -> Scfg:
    """Relative frequencies for phrase rules; Witten-Bell reserve for unknown words."""
    by_lhs = defaultdict(int)
    lex = defaultdict(dict)
    for rule, n in rule_counts.items():
        if n <= 0:
            continue
        if rule.lexical:
            lex[rule.lhs][rule.rhs[0]] = lex[rule.lhs].get(rule.rhs[0], 0) + n
        else:
            by_lhs[rule.lhs] += n
    rules = {r: math.log(n / by_lhs[r.lhs]) for r, n in rule_counts.items() if n > 0 and not r.lexical}
    lexicon, unknown = {}, {}
    for tag, words in lex.items():
        total = sum(words.values())
        distinct = len(words)
        if distinct > open_class_threshold:
            denom = distinct + total
            unknown[tag] = math.log(distinct / denom)
        else:
            denom = total
            unknown[tag] = IMPOSSIBLE
        lexicon[tag] = {w: math.log(n / denom) for w, n in words.items()}
    return Scfg(rules, lexicon, unknown)


# -- context models ------------------------------------------------------------

class ContextModel:
    """Interpolated trigram model over the category sequence of one layer.

    ``unigrams`` maps a category to its maximum-likelihood log probability,
    ``bigrams`` maps ``(prev, q)`` and ``trigrams`` maps ``(prev2, prev, q)``
    to conditional log probabilities. Every sequence is padded with two
    ``START`` symbols and ends with one ``END`` event.

    When a history was never observed the matching component falls back to the
    next lower order, so each history yields a proper distribution over
    ``inventory | {END}``.
    """

    def __init__(self, layer: int, unigrams: Mapping[str, float], bigrams: Mapping[tuple, float],
                 trigrams: Mapping[tuple, float], lambdas: Sequence[float], events: int):
        _check_lambdas(tuple(lambdas))
        self.layer = layer
        self.unigrams = dict(unigrams)
        self.bigrams = dict(bigrams)
        self.trigrams = dict(trigrams)
        self.lambdas = tuple(float(x) for x in lambdas)
        self.events = events
        self._uni = {q: exp(lp) for q, lp in self.unigrams.items()}
        self._bi = {k: exp(lp) for k, lp in self.bigrams.items()}
        self._tri = {k: exp(lp) for k, lp in self.trigrams.items()}
        self._bi_hist = {k[0] for k in self.bigrams}
        self._tri_hist = {k[:2] for k in self.trigrams}
        self._cache = {}

    @property
    def inventory(self):
        """Categories observed on this layer (``END`` excluded)."""
        return tuple(sorted(q for q in self.unigrams if q != END))

    def _unigram(self, q, allow_unknown):
        p = self._uni.get(q)
        if p is not None:
            return p
        if q == START:
            return 0.0
        if not allow_unknown:
            raise KeyError(f"category {q!r} not in layer-{self.layer} inventory")
        return UNSEEN_CATEGORY_COUNT / (self.events + UNSEEN_CATEGORY_COUNT)

    def transition_prob(self, q: str, context: tuple = (START, START), allow_unknown: bool = False) -> float:
        """P(q | prev2, prev) as the lambda-weighted sum of uni-, bi- and trigram estimates."""
        prev2, prev = context
        l1, l2, l3 = self.lambdas
        p1 = self._unigram(q, allow_unknown)
        if q not in self._uni:
            return p1  # floor (or zero for START), whatever the history
        p2 = self._bi.get((prev, q), 0.0) if prev in self._bi_hist else p1
        p3 = self._tri.get((prev2, prev, q), 0.0) if (prev2, prev) in self._tri_hist else p2
        return l1 * p1 + l2 * p2 + l3 * p3

    def log_transition(self, q: str, prev2: str, prev: str) -> float:
        """Cached log transition used by the decoder; unseen categories get a small floor."""
        key = (prev2, prev, q)
        lp = self._cache.get(key)
        if lp is None:
            lp = self._cache[key] = log(self.transition_prob(q, (prev2, prev), allow_unknown=True))
        return lp

    def histories(self):
        """Every history (prev2, prev) seen in training."""
        return sorted(self._tri_hist)


def transition_prob(model: ContextModel, q: str, context: tuple = (START, START), allow_unknown: bool = False) -> float:
    return model.transition_prob(q, context, allow_unknown)


def rule_prob(scfg: Scfg, rule: Rule) -> float:
    return scfg.rule_prob(rule)


def word_prob(scfg: Scfg, tag: str, word: str) -> float:
    return scfg.word_prob(tag, word)


def _ngram_counts(sequences):
    uni, bi, tri = Counter(), Counter(), Counter()
    for seq in sequences:
        padded = (START, START, *seq, END)
        for i in range(2, len(padded)):
            uni[padded[i]] += 1
            bi[padded[i - 1], padded[i]] += 1
            tri[padded[i - 2], padded[i - 1], padded[i]] += 1
    return uni, bi, tri


def estimate_lambdas(uni: Counter, bi: Counter, tri: Counter) -> tuple:
    """Deleted interpolation weights from n-gram counts.

    Each trigram type credits its count to the order whose estimate, with
    that one occurrence removed, is largest. Ties go to the lower order.
    """
    n = sum(uni.values())
    bi_hist = Counter()
    for (a, _), c in bi.items():
        bi_hist[a] += c
    tri_hist = Counter()
    for (a, b, _), c in tri.items():
        tri_hist[a, b] += c
    credit = [0, 0, 0]
    for (a, b, q), c in sorted(tri.items()):
        d3 = tri_hist[a, b] - 1
        d2 = bi_hist[b] - 1
        est = (
            (uni[q] - 1) / (n - 1) if n > 1 else 0.0,
            (bi[b, q] - 1) / d2 if d2 > 0 else 0.0,
            (c - 1) / d3 if d3 > 0 else 0.0,
        )
        best = max(range(3), key=lambda i: (est[i], -i))
        credit[best] += c
    total = sum(credit)
    if total == 0:
        return (1 / 3, 1 / 3, 1 / 3)
    return _normalized(credit)


def _normalized(weights):
    total = sum(weights)
    out = [w / total for w in weights]
    # push the rounding residue into the largest weight so it cannot go negative
    big = max(range(len(out)), key=out.__getitem__)
    out[big] = 1.0 - sum(x for i, x in enumerate(out) if i != big)
    return tuple(out)


def train_context_model(layer: int, sequences: Iterable[Sequence[str]], lambdas=None) -> ContextModel:
    uni, bi, tri = _ngram_counts(sequences)
    if not uni:
        raise ModelError(f"no training sequences for layer {layer}")
    n = sum(uni.values())
    bi_hist = Counter()
    for (a, _), c in bi.items():
        bi_hist[a] += c
    tri_hist = Counter()
    for (a, b, _), c in tri.items():
        tri_hist[a, b] += c
    unigrams = {q: math.log(c / n) for q, c in uni.items()}
    bigrams = {k: math.log(c / bi_hist[k[0]]) for k, c in bi.items()}
    trigrams = {k: math.log(c / tri_hist[k[:2]]) for k, c in tri.items()}
    if lambdas is None:
        lambdas = estimate_lambdas(uni, bi, tri)
    return ContextModel(layer, unigrams, bigrams, trigrams, lambdas, n)


# -- bundle --------------------------------------------------------------------

@dataclass
class ModelBundle:
    scfg: Scfg
    context_models: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for i, cm in enumerate(self.context_models):
            if cm.layer != i:
                raise ModelError(f"context model {i} is labelled layer {cm.layer}")
        if len(self.context_models) < 2:
            raise ModelError("a bundle needs context models for at least layers 0 and 1")

    @property
    def max_layer(self):
        return len(self.context_models) - 1


def train(trees: Sequence[SyntaxTree], max_layer: int, config: TrainConfig | None = None) -> ModelBundle:
    """Estimate a bundle for layers ``0..max_layer`` from a treebank."""
    config = config or TrainConfig()
    if max_layer < 1:
        raise ValueError(f"max_layer must be >= 1, got {max_layer}")
    trees = list(trees)
    if not trees:
        raise ModelError("cannot train on an empty corpus")
    rules = Counter()
    per_layer = [[] for _ in range(max_layer + 1)]
    tokens = 0
    for tree in trees:
        rules.update(collect_rules(tree))
        tokens += len(tree)
        for seq in layer_sequences(tree, max_layer):
            per_layer[seq.layer].append(seq.symbols)
    scfg = train_scfg(rules, config.open_class_threshold)
    models = [train_context_model(i, seqs, config.lambdas) for i, seqs in enumerate(per_layer)]
    metadata = {
        "sentences": len(trees),
        "tokens": tokens,
        "phrase_rules": len(scfg.rules),
        "open_class_threshold": config.open_class_threshold,
    }
    return ModelBundle(scfg, models, metadata)


# -- serialization -------------------------------------------------------------

def _lines(bundle):
    yield f"{MAGIC} v{FORMAT_VERSION}"
    yield f"META\tmax_layer\t{bundle.max_layer}"
    for key in sorted(bundle.metadata):
        yield f"META\t{key}\t{bundle.metadata[key]}"
    scfg = bundle.scfg
    yield "LEXICON"
    for tag in sorted(scfg.lexicon):
        yield f"UNK\t{tag}\t{format_log(scfg.unknown[tag])}"
        for word in sorted(scfg.lexicon[tag]):
            yield f"LEX\t{tag}\t{word}\t{format_log(scfg.lexicon[tag][word])}"
    yield "RULES"
    for rule in sorted(scfg.rules):
        yield "\t".join(("RULE", rule.lhs, *rule.rhs, format_log(scfg.rules[rule])))
    for cm in bundle.context_models:
        yield f"LAMBDAS layer={cm.layer}"
        yield "\t".join(["L", *(repr(x) for x in cm.lambdas), str(cm.events)])
        for order, table in ((1, cm.unigrams), (2, cm.bigrams), (3, cm.trigrams)):
            yield f"NGRAM layer={cm.layer} order={order}"
            for key in sorted(table):
                symbols = (key,) if order == 1 else key
                yield "\t".join(("G", *symbols, format_log(table[key])))


def dumps(bundle: ModelBundle) -> str:
    body = "".join(line + "\n" for line in _lines(bundle))
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    return body + f"END\t{digest}\n"


def save(bundle: ModelBundle, sink) -> None:
    """Write *bundle* to a path or an open text stream."""
    text = dumps(bundle)
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def load(source) -> ModelBundle:
    if hasattr(source, "read"):
        return loads(source.read())
    with open(source, encoding="utf-8", newline="") as fh:
        return loads(fh.read())


def _meta_value(text):
    try:
        return int(text)
    except ValueError:
        return text


def loads(text: str) -> ModelBundle:
    if not text.startswith(MAGIC + " "):
        raise ModelFormatError("not a model file (missing header)")
    header = text.split("\n", 1)[0]
    if header != f"{MAGIC} v{FORMAT_VERSION}":
        raise ModelFormatError(f"unsupported model version: {header!r}")
    end = text.rfind("END\t")
    if end < 0 or not text.endswith("\n") or (end > 0 and text[end - 1] != "\n"):
        raise ModelFormatError("truncated model file")
    body, trailer = text[:end], text[end:].rstrip("\n")
    if "\n" in trailer:
        raise ModelFormatError("truncated model file")
    if hashlib.sha256(body.encode("utf-8")).hexdigest() != trailer.split("\t", 1)[1]:
        raise ModelFormatError("checksum mismatch")

    meta, lexicon, unknown, rules = {}, defaultdict(dict), {}, {}
    layers = {}
    section, current = None, None
    try:
        for lineno, line in enumerate(body.split("\n")[1:-1], 2):
            fields = line.split("\t")
            kind = fields[0]
            if kind == "META":
                meta[fields[1]] = _meta_value(fields[2])
            elif kind in ("LEXICON", "RULES"):
                section = kind
            elif kind.startswith("LAMBDAS "):
                current = _section_args(kind)["layer"]
                layers[current] = {"tables": {1: {}, 2: {}, 3: {}}}
                section = "LAMBDAS"
            elif kind.startswith("NGRAM "):
                args = _section_args(kind)
                current = args["layer"]
                section = args["order"]
            elif kind == "UNK" and section == "LEXICON":
                unknown[fields[1]] = parse_log(fields[2])
                lexicon.setdefault(fields[1], {})
            elif kind == "LEX" and section == "LEXICON":
                lexicon[fields[1]][fields[2]] = parse_log(fields[3])
            elif kind == "RULE" and section == "RULES":
                rules[Rule(fields[1], tuple(fields[2:-1]))] = parse_log(fields[-1])
            elif kind == "L" and section == "LAMBDAS":
                layers[current]["lambdas"] = tuple(float(x) for x in fields[1:4])
                layers[current]["events"] = int(fields[4])
            elif kind == "G" and section in (1, 2, 3):
                key = fields[1] if section == 1 else tuple(fields[1:-1])
                layers[current]["tables"][section][key] = parse_log(fields[-1])
            else:
                raise ModelFormatError(f"line {lineno}: unexpected record {kind!r}")
    except (IndexError, KeyError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"line {lineno}: malformed record ({exc})") from None

    max_layer = meta.pop("max_layer", None)
    if max_layer is None or sorted(layers) != list(range(max_layer + 1)):
        raise ModelFormatError("context model sections do not match max_layer")
    models = []
    for i in range(max_layer + 1):
        entry = layers[i]
        t = entry["tables"]
        models.append(ContextModel(i, t[1], t[2], t[3], entry["lambdas"], entry["events"]))
    return ModelBundle(Scfg(rules, lexicon, unknown), models, meta)


def _section_args(header):
    args = {}
    for part in header.split()[1:]:
        key, _, value = part.partition("=")
        args[key] = int(value)
    return args
