import io
import math
from collections import defaultdict

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmm._logmath import IMPOSSIBLE, format_log, parse_log
from cmm.corpus import Rule
from cmm.model import (
    END, START, ModelError, _ngram_counts, ModelFormatError, TrainConfig, dumps, estimate_lambdas, load, loads,
    rule_prob, save, train, train_context_model, train_scfg, transition_prob, word_prob,
)
from cmm.synthetic import toy_corpus

ROW1 = ["ART", "ADJA", "NN", "APPR", "CNP", "VAFIN", "PP", "VVPP"]


def test_rule_relative_frequency(example_bundle):
    assert rule_prob(example_bundle.scfg, Rule("PP", ("APPR", "CNP"))) == pytest.approx(0.5, abs=1e-12)
    assert rule_prob(example_bundle.scfg, Rule("S", ("NP", "VAFIN", "VP"))) == pytest.approx(1.0)
    assert rule_prob(example_bundle.scfg, Rule("S", ("NP",))) == 0.0


def test_layer3_trigram(example_bundle):
    cm = example_bundle.context_models[3]
    assert math.exp(cm.trigrams[START, "NP", "VAFIN"]) == pytest.approx(1.0)
    assert math.exp(cm.trigrams[START, START, "NP"]) == pytest.approx(1.0)


def test_pure_trigram_weights():
    cm = train_context_model(1, [ROW1], lambdas=(0.0, 0.0, 1.0))
    assert transition_prob(cm, "CNP", ("NN", "APPR")) == pytest.approx(1.0)
    assert transition_prob(cm, "VAFIN", ("NN", "APPR")) == 0.0
    assert transition_prob(cm, END, ("PP", "VVPP")) == pytest.approx(1.0)


def test_pure_unigram_weights():
    cm = train_context_model(1, [ROW1], lambdas=(1.0, 0.0, 0.0))
    # 8 symbols plus one END event, each category once
    for q in ROW1:
        assert transition_prob(cm, q, ("NN", "APPR")) == pytest.approx(1 / 9)


def test_unseen_history_backs_off():
    cm = train_context_model(1, [ROW1], lambdas=(0.0, 0.0, 1.0))
    # (VVPP, ART) never occurs, the bigram for ART does
    assert transition_prob(cm, "ADJA", ("VVPP", "ART")) == pytest.approx(1.0)


def test_unknown_category():
    cm = train_context_model(1, [ROW1])
    with pytest.raises(KeyError):
        transition_prob(cm, "XP", ("NN", "APPR"))
    floor = cm.log_transition("XP", "NN", "APPR")
    assert IMPOSSIBLE < floor < 0


def test_word_probabilities(example_bundle):
    scfg = example_bundle.scfg
    # closed classes reserve nothing for unknown words
    assert word_prob(scfg, "VVPP", "aufgebracht") == pytest.approx(1.0)
    # ART occurs twice in the sentence, with two different words
    assert word_prob(scfg, "ART", "Ein") == pytest.approx(0.5)
    assert word_prob(scfg, "ART", "den") == pytest.approx(0.5)
    assert word_prob(scfg, "ART", "zzz") == 0.0
    assert word_prob(scfg, "NN", "Ein") == 0.0
    with pytest.raises(KeyError):
        word_prob(scfg, "XYZ", "Ein")


def test_word_probability_minus_reserve(example_tree):
    scfg = train([example_tree], 4, TrainConfig(open_class_threshold=0)).scfg
    reserve = math.exp(scfg.unknown["VVPP"])
    assert reserve == pytest.approx(0.5)
    assert word_prob(scfg, "VVPP", "aufgebracht") == pytest.approx(1 - reserve)


def test_open_class_reserve():
    counts = {Rule("N", (w,), lexical=True): 1 for w in "abc"}
    counts[Rule("N", ("a",), lexical=True)] = 3
    scfg = train_scfg(counts, open_class_threshold=2)
    # 3 distinct, 5 tokens: unknown mass 3/8
    assert math.exp(scfg.unknown["N"]) == pytest.approx(3 / 8)
    assert scfg.word_prob("N", "a") == pytest.approx(3 / 8)
    assert scfg.word_prob("N", "zzz") == pytest.approx(3 / 8)
    assert scfg.open_tags == ("N",)
    scfg = train_scfg(counts, open_class_threshold=3)
    assert scfg.open_tags == ()


def test_lambdas_deleted_interpolation():
    uni, bi, tri = _ngram_counts([["A", "B"], ["A", "B"], ["A", "C"]])
    lam = estimate_lambdas(uni, bi, tri)
    # worked by hand: the five trigram types credit 2 events to the unigram
    # order, 7 to the bigram order (ties go down) and none to the trigram
    assert lam == pytest.approx((2 / 9, 7 / 9, 0.0), abs=1e-12)
    assert sum(lam) == pytest.approx(1.0, abs=1e-12)


def test_train_errors():
    with pytest.raises(ValueError):
        train(toy_corpus(3), 0)
    with pytest.raises(ModelError):
        train([], 2)
    with pytest.raises(ValueError):
        TrainConfig(lambdas=(0.5, 0.5, 0.5))


def _transition_sums(cm):
    cats = list(cm.inventory) + [END]
    contexts = [(START, START)] + cm.histories() + [("??", "??")]
    for ctx in contexts:
        yield ctx, sum(cm.transition_prob(q, ctx) for q in cats)


@pytest.mark.parametrize("seed", [0, 1])
def test_normalization(seed):
    bundle = train(toy_corpus(200, seed=seed, ambiguous=True), 4)
    per_lhs = defaultdict(float)
    for rule, lp in bundle.scfg.rules.items():
        per_lhs[rule.lhs] += math.exp(lp)
    for total in per_lhs.values():
        assert total == pytest.approx(1.0, abs=1e-9)
    for cm in bundle.context_models:
        assert sum(cm.lambdas) == pytest.approx(1.0, abs=1e-9)
        for _, total in _transition_sums(cm):
            assert total == pytest.approx(1.0, abs=1e-6)


def test_training_deterministic():
    trees = toy_corpus(100)
    assert dumps(train(trees, 3)) == dumps(train(list(trees), 3))


def test_doubled_corpus_same_relative_frequencies():
    trees = toy_corpus(100)
    a, b = train(trees, 3), train(trees + trees, 3)
    for rule, lp in a.scfg.rules.items():
        assert b.scfg.rules[rule] == pytest.approx(lp, abs=1e-12)
    for ca, cb in zip(a.context_models, b.context_models):
        for key, lp in ca.trigrams.items():
            assert cb.trigrams[key] == pytest.approx(lp, abs=1e-12)


# -- file format -------------------------------------------------------------------

def test_rule_line(example_bundle):
    text = dumps(example_bundle)
    assert "RULE\tPP\tAPPR\tCNP\t-0.693147180560\n" in text
    assert text.startswith("CMM-MODEL v1\n")


def test_roundtrip(example_bundle, tmp_path):
    path = tmp_path / "m.cmm"
    save(example_bundle, path)
    again = load(path)
    assert dumps(again) == dumps(example_bundle)
    buf = io.StringIO()
    save(again, buf)
    assert loads(buf.getvalue()).max_layer == 4


def test_roundtrip_toy_probabilities():
    bundle = train(toy_corpus(150, ambiguous=True), 4)
    again = loads(dumps(bundle))
    for ca, cb in zip(bundle.context_models, again.context_models):
        assert ca.lambdas == cb.lambdas
        for ctx, _ in _transition_sums(ca):
            for q in list(ca.inventory) + [END]:
                assert cb.transition_prob(q, ctx) == pytest.approx(ca.transition_prob(q, ctx), rel=1e-10)


def test_bad_version(example_bundle):
    text = dumps(example_bundle).replace("CMM-MODEL v1", "CMM-MODEL v99", 1)
    with pytest.raises(ModelFormatError, match="version"):
        loads(text)


def test_checksum(example_bundle):
    text = dumps(example_bundle).replace("-0.693147180560", "-0.693147180561", 1)
    with pytest.raises(ModelFormatError, match="checksum"):
        loads(text)


@pytest.mark.parametrize("cut", [0.3, 0.9])
def test_truncated(example_bundle, cut):
    text = dumps(example_bundle)
    with pytest.raises(ModelFormatError):
        loads(text[: int(len(text) * cut)])


def test_not_a_model():
    with pytest.raises(ModelFormatError):
        loads("hello\n")


@settings(max_examples=300)
@given(st.floats(min_value=-1e6, max_value=0.0, allow_nan=False))
def test_log_format_roundtrip(x):
    assert parse_log(format_log(x)) == pytest.approx(x, rel=1e-11, abs=1e-12)


def test_log_format_impossible():
    assert parse_log(format_log(IMPOSSIBLE)) == IMPOSSIBLE
    assert format_log(math.log(0.5)) == "-0.693147180560"
