import random

import pytest

from cmm.corpus import parse_tree
from cmm.model import train

# the example sentence used throughout: "Ein enormer Posten an Arbeit und Geld
# wird von den 37 beteiligten Vereinigungen aufgebracht"
EXAMPLE = (
    "(S (NP (ART Ein) (ADJA enormer) (NN Posten)"
    " (PP (APPR an) (CNP (NN Arbeit) (KON und) (NN Geld))))"
    " (VAFIN wird)"
    " (VP (PP (APPR von) (ART den) (CARD 37) (ADJA beteiligten) (NN Vereinigungen))"
    " (VVPP aufgebracht)))"
)

TOY = "(PP (P in) (NP (D the) (N park)))"


@pytest.fixture(scope="session")
def example_tree():
    return parse_tree(EXAMPLE)


@pytest.fixture(scope="session")
def example_bundle(example_tree):
    return train([example_tree], 4)


@pytest.fixture(scope="session")
def toy_bundle():
    return train([parse_tree(TOY)], 2)


@pytest.fixture
def rng():
    return random.Random(1234)


# acceptance results, printed once at the end of the run
VERDICTS = []


def record(number, passed, detail):
    VERDICTS.append((number, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(VERDICTS):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}")
