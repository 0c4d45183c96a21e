"""Log-space helpers shared by the model, decoder and oracle."""

import math

# Probability zero. -inf is absorbing under addition and loses every max().
IMPOSSIBLE = float("-inf")


def log(p):
    """Natural log that maps 0 to IMPOSSIBLE instead of raising."""
    if p < 0.0:
        raise ValueError(f"negative probability {p!r}")
    return math.log(p) if p > 0.0 else IMPOSSIBLE


def exp(x):
    return 0.0 if x == IMPOSSIBLE else math.exp(x)


def tolerance(a, b):
    # relative slack for sums of a few hundred float terms
    return 1e-12 * max(1.0, abs(a), abs(b)) if math.isfinite(a) and math.isfinite(b) else 0.0


def close(a, b):
    if a == b:
        return True
    return abs(a - b) <= tolerance(a, b)


def format_log(x):
    """Decimal text for a log probability with at least 12 significant digits."""
    if x == IMPOSSIBLE:
        return "-inf"
    if x == 0.0:
        return "0.000000000000"
    places = max(12, 11 - math.floor(math.log10(abs(x))))
    return f"{x:.{places}f}"


def parse_log(text):
    if text == "-inf":
        return IMPOSSIBLE
    value = float(text)
    if math.isnan(value) or value > 0.0 or value == float("inf"):
        raise ValueError(f"not a log probability: {text!r}")
    return value
