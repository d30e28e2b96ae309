"""Decimal number formatting for feed bodies and query strings."""

import math
from decimal import Decimal


def fnum(value) -> str:
    """Shortest round-trip decimal form, no exponent notation.

    Integral values drop the fractional part entirely (410.0 -> "410"),
    everything else uses the shortest representation that parses back to
    the same float (36.30 -> "36.3").
    """
    x = float(value)
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"cannot format {value!r}")
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    s = repr(x)
    if "e" in s or "E" in s:
        s = format(Decimal(s), "f")
    return s
