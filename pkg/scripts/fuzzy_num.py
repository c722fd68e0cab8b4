"""
Triangular fuzzy numbers (TFN).

A TFN is the triple (left, center, right). Two encodings are in use and the
triple itself does not record which one applies; every function states the
encoding it consumes:

  spread   : left/right are the non-negative spreads beta_L, beta_R around the
             center; the support is (center - left, center + right).
  endpoint : left/right are the support endpoints, left <= center <= right.
             Fuzzified payments, fitted cells and reserves use this encoding.

expected_value() is the risk-aversion defuzzifier
    E(t, pi) = (1 - pi) * (c - L) / 2 + pi * (c + R) / 2
obtained by integrating reserve_h_level() over h in [0, 1]. It is applied to
endpoint triples exactly as written.
"""

import math
from collections.abc import Iterable
from dataclasses import dataclass

from errors import EmptySequence, HOutOfRange, InvalidEncoding, PiOutOfRange, ZeroSpreadQuery


@dataclass(frozen=True)
class TriangularFuzzyNumber:
    left: float
    center: float
    right: float

    def as_dict(self) -> dict[str, float]:
        return {"left": self.left, "center": self.center, "right": self.right}


@dataclass(frozen=True)
class HLevelInterval:
    lo: float
    hi: float
    h: float


# ---------------------------------------------------------------------------
# Encoding checks and conversion
# ---------------------------------------------------------------------------
def check_spread(t: TriangularFuzzyNumber) -> None:
    if t.left < 0 or t.right < 0:
        raise InvalidEncoding(f"spreads must be non-negative, got {t}")


def check_endpoint(t: TriangularFuzzyNumber) -> None:
    if not t.left <= t.center <= t.right:
        raise InvalidEncoding(f"endpoints must satisfy left <= center <= right, got {t}")


def to_endpoints(t: TriangularFuzzyNumber) -> TriangularFuzzyNumber:
    check_spread(t)
    return TriangularFuzzyNumber(t.center - t.left, t.center, t.center + t.right)


def to_spreads(t: TriangularFuzzyNumber) -> TriangularFuzzyNumber:
    check_endpoint(t)
    return TriangularFuzzyNumber(t.center - t.left, t.center, t.right - t.center)


def is_symmetric(t: TriangularFuzzyNumber) -> bool:
    check_spread(t)
    return math.isclose(t.left, t.right, rel_tol=1e-12, abs_tol=0.0)


# ---------------------------------------------------------------------------
# Membership and h-levels (spread encoding)
# ---------------------------------------------------------------------------
def membership(t: TriangularFuzzyNumber, x: float) -> float:
    """Piecewise-linear membership of x; 1 at the center, 0 outside the support."""
    check_spread(t)
    if x == t.center:
        return 1.0
    if x < t.center:
        if t.left == 0:
            raise ZeroSpreadQuery(f"left branch queried at x={x} with zero left spread")
        if x <= t.center - t.left:
            return 0.0
        return 1.0 - (t.center - x) / t.left
    if t.right == 0:
        raise ZeroSpreadQuery(f"right branch queried at x={x} with zero right spread")
    if x > t.center + t.right:
        return 0.0
    return 1.0 - (x - t.center) / t.right


def _check_h(h: float) -> None:
    if not 0.0 <= h <= 1.0:
        raise HOutOfRange(f"h must lie in [0, 1], got {h}")


def h_level(t: TriangularFuzzyNumber, h: float) -> HLevelInterval:
    """[center - left*(1-h), center + right*(1-h)]."""
    _check_h(h)
    check_spread(t)
    return HLevelInterval(t.center - t.left * (1.0 - h), t.center + t.right * (1.0 - h), h)


def reserve_h_level(t: TriangularFuzzyNumber, h: float) -> HLevelInterval:
    """The h-level integrated by expected_value: [h*c - (1-h)*L, h*c + (1-h)*R]."""
    _check_h(h)
    return HLevelInterval(h * t.center - (1.0 - h) * t.left, h * t.center + (1.0 - h) * t.right, h)


# ---------------------------------------------------------------------------
# Aggregation and defuzzification (endpoint encoding)
# ---------------------------------------------------------------------------
def sum_tfn(ts: Iterable[TriangularFuzzyNumber]) -> TriangularFuzzyNumber:
    items = list(ts)
    if not items:
        raise EmptySequence("cannot sum an empty sequence of fuzzy numbers")
    return TriangularFuzzyNumber(
        math.fsum(t.left for t in items),
        math.fsum(t.center for t in items),
        math.fsum(t.right for t in items),
    )


def expected_value(t: TriangularFuzzyNumber, pi: float) -> float:
    """Risk-aversion expected value; pi = 1 is maximum risk aversion."""
    if not 0.0 <= pi <= 1.0:
        raise PiOutOfRange(f"pi must lie in [0, 1], got {pi}")
    return (1.0 - pi) * (t.center - t.left) / 2.0 + pi * (t.center + t.right) / 2.0
