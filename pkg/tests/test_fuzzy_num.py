"""
Tests for scripts/fuzzy_num.py

Covers:
- membership() piecewise branches, support boundary, zero-spread queries
- h_level() values, nesting, range checks
- reserve_h_level() and expected_value() closed form vs trapezoid quadrature
- sum_tfn() componentwise sums, commutativity, empty input
- encoding conversion helpers
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

sys.path.insert(0, str(Path(__file__).parent.parent / "scripts"))

from errors import (  # noqa: E402
    EmptySequence,
    HOutOfRange,
    InvalidEncoding,
    PiOutOfRange,
    ZeroSpreadQuery,
)
from fuzzy_num import TriangularFuzzyNumber as TFN  # noqa: E402
from fuzzy_num import (  # noqa: E402
    expected_value,
    h_level,
    is_symmetric,
    membership,
    reserve_h_level,
    sum_tfn,
    to_endpoints,
    to_spreads,
)

REFERENCE_TOTAL = TFN(33384.915, 33386.738, 33388.281)


# ---------------------------------------------------------------------------
# membership
# ---------------------------------------------------------------------------
class TestMembership:
    def test_modal_value(self):
        assert membership(TFN(2, 5, 4), 5) == 1.0

    def test_left_branch(self):
        assert membership(TFN(2, 5, 4), 4) == pytest.approx(0.5)

    def test_right_branch(self):
        assert membership(TFN(2, 5, 4), 8) == pytest.approx(0.25)

    def test_outside_support(self):
        assert membership(TFN(2, 5, 4), 10) == 0.0
        assert membership(TFN(2, 5, 4), -1) == 0.0

    def test_support_endpoints(self):
        t = TFN(2, 5, 4)
        assert membership(t, 3) == 0.0
        assert membership(t, 9) == pytest.approx(0.0)

    def test_dense_grid_in_unit_interval(self):
        t = TFN(2, 5, 4)
        grid = np.linspace(0, 12, 2001)
        values = np.array([membership(t, x) for x in grid])
        assert values.min() >= 0.0
        assert values.max() <= 1.0

    def test_crisp_number_at_center(self):
        assert membership(TFN(0, 5, 0), 5) == 1.0

    def test_zero_left_spread_query(self):
        with pytest.raises(ZeroSpreadQuery):
            membership(TFN(0, 5, 4), 4)

    def test_zero_right_spread_query(self):
        with pytest.raises(ZeroSpreadQuery):
            membership(TFN(2, 5, 0), 6)

    def test_negative_spread_rejected(self):
        with pytest.raises(InvalidEncoding):
            membership(TFN(-1, 5, 4), 5)


# ---------------------------------------------------------------------------
# h_level
# ---------------------------------------------------------------------------
class TestHLevel:
    def test_core(self):
        iv = h_level(TFN(2, 5, 4), 1)
        assert (iv.lo, iv.hi) == (5, 5)

    def test_support(self):
        iv = h_level(TFN(2, 5, 4), 0)
        assert (iv.lo, iv.hi) == (3, 9)

    @pytest.mark.parametrize("h", [0.0, 0.3, 1.0])
    def test_crisp(self, h):
        iv = h_level(TFN(0, 5, 0), h)
        assert (iv.lo, iv.hi) == (5, 5)

    def test_nested(self):
        t = TFN(1.5, 10, 3)
        hs = np.linspace(0, 1, 21)
        intervals = [h_level(t, h) for h in hs]
        for a, b in zip(intervals, intervals[1:]):
            assert a.lo <= b.lo <= b.hi <= a.hi

    def test_membership_at_level_bounds(self):
        t = TFN(2, 5, 4)
        iv = h_level(t, 0.4)
        assert membership(t, iv.lo) == pytest.approx(0.4)
        assert membership(t, iv.hi) == pytest.approx(0.4)

    @pytest.mark.parametrize("h", [-0.01, 1.01])
    def test_out_of_range(self, h):
        with pytest.raises(HOutOfRange):
            h_level(TFN(2, 5, 4), h)


# ---------------------------------------------------------------------------
# sum_tfn
# ---------------------------------------------------------------------------
class TestSumTfn:
    def test_componentwise(self):
        assert sum_tfn([TFN(1, 2, 3), TFN(10, 20, 30)]) == TFN(11, 22, 33)

    def test_singleton(self):
        assert sum_tfn([TFN(5, 5, 5)]) == TFN(5, 5, 5)

    def test_empty(self):
        with pytest.raises(EmptySequence):
            sum_tfn([])

    def test_reference_predictions(self):
        cells = [
            TFN(2875.014, 2875.162, 2875.293),
            TFN(2936.547, 2936.671, 2936.777),
            TFN(3131.669, 3131.716, 3131.739),
            TFN(3155.319, 3155.355, 3155.368),
            TFN(3562.481, 3562.659, 3562.803),
            TFN(3798.981, 3799.279, 3799.538),
            TFN(2742.702, 2742.898, 2743.080),
            TFN(3355.000, 3355.077, 3355.127),
            TFN(3787.870, 3788.162, 3788.415),
            TFN(4039.332, 4039.759, 4040.141),
        ]
        total = sum_tfn(cells)
        assert total.left == pytest.approx(REFERENCE_TOTAL.left, abs=0.01)
        assert total.center == pytest.approx(REFERENCE_TOTAL.center, abs=0.01)
        assert total.right == pytest.approx(REFERENCE_TOTAL.right, abs=0.01)

    def test_commutative_and_associative(self):
        rng = np.random.default_rng(7)
        ts = [TFN(*sorted(rng.uniform(1, 1e4, 3))) for _ in range(50)]
        forward = sum_tfn(ts)
        backward = sum_tfn(reversed(ts))
        grouped = sum_tfn([sum_tfn(ts[:17]), sum_tfn(ts[17:])])
        for other in (backward, grouped):
            assert other.left == pytest.approx(forward.left, rel=1e-12)
            assert other.center == pytest.approx(forward.center, rel=1e-12)
            assert other.right == pytest.approx(forward.right, rel=1e-12)

    def test_accepts_generator(self):
        assert sum_tfn(TFN(i, i, i) for i in range(4)) == TFN(6, 6, 6)


# ---------------------------------------------------------------------------
# expected_value
# ---------------------------------------------------------------------------
def _quadrature(t: TFN, pi: float, points: int = 100_001) -> float:
    hs = np.linspace(0.0, 1.0, points)
    lo = hs * t.center - (1 - hs) * t.left
    hi = hs * t.center + (1 - hs) * t.right
    return (1 - pi) * integrate.trapezoid(lo, hs) + pi * integrate.trapezoid(hi, hs)


class TestExpectedValue:
    def test_reference_total(self):
        assert expected_value(REFERENCE_TOTAL, 1.0) == pytest.approx(33387.5095, abs=1e-4)

    def test_max_risk_aversion(self):
        assert expected_value(TFN(0, 2, 4), 1.0) == 3.0

    def test_half(self):
        assert expected_value(TFN(0, 2, 4), 0.5) == pytest.approx(2.0)

    def test_zero_pi_formula(self):
        # (c - L) / 2: near zero for endpoint-encoded reserves
        assert expected_value(REFERENCE_TOTAL, 0.0) == pytest.approx(0.9115, abs=1e-6)

    @pytest.mark.parametrize("pi", [-0.1, 1.5])
    def test_pi_out_of_range(self, pi):
        with pytest.raises(PiOutOfRange):
            expected_value(TFN(0, 2, 4), pi)

    def test_linear_and_monotone_in_pi(self):
        t = TFN(3, 7, 12)
        pis = np.linspace(0, 1, 11)
        values = np.array([expected_value(t, p) for p in pis])
        np.testing.assert_allclose(np.diff(values, 2), 0.0, atol=1e-12)
        assert np.all(np.diff(values) >= 0)

    @pytest.mark.parametrize("pi", [0.0, 0.25, 0.5, 0.75, 1.0])
    def test_matches_quadrature(self, pi):
        rng = np.random.default_rng(int(pi * 100))
        for _ in range(1000):
            left, center, right = sorted(rng.uniform(0.5, 1000.0, 3))
            t = TFN(left, center, right)
            closed = expected_value(t, pi)
            # integrands are linear in h, so a coarse grid is already exact
            assert closed == pytest.approx(_quadrature(t, pi, points=101), rel=1e-9, abs=1e-9)

    def test_reserve_h_level_bounds_integrate_to_closed_form(self):
        t = TFN(1, 4, 9)
        hs = np.linspace(0, 1, 1001)
        lo = [reserve_h_level(t, h).lo for h in hs]
        hi = [reserve_h_level(t, h).hi for h in hs]
        assert integrate.trapezoid(lo, hs) == pytest.approx((t.center - t.left) / 2)
        assert integrate.trapezoid(hi, hs) == pytest.approx((t.center + t.right) / 2)

    def test_reserve_h_level_range(self):
        with pytest.raises(HOutOfRange):
            reserve_h_level(TFN(1, 2, 3), 2.0)


# ---------------------------------------------------------------------------
# Encodings
# ---------------------------------------------------------------------------
class TestEncodings:
    def test_spread_to_endpoints(self):
        assert to_endpoints(TFN(2, 5, 4)) == TFN(3, 5, 9)

    def test_endpoints_to_spreads(self):
        assert to_spreads(TFN(3, 5, 9)) == TFN(2, 5, 4)

    def test_bad_endpoints(self):
        with pytest.raises(InvalidEncoding):
            to_spreads(TFN(6, 5, 9))

    def test_bad_spreads(self):
        with pytest.raises(InvalidEncoding):
            to_endpoints(TFN(2, 5, -1))

    def test_symmetry(self):
        assert is_symmetric(TFN(2, 5, 2))
        assert not is_symmetric(TFN(2, 5, 4))

    def test_as_dict(self):
        assert TFN(1, 2, 3).as_dict() == {"left": 1, "center": 2, "right": 3}
