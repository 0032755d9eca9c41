import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from critpin.errors import NumericError, RegimeError
from critpin.series import Bracket, converges, power_log_sum, tail_integral


def test_bracket_arithmetic_contains_exact_results():
    a, b = Bracket(1.0, 1.5), Bracket(2.0, 2.25)
    assert 3.25 in a + b and 3.75 in a + b
    assert 2.5 in a + 1.5
    assert (a / b).lower <= 1.0 / 2.25 and (a / b).upper >= 1.5 / 2.0
    assert a.scale(-2).lower <= -3.0 and a.scale(-2).upper >= -2.0
    assert a.value == 1.25 and a.error == 0.25


def test_bracket_rejects_inverted_interval():
    with pytest.raises(NumericError):
        Bracket(1.0, 0.0)
    with pytest.raises(NumericError):
        Bracket(1.0, 2.0) / Bracket(0.0, 1.0)


@pytest.mark.parametrize("q,lam,c,expected", [
    (2, 0, 0, True), (1, 0, 0, False), (1, -2, 0, True), (1, -1, 0, False), (0.5, 0, 0.1, True),
    (3, 0, -0.1, False),
])
def test_convergence_table(q, lam, c, expected):
    assert converges(q, lam, c) is expected


@pytest.mark.parametrize("q", [2.0, 3.0, 3.5, 1.25])
def test_riemann_zeta(q):
    b = power_log_sum(1, q)
    assert float(mpmath.zeta(q)) in b
    assert b.error <= 1e-13 * b.value


@pytest.mark.parametrize("q,start", [(3.0, 11), (2.0, 100001), (4.5, 7)])
def test_hurwitz_tail(q, start):
    b = power_log_sum(start, q)
    assert float(mpmath.zeta(q, start)) in b


@pytest.mark.parametrize("q,c", [(3.0, 0.5), (2.0, 0.01), (0.0, 1.0), (-1.0, 2.0)])
def test_polylog_with_tilt(q, c):
    b = power_log_sum(1, q, c=c)
    ref = float(mpmath.polylog(q, mpmath.exp(-c)))
    assert abs(b.value - ref) <= 1e-12 * ref + b.error


def test_log_corrected_series_matches_independent_sum():
    from conftest import LOG_K1_FIRST, LOG_K1_NORM
    assert LOG_K1_NORM in power_log_sum(1, 2.0, -2.0)
    assert LOG_K1_FIRST in power_log_sum(1, 1.0, -2.0)


def test_divergent_series_raise():
    with pytest.raises(RegimeError):
        power_log_sum(1, 1.0)
    with pytest.raises(RegimeError):
        power_log_sum(1, 1.0, -0.5)


def test_tail_integral_closed_form():
    val, err = tail_integral(10.0, 3.0, 0.0, 0.0)
    assert val == pytest.approx(1 / 200, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(q=st.floats(1.5, 6.0), start=st.integers(1, 5000), coef=st.floats(0.1, 10.0))
def test_bracket_contains_hurwitz_value(q, start, coef):
    b = power_log_sum(start, q, coef=coef)
    ref = coef * float(mpmath.zeta(q, start))
    assert b.lower - 1e-15 * ref <= ref <= b.upper + 1e-15 * ref


@settings(max_examples=30, deadline=None)
@given(q=st.integers(-200, 400).map(lambda k: k / 100), c=st.floats(0.05, 3.0))
def test_tilted_bracket_contains_polylog(q, c):
    b = power_log_sum(1, q, c=c)
    ref = float(mpmath.polylog(q, mpmath.exp(-c)))
    assert abs(b.value - ref) <= 1e-11 * abs(ref) + b.error
