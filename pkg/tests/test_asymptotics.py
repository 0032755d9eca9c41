import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import LOG_K1_MEAN, LOG_K1_NORM, MEAN_S3, ZETA3, s3_model
from critpin.asymptotics import (aitken, check_ladder, constants_agree, convergence_study,
                                 exponential_regime_check, jump_bracket, jump_integral,
                                 lemma1_check, lemma2_check, limit_constant_closed,
                                 limit_constant_from_functional, regular_variation_probe,
                                 theorem2_constant)
from critpin.errors import RegimeError
from critpin.exact import RenewalTables
from critpin.model import RewardSpec
from critpin.thermo import classify


def test_constant_at_alpha_zero(s3_class):
    assert theorem2_constant(s3_class, 0.0) == 0.0


def test_constant_kappa_two_half(s3_class):
    # (alpha kappa - 1) vanishes at alpha = 1/2, leaving 1 / (2 E_o[S])
    c = theorem2_constant(s3_class, 0.5)
    assert c == pytest.approx(0.5 / MEAN_S3, rel=1e-13)
    assert c == pytest.approx(0.365382, abs=1e-6)


def test_constant_kappa_one(log_k1):
    c = classify(log_k1)
    expected = (1.0 + math.log(0.5)) / LOG_K1_MEAN
    assert theorem2_constant(c, 0.5) == pytest.approx(expected, rel=1e-12)
    assert 1.0 + math.log(0.5) == pytest.approx(0.3068528, abs=1e-7)


def test_constant_regime_gate(s3, localized_class):
    with pytest.raises(RegimeError, match="Localized"):
        theorem2_constant(localized_class, 0.4)
    exc = classify(s3.replace_reward(RewardSpec.identity()))
    with pytest.raises(RegimeError, match="ExceptionalCritical"):
        theorem2_constant(exc, 0.4)


@pytest.mark.parametrize("alpha", [-0.1, 1.0, 1.5])
def test_constant_alpha_domain(s3_class, alpha):
    with pytest.raises(ValueError):
        theorem2_constant(s3_class, alpha)


def test_integral_against_mpmath():
    for a, k in ((0.3, 1.0), (0.7, 2.5), (0.95, 4.0)):
        integral = mpmath.quad(lambda x: x ** (-k), [1 - a, 1])
        ref = float(a * (1 - a) ** (-k) - integral)
        assert jump_integral(a, k) == pytest.approx(ref, rel=1e-13)
        assert jump_bracket(a, k) == pytest.approx(ref, rel=1e-13)


def test_identity_grid():
    bad = [(a, k) for a in np.linspace(0, 0.99, 100) for k in np.linspace(1, 6, 100)
           if not constants_agree(limit_constant_closed(a, k, 1.7),
                                  limit_constant_from_functional(a, k, 1.7))]
    assert not bad


@settings(max_examples=60, deadline=None)
@given(kappa=st.floats(1.0, 8.0), a=st.floats(0.001, 0.98), b=st.floats(0.001, 0.98))
def test_constant_nonnegative_increasing(kappa, a, b):
    lo, hi = sorted((a, b))
    ca, cb = limit_constant_closed(lo, kappa, 1.0), limit_constant_closed(hi, kappa, 1.0)
    assert ca >= 0
    if hi - lo > 1e-6:
        assert cb > ca


@pytest.mark.parametrize("alpha", [0.05, 0.3, 0.5, 0.8, 0.95])
def test_kappa_one_is_limit(alpha):
    near = limit_constant_closed(alpha, 1 + 1e-6, 1.0)
    assert near == pytest.approx(limit_constant_closed(alpha, 1.0, 1.0), abs=1e-4)


def test_aitken_exact_on_geometric():
    x = [2.0 + 0.5 ** k for k in range(3)]
    assert aitken(*x) == pytest.approx(2.0, abs=1e-15)
    assert aitken(1.0, 1.0, 1.0) == 1.0


def test_ladder_must_double():
    assert check_ladder([8, 16, 32]) == [8, 16, 32]
    with pytest.raises(ValueError):
        check_ladder([8, 16, 30])
    with pytest.raises(ValueError):
        check_ladder([])


def test_alpha_zero_ratios(s3, s3_class, s3_tables):
    rep = convergence_study(s3, 0.0, [64, 128, 256], classification=s3_class, tables=s3_tables)
    assert np.all(rep.ratios == 0.0) and rep.extrapolated == 0.0 and rep.constant == 0.0


def test_ratio_increments_shrink(s3, s3_class, s3_tables):
    rep = convergence_study(s3, 0.4, [512, 1024, 2048, 4096], classification=s3_class, tables=s3_tables)
    assert rep.shrinking
    assert rep.rows[0].scale == pytest.approx(1 / (512 * ZETA3), rel=1e-14)


def test_log_family_scale(log_k1):
    c = classify(log_k1)
    rep = convergence_study(log_k1, 0.5, [32, 64], classification=c)
    for row in rep.rows:
        assert row.scale == pytest.approx(1 / (LOG_K1_NORM * math.log(math.e + row.t) ** 2), rel=1e-12)


def test_convergence_study_regime_gate(localized):
    with pytest.raises(RegimeError):
        convergence_study(localized, 0.4, [64, 128])


# -- tail and product moment ---------------------------------------------------

def test_tail_regular_variation_at_large_x(s3_class):
    rows = lemma1_check(s3_class, [10.0, 1e3, 1e5])
    assert abs(rows[-1].value - 1) <= 1e-4
    # independent value: kappa x^kappa Q(x) / L(x) = 2 x^2 zeta(3, x + 1)
    assert rows[1].value == pytest.approx(2e6 * float(mpmath.zeta(3, 1001)), rel=1e-12)
    assert rows[0].value != pytest.approx(1, abs=1e-2)


def test_regular_variation_probe(s3_class):
    r = regular_variation_probe(s3_class, 1e5)
    assert abs(r.value - 0.25) <= 1e-3


def test_tail_regular_variation_log_family(log_k1):
    rows = lemma1_check(classify(log_k1), [1e2, 1e4, 1e6])
    gaps = [abs(r.value - 1) for r in rows]
    assert gaps[0] > gaps[1] > gaps[2]


def test_tail_check_needs_power_critical(localized_class):
    with pytest.raises(RegimeError):
        lemma1_check(localized_class, [10.0])


def test_product_moment_check_trivial():
    rows, shrinks = lemma2_check(RenewalTables.build(np.array([0.0, 1.0]), 64), [8, 16, 32], mean_s=1.0)
    assert all(r.value == 1.0 for r in rows)


def test_product_moment_check_two_point():
    tb = RenewalTables.build(np.array([0.0, 0.5, 0.5]), 64)
    rows, _ = lemma2_check(tb, [2, 64], mean_s=1.5)
    assert rows[0].value == pytest.approx(1.125, rel=1e-15)
    assert abs(rows[1].value - 1) < abs(rows[0].value - 1)


def test_product_moment_check_s3(s3_tables):
    rows, shrinks = lemma2_check(s3_tables, [256, 512, 1024, 2048, 4096])
    assert shrinks and abs(rows[-1].value - 1) <= 0.02


# -- exponential regime --------------------------------------------------------------

def test_slope_at_rho_vanishes(localized, localized_class):
    rows = exponential_regime_check(localized, localized_class.rho, [256, 512, 1024])
    slopes = [r.slope for r in rows]
    assert slopes[0] > slopes[1] > slopes[2] and slopes[2] < 1e-3
    assert abs(rows[0].predicted) <= 1e-12


def test_slope_localized(localized, localized_class):
    rows = exponential_regime_check(localized, 0.5 * localized_class.rho, [512, 1024])
    assert rows[1].rel_gap < rows[0].rel_gap
    assert abs(rows[1].rel_gap) < 0.1


def test_slope_critical_decreasing(s3, s3_class):
    rows = exponential_regime_check(s3, 0.5 * s3_class.w_c, [256, 512, 1024, 2048])
    slopes = [r.slope for r in rows]
    assert all(b < a for a, b in zip(slopes, slopes[1:]))
    assert rows[0].predicted == pytest.approx(0.0, abs=1e-12)
    # polynomial decay: slope * t / ln t stays bounded
    assert all(r.slope * r.t / math.log(r.t) < 2.0 for r in rows)


def test_slope_skips_impossible_rows(localized):
    rows = exponential_regime_check(localized, 0.0, [16, 32])
    assert all(r.skipped and r.slope is None for r in rows)


def test_slope_rejects_delocalized():
    with pytest.raises(RegimeError):
        exponential_regime_check(s3_model(-0.5), 0.0, [16])
