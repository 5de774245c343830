import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from opmeans.errors import LeadingCoefficientNotOne, PoleParameter, ZeroLeadingCoefficient
from opmeans.hyperseries import (
    HypergeometricSpec,
    TruncatedSeries,
    addition_series,
    coeffs_pFq,
    convolve,
    equal_radius_series,
    gauss2F1_terminating,
    identity_series,
    real_power,
    reciprocal,
)

SPHERE3 = TruncatedSeries((F(1), F(1, 6), F(1, 120)))


def test_sphere_series_n3():
    spec = HypergeometricSpec((), (F(3, 2),), F(1, 4))
    assert coeffs_pFq(spec, 2) == [1, F(1, 6), F(1, 120)]


def test_cosh_series_matches_taylor():
    # cosh(2 sqrt(t)) = sum 4^j t^j / (2j)!
    taylor = [F(4**j, math.factorial(2 * j)) for j in range(6)]
    assert coeffs_pFq(HypergeometricSpec((), (F(1, 2),), 1), 5) == taylor
    assert coeffs_pFq(HypergeometricSpec((), (F(1, 2),), 1), 2) == [1, 2, F(2, 3)]


@pytest.mark.parametrize("upper,lower", [((), (F(3, 2),)), ((F(1, 3),), (F(5, 2), 7)), ((2, 3), ())])
def test_order_zero_is_one(upper, lower):
    assert coeffs_pFq(HypergeometricSpec(upper, lower, F(1, 4)), 0) == [1]


@pytest.mark.parametrize("b", [0, -1, F(-3)])
def test_pole_guard(b):
    with pytest.raises(PoleParameter):
        HypergeometricSpec((), (b,), 1)


def test_reciprocal_examples():
    assert reciprocal(SPHERE3) == [1, F(-1, 6), F(7, 360)]
    assert reciprocal(TruncatedSeries((F(1),))) == [1]
    assert reciprocal(reciprocal(SPHERE3)) == SPHERE3


def test_reciprocal_zero_lead():
    with pytest.raises(ZeroLeadingCoefficient):
        reciprocal(TruncatedSeries((F(0), F(1))))


def test_real_power_examples():
    assert real_power(SPHERE3, 2) == [1, F(1, 3), F(2, 45)]
    assert real_power(SPHERE3, -1) == [1, F(-1, 6), F(7, 360)]
    assert real_power(SPHERE3, 0) == [1, 0, 0]
    half = real_power(SPHERE3, F(1, 2))
    assert real_power(half, 2) == SPHERE3
    assert convolve(half, half) == SPHERE3


def test_real_power_needs_unit_lead():
    with pytest.raises(LeadingCoefficientNotOne):
        real_power(TruncatedSeries((F(2), F(1))), F(1, 2))


def test_real_power_irrational_exponent_is_float():
    s = real_power(SPHERE3, math.sqrt(2))
    assert all(isinstance(c, float) for c in s)
    # first coefficient of S^m is m * s_1
    assert s[1] == pytest.approx(math.sqrt(2) / 6, rel=1e-15)


def test_gauss2f1_examples():
    assert gauss2F1_terminating(F(7, 3), 0, F(5, 2), F(9)) == 1
    for z in (F(0), F(1, 3), F(2)):
        assert gauss2F1_terminating(F(-3, 2), 1, F(3, 2), z) == 1 + z
    assert gauss2F1_terminating(F(-3, 2), 1, F(3, 2), 1) == 2


def test_gauss2f1_brute_force():
    # direct sum of the defining series with rising factorials
    a, k, b, z = F(-5, 2), 4, F(3, 2), F(2, 7)

    def rf(x, j):
        out = F(1)
        for i in range(j):
            out *= x + i
        return out

    ref = sum(rf(a, j) * rf(-k, j) / (rf(b, j) * math.factorial(j)) * z**j for j in range(k + 1))
    assert gauss2F1_terminating(a, k, b, z) == ref


def test_gauss2f1_pole():
    with pytest.raises(PoleParameter):
        gauss2F1_terminating(F(1, 2), 3, -1, F(1, 2))
    # b = -3 only meets a pole beyond k = 3 terms
    assert gauss2F1_terminating(F(1, 2), 3, -3, F(1, 2)) is not None


def test_addition_first_order_coefficient():
    r1, r2 = F(3, 5), F(1, 4)
    assert addition_series(r1, r2, 3, 1)[1] == (r1**2 + r2**2) / 6


def test_csv_rows():
    assert SPHERE3.to_csv().splitlines() == ["j,numerator,denominator", "0,1,1", "1,1,6", "2,1,120"]


rationals = st.fractions(min_value=-3, max_value=3, max_denominator=20)
unit_series = st.lists(rationals, min_size=0, max_size=12).map(lambda cs: TruncatedSeries((F(1),) + tuple(cs)))


@given(unit_series)
@settings(max_examples=60, deadline=None)
def test_reciprocal_is_inverse(s):
    assert convolve(s, reciprocal(s)) == identity_series(s.order)


@given(unit_series, rationals, rationals)
@settings(max_examples=40, deadline=None)
def test_power_addition_exact(s, m1, m2):
    assert convolve(real_power(s, m1), real_power(s, m2)) == real_power(s, m1 + m2)


@given(unit_series, st.floats(-2.5, 2.5), st.floats(-2.5, 2.5))
@settings(max_examples=40, deadline=None)
def test_power_addition_float(s, m1, m2):
    s = s.truncate(min(s.order, 6))
    lhs = convolve(real_power(s, m1 + 1e-3 * math.pi), real_power(s, m2 - 1e-3 * math.pi))
    rhs = real_power(s, m1 + m2)
    scale = max(1.0, max(abs(float(c)) for c in rhs))
    assert max(abs(float(a) - float(b)) for a, b in zip(lhs, rhs)) < 1e-12 * scale


@given(unit_series, st.integers(1, 4))
@settings(max_examples=30, deadline=None)
def test_integer_power_is_repeated_convolution(s, m):
    ref = identity_series(s.order)
    for _ in range(m):
        ref = convolve(ref, s)
    assert real_power(s, m) == ref


@pytest.mark.parametrize("n", range(1, 8))
def test_triangular_alpha_zero_reduces_to_ball(n):
    tri = HypergeometricSpec((F(n + 1, 2),), (F(n + 1, 2), F(n, 2) + 1), F(1, 4))
    ball = HypergeometricSpec((), (F(n, 2) + 1,), F(1, 4))
    assert coeffs_pFq(tri, 10) == coeffs_pFq(ball, 10)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 7])
def test_equal_radius_series_is_square(n):
    sphere = coeffs_pFq(HypergeometricSpec((), (F(n, 2),), F(1, 4)), 9)
    assert equal_radius_series(n, 9) == real_power(sphere, 2)
