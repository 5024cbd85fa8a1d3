import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from treedtn.data import (CallableDatum, CharacteristicIndicator, PiecewisePolynomial,
                          Polynomial, chi, datum_to_spec, parse_datum)
from treedtn.errors import DomainError, ToleranceNotMetError, UnsupportedOperationError
from treedtn.levels import PRIMES
from treedtn.tree import MadicInterval, Vertex, vertices

small_fractions = st.fractions(min_value=-4, max_value=4, max_denominator=12)
polys = st.lists(small_fractions, min_size=1, max_size=5).map(Polynomial)


def madic_intervals(m_max=4, depth_max=5):
    return st.integers(2, m_max).flatmap(
        lambda m: st.integers(0, depth_max).flatmap(
            lambda d: st.integers(0, m**d - 1).map(lambda j: MadicInterval(m, j, d))))


def test_eval_examples():
    assert Polynomial([0, 0, 1]).eval(F(1, 2)) == F(1, 4)
    g = CharacteristicIndicator(0, F(1, 2))
    assert g.eval(F(1, 4)) == 1
    assert g.eval(F(3, 4)) == 0
    assert g.eval(F(1, 2)) == 1  # closed interval
    with pytest.raises(DomainError):
        g.eval(F(3, 2))


def test_average_examples():
    assert Polynomial([0, 1]).average(MadicInterval(2, 1, 1)) == F(3, 4)
    assert chi(1, 0, 3).average(MadicInterval(3, 0, 0)) == F(1, 3)
    assert Polynomial([0, 0, 1]).average(MadicInterval(2, 0, 1)) == F(1, 12)


def test_derivative_examples():
    assert Polynomial([0, 1]).derivative(F(2, 7)) == 1
    assert Polynomial([0, 0, 1]).derivative(F(1, 3)) == F(2, 3)
    with pytest.raises(UnsupportedOperationError):
        CharacteristicIndicator(0, F(1, 2)).derivative(F(1, 4))


def test_piecewise_derivative_needs_smooth_join():
    smooth = PiecewisePolynomial([0, F(1, 2), 1], [[0, 0, 1], [F(-1, 4), 1]])
    assert smooth.smoothness == "C0"
    assert smooth.derivative(F(1, 2)) == 1
    kinked = PiecewisePolynomial([0, F(1, 2), 1], [[0, 1], [1, -1]])
    with pytest.raises(UnsupportedOperationError):
        kinked.derivative(F(1, 2))


@given(polys, polys, small_fractions, small_fractions, madic_intervals())
def test_average_is_linear(f, g, a, b, interval):
    combo = a * f + b * g
    assert combo.average(interval) == a * f.average(interval) + b * g.average(interval)


@given(polys, madic_intervals())
def test_average_refines_exactly(g, interval):
    kids = interval.children()
    assert g.average(interval) == sum(g.average(k) for k in kids) / interval.m


@given(polys, madic_intervals())
def test_average_between_extremes(g, interval):
    ts = np.linspace(float(interval.lower), float(interval.upper), 401)
    values = g.eval_array(ts)
    avg = float(g.average(interval))
    # polynomials of degree <= 4 on a 400-cell grid: the sampled range is tight
    slack = 1e-6 * (1 + float(max(abs(c) for c in g.coefficients)))
    assert values.min() - slack <= avg <= values.max() + slack


@settings(max_examples=25, deadline=None)
@given(polys, madic_intervals(depth_max=3))
def test_quadrature_matches_exact(g, interval):
    coeffs = [float(c) for c in g.coefficients]
    black_box = CallableDatum(lambda t: np.polynomial.polynomial.polyval(t, coeffs))
    value, err = black_box.average_with_error(interval)
    assert abs(value - float(g.average(interval))) <= 1e-12 * float(interval.m**interval.depth) + 1e-13
    assert err <= 1e-12 * float(interval.m**interval.depth)


def test_quadrature_budget_exhaustion():
    rough = CallableDatum(lambda t: math.sin(1.0 / (t + 1e-6)), smoothness="L1", budget=42)
    with pytest.raises(ToleranceNotMetError) as info:
        rough.average_with_error(MadicInterval(2, 0, 0))
    assert info.value.estimate is not None


def test_callable_derivative_richardson():
    g = CallableDatum(np.sin, lipschitz=1.0, vectorized=True)
    value, err = g.derivative_with_error(0.3)
    assert abs(value - math.cos(0.3)) < 1e-9
    assert err < 1e-8
    edge, _ = g.derivative_with_error(1.0)
    assert abs(edge - math.cos(1.0)) < 1e-7
    with pytest.raises(UnsupportedOperationError):
        CallableDatum(np.sign, smoothness="L1").derivative(0.5)


def test_lipschitz_and_bounds():
    g = Polynomial([0, 0, 1])
    assert g.lipschitz_bound() == pytest.approx(2.0)
    assert g.bounds() == (0.0, 1.0)
    assert Polynomial([0, 1, -1]).bounds() == pytest.approx((0.0, 0.25))
    assert chi(1, 0, 2).lipschitz_bound() is None
    assert chi(1, 0, 2).bounds() == (0.0, 1.0)


@pytest.mark.parametrize("datum", [Polynomial([1, -2, 3]), chi(2, 3, 3),
                                   PiecewisePolynomial([0, F(1, 9), 1], [[0, 1], [2, 0, -1]])],
                         ids=["poly", "chi", "piecewise"])
@pytest.mark.parametrize("level", [0, 1, 3])
def test_level_integrals_match_interval_integrals(datum, level):
    m = 3
    nums, den = datum.exact_level_integrals(m, level)
    direct = [datum.integral(MadicInterval(m, j, level).lower, MadicInterval(m, j, level).upper)
              for j in range(m**level)]
    assert [F(int(n), den) for n in nums] == direct
    for prime in PRIMES[:2]:
        mod, den2 = datum.exact_level_integrals(m, level, prime)
        assert den2 == den
        assert [int(v) for v in mod] == [int(n) % prime for n in nums]
    floats = datum.float_level_integrals(m, level)
    np.testing.assert_allclose(floats, [float(d) for d in direct], rtol=0, atol=1e-15)


def test_level_integrals_need_madic_breakpoints():
    g = PiecewisePolynomial([0, F(1, 3), 1], [[0], [1]])
    with pytest.raises(UnsupportedOperationError):
        g.exact_level_integrals(2, 3)


def test_primes_are_prime():
    for p in PRIMES:
        assert p < 2**31
        assert all(p % d for d in range(2, math.isqrt(p) + 1, 1 if p < 10 else 1) if d < 50000)


def test_parse_datum_forms():
    assert parse_datum("linear") == Polynomial([0, 1])
    assert parse_datum("square") == Polynomial([0, 0, 1])
    assert parse_datum("const(3/2)") == Polynomial([F(3, 2)])
    assert parse_datum("poly(1, -1, 1/2)") == Polynomial([1, -1, F(1, 2)])
    c = parse_datum("chi(1,2)", m=3)
    assert (c.lower, c.upper) == (F(2, 3), 1)
    with pytest.raises(DomainError):
        parse_datum("chi(1,2)")
    with pytest.raises(DomainError):
        parse_datum("wiggly")
    spec = {"kind": "piecewise", "breakpoints": ["0", "1/2", "1"], "pieces": [["0"], ["1"]]}
    g = parse_datum(spec)
    assert g.average(MadicInterval(2, 0, 0)) == F(1, 2)
    assert parse_datum(datum_to_spec(g)).breakpoints == g.breakpoints
    assert parse_datum({"kind": "indicator", "interval": [2, 1]}, m=2).upper == F(1, 2)


def test_piecewise_validation():
    with pytest.raises(DomainError):
        PiecewisePolynomial([0, F(1, 2)], [[1]])
    with pytest.raises(DomainError):
        PiecewisePolynomial([0, F(1, 2), F(1, 2), 1], [[1], [2], [3]])
    with pytest.raises(DomainError):
        CharacteristicIndicator(F(1, 2), F(1, 4))


def test_mixed_combination_is_exact():
    h = Polynomial([0, 1]) + chi(1, 1, 2)
    for x in vertices(2, 3):
        iv = x.interval()
        assert h.average(iv) == Polynomial([0, 1]).average(iv) + chi(1, 1, 2).average(iv)
