import math

import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from lsvtaylor.timealg import TimeAlgebraError, TimePoly, TimeUniverse, poly_sum

U = TimeUniverse(2)
t, s1, s2, T = U.t, U.s(1), U.s(2), U.T
ints = st.integers(-4, 4)


@st.composite
def polys(draw, max_terms=4, max_deg=2):
    n = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(n):
        e = tuple(draw(st.integers(0, max_deg)) for _ in range(U.size))
        terms[e] = float(draw(ints))
    return TimePoly(U, terms)


times = st.tuples(*[st.floats(-1.5, 1.5) for _ in range(U.size)])


def q(idx=s1):
    return TimePoly.var(U, idx)


def one():
    return TimePoly.const(U, 1.0)


def test_additive_inverse_is_zero():
    assert (q() + (-q())).is_zero()
    assert (q() - q()) == TimePoly(U)


def test_disjoint_sum():
    p = (one() + q()) + q() * q()
    assert p == TimePoly.univariate(U, [1, 1, 1], s1)


def test_fig1_delta_sum():
    d = TimePoly.univariate(U, [0.0625, -0.16], s1) + TimePoly.const(U, 0.0625)
    assert d == TimePoly.univariate(U, [0.125, -0.16], s1)


def test_mul_examples():
    p = TimePoly.univariate(U, [0.3, -1.2, 2.0], t)
    assert p * one() == p
    assert q() * q() == q() ** 2
    assert (one() + q()) * (one() - q()) == one() - q() ** 2


def test_zero_terms_dropped():
    p = TimePoly(U, {(0, 1, 0, 0): 0.0, (0, 0, 0, 1): 2.0})
    assert list(p.terms) == [(0, 0, 0, 1)]


def test_universe_mismatch():
    with pytest.raises(TimeAlgebraError):
        q() + TimePoly.const(TimeUniverse(3), 1.0)
    with pytest.raises(TimeAlgebraError):
        TimePoly(U, {(1, 0): 1.0})


def test_integrate_constant():
    assert TimePoly.const(U, 1.0).integrate(s1, t, s2) == q(s2) - q(t)


def test_simplex_volume():
    inner = one().integrate(s2, s1, T)
    vol = inner.integrate(s1, t, T)
    assert vol.allclose(0.5 * (q(T) - q(t)) ** 2, atol=1e-15)


def test_affine_antiderivative_matches_quadrature():
    d0, d1 = 0.0625, -0.16
    p = TimePoly.univariate(U, [d0, d1], s1).integrate(s1, t, s2)
    hand = d0 * (q(s2) - q(t)) + d1 * (q(s2) ** 2 - q(t) ** 2) * 0.5
    assert p.allclose(hand, atol=1e-15)
    tv, sv = 0.1, 0.8
    num = integrate.quad(lambda u: d0 + d1 * u, tv, sv)[0]
    assert math.isclose(p({t: tv, s2: sv}), num, rel_tol=1e-13)


def test_integral_of_helper():
    p = TimePoly.integral_of(U, [1.0, 2.0, 3.0], t, s1)
    assert p == TimePoly.univariate(U, [1.0, 2.0, 3.0], s2).integrate(s2, t, s1)


def test_integrate_rejects_bound_variable():
    with pytest.raises(TimeAlgebraError):
        q().integrate(s1, s1, T)
    with pytest.raises(TimeAlgebraError):
        q().integrate(7, t, T)


def test_missing_time_value():
    with pytest.raises(TimeAlgebraError):
        q(T)({t: 1.0})


def test_str_format():
    p = TimePoly(U, {(1, 0, 0, 1): 2.0, (0, 0, 0, 0): -0.5})
    assert str(p) == "2*t*T - 0.5"
    assert str(TimePoly(U)) == "0"


def test_poly_sum_and_degree():
    p = poly_sum([q(), q(), q(T) ** 3], U)
    assert p == 2 * q() + q(T) ** 3
    assert p.degree() == 3 and p.degree(s1) == 1
    assert p.symbols() == {s1, T}


@given(polys(), polys(), polys())
def test_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a + b == b + a
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


@given(polys(), polys(), ints, ints)
def test_integrate_linear(p, r, alpha, beta):
    lhs = (alpha * p + beta * r).integrate(s2, s1, T)
    rhs = alpha * p.integrate(s2, s1, T) + beta * r.integrate(s2, s1, T)
    assert lhs.allclose(rhs, atol=1e-9)


@given(polys(max_deg=3), times)
def test_integrate_matches_quadrature(p, pt):
    lo, hi = pt[t], pt[T]
    vals = list(pt)

    def f(u):
        vals[s1] = u
        return p(vals)

    num = integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-13)[0]
    ex = p.integrate(s1, t, T)(pt)
    assert math.isclose(ex, num, rel_tol=1e-12, abs_tol=1e-12 * (1 + abs(num)))


@given(st.lists(ints, min_size=1, max_size=3), st.lists(ints, min_size=1, max_size=3),
       st.floats(-1, 1), st.floats(0.1, 2))
def test_fubini_on_simplex(fc, gc, tv, span):
    # f(s1) g(s2) + f(s2) g(s1) is symmetric, so its simplex integral is half the square's
    f1, g2 = TimePoly.univariate(U, fc, s1), TimePoly.univariate(U, gc, s2)
    f2, g1 = TimePoly.univariate(U, fc, s2), TimePoly.univariate(U, gc, s1)
    sym = f1 * g2 + f2 * g1
    nested = sym.integrate(s2, s1, T).integrate(s1, t, T)
    swapped = sym.integrate(s1, t, s2).integrate(s2, t, T)
    square = (f1.integrate(s1, t, T) * g2.integrate(s2, t, T))
    vals = {t: tv, T: tv + span}
    assert math.isclose(nested(vals), swapped(vals), rel_tol=1e-12, abs_tol=1e-12)
    assert math.isclose(nested(vals), square(vals), rel_tol=1e-12, abs_tol=1e-10)
