from hypothesis import given, settings, strategies as st

from lsvtaylor.opalg import DiffOp, apply_to_poly, compose, compose_all, power, scale_and_add
from lsvtaylor.timealg import TimePoly, TimeUniverse

U = TimeUniverse(1)
X = DiffOp.monomial(U, (1, 0, 0, 0))
Y = DiffOp.monomial(U, (0, 1, 0, 0))
DX = DiffOp.monomial(U, (0, 0, 1, 0))
DY = DiffOp.monomial(U, (0, 0, 0, 1))
ONE = DiffOp.identity(U)
TIMES = {0: 0.3, 1: 0.7, 2: 1.1}


@st.composite
def ops(draw, max_deg=3, max_terms=4, symbolic=True):
    terms = {}
    for _ in range(draw(st.integers(1, max_terms))):
        key = tuple(draw(st.integers(0, max_deg)) for _ in range(4))
        if symbolic:
            e = tuple(draw(st.integers(0, 1)) for _ in range(U.size))
            c = TimePoly(U, {e: float(draw(st.integers(-3, 3)))})
        else:
            c = TimePoly.const(U, float(draw(st.integers(-3, 3))))
        terms[key] = c
    return DiffOp(U, terms)


@st.composite
def bipolys(draw, max_deg=5):
    n = draw(st.integers(1, 5))
    return {(draw(st.integers(0, max_deg)), draw(st.integers(0, max_deg))):
            float(draw(st.integers(-5, 5)) or 1) for _ in range(n)}


def test_leibniz():
    assert compose(DX, X) == X @ DX + ONE
    assert compose(DY, X) == X @ DY


def test_second_derivative_of_square():
    op = compose(power(DX, 2), power(X, 2))
    want = DiffOp(U, {(2, 0, 2, 0): 1.0, (1, 0, 1, 0): 4.0, (0, 0, 0, 0): 2.0})
    assert op == want
    for m in range(5):
        p = {(m, 0): 1.0}
        assert apply_to_poly(op, p) == apply_to_poly(power(DX, 2), apply_to_poly(power(X, 2), p))


def test_apply_identity_and_euler():
    p = {(3, 1): 2.0, (0, 2): -1.0}
    assert apply_to_poly(ONE, p) == p
    assert apply_to_poly(X @ DX, {(3, 0): 1.0}) == {(3, 0): 3.0}


def test_scale_and_add_trivial():
    a = DiffOp(U, {(1, 0, 2, 0): TimePoly.var(U, 1), (0, 0, 0, 1): 2.0})
    b = DiffOp(U, {(0, 1, 0, 0): 1.0})
    assert scale_and_add([(1.0, a), (0.0, b)]) == a
    assert scale_and_add([(1.0, a), (-1.0, a)]).is_zero()
    s = TimePoly.var(U, 1)
    assert scale_and_add([(s, b)]) == DiffOp(U, {(0, 1, 0, 0): s})


def test_drop_y_and_orders():
    op = DiffOp(U, {(0, 0, 2, 1): 1.0, (1, 0, 1, 0): 1.0})
    assert op.max_derivative_order() == 3
    assert op.drop_y_derivatives() == DiffOp(U, {(1, 0, 1, 0): 1.0})


def test_dump_format():
    op = DiffOp(U, {(1, 0, 2, 0): TimePoly.var(U, 1) * 2.0 - TimePoly.var(U, 0) * 2.0,
                    (0, 0, 0, 0): 1.5})
    assert op.dump() == "1 : 1.5\n(x-xb)^1 dx^2 : -2*t + 2*s1\n"


@given(ops(), ops(), ops())
def test_associativity(a, b, c):
    # integer coefficients keep both groupings exact
    assert compose(a, compose(b, c)) == compose(compose(a, b), c)
    assert compose_all([a, b, c], U) == compose(a, compose(b, c))


@settings(max_examples=200)
@given(ops(symbolic=False), ops(symbolic=False), bipolys())
def test_oracle_equivalence(a, b, p):
    lhs = apply_to_poly(compose(a, b), p)
    rhs = apply_to_poly(a, apply_to_poly(b, p))
    assert lhs == rhs


@given(ops(), ops(), bipolys())
def test_oracle_with_time_coefficients(a, b, p):
    lhs = apply_to_poly(compose(a, b), p, TIMES)
    rhs = apply_to_poly(a.evaluate(TIMES), apply_to_poly(b, p, TIMES))
    keys = set(lhs) | set(rhs)
    assert all(abs(lhs.get(k, 0.0) - rhs.get(k, 0.0)) <= 1e-9 * (1 + abs(rhs.get(k, 0.0)))
               for k in keys)


@given(ops(), ops(), bipolys(max_deg=3))
def test_pruned_composition_on_x_only(a, b, p):
    # dropping dy-terms is exact once the product acts on a function of x alone
    px = {(i, 0): v for (i, _), v in p.items()}
    full = apply_to_poly(compose(a, b), px, TIMES)
    pruned = apply_to_poly(compose(a, b.drop_y_derivatives(), drop_y_derivatives=True), px, TIMES)
    keys = set(full) | set(pruned)
    assert all(abs(full.get(k, 0.0) - pruned.get(k, 0.0)) <= 1e-9 for k in keys)
