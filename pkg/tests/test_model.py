import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lsvtaylor.model import (CapabilityError, ModelError, ModelSpec, PayoffSpec, build_zoo,
                             dumps_model, load_model, loads_model, save_model,
                             taylor_table_from_closures, zoo_bs, zoo_cev, zoo_displaced,
                             zoo_heston_td, zoo_jdcev, zoo_three_halves)

from conftest import FIG1, FIG1_EY, FIG2, FIG2_EY, FIG3


def test_heston_fig1_tables(heston):
    m = heston()
    assert math.isclose(m.at("a", 0, 0, 0.1), 0.025, rel_tol=1e-15)
    assert m.coeff("c", 0, 0) == (FIG1["rho0"], FIG1["rho1"])
    assert m.time_degree == 1
    emy = 1 / FIG1_EY
    assert np.allclose(m.coeff("b", 0, 1), (-0.5 * FIG1["delta0"] * emy, -0.5 * FIG1["delta1"] * emy),
                       rtol=1e-14)


def test_heston_constant_params_time_degree_zero():
    m = zoo_heston_td(1.0, 0.04, 0.0, 0.09, 0.0, -0.1, 0.0, (0.0, math.log(0.04)))
    assert m.time_degree == 0


def test_heston_rejects_bad_correlation():
    with pytest.raises(ModelError):
        zoo_heston_td(1.0, 0.04, 0.0, 0.09, 0.0, -0.3, 0.0, (0.0, 0.0))   # |rho| = 1
    with pytest.raises(ModelError):
        zoo_heston_td(1.0, 0.04, 0.0, 0.09, 0.0, 0.5, 0.0, (0.0, 0.0))


def test_three_halves_alpha_derivative(three_halves):
    m = three_halves()
    ey = FIG2_EY
    want = -(FIG2["kappa"] + FIG2["delta"] ** 2 / 2) * ey
    assert math.isclose(m.coeff("alpha", 0, 1)[0], want, rel_tol=1e-14)
    yb = math.log(ey)
    f = lambda y: FIG2["kappa"] * (FIG2["theta"] - math.exp(y)) - 0.5 * FIG2["delta"] ** 2 * math.exp(y)  # noqa: E731
    h = 1e-5
    assert math.isclose((f(yb + h) - f(yb - h)) / (2 * h), want, rel_tol=1e-7)


def test_jdcev_tables():
    xb = 0.3
    d, beta, b, c = 0.2, -0.4, 0.04, 1.5
    m = zoo_jdcev(d, beta, b, c, (xb, 0.0))
    assert math.isclose(m.coeff("a", 1, 0)[0], beta * d * d * math.exp(2 * beta * xb), rel_tol=1e-14)
    assert math.isclose(m.coeff("gamma", 0, 0)[0], b + c * d * d * math.exp(2 * beta * xb), rel_tol=1e-14)
    assert m.one_dimensional and m.has_default
    assert not zoo_cev(d, beta, (xb, 0.0)).has_default


def test_jdcev_domain():
    with pytest.raises(ModelError):
        zoo_jdcev(0.2, -0.4, -0.01, 1.0, (0.0, 0.0))
    with pytest.raises(ModelError):
        zoo_jdcev(0.0, -0.4, 0.0, 1.0, (0.0, 0.0))


def test_closures_exponential_a():
    yb = math.log(0.05)
    m = taylor_table_from_closures(lambda t, x, y: 0.5 * math.exp(y), None, None, None, None,
                                   (0.0, yb), order=4)
    for j in range(5):
        want = math.exp(yb) / (2 * math.factorial(j))
        assert math.isclose(m.coeff("a", 0, j)[0], want, rel_tol=1e-6)


def test_closures_constant():
    m = taylor_table_from_closures(lambda t, x, y: 0.02, None, None, None, None, (0.1, 0.2), order=3)
    assert m.coeff("a", 0, 0) == (0.02,)
    assert all(abs(v[0]) < 1e-9 for k, v in m.tables["a"].items() if k != (0, 0))


def _compare_tables(ref: ModelSpec, fd: ModelSpec, tol=1e-6):
    for name in ref.tables:
        keys = set(ref.tables[name]) | set(fd.tables[name])
        for key in keys:
            r = np.array(ref.coeff(name, *key) or (0.0,))
            f = np.array(fd.coeff(name, *key) or (0.0,))
            n = max(len(r), len(f))
            r, f = np.pad(r, (0, n - len(r))), np.pad(f, (0, n - len(f)))
            scale = max(1.0, float(np.max(np.abs(r))))
            assert np.max(np.abs(r - f)) <= tol * scale, (name, key, r, f)


def test_closures_reproduce_heston(heston):
    ref = heston(order=4)
    p = FIG1
    m = taylor_table_from_closures(
        lambda t, x, y: 0.5 * math.exp(y),
        lambda t, x, y: 0.5 * (p["delta0"] + p["delta1"] * t) * math.exp(-y),
        lambda t, x, y: p["rho0"] + p["rho1"] * t,
        lambda t, x, y: ((p["kappa"] * (p["theta0"] + p["theta1"] * t)
                          - 0.5 * (p["delta0"] + p["delta1"] * t)) * math.exp(-y) - p["kappa"]),
        None, (0.0, math.log(FIG1_EY)), order=4, t_degree=1, t_nodes=(0.0, 0.25))
    _compare_tables(ref, m)


def test_closures_reproduce_three_halves(three_halves):
    ref = three_halves(order=4)
    k, th, d, r = FIG2["kappa"], FIG2["theta"], FIG2["delta"], FIG2["rho"]
    m = taylor_table_from_closures(
        lambda t, x, y: 0.5 * math.exp(y), lambda t, x, y: 0.5 * d * d * math.exp(y),
        lambda t, x, y: r * d * math.exp(y),
        lambda t, x, y: k * (th - math.exp(y)) - 0.5 * d * d * math.exp(y),
        None, (0.0, math.log(FIG2_EY)), order=4)
    _compare_tables(ref, m)


def test_closures_reproduce_jdcev():
    d, beta, b, c = FIG3["delta"], FIG3["beta"], FIG3["b"], 2.0
    ref = zoo_jdcev(d, beta, b, c, (0.2, 0.0))
    m = taylor_table_from_closures(
        lambda t, x, y: 0.5 * d * d * math.exp(2 * beta * x), None, None, None,
        lambda t, x, y: b + c * d * d * math.exp(2 * beta * x), (0.2, 0.0), order=4)
    _compare_tables(ref, m)


def test_closures_nan_is_input_error():
    with pytest.raises(ModelError):
        taylor_table_from_closures(lambda t, x, y: math.nan, None, None, None, None, (0, 0), 1)


def test_parabolicity():
    ok = ModelSpec(1, {"a": {(0, 0): (0.02,)}, "b": {(0, 0): (0.5,)}, "c": {(0, 0): (0.19,)}})
    ok.check()
    bad = ModelSpec(1, {"a": {(0, 0): (0.02,)}, "b": {(0, 0): (0.5,)}, "c": {(0, 0): (0.2,)}})
    with pytest.raises(ModelError):
        bad.check()
    with pytest.raises(ModelError):
        ModelSpec(1, {"a": {(0, 0): (0.02, -0.05)}}).check()
    with pytest.raises(ModelError):
        ModelSpec(1, {"a": {(0, 0): (0.02,)}, "gamma": {(0, 0): (-0.1,)}}).check()
    with pytest.raises(ModelError):
        zoo_three_halves(1.0, 0.04, 1.0, -1.0, (0.0, 0.0))


def test_table_bounds():
    with pytest.raises(ModelError):
        ModelSpec(1, {"a": {(1, 1): (0.1,)}})
    with pytest.raises(ModelError):
        ModelSpec(1, {"sigma": {}})


def test_payoffs():
    x = np.array([-1.0, 0.0, 0.1, 2.0])
    k = 0.05
    assert np.allclose(PayoffSpec.call(k)(x), np.maximum(np.exp(x) - np.exp(k), 0))
    put = PayoffSpec.put(k)
    assert put.recovery == math.exp(k)
    assert np.allclose(put(x) + put.recovery, np.maximum(np.exp(k) - np.exp(x), 0))
    assert PayoffSpec.bond().recovery == 0.0
    assert np.allclose(PayoffSpec.bond()(x), 1.0)
    with pytest.raises(ValueError):
        PayoffSpec("digital")


ZOO_CASES = [
    ("bs", dict(sigma=0.2), (0.0, 0.0)),
    ("tdbs", dict(a0=0.02, a1=0.01, a2=0.0), (0.1, 0.0)),
    ("heston_td", FIG1, (0.0, math.log(FIG1_EY))),
    ("three_halves", FIG2, (0.0, math.log(FIG2_EY))),
    ("jdcev", dict(FIG3, c=1.0), (0.3, 0.0)),
    ("cev", dict(delta=0.2, beta=-0.4), (0.0, 0.0)),
    ("displaced", dict(sigma=0.3, shift=-0.2), (0.0, 0.0)),
]


@pytest.mark.parametrize("kind,params,point", ZOO_CASES)
def test_model_file_roundtrip(kind, params, point, tmp_path):
    horizon = (0.0, 0.25) if kind == "heston_td" else (0.0, 1.0)
    m = build_zoo(kind, params, point, 2, horizon)
    text = dumps_model(m)
    assert loads_model(text) == m
    save_model(m, tmp_path / "m.txt")
    assert load_model(tmp_path / "m.txt") == m
    assert dumps_model(loads_model(text)) == text


@given(st.lists(st.floats(-1, 1, allow_subnormal=False), min_size=3, max_size=3),
       st.floats(0.01, 1.0))
def test_raw_model_roundtrip(vals, a0):
    m = ModelSpec(1, {"a": {(0, 0): (a0, 0.0), (1, 0): (vals[0], vals[1])},
                      "alpha": {(0, 1): (vals[2],)}, "b": {(0, 0): (1.0,)}}, 0.1, -0.2)
    back = loads_model(dumps_model(m))
    assert back == m


def test_model_file_errors():
    with pytest.raises(ModelError, match="unknown"):
        loads_model("kind = bs\norder = 1\nsigma = 0.2\nsigmaa = 0.1\n")
    with pytest.raises(ModelError, match="duplicate"):
        loads_model("kind = bs\norder = 1\nsigma = 0.2\nsigma = 0.3\n")
    with pytest.raises(ModelError, match="order"):
        loads_model("kind = bs\nsigma = 0.2\n")
    with pytest.raises(ModelError):
        loads_model("order = 1\nvol[0,0] = 0.2\n")
    with pytest.raises(ModelError):
        loads_model("kind = bs\norder = 1\n")


def test_with_order_and_point():
    m = zoo_displaced(0.3, -0.2, (0.0, 0.0), order=4)
    assert m.with_order(2).order == 2
    assert m.with_point(0.1, 0.0).xbar == 0.1
    raw = ModelSpec(2, {"a": {(0, 0): (0.1,), (2, 0): (0.3,)}})
    assert raw.with_order(1).tables["a"] == {(0, 0): (0.1,)}
    with pytest.raises(CapabilityError):
        raw.with_point(0.1, 0.0)


def test_bs_zoo_is_constant():
    m = zoo_bs(0.2)
    assert m.tables["a"] == {(0, 0): (0.5 * 0.2 * 0.2,)}
    assert all(not m.tables[n] for n in ("b", "c", "alpha", "gamma"))
