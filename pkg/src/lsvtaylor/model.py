"""Model specification by Taylor tables, payoffs, the built-in model zoo and model files.

A model is described by the Taylor coefficients, around ``(xbar, ybar)``, of the
five coefficient functions of the generator

    a (dx^2 - dx) + alpha dy + b dy^2 + c dx dy + gamma (dx - 1)

with ``a = sigma^2/2``, ``b = beta^2/2``, ``c = rho sigma beta``.  Each table entry
``f[i, j]`` is ``d_x^i d_y^j f(t, xbar, ybar) / (i! j!)`` as a polynomial in ``t``,
stored as a tuple of ascending coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .timealg import TimePoly, TimeUniverse

TABLE_NAMES = ("a", "b", "c", "alpha", "gamma")
MAX_ORDER = 4

Coeffs = tuple[float, ...]
Table = Mapping[tuple[int, int], Coeffs]


class ModelError(ValueError):
    """Invalid model parameters or a structural condition violated."""


class CapabilityError(ValueError):
    """A request outside what the expansion supports."""


def _trim(coeffs: Sequence[float]) -> Coeffs:
    c = [float(v) for v in coeffs]
    while c and c[-1] == 0.0:
        c.pop()
    return tuple(c)


def peval(coeffs: Sequence[float], t: float) -> float:
    out = 0.0
    for c in reversed(coeffs):
        out = out * t + c
    return out


def pintegral(coeffs: Sequence[float], lo: float, hi: float) -> float:
    """``int_lo^hi`` of the time polynomial."""
    return sum(c * (hi ** (d + 1) - lo ** (d + 1)) / (d + 1) for d, c in enumerate(coeffs))


@dataclass(frozen=True)
class ModelSpec:
    order: int
    tables: Mapping[str, Table]
    xbar: float = 0.0
    ybar: float = 0.0
    kind: str = "raw"
    params: Mapping[str, float] = field(default_factory=dict)
    horizon: tuple[float, float] = (0.0, 1.0)
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if self.order < 0:
            raise ModelError(f"expansion order must be >= 0, got {self.order}")
        clean = {}
        for name in TABLE_NAMES:
            tab = {}
            for (i, j), coeffs in dict(self.tables.get(name, {})).items():
                if i < 0 or j < 0 or i + j > self.order:
                    raise ModelError(f"{name}[{i},{j}] outside order {self.order}")
                coeffs = _trim(coeffs)
                if coeffs:
                    tab[(int(i), int(j))] = coeffs
            clean[name] = tab
        unknown = set(self.tables) - set(TABLE_NAMES)
        if unknown:
            raise ModelError(f"unknown coefficient tables: {sorted(unknown)}")
        object.__setattr__(self, "tables", clean)
        object.__setattr__(self, "params", dict(self.params))
        object.__setattr__(self, "horizon", tuple(float(h) for h in self.horizon))

    # table access

    def coeff(self, name: str, i: int, j: int) -> Coeffs:
        return self.tables[name].get((i, j), ())

    def at(self, name: str, i: int, j: int, t: float) -> float:
        return peval(self.coeff(name, i, j), t)

    def time_poly(self, name: str, i: int, j: int, universe: TimeUniverse, sym: int) -> TimePoly:
        return TimePoly.univariate(universe, self.coeff(name, i, j), sym)

    @property
    def universe(self) -> TimeUniverse:
        return TimeUniverse(self.order)

    @property
    def one_dimensional(self) -> bool:
        """No live y-dynamics: the b, c and alpha tables are all zero."""
        return not (self.tables["b"] or self.tables["c"] or self.tables["alpha"])

    @property
    def has_default(self) -> bool:
        return bool(self.tables["gamma"])

    @property
    def time_degree(self) -> int:
        return max((len(c) - 1 for tab in self.tables.values() for c in tab.values()), default=0)

    def check(self, t0: float | None = None, t1: float | None = None, grid: int = 64) -> None:
        """Parabolicity and non-negative killing at the expansion point on a time grid."""
        lo = self.horizon[0] if t0 is None else t0
        hi = self.horizon[1] if t1 is None else t1
        for t in np.linspace(lo, hi, grid):
            a0 = self.at("a", 0, 0, t)
            if not a0 > 0:
                raise ModelError(f"a[0,0]({t:.4g}) = {a0:.6g} is not positive; operator not parabolic")
            if not self.one_dimensional:
                b0 = self.at("b", 0, 0, t)
                c0 = self.at("c", 0, 0, t)
                if not b0 > 0 or not 4 * a0 * b0 - c0 * c0 > 0:
                    raise ModelError(
                        f"at t={t:.4g}: b0={b0:.6g}, 4*a0*b0 - c0^2 = {4 * a0 * b0 - c0 * c0:.6g}; "
                        "operator not parabolic")
            g0 = self.at("gamma", 0, 0, t)
            if g0 < 0:
                raise ModelError(f"killing rate gamma[0,0]({t:.4g}) = {g0:.6g} is negative")

    def with_order(self, order: int) -> "ModelSpec":
        """Same model at another expansion order (zoo models only; raw tables are truncated)."""
        if self.kind in ZOO:
            return build_zoo(self.kind, self.params, (self.xbar, self.ybar), order, self.horizon)
        tabs = {n: {k: v for k, v in tab.items() if sum(k) <= order} for n, tab in self.tables.items()}
        return replace(self, order=order, tables=tabs, _cache={})

    def with_point(self, xbar: float, ybar: float) -> "ModelSpec":
        if self.kind not in ZOO:
            raise CapabilityError("raw coefficient tables cannot be re-expanded at another point")
        return build_zoo(self.kind, self.params, (xbar, ybar), self.order, self.horizon)


@dataclass(frozen=True)
class PayoffSpec:
    """European payoff ``H(S_T)`` written through ``h(x) = H(e^x)``.

    ``kind`` is ``call``, ``put``, ``bond`` or ``custom``.  A custom payoff is a
    combination ``sum w_i (e^x - e^k_i)^+ + w_fwd e^x + w_cash`` with ``K0 = H(0)``
    given explicitly.
    """

    kind: str
    log_strike: float = 0.0
    calls: tuple[tuple[float, float], ...] = ()
    forward: float = 0.0
    cash: float = 0.0
    K0: float = 0.0

    def __post_init__(self):
        if self.kind not in ("call", "put", "bond", "custom"):
            raise ValueError(f"unknown payoff kind {self.kind!r}")

    @classmethod
    def call(cls, k: float) -> "PayoffSpec":
        return cls("call", log_strike=k)

    @classmethod
    def put(cls, k: float) -> "PayoffSpec":
        return cls("put", log_strike=k)

    @classmethod
    def bond(cls) -> "PayoffSpec":
        return cls("bond")

    @property
    def recovery(self) -> float:
        """``K = H(0)``: what the claim is worth once the asset has defaulted."""
        if self.kind == "put":
            return math.exp(self.log_strike)
        if self.kind == "custom":
            return self.K0
        return 0.0

    def basis(self) -> tuple[tuple[tuple[float, float], ...], float, float]:
        """``h - K`` as (calls ``[(weight, k)]``, forward weight, cash weight)."""
        k = self.log_strike
        if self.kind == "call":
            return ((1.0, k),), 0.0, 0.0
        if self.kind == "put":
            # (e^k - e^x)^+ - e^k = (e^x - e^k)^+ - e^x
            return ((1.0, k),), -1.0, 0.0
        if self.kind == "bond":
            return (), 0.0, 1.0
        return tuple(self.calls), self.forward, self.cash - self.K0

    def __call__(self, x):
        """``h(x) - K`` evaluated pointwise (vectorised over numpy arrays)."""
        calls, fwd, cash = self.basis()
        x = np.asarray(x, dtype=float)
        ex = np.exp(x)
        out = fwd * ex + cash
        for w, k in calls:
            out = out + w * np.maximum(ex - math.exp(k), 0.0)
        return out


# ---------------------------------------------------------------------------
# Taylor tables from closures


def _fd_weights(p: int) -> tuple[np.ndarray, np.ndarray]:
    """Second-order central stencil for the p-th derivative: (offsets, weights)."""
    if p == 0:
        return np.array([0]), np.array([1.0])
    if p == 1:
        return np.array([-1, 1]), np.array([-0.5, 0.5])
    if p == 2:
        return np.array([-1, 0, 1]), np.array([1.0, -2.0, 1.0])
    if p == 3:
        return np.array([-2, -1, 1, 2]), np.array([-0.5, 1.0, -1.0, 0.5])
    if p == 4:
        return np.array([-2, -1, 0, 1, 2]), np.array([1.0, -4.0, 6.0, -4.0, 1.0])
    raise CapabilityError(f"finite-difference Taylor extraction supports order <= 4, got {p}")


def _mixed_partial(f: Callable[[float, float], float], x: float, y: float,
                   i: int, j: int, hx: float, hy: float) -> float:
    ox, wx = _fd_weights(i)
    oy, wy = _fd_weights(j)
    total = 0.0
    for a, u in zip(ox, wx):
        for b, v in zip(oy, wy):
            total += u * v * f(x + a * hx, y + b * hy)
    return total / (hx ** i * hy ** j)


def _richardson(f, x, y, i, j, hx, hy) -> float:
    d = [_mixed_partial(f, x, y, i, j, hx / 2 ** r, hy / 2 ** r) for r in range(3)]
    r1 = [(4 * d[r + 1] - d[r]) / 3 for r in range(2)]
    return (16 * r1[1] - r1[0]) / 15


def taylor_table_from_closures(a, b, c, alpha, gamma, point: tuple[float, float], order: int,
                               t_degree: int = 0, t_nodes: tuple[float, float] = (0.0, 1.0),
                               horizon: tuple[float, float] | None = None) -> ModelSpec:
    """Taylor tables of coefficient closures ``f(t, x, y)`` by finite differences.

    Mixed partials up to total order two use central differences with step
    ``1e-4 * max(1, |point|)``; orders three and four use a wider step ``2e-2 * max(1, |point|)``
    with two rounds of Richardson extrapolation.  Each entry is sampled at
    ``t_degree + 1`` equispaced times in ``t_nodes`` and interpolated exactly.
    Pass ``None`` for a coefficient that is identically zero.
    """
    if order > MAX_ORDER:
        raise CapabilityError(f"order {order} > {MAX_ORDER}")
    xb, yb = map(float, point)
    sx, sy = max(1.0, abs(xb)), max(1.0, abs(yb))
    if t_degree == 0:
        nodes = np.array([t_nodes[0]])
    else:
        nodes = np.linspace(t_nodes[0], t_nodes[1], t_degree + 1)
    funcs = dict(zip(TABLE_NAMES, (a, b, c, alpha, gamma)))
    tables: dict[str, dict] = {}
    for name, fn in funcs.items():
        tab = {}
        if fn is None:
            tables[name] = tab
            continue
        for n in range(order + 1):
            for j in range(n + 1):
                i = n - j
                vals = []
                for t in nodes:
                    g = lambda xx, yy, t=t: float(fn(t, xx, yy))  # noqa: E731
                    if n <= 2:
                        d = _mixed_partial(g, xb, yb, i, j, 1e-4 * sx, 1e-4 * sy)
                    else:
                        d = _richardson(g, xb, yb, i, j, 2e-2 * sx, 2e-2 * sy)
                    if not math.isfinite(d):
                        raise ModelError(f"finite difference for {name}[{i},{j}] at t={t} is not finite")
                    vals.append(d / (math.factorial(i) * math.factorial(j)))
                coeffs = npoly.polyfit(nodes, vals, t_degree) if t_degree else np.array(vals)
                tab[(i, j)] = tuple(float(v) for v in coeffs)
        tables[name] = tab
    spec = ModelSpec(order, tables, xb, yb, horizon=horizon or t_nodes)
    spec.check()
    return spec


# ---------------------------------------------------------------------------
# Model zoo


def _exp_series(scale: float, rate: float, base: float, order: int) -> dict[int, float]:
    """Taylor coefficients of ``scale * exp(rate * z)`` around ``z = base``."""
    v = scale * math.exp(rate * base)
    return {n: v * rate ** n / math.factorial(n) for n in range(order + 1)}


def zoo_bs(sigma: float, point=(0.0, 0.0), order: int = 2, horizon=(0.0, 1.0)) -> ModelSpec:
    """Constant volatility: ``a = sigma^2/2``, nothing else."""
    if not sigma > 0:
        raise ModelError("sigma must be positive")
    return ModelSpec(order, {"a": {(0, 0): (0.5 * sigma * sigma,)}}, *point, kind="bs",
                     params={"sigma": sigma}, horizon=horizon)


def zoo_tdbs(a0: float, a1: float = 0.0, a2: float = 0.0, point=(0.0, 0.0), order: int = 2,
             horizon=(0.0, 1.0)) -> ModelSpec:
    """Time-dependent Black-Scholes ``a(t) = a0 + a1 t + a2 t^2``."""
    spec = ModelSpec(order, {"a": {(0, 0): (a0, a1, a2)}}, *point, kind="tdbs",
                     params={"a0": a0, "a1": a1, "a2": a2}, horizon=horizon)
    spec.check()
    return spec


def zoo_heston_td(kappa, theta0, theta1, delta0, delta1, rho0, rho1, point,
                  order: int = 2, horizon=(0.0, 1.0)) -> ModelSpec:
    """Heston in ``(log S, log Z)`` with ``delta(t)^2 = delta0 + delta1 t``,
    ``theta(t) = theta0 + theta1 t`` and ``rho(t) delta(t) = rho0 + rho1 t``."""
    xb, yb = map(float, point)
    for t in np.linspace(horizon[0], horizon[1], 64):
        d2 = delta0 + delta1 * t
        if not d2 > 0:
            raise ModelError(f"delta(t)^2 = {d2:.6g} <= 0 at t = {t:.4g}")
        if not abs(rho0 + rho1 * t) < math.sqrt(d2):
            raise ModelError(f"|rho(t)| >= 1 at t = {t:.4g}")
    ey, emy = math.exp(yb), math.exp(-yb)
    a, b, alpha = {}, {}, {}
    for j in range(order + 1):
        f = 1.0 / math.factorial(j)
        sgn = (-1.0) ** j
        a[(0, j)] = (0.5 * ey * f,)
        b[(0, j)] = (0.5 * delta0 * emy * sgn * f, 0.5 * delta1 * emy * sgn * f)
        drift0 = kappa * theta0 - 0.5 * delta0
        drift1 = kappa * theta1 - 0.5 * delta1
        alpha[(0, j)] = (drift0 * emy * sgn * f, drift1 * emy * sgn * f)
    alpha[(0, 0)] = (alpha[(0, 0)][0] - kappa, alpha[(0, 0)][1])
    params = dict(kappa=kappa, theta0=theta0, theta1=theta1, delta0=delta0, delta1=delta1,
                  rho0=rho0, rho1=rho1)
    spec = ModelSpec(order, {"a": a, "b": b, "c": {(0, 0): (rho0, rho1)}, "alpha": alpha},
                     xb, yb, kind="heston_td", params=params, horizon=horizon)
    spec.check()
    return spec


def zoo_three_halves(kappa, theta, delta, rho, point, order: int = 3, horizon=(0.0, 1.0)) -> ModelSpec:
    """Three-halves variance ``dZ = kappa Z (theta - Z) dt + delta Z^{3/2} dB`` in log coordinates."""
    if not delta > 0:
        raise ModelError("delta must be positive")
    if not abs(rho) < 1:
        raise ModelError(f"|rho| = {abs(rho)} >= 1")
    xb, yb = map(float, point)
    ey = _exp_series(1.0, 1.0, yb, order)
    a = {(0, j): (0.5 * v,) for j, v in ey.items()}
    b = {(0, j): (0.5 * delta ** 2 * v,) for j, v in ey.items()}
    c = {(0, j): (rho * delta * v,) for j, v in ey.items()}
    alpha = {(0, j): (-(kappa + 0.5 * delta ** 2) * v,) for j, v in ey.items()}
    alpha[(0, 0)] = (kappa * theta + alpha[(0, 0)][0],)
    spec = ModelSpec(order, {"a": a, "b": b, "c": c, "alpha": alpha}, xb, yb, kind="three_halves",
                     params=dict(kappa=kappa, theta=theta, delta=delta, rho=rho), horizon=horizon)
    spec.check()
    return spec


def zoo_jdcev(delta, beta, b, c, point, order: int = 4, horizon=(0.0, 1.0)) -> ModelSpec:
    """Jump-to-default CEV: ``sigma(x) = delta e^{beta x}``, ``gamma(x) = b + c sigma(x)^2``."""
    if not delta > 0:
        raise ModelError("delta must be positive")
    if b < 0 or c < 0:
        raise ModelError("JDCEV needs b >= 0 and c >= 0")
    xb, yb = map(float, point)
    s2 = _exp_series(delta ** 2, 2 * beta, xb, order)
    a = {(i, 0): (0.5 * v,) for i, v in s2.items()}
    gamma = {(i, 0): (c * v,) for i, v in s2.items()}
    gamma[(0, 0)] = (b + gamma[(0, 0)][0],)
    spec = ModelSpec(order, {"a": a, "gamma": gamma}, xb, yb, kind="jdcev",
                     params=dict(delta=delta, beta=beta, b=b, c=c), horizon=horizon)
    spec.check()
    return spec


def zoo_cev(delta, beta, point, order: int = 4, horizon=(0.0, 1.0)) -> ModelSpec:
    spec = zoo_jdcev(delta, beta, 0.0, 0.0, point, order, horizon)
    return replace(spec, kind="cev", params=dict(delta=delta, beta=beta), _cache={})


def zoo_displaced(sigma, shift, point, order: int = 4, horizon=(0.0, 1.0),
                  var_slope: float = 0.0) -> ModelSpec:
    """Displaced diffusion ``d(S + D) = sigma(t) (S + D) dW`` in ``x = log S``.

    ``sigma(t)^2 = sigma^2 + var_slope t`` and ``a(t, x) = sigma(t)^2 (1 + D e^{-x})^2 / 2``.
    Prices are Black-Scholes in ``S + D`` with the integrated variance, which makes this
    an exact reference for a time-dependent BS model perturbed by an x-dependent term.
    """
    if not sigma > 0:
        raise ModelError("sigma must be positive")
    xb, yb = map(float, point)
    if not 1 + shift * math.exp(-xb) > 0:
        raise ModelError("displaced diffusion needs S + D > 0 at the expansion point")
    for t in np.linspace(horizon[0], horizon[1], 64):
        if not sigma ** 2 + var_slope * t > 0:
            raise ModelError(f"sigma(t)^2 <= 0 at t = {t:.4g}")
    one = _exp_series(1.0, -1.0, xb, order)
    two = _exp_series(1.0, -2.0, xb, order)
    a = {}
    for i in range(order + 1):
        v = 2 * shift * one[i] + shift ** 2 * two[i] + (1.0 if i == 0 else 0.0)
        a[(i, 0)] = (0.5 * sigma ** 2 * v, 0.5 * var_slope * v)
    spec = ModelSpec(order, {"a": a}, xb, yb, kind="displaced",
                     params=dict(sigma=sigma, shift=shift, var_slope=var_slope), horizon=horizon)
    spec.check()
    return spec


ZOO: dict[str, Callable[..., ModelSpec]] = {
    "bs": zoo_bs,
    "tdbs": zoo_tdbs,
    "heston_td": zoo_heston_td,
    "three_halves": zoo_three_halves,
    "jdcev": zoo_jdcev,
    "cev": zoo_cev,
    "displaced": zoo_displaced,
}

ZOO_PARAMS = {
    "bs": ("sigma",),
    "tdbs": ("a0", "a1", "a2"),
    "heston_td": ("kappa", "theta0", "theta1", "delta0", "delta1", "rho0", "rho1"),
    "three_halves": ("kappa", "theta", "delta", "rho"),
    "jdcev": ("delta", "beta", "b", "c"),
    "cev": ("delta", "beta"),
    "displaced": ("sigma", "shift", "var_slope"),
}

ZOO_DEFAULTS = {"tdbs": {"a1": 0.0, "a2": 0.0}, "displaced": {"var_slope": 0.0}}


def build_zoo(kind: str, params: Mapping[str, float], point, order: int, horizon=(0.0, 1.0)) -> ModelSpec:
    if kind not in ZOO:
        raise ModelError(f"unknown model kind {kind!r}; known: {sorted(ZOO)}")
    names = ZOO_PARAMS[kind]
    merged = {**ZOO_DEFAULTS.get(kind, {}), **params}
    missing = [n for n in names if n not in merged]
    extra = sorted(set(merged) - set(names))
    if missing or extra:
        raise ModelError(f"{kind}: missing parameters {missing}, unexpected {extra}")
    return ZOO[kind](**{n: merged[n] for n in names}, point=tuple(point), order=order,
                     horizon=tuple(horizon))


# ---------------------------------------------------------------------------
# Model files: "key = value" lines, '#' comments.


def _fmt(v: float) -> str:
    return repr(float(v))


def dumps_model(model: ModelSpec) -> str:
    lines = [f"kind = {model.kind}", f"order = {model.order}", f"xbar = {_fmt(model.xbar)}",
             f"ybar = {_fmt(model.ybar)}",
             f"horizon = {_fmt(model.horizon[0])} {_fmt(model.horizon[1])}"]
    if model.kind in ZOO:
        for name in ZOO_PARAMS[model.kind]:
            lines.append(f"{name} = {_fmt(model.params[name])}")
    else:
        for name in TABLE_NAMES:
            for (i, j), coeffs in sorted(model.tables[name].items()):
                lines.append(f"{name}[{i},{j}] = " + " ".join(_fmt(c) for c in coeffs))
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> ModelSpec:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ModelError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in entries:
            raise ModelError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value
    kind = entries.pop("kind", "raw")
    try:
        order = int(entries.pop("order"))
    except KeyError:
        raise ModelError("model file needs 'order'") from None
    point = (float(entries.pop("xbar", 0.0)), float(entries.pop("ybar", 0.0)))
    horizon = tuple(float(v) for v in entries.pop("horizon", "0 1").split())
    if len(horizon) != 2:
        raise ModelError("horizon needs two numbers")
    if kind != "raw":
        if kind not in ZOO:
            raise ModelError(f"unknown model kind {kind!r}")
        allowed = set(ZOO_PARAMS[kind])
        unknown = sorted(set(entries) - allowed)
        if unknown:
            raise ModelError(f"unknown keys for {kind}: {unknown}")
        return build_zoo(kind, {k: float(v) for k, v in entries.items()}, point, order, horizon)
    tables: dict[str, dict] = {n: {} for n in TABLE_NAMES}
    for key, value in entries.items():
        name, _, idx = key.partition("[")
        if name not in TABLE_NAMES or not idx.endswith("]"):
            raise ModelError(f"unknown key {key!r}")
        try:
            i, j = (int(s) for s in idx[:-1].split(","))
        except ValueError:
            raise ModelError(f"bad table index in {key!r}") from None
        tables[name][(i, j)] = tuple(float(v) for v in value.replace(",", " ").split())
    spec = ModelSpec(order, tables, *point, kind="raw", horizon=horizon)
    spec.check()
    return spec


def load_model(path: str | Path) -> ModelSpec:
    return loads_model(Path(path).read_text())


def save_model(model: ModelSpec, path: str | Path) -> None:
    Path(path).write_text(dumps_model(model))
