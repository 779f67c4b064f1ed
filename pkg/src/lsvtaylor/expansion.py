"""Correction operators and the price expansion ``u = u_0 + u_1 + ... + u_N``.

``u_n = L_n u_0`` where ``L_n`` sums, over compositions ``(i_1, ..., i_h)`` of ``n``,
the time-ordered integrals of ``G_{i_1}(t, s_1) ... G_{i_h}(t, s_h)`` over
``t < s_1 < ... < s_h < T``, and

    G_n(t, s) = sum_h M1(t, s)^(n-h) M2(t, s)^h A_{n-h,h}(s).

All operators stay symbolic in the time variables until ``price_expansion``
evaluates them at ``(t, T)`` and at the state relative to the expansion point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .kernel import OrderZero, basis_values, bs_w, hermite_ratio, u0_quadrature
from .model import MAX_ORDER, CapabilityError, ModelSpec, PayoffSpec, pintegral
from .opalg import DiffOp, compose, scale_and_add
from .timealg import TimePoly, TimeUniverse

W = (0, 0, 2, 0)
DX = (0, 0, 1, 0)
DY = (0, 0, 0, 1)
DYY = (0, 0, 0, 2)
DXY = (0, 0, 1, 1)
ONE = (0, 0, 0, 0)


def build_Anh(model: ModelSpec, n: int, h: int, sym: int | None = None) -> DiffOp:
    """``A_{n-h,h}`` with coefficients as polynomials in the time symbol ``sym`` (default ``t``)."""
    if h < 0 or n - h < 0 or n > model.order:
        raise ValueError(f"A_(n-h,h) needs 0 <= h <= n <= order={model.order}, got n={n}, h={h}")
    U = model.universe
    sym = U.t if sym is None else sym
    i, j = n - h, h
    coeff = lambda name: model.time_poly(name, i, j, U, sym)  # noqa: E731
    a, alpha, b, c, g = (coeff(nm) for nm in ("a", "alpha", "b", "c", "gamma"))
    return DiffOp(U, {W: a, DX: g - a, DY: alpha, DYY: b, DXY: c, ONE: -g})


def _integral(model: ModelSpec, name: str, t_sym: int, s_sym: int) -> TimePoly:
    return TimePoly.integral_of(model.universe, model.coeff(name, 0, 0), t_sym, s_sym)


def build_M(model: ModelSpec, which: int, t_sym: int, s_sym: int) -> DiffOp:
    """The affine operators ``M1`` (``which=1``) and ``M2`` (``which=2``) on ``[t, s]``."""
    if s_sym <= t_sym:
        raise ValueError("build_M needs t before s in the symbol order")
    U = model.universe
    ia = _integral(model, "a", t_sym, s_sym)
    ic = _integral(model, "c", t_sym, s_sym)
    if which == 1:
        shift = _integral(model, "gamma", t_sym, s_sym) - ia
        return DiffOp(U, {(1, 0, 0, 0): 1.0, ONE: shift, DX: 2.0 * ia, DY: ic})
    if which == 2:
        ib = _integral(model, "b", t_sym, s_sym)
        return DiffOp(U, {(0, 1, 0, 0): 1.0, ONE: _integral(model, "alpha", t_sym, s_sym),
                          DX: ic, DY: 2.0 * ib})
    raise ValueError("which must be 1 or 2")


def _M_powers(model: ModelSpec, t_sym: int, s_sym: int, n: int) -> tuple[list[DiffOp], list[DiffOp]]:
    key = ("Mpow", t_sym, s_sym)
    cached = model._cache.get(key)
    if cached is None or len(cached[0]) <= n:
        U = model.universe
        m1, m2 = build_M(model, 1, t_sym, s_sym), build_M(model, 2, t_sym, s_sym)
        p1, p2 = [DiffOp.identity(U)], [DiffOp.identity(U)]
        for _ in range(n):
            p1.append(compose(m1, p1[-1]))
            p2.append(compose(m2, p2[-1]))
        cached = (p1, p2)
        model._cache[key] = cached
    return cached


def build_Gn(model: ModelSpec, n: int, t_sym: int, s_sym: int) -> DiffOp:
    if not 1 <= n <= model.order:
        raise ValueError(f"G_n needs 1 <= n <= order={model.order}, got {n}")
    key = ("G", n, t_sym, s_sym)
    if key in model._cache:
        return model._cache[key]
    p1, p2 = _M_powers(model, t_sym, s_sym, n)
    parts = []
    for h in range(n + 1):
        A = build_Anh(model, n, h, s_sym)
        if A.is_zero():
            continue
        parts.append((1.0, compose(compose(p1[n - h], p2[h]), A)))
    G = scale_and_add(parts) if parts else DiffOp.zero(model.universe)
    model._cache[key] = G
    return G


def compositions(n: int, h: int) -> list[tuple[int, ...]]:
    """Ordered tuples of ``h`` positive integers summing to ``n``."""
    if h == 1:
        return [(n,)]
    return [(i, *rest) for i in range(1, n - h + 2) for rest in compositions(n - i, h - 1)]


def build_Ln(model: ModelSpec, n: int, *, x_only: bool = False) -> DiffOp:
    """Fully time-integrated ``L_n``; coefficients depend on ``t`` and ``T`` only.

    ``x_only`` discards every term ending in ``dy``, which is exact when ``L_n`` is
    applied to a function of ``x`` alone and much cheaper.
    """
    if n > MAX_ORDER:
        raise CapabilityError(
            f"order {n} requested; the explicit correction operators are feasible only for "
            f"n <= {MAX_ORDER}")
    if not 1 <= n <= model.order:
        raise ValueError(f"L_n needs 1 <= n <= model order {model.order}, got {n}")
    key = ("L", n, x_only)
    if key in model._cache:
        return model._cache[key]
    U = model.universe
    t, T = U.t, U.T
    total = []
    for h in range(1, n + 1):
        prods = []
        for idx in compositions(n, h):
            acc = None
            for pos in range(h, 0, -1):
                G = build_Gn(model, idx[pos - 1], t, U.s(pos))
                if acc is None:
                    acc = G.drop_y_derivatives() if x_only else G
                else:
                    acc = compose(G, acc, drop_y_derivatives=x_only)
                if acc.is_zero():
                    break
            if not acc.is_zero():
                prods.append((1.0, acc))
        if not prods:
            continue
        op = scale_and_add(prods)
        # integrate s_h over [s_{h-1}, T], ..., s_1 over [t, T]
        for pos in range(h, 0, -1):
            lower = U.s(pos - 1) if pos > 1 else t
            op = DiffOp(U, {k: c.integrate(U.s(pos), lower, T) for k, c in op.terms.items()})
        total.append((1.0, op))
    L = scale_and_add(total) if total else DiffOp.zero(U)
    model._cache[key] = L
    return L


@dataclass
class PriceExpansion:
    """Per-order pieces of the price of ``h - K`` at one point.

    ``u_n = sum_k hermite_coeffs[n][k] dx^k (dx^2 - dx) u_0 + scalar_part[n]``; with no
    default ``(dx^2 - dx) u_0 = (dx^2 - dx) u^BS(sigma0)``.
    """

    t: float
    T: float
    x: float
    y: float
    payoff: PayoffSpec
    sigma0: float
    discount: float
    w_u0: float
    hermite_coeffs: list[np.ndarray] = field(default_factory=list)
    scalar_part: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    defaultable: bool = False

    @property
    def tau(self) -> float:
        return self.T - self.t

    @property
    def order(self) -> int:
        return len(self.values) - 1

    @property
    def total(self) -> float:
        return math.fsum(self.values)

    def partial_sums(self) -> list[float]:
        return list(np.cumsum(self.values))


def _divide_by_w(d: np.ndarray) -> tuple[np.ndarray, float, float]:
    """``D(p) = Q(p) (p^2 - p) + r0 + r1 p`` for a polynomial in ``p = dx``."""
    if len(d) < 3:
        d = np.concatenate([d, np.zeros(3 - len(d))])
    q, r = npoly.polydiv(d, [0.0, -1.0, 1.0])
    r = np.concatenate([r, np.zeros(2)])
    return q, float(r[0]), float(r[1])


def price_expansion(model: ModelSpec, payoff: PayoffSpec | Callable, t: float, T: float,
                    x: float | None = None, y: float | None = None,
                    order: int | None = None) -> PriceExpansion:
    """Evaluate ``u_0, ..., u_N`` at ``(t, x, y)`` for maturity ``T``.

    ``x, y`` default to the expansion point.  A callable payoff ``h(xi, omega)`` is
    accepted at order zero only (priced by quadrature).
    """
    if not T > t:
        raise ValueError(f"need T > t, got t={t}, T={T}")
    x = model.xbar if x is None else float(x)
    y = model.ybar if y is None else float(y)
    N = model.order if order is None else order
    if N > MAX_ORDER:
        raise CapabilityError(
            f"order {N} requested; the explicit correction operators are feasible only for "
            f"n <= {MAX_ORDER}")
    if N > model.order:
        raise ValueError(f"order {N} exceeds the model's Taylor order {model.order}")
    oz = OrderZero.from_model(model, t, T)
    if not isinstance(payoff, PayoffSpec):
        if N > 0:
            raise CapabilityError("payoffs depending on y are supported at order zero only; "
                                  "corrections need a payoff of x alone")
        u0 = u0_quadrature(model, payoff, t, T, x, y)
        return PriceExpansion(t, T, x, y, payoff, oz.sigma0, oz.discount, float("nan"),
                              [np.zeros(1)], [u0], [u0])

    u0, du0, comps = basis_values(oz, payoff, x)
    w_u0 = sum(w * oz.discount * bs_w(st) for w, st in comps)
    exp = PriceExpansion(t, T, x, y, payoff, oz.sigma0, oz.discount, w_u0,
                         [np.zeros(1)], [u0], [u0], model.has_default)
    dx, dy = x - model.xbar, y - model.ybar
    times = {model.universe.t: t, model.universe.T: T}
    for n in range(1, N + 1):
        L = build_Ln(model, n, x_only=True)
        d: dict[int, float] = {}
        for (i, j, k, _), v in L.evaluate(times).items():
            d[k] = d.get(k, 0.0) + v * dx ** i * dy ** j
        dvec = np.array([d.get(k, 0.0) for k in range(max(d, default=0) + 1)])
        q, r0, r1 = _divide_by_w(dvec)
        scalar = r0 * u0 + r1 * du0
        un = scalar
        for w, st in comps:
            base = w * oz.discount * bs_w(st)
            un += base * sum(qk * hermite_ratio(k, st) for k, qk in enumerate(q) if qk != 0.0)
        exp.hermite_coeffs.append(q)
        exp.scalar_part.append(scalar)
        exp.values.append(un)
    return exp


def price_with_default_floor(expansion: PriceExpansion, payoff: PayoffSpec | None = None,
                             order: int | None = None) -> float:
    """Claim value ``K + sum_n u_n`` with ``K = H(0)`` paid on default."""
    payoff = expansion.payoff if payoff is None else payoff
    vals = expansion.values if order is None else expansion.values[: order + 1]
    return payoff.recovery + math.fsum(vals)


def bond_yield(expansion: PriceExpansion, order: int | None = None) -> float:
    """``-log(u) / (T - t)``; the credit spread under zero rates."""
    vals = expansion.values if order is None else expansion.values[: order + 1]
    return -math.log(math.fsum(vals)) / expansion.tau


def shift_for_deterministic_rates(t: float, T: float, x: float,
                                  rate: Sequence[float]) -> tuple[float, float]:
    """Spot shift ``x + int_t^T r`` and discount ``exp(-int_t^T r)`` for a polynomial rate."""
    ir = pintegral(rate, t, T)
    return x + ir, math.exp(-ir)
