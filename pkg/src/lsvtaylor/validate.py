"""Independent oracles: Euler-Maruyama Monte Carlo, Black-Scholes inversion, convergence harness."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .kernel import BSState, NumericError, bs_call, bs_put, bs_vega
from .model import ModelSpec, PayoffSpec, peval


class DomainError(ValueError):
    """Input outside the domain where the quantity is defined."""


@dataclass(frozen=True)
class MCConfig:
    paths: int = 100_000
    steps_per_year: int = 250
    seed: int = 2024
    full_truncation: bool = True
    antithetic: bool = True
    batch_size: int = 20_000
    workers: int = 1

    def __post_init__(self):
        if self.paths < 1 or self.steps_per_year < 1:
            raise ValueError("paths and steps_per_year must be >= 1")
        if self.antithetic and self.batch_size % 2:
            raise ValueError("antithetic batches need an even batch_size")


@dataclass(frozen=True)
class MCResult:
    price_mean: float
    std_error: float
    implied_vol: float | None = None
    iv_std_error: float | None = None


@dataclass(frozen=True)
class Dynamics:
    """SDE for ``(X, V)``: ``X`` is log-price, ``V`` the factor in simulation coordinates.

    ``dX = (-sigma^2/2 + gamma) dt + sigma dW``, ``dV = drift dt + vol dB``,
    ``d<W, B> = rho dt``.  ``y_to_v`` maps the model's second coordinate to ``V``.
    Coefficients take ``(t, x, v)`` with numpy arrays; with full truncation ``v`` is
    floored at zero before it is passed in.
    """

    sigma: Callable
    gamma: Callable | None = None
    v_drift: Callable | None = None
    v_vol: Callable | None = None
    rho: Callable | None = None
    y_to_v: Callable[[float], float] = lambda y: y
    truncate: bool = False


def dynamics_for(model: ModelSpec) -> Dynamics:
    """Exact dynamics behind a zoo model (not its Taylor approximation)."""
    p = model.params
    kind = model.kind
    if kind == "bs":
        s = p["sigma"]
        return Dynamics(sigma=lambda t, x, v: np.full_like(x, s))
    if kind == "tdbs":
        co = (p["a0"], p["a1"], p["a2"])
        return Dynamics(sigma=lambda t, x, v: np.full_like(x, math.sqrt(2 * peval(co, t))))
    if kind == "displaced":
        s2, slope, D = p["sigma"] ** 2, p.get("var_slope", 0.0), p["shift"]
        return Dynamics(sigma=lambda t, x, v: math.sqrt(s2 + slope * t) * (1 + D * np.exp(-x)))
    if kind in ("jdcev", "cev"):
        d, beta = p["delta"], p["beta"]
        b, c = p.get("b", 0.0), p.get("c", 0.0)
        sig = lambda t, x, v: d * np.exp(beta * x)  # noqa: E731
        gam = (lambda t, x, v: b + c * sig(t, x, v) ** 2) if (b or c) else None
        return Dynamics(sigma=sig, gamma=gam)
    if kind == "heston_td":
        k, th0, th1 = p["kappa"], p["theta0"], p["theta1"]
        d0, d1, r0, r1 = p["delta0"], p["delta1"], p["rho0"], p["rho1"]
        return Dynamics(
            sigma=lambda t, x, v: np.sqrt(v),
            v_drift=lambda t, x, v: k * (th0 + th1 * t - v),
            v_vol=lambda t, x, v: math.sqrt(d0 + d1 * t) * np.sqrt(v),
            rho=lambda t, x, v: (r0 + r1 * t) / math.sqrt(d0 + d1 * t),
            y_to_v=math.exp, truncate=True)
    if kind == "three_halves":
        k, th, d, r = p["kappa"], p["theta"], p["delta"], p["rho"]
        return Dynamics(
            sigma=lambda t, x, v: np.sqrt(v),
            v_drift=lambda t, x, v: k * v * (th - v),
            v_vol=lambda t, x, v: d * v ** 1.5,
            rho=lambda t, x, v: r,
            y_to_v=math.exp, truncate=True)
    raise ValueError(f"no simulation dynamics for model kind {kind!r}")


def _simulate_batch(dyn: Dynamics, payoff: PayoffSpec, t: float, T: float, x: float, v0: float,
                    n: int, steps: int, gen: np.random.Generator, antithetic: bool) -> np.ndarray:
    """Discounted payoffs (pair-averaged when antithetic) for one batch."""
    dt = (T - t) / steps
    sq = math.sqrt(dt)
    half = n // 2 if antithetic else n
    two_d = dyn.v_vol is not None
    X = np.full(n, float(x))
    V = np.full(n, float(v0))
    kill = np.zeros(n)
    for step in range(steps):
        s = t + step * dt
        z = gen.standard_normal((2 if two_d else 1, half))
        if antithetic:
            z = np.concatenate([z, -z], axis=1)
        Vp = np.maximum(V, 0.0) if dyn.truncate else V
        sig = dyn.sigma(s, X, Vp)
        if dyn.gamma is not None:
            g = dyn.gamma(s, X, Vp)
            kill += g * dt
            drift = -0.5 * sig * sig + g
        else:
            drift = -0.5 * sig * sig
        if two_d:
            r = dyn.rho(s, X, Vp)
            dB = z[0] * sq
            dW = (r * z[0] + np.sqrt(1.0 - r * r) * z[1]) * sq
            V = V + dyn.v_drift(s, X, Vp) * dt + dyn.v_vol(s, X, Vp) * dB
        else:
            dW = z[0] * sq
        X = X + drift * dt + sig * dW
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(V)):
            bad = int(np.flatnonzero(~(np.isfinite(X) & np.isfinite(V)))[0])
            raise NumericError(f"non-finite path state at t={s + dt:.6g}: X={X[bad]}, V={V[bad]}")
    vals = np.exp(-kill) * payoff(X)
    if antithetic:
        vals = 0.5 * (vals[:half] + vals[half:])
    return vals


def mc_price(dynamics: Dynamics | ModelSpec, payoff: PayoffSpec, t: float, T: float, x: float,
             y: float, cfg: MCConfig = MCConfig()) -> MCResult:
    """Monte Carlo value ``K + E[exp(-int gamma) (h(X_T) - K)]``.

    Batches draw from a counter-based Philox stream keyed by ``(seed, batch)``, so
    results do not depend on ``cfg.workers``; batch sums are combined in batch order.
    """
    dyn = dynamics_for(dynamics) if isinstance(dynamics, ModelSpec) else dynamics
    if not T > t:
        raise ValueError("need T > t")
    steps = max(1, int(round(cfg.steps_per_year * (T - t))))
    v0 = dyn.y_to_v(y)
    sizes = [cfg.batch_size] * (cfg.paths // cfg.batch_size)
    rest = cfg.paths - sum(sizes)
    if rest:
        sizes.append(rest + (rest % 2 if cfg.antithetic else 0))

    def run(b: int):
        gen = np.random.Generator(np.random.Philox(key=cfg.seed).jumped(b))
        vals = _simulate_batch(dyn, payoff, t, T, x, v0, sizes[b], steps, gen, cfg.antithetic)
        mu = float(np.mean(vals))
        return len(vals), mu, float(np.sum((vals - mu) ** 2))

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            parts = list(ex.map(run, range(len(sizes))))
    else:
        parts = [run(b) for b in range(len(sizes))]
    # pairwise combination of batch moments, in batch order
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        tot = n + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    se = math.sqrt(m2 / max(n - 1, 1) / n)
    price = payoff.recovery + mean

    iv = iv_se = None
    if payoff.kind in ("call", "put") and dyn.gamma is None:
        try:
            iv = invert_bs(price, x, payoff.log_strike, T - t, call=payoff.kind == "call")
            iv_se = se / bs_vega(BSState(x, payoff.log_strike, T - t, iv))
        except DomainError:
            iv = None
    return MCResult(price, se, iv, iv_se)


def invert_bs(price: float, x: float, k: float, tau: float, call: bool = True,
              tol: float = 1e-12, max_iter: int = 200) -> float:
    """Black-Scholes implied vol by bisection on ``[1e-6, 5]`` with safeguarded Newton steps."""
    fwd, strike = math.exp(x), math.exp(k)
    lower = max(fwd - strike, 0.0) if call else max(strike - fwd, 0.0)
    upper = fwd if call else strike
    if not lower < price < upper:
        raise DomainError(f"price {price!r} outside arbitrage bounds ({lower!r}, {upper!r})")
    f = bs_call if call else bs_put
    lo, hi = 1e-6, 5.0
    if f(BSState(x, k, tau, lo)) > price or f(BSState(x, k, tau, hi)) < price:
        raise DomainError(f"implied vol for price {price!r} outside [{lo}, {hi}]")
    s = 0.5 * (lo + hi)
    for _ in range(max_iter):
        st = BSState(x, k, tau, s)
        diff = f(st) - price
        if diff == 0.0:
            return s
        if diff > 0:
            hi = s
        else:
            lo = s
        vega = bs_vega(st)
        # stop once the price is matched and the Newton step is below vol resolution
        if abs(diff) <= tol and (vega <= 0 or abs(diff / vega) <= 1e-13 * s):
            return s
        nxt = s - diff / vega if vega > 0 else -1.0
        s = nxt if lo < nxt < hi else 0.5 * (lo + hi)
        if hi - lo < 1e-15 * hi:
            return s
    return s


@dataclass(frozen=True)
class ConvergenceRow:
    tau: float
    order: int
    abs_error: float
    slope: float


def convergence_study(model: ModelSpec, payoff: PayoffSpec, taus: Sequence[float],
                      orders: Sequence[int], oracle: Callable[[float], float],
                      t: float = 0.0) -> list[ConvergenceRow]:
    """Truncation errors against an oracle price, with log-log slopes per order.

    An order whose errors are all exactly zero gets slope ``inf`` (exact).
    """
    from .expansion import price_expansion, price_with_default_floor

    rows = []
    for N in orders:
        errs = []
        for tau in taus:
            exp = price_expansion(model, payoff, t, t + tau, order=N)
            errs.append(abs(price_with_default_floor(exp) - oracle(tau)))
        if all(e == 0.0 for e in errs):
            slope = math.inf
        else:
            pos = [(tau, e) for tau, e in zip(taus, errs) if e > 0]
            lt, le = np.log([p[0] for p in pos]), np.log([p[1] for p in pos])
            slope = float(np.polyfit(lt, le, 1)[0]) if len(pos) > 1 else math.nan
        rows.extend(ConvergenceRow(tau, N, e, slope) for tau, e in zip(taus, errs))
    return rows


def gaussian_identity_sides(model: ModelSpec, t: float, s: float, x: float, y: float,
                            xi: float, omega: float, h: int, k: int, n: int, m: int,
                            dps: int = 30) -> tuple[float, float]:
    """Both sides of the Gaussian-derivative identity behind ``G_n``.

    Left: ``d_xi^n d_omega^m [(xi - xb)^h (omega - yb)^k Gamma0]``.
    Right: ``(-1)^(n+m) M1^h M2^k dx^n dy^m Gamma0`` with the operator product taken
    from :mod:`opalg`.  All derivatives are extended-precision finite differences
    (mpmath), independent of the operator algebra.
    """
    import mpmath as mp

    from .expansion import build_M
    from .kernel import GaussianKernel
    from .opalg import DiffOp, compose_all

    U = model.universe
    ker = GaussianKernel.from_model(model, t, s, 0.0, 0.0)
    (c00, c01), (_, c11) = ker.cov
    det = c00 * c11 - c01 * c01
    i00, i01, i11 = c11 / det, -c01 / det, c00 / det
    shift_x, shift_y = ker.mean

    def gamma0(xx, yy, a, b):
        d0 = a - (xx + shift_x)
        d1 = b - (yy + shift_y)
        return mp.exp(-(i00 * d0 * d0 + 2 * i01 * d0 * d1 + i11 * d1 * d1) / 2) / (2 * mp.pi * mp.sqrt(det))

    xb, yb = model.xbar, model.ybar
    with mp.workdps(dps):
        lhs = mp.diff(lambda a, b: (a - xb) ** h * (b - yb) ** k * gamma0(x, y, a, b), (xi, omega), (n, m))
        ops = [build_M(model, 1, U.t, U.T)] * h + [build_M(model, 2, U.t, U.T)] * k
        D = compose_all(ops + [DiffOp.monomial(U, (0, 0, n, m))], U)
        rhs = mp.mpf(0)
        for (i, j, K, L), c in D.evaluate({U.t: t, U.T: s}).items():
            rhs += c * (x - xb) ** i * (y - yb) ** j * mp.diff(
                lambda a, b: gamma0(a, b, xi, omega), (x, y), (K, L))
        rhs *= (-1) ** (n + m)
    return float(lhs), float(rhs)
