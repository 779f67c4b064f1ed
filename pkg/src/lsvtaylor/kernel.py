"""Order-zero building blocks: the Gaussian kernel, Black-Scholes and its derivatives.

The only special function used for prices is the normal CDF.  Ratios of
x-derivatives and sigma-derivatives of the Black-Scholes price are expressed
through Hermite polynomials, so implied-vol corrections need no special
functions at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb, factorial
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import erfc, erfcx

from .model import ModelSpec, PayoffSpec, pintegral

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class NumericError(ArithmeticError):
    """A computation left its numerically meaningful range."""


_INV_SQRT2_HI = 0.7071067811865476
_INV_SQRT2_LO = -4.833646656726457e-17   # 1/sqrt(2) - _INV_SQRT2_HI
_SPLIT = 134217729.0                     # 2^27 + 1
_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


def _two_prod(a, b):
    """``a * b = p + e`` exactly (Dekker)."""
    p = a * b
    ca, cb = _SPLIT * a, _SPLIT * b
    ah = ca - (ca - a)
    bh = cb - (cb - b)
    al, bl = a - ah, b - bh
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def norm_cdf(x):
    """Standard normal CDF, accurate to a few ulp in both tails.

    Right of zero ``0.5 erfc(-x/sqrt 2)`` is well conditioned.  In the left tail
    ``N(x) = 0.5 erfcx(w) exp(-w^2)`` with ``w = -x/sqrt 2`` carried in double-double,
    so neither the scaling nor the square loses bits; the low parts enter to first order.
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        hi, lo = _two_prod(-x, _INV_SQRT2_HI)
        lo = lo - x * _INV_SQRT2_LO
        right = 0.5 * erfc(hi)
        sq, sq_err = _two_prod(hi, hi)
        ex = erfcx(hi)
        left = 0.5 * np.exp(-sq) * ex * (1.0 - sq_err - _TWO_OVER_SQRT_PI * lo / ex)
        out = np.where(x >= 0, right, left)
    return np.where(np.isposinf(x), 1.0, np.where(np.isneginf(x), 0.0, out))


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    return INV_SQRT_2PI * np.exp(-0.5 * x * x)


@dataclass(frozen=True)
class BSState:
    x: float
    k: float
    tau: float
    sigma: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def sqrt_var(self) -> float:
        return self.sigma * math.sqrt(self.tau)

    @property
    def d_plus(self) -> float:
        s = self.sqrt_var
        return (self.x - self.k + 0.5 * s * s) / s

    @property
    def d_minus(self) -> float:
        return self.d_plus - self.sqrt_var

    @property
    def z(self) -> float:
        """Hermite variable ``(x - k - sigma^2 tau / 2) / (sigma sqrt(2 tau))``."""
        return self.d_minus / SQRT2


def bs_call(state: BSState) -> float:
    return float(math.exp(state.x) * norm_cdf(state.d_plus)
                 - math.exp(state.k) * norm_cdf(state.d_minus))


def bs_put(state: BSState) -> float:
    return float(math.exp(state.k) * norm_cdf(-state.d_minus)
                 - math.exp(state.x) * norm_cdf(-state.d_plus))


def bs_vega(state: BSState) -> float:
    return float(math.exp(state.x) * norm_pdf(state.d_plus) * math.sqrt(state.tau))


def bs_w(state: BSState) -> float:
    """``(dx^2 - dx) u^BS``, the common factor of every correction term."""
    return float(math.exp(state.x) * norm_pdf(state.d_plus) / state.sqrt_var)


def hermite(n: int, z):
    """Physicists' Hermite polynomial by ``H_{n+1} = 2 z H_n - 2 n H_{n-1}``."""
    z = np.asarray(z, dtype=float)
    h0 = np.ones_like(z)
    if n == 0:
        return h0
    h1 = 2.0 * z
    for m in range(1, n):
        h0, h1 = h1, 2.0 * z * h1 - 2.0 * m * h0
    return h1


def hermite_ratio(n: int, state: BSState) -> float:
    """``dx^n (dx^2 - dx) u^BS / (dx^2 - dx) u^BS``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    scale = -1.0 / (state.sigma * math.sqrt(2.0 * state.tau))
    return float(scale ** n * hermite(n, state.z))


def _bell_quadratic(n: int, j: int, x1: float, x2: float) -> float:
    """Partial Bell polynomial ``B_{n,j}(x1, x2, 0, 0, ...)``."""
    if not (n + 1) // 2 <= j <= n:
        return 0.0
    return factorial(n) / (factorial(2 * j - n) * factorial(n - j)) * x1 ** (2 * j - n) * (x2 / 2) ** (n - j)


def bs_sigma_derivative_ratio(state: BSState, n: int) -> float:
    """``d_sigma^n u^BS / d_sigma u^BS`` from Hermite ratios only.

    The price depends on sigma through ``v = sigma^2 tau / 2`` with ``d_v = (dx^2 - dx)``,
    so Faa di Bruno with ``v' = sigma tau``, ``v'' = tau`` gives
    ``d_sigma^n u = sum_j (dx^2 - dx)^j u * B_{n,j}(sigma tau, tau)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    ratios = [hermite_ratio(m, state) for m in range(2 * n - 1)]
    total = 0.0
    for j in range(1, n + 1):
        # (dx^2 - dx)^(j-1) = sum_i C(j-1, i) (-1)^i dx^(2j-2-i)
        w_pow = sum(comb(j - 1, i) * (-1) ** i * ratios[2 * j - 2 - i] for i in range(j))
        total += w_pow * _bell_quadratic(n, j, state.sigma * state.tau, state.tau)
    return total / (state.sigma * state.tau)


def bs_sigma_derivative(state: BSState, n: int) -> float:
    """n-th sigma-derivative of the call price (exact, Hermite route)."""
    vega = state.tau * state.sigma * bs_w(state)
    if n == 1:
        return vega
    return vega * bs_sigma_derivative_ratio(state, n)


# ---------------------------------------------------------------------------
# Gaussian kernel of the order-zero operator


@dataclass(frozen=True)
class GaussianKernel:
    mean: np.ndarray
    cov: np.ndarray
    discount: float
    one_dimensional: bool = False

    @classmethod
    def from_model(cls, model: ModelSpec, t: float, T: float, x: float, y: float) -> "GaussianKernel":
        if not T > t:
            raise ValueError("need T > t")
        ia = pintegral(model.coeff("a", 0, 0), t, T)
        ib = pintegral(model.coeff("b", 0, 0), t, T)
        ic = pintegral(model.coeff("c", 0, 0), t, T)
        ig = pintegral(model.coeff("gamma", 0, 0), t, T)
        ial = pintegral(model.coeff("alpha", 0, 0), t, T)
        mean = np.array([x + ig - ia, y + ial])
        cov = np.array([[2 * ia, ic], [ic, 2 * ib]])
        return cls(mean, cov, math.exp(-ig), model.one_dimensional)


def gamma0_density(kernel: GaussianKernel, xi, omega=None):
    """Order-zero transition density (without the discount factor)."""
    xi = np.asarray(xi, dtype=float)
    if kernel.one_dimensional:
        v = kernel.cov[0, 0]
        return np.exp(-0.5 * (xi - kernel.mean[0]) ** 2 / v) / math.sqrt(2 * math.pi * v)
    det = float(np.linalg.det(kernel.cov))
    if not det > 0:
        raise NumericError(f"singular covariance (det = {det:.3g}) in two-dimensional mode")
    inv = np.linalg.inv(kernel.cov)
    d0 = xi - kernel.mean[0]
    d1 = np.asarray(omega, dtype=float) - kernel.mean[1]
    q = inv[0, 0] * d0 * d0 + 2 * inv[0, 1] * d0 * d1 + inv[1, 1] * d1 * d1
    return np.exp(-0.5 * q) / (2 * math.pi * math.sqrt(det))


@dataclass(frozen=True)
class OrderZero:
    """Integrated order-zero coefficients over ``[t, T]``."""

    tau: float
    int_a: float
    int_gamma: float

    @classmethod
    def from_model(cls, model: ModelSpec, t: float, T: float) -> "OrderZero":
        if not T > t:
            raise ValueError(f"need T > t, got t={t}, T={T}")
        return cls(T - t, pintegral(model.coeff("a", 0, 0), t, T),
                   pintegral(model.coeff("gamma", 0, 0), t, T))

    @property
    def sigma0(self) -> float:
        return math.sqrt(2 * self.int_a / self.tau)

    @property
    def discount(self) -> float:
        return math.exp(-self.int_gamma)

    def call_state(self, x: float, k: float) -> BSState:
        """Black-Scholes state of the discounted call: spot shifted by ``int gamma``."""
        return BSState(x + self.int_gamma, k, self.tau, self.sigma0)


def basis_values(oz: OrderZero, payoff: PayoffSpec, x: float) -> tuple[float, float, list[tuple[float, BSState]]]:
    """``(u0, dx u0, [(weight, state)])`` for ``h - K`` at order zero.

    ``(dx^2 - dx) u0`` is carried only by the call components and equals
    ``discount * weight * bs_w(state)`` for each.
    """
    calls, fwd, cash = payoff.basis()
    ex = math.exp(x)
    u0 = fwd * ex + cash * oz.discount
    du0 = fwd * ex
    comps = []
    for w, k in calls:
        st = oz.call_state(x, k)
        u0 += w * oz.discount * bs_call(st)
        du0 += w * ex * float(norm_cdf(st.d_plus))
        comps.append((w, st))
    return u0, du0, comps


def u0_price(model: ModelSpec, payoff: PayoffSpec, t: float, T: float, x: float, y: float = 0.0) -> float:
    """Order-zero value of ``E[exp(-int gamma) (h(X_T) - K)]``.

    For x-only payoffs the Gaussian integral collapses to Black-Scholes with
    total variance ``2 int a0`` and spot shifted by ``int gamma0``.
    """
    oz = OrderZero.from_model(model, t, T)
    return basis_values(oz, payoff, x)[0]


def u0_quadrature(model: ModelSpec, h: Callable[[float, float], float], t: float, T: float,
                  x: float, y: float, breakpoints: tuple[float, ...] = (), width: float = 10.0,
                  epsabs: float = 1e-13, epsrel: float = 1e-12) -> float:
    """Order-zero price of a payoff ``h(xi, omega)`` by direct 2-D quadrature.

    This is the only route for payoffs that depend on the second factor.
    ``breakpoints`` are xi-locations of kinks of ``h``.
    """
    ker = GaussianKernel.from_model(model, t, T, x, y)
    m0, m1 = ker.mean
    s0 = math.sqrt(ker.cov[0, 0])
    if ker.one_dimensional:
        f = lambda xi: float(gamma0_density(ker, xi)) * h(xi, y)  # noqa: E731
        pts = [p for p in breakpoints if abs(p - m0) < width * s0]
        val, _ = integrate.quad(f, m0 - width * s0, m0 + width * s0, points=pts or None,
                                epsabs=epsabs, epsrel=epsrel, limit=400)
        return ker.discount * val
    # condition omega on xi: Gaussian with mean mu(xi), variance cv
    rho = ker.cov[0, 1] / ker.cov[0, 0]
    cv = ker.cov[1, 1] - rho * ker.cov[0, 1]
    sc = math.sqrt(cv)

    def inner(xi):
        mu = m1 + rho * (xi - m0)
        return integrate.quad(lambda om: float(gamma0_density(ker, xi, om)) * h(xi, om),
                              mu - width * sc, mu + width * sc, epsabs=epsabs, epsrel=epsrel,
                              limit=200)[0]

    pts = sorted(p for p in breakpoints if abs(p - m0) < width * s0)
    edges = [m0 - width * s0, *pts, m0 + width * s0]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += integrate.quad(inner, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=200)[0]
    return ker.discount * total
