"""Implied-volatility series ``sigma = sigma_0 + sigma_1 + ... + sigma_N``.

Matching powers in ``u^BS(sigma_0 + delta) = sum_n u_n`` gives

    sigma_n = u_n / vega - (1/n!) sum_{h=2}^{n} (d_sigma^h u^BS / vega) B_{n,h}(1! sigma_1, 2! sigma_2, ...)

where ``B_{n,h}`` are partial Bell polynomials.  Both ``u_n / vega`` and the
sigma-derivative ratios reduce to Hermite polynomials, so the series is explicit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from math import comb, factorial
from typing import Sequence

from .expansion import PriceExpansion
from .kernel import BSState, NumericError, bs_call, bs_put, bs_sigma_derivative_ratio, hermite_ratio
from .model import CapabilityError, ModelSpec, pintegral

MAX_Z = 6.0


def bell_partial(n: int, h: int, xs: Sequence[float]) -> float:
    """Partial Bell polynomial ``B_{n,h}(x_1, ..., x_{n-h+1})``.

    Uses ``B_{n,h} = sum_j C(n-1, j-1) x_j B_{n-j,h-1}`` with ``B_{0,0} = 1``.
    """
    if n == 0 and h == 0:
        return 1.0
    if not 1 <= h <= n:
        raise ValueError(f"bell_partial needs 1 <= h <= n, got n={n}, h={h}")
    if len(xs) < n - h + 1:
        raise ValueError(f"B_{{{n},{h}}} needs {n - h + 1} arguments, got {len(xs)}")
    return bell_table(n, xs)[n][h]


def bell_table(n: int, xs: Sequence[float]) -> list[list[float]]:
    """``B[m][h]`` for ``0 <= h <= m <= n``; missing ``xs`` entries count as zero."""
    x = lambda j: xs[j - 1] if j <= len(xs) else 0.0  # noqa: E731
    B = [[0.0] * (n + 1) for _ in range(n + 1)]
    B[0][0] = 1.0
    for m in range(1, n + 1):
        for h in range(1, m + 1):
            B[m][h] = sum(comb(m - 1, j - 1) * x(j) * B[m - j][h - 1] for j in range(1, m - h + 2))
    return B


@dataclass
class IVExpansion:
    terms: list[float]

    @property
    def sigma0(self) -> float:
        return self.terms[0]

    @property
    def total(self) -> float:
        return math.fsum(self.terms)

    def partial_sums(self) -> list[float]:
        out, acc = [], 0.0
        for s in self.terms:
            acc += s
            out.append(acc)
        return out


def sigma_terms(sigma0: float, u_over_vega: Sequence[float],
                dsig_over_vega: Sequence[float]) -> list[float]:
    """``sigma_0 .. sigma_N`` from ``u_n / vega`` and ``d_sigma^h u^BS / vega``.

    Index 0 of both sequences is ignored (``dsig_over_vega[1]`` is 1 by definition).
    """
    N = len(u_over_vega) - 1
    sig = [float(sigma0)]
    for n in range(1, N + 1):
        xs = [factorial(j) * sig[j] for j in range(1, n)]
        B = bell_table(n, xs)
        corr = sum(dsig_over_vega[h] * B[n][h] for h in range(2, n + 1)) / factorial(n)
        sig.append(float(u_over_vega[n] - corr))
    return sig


def _no_default(model: ModelSpec) -> None:
    if model.has_default:
        raise CapabilityError(
            "implied volatility needs gamma = 0 (no default); the implied-vol expansion "
            "assumes a non-defaultable underlying")


def iv_sigma0(model: ModelSpec, t: float, T: float) -> float:
    """``sqrt(2 int_t^T a_0 / (T - t))``."""
    _no_default(model)
    if not T > t:
        raise ValueError("need T > t")
    return math.sqrt(2 * pintegral(model.coeff("a", 0, 0), t, T) / (T - t))


def iv_expand(expansion: PriceExpansion, max_z: float = MAX_Z) -> IVExpansion:
    """Implied-vol terms ``sigma_0 .. sigma_N`` of a call or put expansion."""
    p = expansion.payoff
    if getattr(p, "kind", None) not in ("call", "put"):
        raise CapabilityError("implied volatility is defined for call and put payoffs only")
    if expansion.defaultable:
        raise CapabilityError(
            "implied volatility needs gamma = 0 (no default); the implied-vol expansion "
            "assumes a non-defaultable underlying")
    s0 = expansion.sigma0
    st = BSState(expansion.x, p.log_strike, expansion.tau, s0)
    if abs(st.z) > max_z:
        raise NumericError(
            f"Hermite variable z = {st.z:.3g} beyond +/-{max_z}: strike k - x = "
            f"{p.log_strike - expansion.x:.4g} is too far out for tau = {expansion.tau:.4g}, "
            f"sigma0 = {s0:.4g}")
    vega_norm = s0 * expansion.tau   # vega / (dx^2 - dx) u^BS
    N = expansion.order
    u_over_vega = [0.0]
    for n in range(1, N + 1):
        q = expansion.hermite_coeffs[n]
        u_over_vega.append(sum(qk * hermite_ratio(k, st) for k, qk in enumerate(q) if qk != 0.0)
                           / vega_norm)
    dsig = [0.0, 1.0] + [bs_sigma_derivative_ratio(st, h) for h in range(2, N + 1)]
    sig = sigma_terms(s0, u_over_vega, dsig)
    iv = IVExpansion(sig)
    if not iv.total > 0:
        warnings.warn(f"implied-vol series total {iv.total:.4g} is not positive", RuntimeWarning)
    return iv


def iv_check_roundtrip(iv: IVExpansion, expansion: PriceExpansion) -> float:
    """``u^BS(sum sigma_n) - sum u_n``: how well the series inverts the price series."""
    p = expansion.payoff
    st = BSState(expansion.x, p.log_strike, expansion.tau, iv.total)
    if p.kind == "call":
        return bs_call(st) - expansion.total
    return bs_put(st) - (expansion.total + p.recovery)
