"""Sparse polynomials in an ordered set of time symbols.

The symbols are ``t < s1 < ... < sN < T``.  Every coefficient of every
correction operator lives in this ring, and the nested time integrals that
produce the higher-order terms are carried out exactly here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

Exponents = tuple[int, ...]


class TimeAlgebraError(ValueError):
    """Misuse of the time-polynomial ring (mixed universes, bad integration)."""


@dataclass(frozen=True)
class TimeUniverse:
    """The ordered symbols ``t, s1, ..., sN, T`` for expansion order ``N``."""

    order: int

    @property
    def size(self) -> int:
        return self.order + 2

    @property
    def t(self) -> int:
        return 0

    @property
    def T(self) -> int:
        return self.order + 1

    def s(self, j: int) -> int:
        if not 1 <= j <= self.order:
            raise TimeAlgebraError(f"s{j} not in universe of order {self.order}")
        return j

    def name(self, idx: int) -> str:
        if idx == 0:
            return "t"
        if idx == self.order + 1:
            return "T"
        if 0 < idx <= self.order:
            return f"s{idx}"
        raise TimeAlgebraError(f"symbol index {idx} out of range")

    def names(self) -> list[str]:
        return [self.name(i) for i in range(self.size)]


def _unit(size: int, idx: int, power: int = 1) -> Exponents:
    e = [0] * size
    e[idx] = power
    return tuple(e)


# Raw-dict kernels, shared with opalg where the wrapper overhead matters.

def raw_add_into(acc: dict, other: Mapping, scale: float = 1.0) -> None:
    for e, c in other.items():
        v = acc.get(e, 0.0) + scale * c
        if v == 0.0:
            acc.pop(e, None)
        else:
            acc[e] = v


def raw_mul(p: Mapping, q: Mapping) -> dict:
    out: dict = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0.0) + c1 * c2
    return {e: c for e, c in out.items() if c != 0.0}


class TimePoly:
    """Polynomial over a :class:`TimeUniverse` with float coefficients.

    Immutable after construction; terms with zero coefficient are never stored.
    """

    __slots__ = ("universe", "terms")

    def __init__(self, universe: TimeUniverse, terms: Mapping[Exponents, float] | None = None):
        self.universe = universe
        clean = {}
        if terms:
            for e, c in terms.items():
                if len(e) != universe.size:
                    raise TimeAlgebraError(
                        f"exponent {e} does not match universe size {universe.size}")
                c = float(c)
                if c != 0.0:
                    clean[tuple(e)] = c
        self.terms = clean

    # construction helpers

    @classmethod
    def const(cls, universe: TimeUniverse, value: float) -> "TimePoly":
        return cls(universe, {(0,) * universe.size: value})

    @classmethod
    def var(cls, universe: TimeUniverse, idx: int) -> "TimePoly":
        return cls(universe, {_unit(universe.size, idx): 1.0})

    @classmethod
    def univariate(cls, universe: TimeUniverse, coeffs: Sequence[float], idx: int) -> "TimePoly":
        """``sum_d coeffs[d] * sym**d`` placed on symbol ``idx``."""
        return cls(universe, {_unit(universe.size, idx, d): c for d, c in enumerate(coeffs)})

    @classmethod
    def integral_of(cls, universe: TimeUniverse, coeffs: Sequence[float],
                    lower: int, upper: int) -> "TimePoly":
        """``int_lower^upper f(q) dq`` for the univariate ``f = sum coeffs[d] q**d``."""
        terms: dict = {}
        for d, c in enumerate(coeffs):
            if c == 0.0:
                continue
            w = c / (d + 1)
            for idx, sign in ((upper, 1.0), (lower, -1.0)):
                e = _unit(universe.size, idx, d + 1)
                terms[e] = terms.get(e, 0.0) + sign * w
        return cls(universe, terms)

    # ring operations

    def _check(self, other: "TimePoly") -> None:
        if other.universe != self.universe:
            raise TimeAlgebraError(
                f"mismatched universes: order {self.universe.order} vs {other.universe.order}")

    def _coerce(self, other) -> "TimePoly":
        if isinstance(other, TimePoly):
            self._check(other)
            return other
        if isinstance(other, (int, float)):
            return TimePoly.const(self.universe, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc = dict(self.terms)
        raw_add_into(acc, other.terms)
        return TimePoly(self.universe, acc)

    __radd__ = __add__

    def __neg__(self) -> "TimePoly":
        return TimePoly(self.universe, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return TimePoly(self.universe, {e: c * other for e, c in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return TimePoly(self.universe, raw_mul(self.terms, other.terms))

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "TimePoly":
        out = TimePoly.const(self.universe, 1.0)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimePoly):
            return NotImplemented
        return self.universe == other.universe and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.universe, frozenset(self.terms.items())))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def allclose(self, other: "TimePoly", atol: float = 1e-12) -> bool:
        self._check(other)
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0.0) - other.terms.get(k, 0.0)) <= atol for k in keys)

    # calculus and evaluation

    def integrate(self, var: int, lower: int, upper: int) -> "TimePoly":
        """Exact ``int_lower^upper p dvar``; the result no longer depends on ``var``."""
        size = self.universe.size
        for idx in (var, lower, upper):
            if not 0 <= idx < size:
                raise TimeAlgebraError(f"symbol index {idx} outside universe")
        if var in (lower, upper):
            raise TimeAlgebraError(
                f"cannot integrate {self.universe.name(var)} with itself as a bound")
        out: dict = {}
        for e, c in self.terms.items():
            p = e[var] + 1
            w = c / p
            base = list(e)
            base[var] = 0
            for idx, sign in ((upper, 1.0), (lower, -1.0)):
                ne = list(base)
                ne[idx] += p
                ne = tuple(ne)
                out[ne] = out.get(ne, 0.0) + sign * w
        return TimePoly(self.universe, out)

    def __call__(self, values: Mapping[int, float] | Sequence[float]) -> float:
        """Evaluate at numeric times, given per symbol (missing symbols must not occur)."""
        if isinstance(values, Mapping):
            get = values.get
        else:
            seq = list(values)
            get = lambda i: seq[i] if i < len(seq) else None  # noqa: E731
        total = 0.0
        for e, c in self.terms.items():
            v = c
            for i, p in enumerate(e):
                if p:
                    x = get(i)
                    if x is None:
                        raise TimeAlgebraError(f"no value for {self.universe.name(i)}")
                    v *= x ** p
            total += v
        return total

    def degree(self, idx: int | None = None) -> int:
        if not self.terms:
            return -1
        if idx is None:
            return max(sum(e) for e in self.terms)
        return max(e[idx] for e in self.terms)

    def symbols(self) -> set[int]:
        return {i for e in self.terms for i, p in enumerate(e) if p}

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        names = self.universe.names()
        parts = []
        for e in sorted(self.terms, reverse=True):
            c = self.terms[e]
            mono = "*".join(
                names[i] if p == 1 else f"{names[i]}^{p}" for i, p in enumerate(e) if p)
            parts.append(f"{c:.17g}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"TimePoly({self})"


def poly_sum(polys: Iterable[TimePoly], universe: TimeUniverse) -> TimePoly:
    acc: dict = {}
    for p in polys:
        raw_add_into(acc, p.terms)
    return TimePoly(universe, acc)
