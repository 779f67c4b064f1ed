"""Normal-ordered differential operators in ``(x - xb), (y - yb), dx, dy``.

A :class:`DiffOp` is a finite sum of terms

    coeff(times) * (x - xb)^i (y - yb)^j dx^k dy^l

with every multiplication factor to the left of every derivative.  Products are
brought back to this canonical form with the closed-form commutation rule

    dx^k (x - xb)^i = sum_m C(k, m) i!/(i - m)! (x - xb)^(i - m) dx^(k - m)

and its ``y`` analogue.
"""

from __future__ import annotations

from math import comb
from typing import Iterable, Mapping

from .timealg import TimePoly, TimeUniverse, raw_add_into, raw_mul

Key = tuple[int, int, int, int]


def falling(n: int, m: int) -> int:
    """n!/(n-m)!"""
    out = 1
    for r in range(m):
        out *= n - r
    return out


class DiffOp:
    """Operator with :class:`TimePoly` coefficients, stored in normal order."""

    __slots__ = ("universe", "terms")

    def __init__(self, universe: TimeUniverse, terms: Mapping[Key, TimePoly] | None = None):
        self.universe = universe
        self.terms: dict[Key, TimePoly] = {}
        for key, c in (terms or {}).items():
            if not isinstance(c, TimePoly):
                c = TimePoly.const(universe, c)
            if c.universe != universe:
                raise ValueError("coefficient universe does not match operator universe")
            if c.terms:
                self.terms[tuple(key)] = c

    @classmethod
    def _from_raw(cls, universe: TimeUniverse, raw: Mapping[Key, dict]) -> "DiffOp":
        op = cls(universe)
        for key, t in raw.items():
            if t:
                p = TimePoly.__new__(TimePoly)
                p.universe = universe
                p.terms = t
                op.terms[key] = p
        return op

    @classmethod
    def identity(cls, universe: TimeUniverse) -> "DiffOp":
        return cls.monomial(universe, (0, 0, 0, 0), 1.0)

    @classmethod
    def zero(cls, universe: TimeUniverse) -> "DiffOp":
        return cls(universe)

    @classmethod
    def monomial(cls, universe: TimeUniverse, key: Key, coeff: TimePoly | float = 1.0) -> "DiffOp":
        return cls(universe, {tuple(key): coeff})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffOp):
            return NotImplemented
        return self.universe == other.universe and self.terms == other.terms

    def __len__(self) -> int:
        return len(self.terms)

    def allclose(self, other: "DiffOp", atol: float = 1e-12) -> bool:
        zero = TimePoly(self.universe)
        for key in set(self.terms) | set(other.terms):
            if not self.terms.get(key, zero).allclose(other.terms.get(key, zero), atol):
                return False
        return True

    def __add__(self, other: "DiffOp") -> "DiffOp":
        return scale_and_add([(1.0, self), (1.0, other)])

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return scale_and_add([(1.0, self), (-1.0, other)])

    def __neg__(self) -> "DiffOp":
        return scale_and_add([(-1.0, self)])

    def __matmul__(self, other: "DiffOp") -> "DiffOp":
        return compose(self, other)

    def scaled(self, c: TimePoly | float) -> "DiffOp":
        return scale_and_add([(c, self)])

    def max_derivative_order(self) -> int:
        return max((k + l for (_, _, k, l) in self.terms), default=-1)

    def drop_y_derivatives(self) -> "DiffOp":
        """Terms ending in ``dy^l`` with ``l >= 1`` removed (they kill x-only functions)."""
        return DiffOp(self.universe, {k: c for k, c in self.terms.items() if k[3] == 0})

    def evaluate(self, times: Mapping[int, float]) -> dict[Key, float]:
        """Numeric coefficients at the given times, zero entries removed."""
        out = {}
        for key, c in self.terms.items():
            v = c(times)
            if v != 0.0:
                out[key] = v
        return out

    def dump(self) -> str:
        """Sorted text listing, one term per line, for golden files."""
        lines = []
        for key in sorted(self.terms):
            lines.append(f"{format_key(key)} : {self.terms[key]}")
        return "\n".join(lines) + ("\n" if lines else "")

    def __repr__(self) -> str:
        return f"DiffOp({len(self.terms)} terms)"


def format_key(key: Key) -> str:
    i, j, k, l = key
    parts = []
    if i:
        parts.append(f"(x-xb)^{i}")
    if j:
        parts.append(f"(y-yb)^{j}")
    if k:
        parts.append(f"dx^{k}")
    if l:
        parts.append(f"dy^{l}")
    return " ".join(parts) if parts else "1"


def compose(a: DiffOp, b: DiffOp, *, drop_y_derivatives: bool = False) -> DiffOp:
    """Normal-ordered product ``a b`` (``b`` acts first).

    With ``drop_y_derivatives`` every result term containing ``dy`` is discarded; this
    is only legitimate when the product is finally applied to a function of ``x``
    alone, since left multiplication never removes trailing derivatives.
    """
    if a.universe != b.universe:
        raise ValueError("cannot compose operators over different time universes")
    acc: dict[Key, dict] = {}
    for (i1, j1, k1, l1), c1 in a.terms.items():
        for (i2, j2, k2, l2), c2 in b.terms.items():
            prod = None
            for m in range(min(k1, i2) + 1):
                wx = comb(k1, m) * falling(i2, m)
                for n in range(min(l1, j2) + 1):
                    l_new = l1 - n + l2
                    if drop_y_derivatives and l_new:
                        continue
                    if prod is None:
                        prod = raw_mul(c1.terms, c2.terms)
                    key = (i1 + i2 - m, j1 + j2 - n, k1 - m + k2, l_new)
                    raw_add_into(acc.setdefault(key, {}), prod, float(wx * comb(l1, n) * falling(j2, n)))
    return DiffOp._from_raw(a.universe, acc)


def compose_all(ops: Iterable[DiffOp], universe: TimeUniverse, *,
                drop_y_derivatives: bool = False) -> DiffOp:
    """Left-to-right product ``ops[0] ops[1] ...``, accumulated from the right."""
    ops = list(ops)
    out = DiffOp.identity(universe)
    for op in reversed(ops):
        out = compose(op, out, drop_y_derivatives=drop_y_derivatives)
    return out


def power(op: DiffOp, n: int) -> DiffOp:
    return compose_all([op] * n, op.universe)


def scale_and_add(ops: Iterable[tuple[TimePoly | float, DiffOp]]) -> DiffOp:
    """TimePoly-linear combination of operators."""
    ops = list(ops)
    if not ops:
        raise ValueError("scale_and_add needs at least one operator")
    universe = ops[0][1].universe
    acc: dict[Key, dict] = {}
    for w, op in ops:
        if op.universe != universe:
            raise ValueError("mixed universes in scale_and_add")
        if isinstance(w, TimePoly):
            for key, c in op.terms.items():
                raw_add_into(acc.setdefault(key, {}), raw_mul(w.terms, c.terms))
        else:
            for key, c in op.terms.items():
                raw_add_into(acc.setdefault(key, {}), c.terms, float(w))
    return DiffOp._from_raw(universe, acc)


def apply_to_poly(op: DiffOp | Mapping[Key, float], p: Mapping[tuple[int, int], float],
                  times: Mapping[int, float] | None = None) -> dict[tuple[int, int], float]:
    """Act with ``op`` on a polynomial in ``(x - xb), (y - yb)`` given as ``{(a, b): coeff}``.

    A symbolic operator needs ``times`` for its coefficients; an already-evaluated
    term map (``DiffOp.evaluate``) is used as is.
    """
    coeffs = op.evaluate(times or {}) if isinstance(op, DiffOp) else op
    out: dict[tuple[int, int], float] = {}
    for (i, j, k, l), c in coeffs.items():
        for (a, b), v in p.items():
            if k > a or l > b:
                continue
            key = (a - k + i, b - l + j)
            out[key] = out.get(key, 0.0) + c * v * falling(a, k) * falling(b, l)
    return {key: v for key, v in out.items() if v != 0.0}
