"""Exponential-polynomial rewards g(y) = sum c * y**n * exp(r*y)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np


@dataclass(frozen=True)
class Term:
    c: float
    n: int
    r: float


@dataclass(frozen=True)
class Atom:
    """weight * (-1)**order * delta^(order)(u - point)."""

    order: int
    point: float
    weight: float


@dataclass(frozen=True)
class SpectralForm:
    atoms: tuple[Atom, ...]

    def apply(self, phi_derivs) -> float:
        """Pair the form with a test function.

        ``phi_derivs(order, point)`` returns the order-th derivative of the
        test function at ``point``; the sign of the delta derivative cancels
        the (-1)**order factor.
        """
        return sum(a.weight * phi_derivs(a.order, a.point) for a in self.atoms)


def _normalize(terms: Iterable[Term]) -> tuple[Term, ...]:
    merged: dict[tuple[int, float], float] = {}
    for t in terms:
        n = int(t.n)
        if n < 0 or n != t.n:
            raise ValueError(f"power must be a nonnegative integer, got {t.n}")
        if not (math.isfinite(t.c) and math.isfinite(t.r)):
            raise ValueError("coefficients and rates must be finite")
        key = (n, float(t.r) + 0.0)
        merged[key] = merged.get(key, 0.0) + float(t.c)
    out = [Term(c, n, r) for (n, r), c in merged.items() if c != 0.0]
    out.sort(key=lambda t: (t.r, t.n))
    return tuple(out)


@dataclass(frozen=True)
class RewardExpr:
    terms: tuple[Term, ...] = field(default_factory=tuple)
    positive_part: bool = False

    def __post_init__(self):
        object.__setattr__(self, "terms", _normalize(self.terms))

    @classmethod
    def from_terms(cls, terms, positive_part: bool = False) -> "RewardExpr":
        """Build from (c, n, r) triples or mappings with those keys."""
        parsed = []
        for t in terms:
            if isinstance(t, Term):
                parsed.append(t)
            elif isinstance(t, dict):
                parsed.append(Term(float(t["c"]), int(t.get("n", 0)), float(t.get("r", 0.0))))
            else:
                c, n, r = t
                parsed.append(Term(float(c), int(n), float(r)))
        return cls(tuple(parsed), positive_part)

    @property
    def analytic(self) -> "RewardExpr":
        """The same terms without the positive-part wrapper."""
        return RewardExpr(self.terms, False)

    @property
    def rates(self) -> tuple[float, ...]:
        return tuple(sorted({t.r for t in self.terms}))

    def __add__(self, other: "RewardExpr") -> "RewardExpr":
        if self.positive_part or other.positive_part:
            raise ValueError("cannot add positive-part rewards")
        return RewardExpr(self.terms + other.terms)

    def __mul__(self, k: float) -> "RewardExpr":
        return RewardExpr(tuple(Term(k * t.c, t.n, t.r) for t in self.terms), self.positive_part)

    __rmul__ = __mul__

    def __call__(self, y):
        return eval_reward(self, y)


def eval_reward(expr: RewardExpr, y):
    y_arr = np.asarray(y, dtype=float)
    out = np.zeros_like(y_arr)
    for t in expr.terms:
        part = t.c * np.exp(t.r * y_arr) if t.r != 0.0 else np.full_like(y_arr, t.c)
        if t.n:
            part = part * y_arr**t.n
        out = out + part
    if expr.positive_part:
        out = np.where(y_arr > 0.0, out, 0.0)
    return out if out.ndim else float(out)


def derivative(expr: RewardExpr) -> RewardExpr:
    if expr.positive_part:
        raise ValueError("positive-part rewards are not differentiable at 0; pass expr.analytic")
    out = []
    for t in expr.terms:
        if t.n:
            out.append(Term(t.c * t.n, t.n - 1, t.r))
        if t.r != 0.0:
            out.append(Term(t.c * t.r, t.n, t.r))
    return RewardExpr(tuple(out))


def spectral(expr: RewardExpr) -> SpectralForm:
    """Inverse bilateral Laplace transform as a sum of delta derivatives.

    y**n * exp(r*y) corresponds to (-1)**n * delta^(n)(u - r).
    """
    if expr.positive_part:
        raise ValueError("positive-part rewards have no exponential-polynomial spectrum; pass expr.analytic")
    return SpectralForm(tuple(Atom(t.n, t.r, t.c) for t in expr.terms))


def two_sided_reward(a: float, b: float) -> RewardExpr:
    """exp(a*y) + exp(-b*y) - 2."""
    return RewardExpr((Term(1.0, 0, a), Term(1.0, 0, -b), Term(-2.0, 0, 0.0)))


def power_reward(n: int) -> RewardExpr:
    """(y+)**n."""
    return RewardExpr((Term(1.0, n, 0.0),), positive_part=True)


def two_sided_params(expr: RewardExpr) -> tuple[float, float] | None:
    """(a, b) if expr is a positive multiple of exp(a*y) + exp(-b*y) - 2, else None."""
    if expr.positive_part:
        return None
    terms = expr.terms
    if any(t.n for t in terms):
        return None
    rates = {t.r: t.c for t in terms}
    pos = [r for r in rates if r > 0]
    neg = [r for r in rates if r < 0]
    if len(pos) != 1 or len(neg) != 1 or set(rates) - {pos[0], neg[0], 0.0}:
        return None
    a, b = pos[0], -neg[0]
    k = rates[a]
    if not (k > 0 and math.isclose(rates[-b], k) and math.isclose(rates.get(0.0, 0.0), -2.0 * k)):
        return None
    return a, b
