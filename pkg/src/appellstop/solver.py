"""Stopping regions and value functions from the A-transform of the reward.

The stopping set is S = {x : A^{eta(x)}{g}(x) >= 0}; the candidate rule
stops at the first entry of x + X into S.  The solver scans a grid for
sign changes of x -> A^{eta(x)}{g}(x), refines each one by bisection and
assembles S as a union of closed intervals.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .atransform import NuLaw, TransformImage, series_reciprocal, transform, transform_power
from .eta import (
    EmpiricalLaw,
    TwoSidedLaw,
    monotone_law,
    sample_eta_batch,
    two_sided_switch,
    two_sided_thresholds,
)
from .levy import LevyModel, extrema_rates
from .region import Region
from .reward import RewardExpr, derivative, two_sided_params
from .simulate import argmax_and_entry, first_entry, horizon_cap

log = logging.getLogger(__name__)

ETA_KINDS = ("monotone_sup", "monotone_inf", "two_sided", "empirical")


@dataclass(frozen=True)
class EtaMode:
    kind: str
    a: float | None = None
    b: float | None = None
    # empirical mode only
    samples: int = 2000
    step: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ETA_KINDS:
            raise ValueError(f"eta mode must be one of {ETA_KINDS}, got {self.kind!r}")
        if self.kind == "two_sided" and (self.a is None or self.b is None):
            raise ValueError("two_sided mode needs a and b")

    @property
    def monotone(self) -> bool:
        return self.kind.startswith("monotone")


@dataclass(frozen=True)
class ScanGrid:
    lo: float
    hi: float
    step: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("grid lo must be below hi")
        if not self.step > 0:
            raise ValueError("grid step must be positive")

    def points(self) -> np.ndarray:
        n = int(math.floor((self.hi - self.lo) / self.step + 1e-9))
        return self.lo + self.step * np.arange(n + 1)


@dataclass
class StoppingProblem:
    model: LevyModel
    reward: RewardExpr
    eta_mode: EtaMode
    grid: ScanGrid | None = None
    tol: float = 1e-10

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.reward.terms:
            raise ValueError("reward has no terms")
        if self.eta_mode.kind == "two_sided" and self.model.mu != 0.0:
            raise ValueError("the two-sided eta law is only available for driftless motion")
        if self.grid is None:
            self.grid = default_grid(self)
        self._laws: dict[float, NuLaw] = {}

    def law_at(self, x: float) -> NuLaw:
        mode = self.eta_mode
        if mode.kind == "monotone_sup":
            return monotone_law(self.model, "sup")
        if mode.kind == "monotone_inf":
            return monotone_law(self.model, "inf")
        if mode.kind == "two_sided":
            return TwoSidedLaw(mode.a, mode.b, self.model.q, x, self.model.sigma)
        if x not in self._laws:
            samples = sample_eta_batch(self.model, self.reward, [x], mode.samples, mode.step, mode.seed)[0]
            self._laws[x] = EmpiricalLaw(samples)
        return self._laws[x]

    def prefetch_empirical(self, xs) -> None:
        """Sample eta(x) for many x on shared paths (empirical mode)."""
        mode = self.eta_mode
        todo = [x for x in np.asarray(xs, dtype=float) if x not in self._laws]
        if mode.kind != "empirical" or not todo:
            return
        eta = sample_eta_batch(self.model, self.reward, todo, mode.samples, mode.step, mode.seed)
        for x, s in zip(todo, eta):
            self._laws[float(x)] = EmpiricalLaw(s)


def infer_eta_mode(reward: RewardExpr) -> EtaMode:
    """Pick the eta law from the shape of the reward."""
    ab = two_sided_params(reward)
    if ab is not None and ab[0] > ab[1]:
        return EtaMode("two_sided", a=ab[0], b=ab[1])
    ys = np.linspace(-200.0, 200.0, 4001)
    if reward.positive_part:
        ys = ys[ys > 0]
    slope = derivative(reward.analytic)(ys)
    if np.all(slope >= 0):
        return EtaMode("monotone_sup")
    if np.all(slope <= 0):
        return EtaMode("monotone_inf")
    return EtaMode("empirical")


def default_grid(problem: StoppingProblem) -> ScanGrid:
    """Scan window of 50 extrema length scales around the reward's turning point."""
    rates = extrema_rates(problem.model)
    width = 50.0 / min(rates.beta_plus, rates.beta_minus)
    center = 0.0
    if problem.eta_mode.kind == "two_sided":
        center = two_sided_switch(problem.eta_mode.a, problem.eta_mode.b)
    lo, hi = center - width, center + width
    if problem.reward.positive_part:
        lo = 0.0
    step = 0.05 if problem.eta_mode.kind != "empirical" else 1.0
    return ScanGrid(lo, hi, step)


# ---------------------------------------------------------------------------
# images
# ---------------------------------------------------------------------------

def image_of(problem: StoppingProblem, x: float) -> TransformImage:
    """y -> A^{eta(x)}{g}(y), the law frozen at x."""
    return transform(problem.reward.analytic, problem.law_at(x))


def image_at(problem: StoppingProblem, x: float) -> float:
    return float(image_of(problem, x)(x))


def image_values(problem: StoppingProblem, xs) -> np.ndarray:
    """image_at over an array; vectorized for the closed-form laws."""
    xs = np.asarray(xs, dtype=float)
    mode = problem.eta_mode
    if mode.monotone:
        return np.asarray(image_of(problem, 0.0)(xs), dtype=float)
    if mode.kind == "two_sided" and all(t.n == 0 for t in problem.reward.terms):
        return _two_sided_images(problem, xs, xs)
    problem.prefetch_empirical(xs)
    return np.array([image_at(problem, x) for x in xs])


def _two_sided_images(problem, law_points, eval_points):
    """A^{eta(l)}{g}(z) for paired arrays l, z when g is a sum of exponentials."""
    mode = problem.eta_mode
    beta = math.sqrt(2.0 * problem.model.q) / problem.model.sigma
    law_points = np.asarray(law_points, dtype=float)
    z = np.asarray(eval_points, dtype=float)
    c = two_sided_thresholds(mode.a, mode.b, law_points)
    out = np.zeros(np.broadcast(law_points, z).shape)
    for t in problem.reward.terms:
        u = t.r
        if not abs(u) < beta:
            raise ValueError(f"rate {u} outside (-{beta}, {beta})")
        m = (beta / (beta - u) * np.exp(-c * (beta - u))
             - beta / (beta + u) * np.exp(-c * (beta + u)) + beta / (beta + u))
        out = out + t.c * np.exp(u * z) / m
    return out


def empirical_image_se(problem: StoppingProblem, x: float) -> float:
    """Jackknife standard error of image_at(x) in empirical mode."""
    law = problem.law_at(x)
    if not isinstance(law, EmpiricalLaw):
        return 0.0
    n = law.samples.size
    total = np.zeros(n)
    for t in problem.reward.analytic.terms:
        loo = law.leave_one_out_taylor(t.r, t.n)
        rho = series_reciprocal(loo)
        poly = sum(t.c * math.factorial(t.n) / math.factorial(j) * rho[:, t.n - j] * x**j
                   for j in range(t.n + 1))
        total += math.exp(t.r * x) * poly
    return float(math.sqrt((n - 1) / n * np.sum((total - total.mean()) ** 2)))


# ---------------------------------------------------------------------------
# region
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Boundary:
    x: float
    residual: float
    bracket: tuple[float, float]


@dataclass
class ComonotoneReport:
    intervals: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(iv["pass"] for iv in self.intervals)

    @property
    def violations(self) -> list[float]:
        return [w for iv in self.intervals for w in iv["witnesses"]]


@dataclass
class StoppingSolution:
    region: Region
    boundaries: list[Boundary]
    grid: np.ndarray
    images: np.ndarray
    uncertain: list[tuple[float, float]] = field(default_factory=list)
    comonotone: ComonotoneReport | None = None

    @property
    def inconclusive(self) -> bool:
        return bool(self.uncertain)

    def image_at(self, problem: StoppingProblem, x: float) -> float:
        return image_at(problem, x)


def _bisect(f, lo, hi, flo, tol):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = f(mid)
        if (fm >= 0) == (flo >= 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _refine_grid(xs, vals, f, depth=3):
    """Subdivide cells where a pair of roots could hide below the curvature scale."""
    for _ in range(depth):
        if xs.size < 3:
            break
        h = np.diff(xs)
        second = np.abs(np.diff(vals, 2)) / (h[1:] * h[:-1])
        curv = np.maximum(np.concatenate(([second[0]], second)), np.concatenate((second, [second[-1]])))
        same = np.sign(vals[:-1]) == np.sign(vals[1:])
        small = np.minimum(np.abs(vals[:-1]), np.abs(vals[1:])) < curv * h**2 / 2
        cells = np.flatnonzero(same & small)
        if not cells.size:
            break
        extra = np.concatenate([np.linspace(xs[i], xs[i + 1], 9)[1:-1] for i in cells])
        xs_new = np.concatenate((xs, extra))
        order = np.argsort(xs_new)
        vals = np.concatenate((vals, f(extra)))[order]
        xs = xs_new[order]
    return xs, vals


def stopping_region(problem: StoppingProblem, comonotone: bool = True) -> StoppingSolution:
    xs = problem.grid.points()
    if problem.reward.positive_part:
        xs = xs[xs > 0]
    vals = image_values(problem, xs)
    if problem.eta_mode.kind != "empirical":
        xs, vals = _refine_grid(xs, vals, lambda p: image_values(problem, p))

    uncertain = []
    if problem.eta_mode.kind == "empirical":
        se = np.array([empirical_image_se(problem, x) for x in xs])
        weak = np.abs(vals) <= 3.0 * se
        for i in np.flatnonzero(weak):
            lo = xs[max(i - 1, 0)]
            hi = xs[min(i + 1, xs.size - 1)]
            if uncertain and uncertain[-1][1] >= lo:
                uncertain[-1] = (uncertain[-1][0], hi)
            else:
                uncertain.append((float(lo), float(hi)))

    boundaries = []
    f = lambda x: image_at(problem, x)  # noqa: E731
    for i in np.flatnonzero((vals[:-1] >= 0) != (vals[1:] >= 0)):
        root = _bisect(f, xs[i], xs[i + 1], vals[i], problem.tol)
        boundaries.append(Boundary(root, f(root), (float(xs[i]), float(xs[i + 1]))))

    intervals = []
    start = -math.inf if vals[0] >= 0 else None
    if problem.reward.positive_part and start is not None:
        start = float(xs[0])
    for bd, i in zip(boundaries, np.flatnonzero((vals[:-1] >= 0) != (vals[1:] >= 0))):
        if vals[i] >= 0:
            intervals.append((start, bd.x))
            start = None
        else:
            start = bd.x
    if start is not None:
        intervals.append((start, math.inf))
    region = Region(tuple(intervals))

    if problem.reward.positive_part:
        g_on = problem.reward(np.array([b for b in region.boundaries]))
        if np.any(np.asarray(g_on) < -problem.tol):
            raise ArithmeticError("reward is negative on the computed stopping set")

    sol = StoppingSolution(region, boundaries, xs, vals, uncertain)
    if comonotone:
        sol.comonotone = check_comonotone(problem, sol)
    return sol


def check_comonotone(problem: StoppingProblem, solution: StoppingSolution, y_grid=None,
                     slope_tol: float = 1e-9, max_witnesses: int = 5) -> ComonotoneReport:
    """Compare slope signs of g and of y -> A^{eta(x)}{g}(y) on the stopping set.

    By default the slope of the image is taken at y = x for each grid node x
    in S.  With y_grid, every y in y_grid where the frozen image is
    nonnegative is checked for each such x.
    """
    g = problem.reward
    report = ComonotoneReport()
    xs = solution.grid
    for lo, hi in solution.region.intervals:
        inside = xs[(xs >= lo) & (xs <= hi)]
        witnesses = []
        for x in inside:
            img = image_of(problem, x)
            ys = np.array([x]) if y_grid is None else np.asarray(y_grid, dtype=float)
            iv = img(ys)
            ys = ys[np.atleast_1d(iv) >= -problem.tol]
            if problem.reward.positive_part:
                ys = ys[ys > 0]
            if not ys.size:
                continue
            h = 1e-5 * (1.0 + np.abs(ys))
            dg = (g(ys + h) - g(ys - h)) / (2 * h)
            di = (img(ys + h) - img(ys - h)) / (2 * h)
            bad = (np.abs(dg) > slope_tol) & (np.abs(di) > slope_tol) & (np.sign(dg) != np.sign(di))
            if np.any(bad) and len(witnesses) < max_witnesses:
                witnesses.append(float(x))
        report.intervals.append({"interval": (lo, hi), "pass": not witnesses, "witnesses": witnesses})
    return report


# ---------------------------------------------------------------------------
# values
# ---------------------------------------------------------------------------

def _int_poly_exp(coeffs, s, lo, hi):
    """Integral of poly(y) * exp(s*y) over [lo, hi] (possibly infinite, s != 0)."""
    coeffs = np.asarray(coeffs, dtype=float)

    def anti(y):
        if math.isinf(y):
            if y * s > 0:
                raise ValueError("divergent integral")
            return 0.0
        # d/dy [exp(sy) sum_j (-1)^j p^(j)(y)/s^(j+1)] = p(y) exp(sy)
        total = 0.0
        p = coeffs.copy()
        j = 0
        while p.size and np.any(p):
            total += (-1) ** j * np.polynomial.polynomial.polyval(y, p) / s ** (j + 1)
            p = p[1:] * np.arange(1, p.size)
            j += 1
        return math.exp(s * y) * total

    return anti(hi) - anti(lo)


def _shift_poly(coeffs, x):
    """Coefficients in y of p(x + y)."""
    out = np.zeros(len(coeffs))
    for k, ck in enumerate(coeffs):
        for j in range(k + 1):
            out[j] += ck * math.comb(k, j) * x ** (k - j)
    return out


def value_one_sided(problem: StoppingProblem, x: float, solution: StoppingSolution | None = None) -> float:
    """E[image(x + eta); x + eta in S] in closed form for the monotone modes."""
    mode = problem.eta_mode
    if not mode.monotone:
        raise ValueError("closed-form value needs a monotone eta mode; use value_mc")
    solution = solution or stopping_region(problem, comonotone=False)
    law = problem.law_at(x)
    img = image_of(problem, x)
    beta = law.beta
    sup = mode.kind == "monotone_sup"
    support = (0.0, math.inf) if sup else (-math.inf, 0.0)
    total = 0.0
    for lo, hi in solution.region.intervals:
        a = max(lo - x, support[0])
        b = min(hi - x, support[1])
        if a >= b:
            continue
        for r, poly in img.terms:
            s = r - beta if sup else r + beta
            coeffs = beta * math.exp(r * x) * _shift_poly(poly, x)
            total += _int_poly_exp(coeffs, s, a, b)
    return total


def strategy_value(model: LevyModel, g: RewardExpr, region: Region, x: float) -> float:
    """E exp(-q tau) g(x + X_tau) for the continuous first entry tau into region.

    Brownian paths enter a union of closed intervals at a boundary point, so
    the value solves the generator equation between the neighbouring
    boundaries with the reward as boundary data.
    """
    if region.contains(x):
        return float(g(x))
    pts = region.boundaries
    left = max((p for p in pts if p < x), default=-math.inf)
    right = min((p for p in pts if p > x), default=math.inf)
    rates = extrema_rates(model)
    up, down = rates.beta_plus, -rates.beta_minus
    if math.isinf(left) and math.isinf(right):
        return 0.0
    if math.isinf(left):
        return float(g(right)) * math.exp(up * (x - right))
    if math.isinf(right):
        return float(g(left)) * math.exp(down * (x - left))

    def hit(target, other):
        # solution of the generator equation equal to 1 at target and 0 at other
        num = math.exp(up * (x - other)) - math.exp(down * (x - other))
        den = math.exp(up * (target - other)) - math.exp(down * (target - other))
        return num / den

    return float(g(right)) * hit(right, left) + float(g(left)) * hit(left, right)


@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    stderr: float
    samples: int
    seed: int
    censored: float = 0.0
    tail_bound: float = 0.0


def _summarize(values, seed, censored=0.0, tail_bound=0.0) -> MCEstimate:
    values = np.asarray(values, dtype=float)
    n = values.size
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MCEstimate(float(np.sum(values) / n), se, n, seed, censored, tail_bound)


def value_mc(problem: StoppingProblem, x: float, paths: int, step: float, seed: int,
             region: Region | None = None, horizon: float | None = None, workers: int = 1) -> MCEstimate:
    """Discounted reward at the first grid entry of x + X into the region (S by default)."""
    if not step > 0:
        raise ValueError("step must be positive")
    if region is None:
        region = stopping_region(problem, comonotone=False).region
    horizon = horizon or horizon_cap(problem.model.q)
    if region.contains(x):
        v = float(problem.reward(x))
        return MCEstimate(v, 0.0, paths, seed)
    tau, pos = first_entry(problem.model, region, x, paths, step, seed, horizon, workers)
    censored = np.isnan(tau)
    payoff = np.where(censored, 0.0, np.exp(-problem.model.q * np.nan_to_num(tau)) * problem.reward(pos))
    edge = max((abs(float(problem.reward(b))) for b in region.boundaries), default=0.0)
    tail = math.exp(-problem.model.q * horizon) * edge * float(censored.mean())
    return _summarize(payoff, seed, float(censored.mean()), tail)


def value_definition_mc(problem: StoppingProblem, x: float, paths: int, step: float, seed: int,
                        region: Region | None = None, horizon: float | None = None,
                        workers: int = 1) -> MCEstimate:
    """Average of [A^{eta(x + X_tau)}{g}(x + eta(x))]^+ over simulated paths.

    eta(x) and the first entry X_tau come from the same path; the transform
    uses the closed-form eta law at the entry point.
    """
    if problem.eta_mode.kind == "empirical":
        raise ValueError("value_definition_mc needs closed-form eta laws")
    if region is None:
        region = stopping_region(problem, comonotone=False).region
    horizon = horizon or horizon_cap(problem.model.q)
    eta, tau, entry = argmax_and_entry(problem.model, problem.reward, x, region, paths, step,
                                       seed, horizon, workers)
    censored = np.isnan(tau)
    if censored.any():
        # the next entry of a continuous path happens at a boundary point
        pts = np.array(region.boundaries)
        near = pts[np.argmin(np.abs(entry[censored, None] - pts[None, :]), axis=1)]
        entry = entry.copy()
        entry[censored] = near
    z = x + eta
    if problem.eta_mode.monotone:
        vals = np.asarray(image_of(problem, x)(z), dtype=float)
    else:
        vals = _two_sided_images(problem, entry, z)
    vals = np.maximum(vals, 0.0)
    if problem.reward.positive_part:
        vals = np.where(z > 0, vals, 0.0)
    return _summarize(vals, seed, float(censored.mean()))


def value_table(problem: StoppingProblem, solution: StoppingSolution, xs) -> list[tuple[float, float, float, float]]:
    """Rows (x, g(x), image(x), V(x)); V in closed form for the candidate rule."""
    xs = np.asarray(xs, dtype=float)
    imgs = image_values(problem, xs)
    rows = []
    for x, im in zip(xs, imgs):
        if problem.eta_mode.monotone:
            v = value_one_sided(problem, x, solution)
        else:
            v = strategy_value(problem.model, problem.reward, solution.region, x)
        rows.append((float(x), float(problem.reward(x)), float(im), float(v)))
    return rows


def fractional_power_image(model: LevyModel, nu_exp: float, x: float, tol: float = 1e-9) -> float:
    """A^{eta}{y**nu_exp}(x) with eta the killed supremum, for nu_exp < 0."""
    return transform_power(monotone_law(model, "sup"), nu_exp, x, tol)
