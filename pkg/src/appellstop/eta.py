"""The argmax process and the laws of eta(x).

eta(x) is X_s at the earliest time s in [0, e_q] where g(x + X_s) is
maximal; X starts at 0, so the shift by x is built in.  For monotone g it
collapses to the killed supremum or infimum.  For the two-sided reward
exp(a y) + exp(-b y) - 2 on driftless Brownian motion there is a
closed-form law built from a threshold c(x).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .atransform import ExponentialLaw, NegExponentialLaw, NuLaw, _factorials, _geometric, series_mul
from .levy import DomainError, GridPath, LevyModel, extrema_rates, sample_killing, sample_path
from .reward import RewardExpr
from .simulate import killed_argmax

MIN_EMPIRICAL_SAMPLES = 1000


@dataclass(frozen=True)
class ArgmaxResult:
    value: float
    time: float


def argmaxproc_of_path(path: GridPath, g: RewardExpr, x: float) -> ArgmaxResult:
    """X at the earliest grid time maximizing g(x + X) up to the killing time."""
    alive = path.times <= path.killed_at
    times = path.times[alive]
    values = path.values[alive]
    if values.size == 0:
        raise ValueError("path has no grid points before the killing time")
    # np.argmax returns the first maximizer, which is the tie-break we need
    i = int(np.argmax(np.asarray(g(x + values))))
    return ArgmaxResult(float(values[i]), float(times[i]))


def sample_eta(model: LevyModel, g: RewardExpr, x: float, step: float, seed: int) -> float:
    """One draw of eta(x) from a simulated grid path."""
    if not step > 0:
        raise ValueError("step must be positive")
    killed = float(sample_killing(model, seed))
    path = sample_path(model, max(killed, step), step, seed)
    return argmaxproc_of_path(path, g, x).value


def sample_eta_batch(model: LevyModel, g: RewardExpr, xs, n: int, step: float, seed: int,
                     workers: int = 1) -> np.ndarray:
    """Draws of eta(x) for every x in xs, shape (len(xs), n), sharing paths across x."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    eta, _, _ = killed_argmax(model, [(g, x) for x in xs], n, step, seed, workers)
    return eta


# ---------------------------------------------------------------------------
# two-sided law
# ---------------------------------------------------------------------------

def _log_sinh(z):
    return z + math.log1p(-math.exp(-2.0 * z)) - math.log(2.0)


def two_sided_switch(a: float, b: float) -> float:
    """ln(b/a)/(a+b): g is decreasing below this point and increasing above."""
    return math.log(b / a) / (a + b)


def two_sided_threshold(a: float, b: float, x: float, tol: float = 1e-12) -> float:
    """c(x): the u >= 0 solving sinh(b u)/sinh(a u) = exp((a+b) x).

    Zero at and above the switch point, where f(0+) = b/a already lies
    below the target.  f is decreasing, so bracket expansion and bisection
    on log f converge to the unique root.
    """
    if not a > b > 0:
        raise ValueError("need a > b > 0")
    target = (a + b) * x
    if x >= two_sided_switch(a, b):
        return 0.0

    def h(u):
        return _log_sinh(b * u) - _log_sinh(a * u) - target

    lo, hi = 0.0, 1.0
    while h(hi) > 0.0:
        lo, hi = hi, 2.0 * hi
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if h(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _check_two_sided(a, b, q, sigma=1.0):
    beta = math.sqrt(2.0 * q) / sigma
    if not beta > a > b > 0:
        raise ValueError(f"two-sided law needs sqrt(2q)/sigma > a > b > 0, got {beta}, {a}, {b}")
    return beta


def two_sided_thresholds(a: float, b: float, xs, iters: int = 80) -> np.ndarray:
    """Vectorized c(x) by bisection on log f; same root as two_sided_threshold."""
    xs = np.asarray(xs, dtype=float)
    target = (a + b) * xs
    below = xs < two_sided_switch(a, b)

    def h(u):
        with np.errstate(divide="ignore", invalid="ignore"):
            return (b * u + np.log1p(-np.exp(-2 * b * u))) - (a * u + np.log1p(-np.exp(-2 * a * u))) - target

    lo = np.zeros_like(xs)
    hi = np.ones_like(xs)
    grow = below & (h(hi) > 0)
    while grow.any():
        lo = np.where(grow, hi, lo)
        hi = np.where(grow, 2 * hi, hi)
        grow = below & (h(hi) > 0)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = h(mid) > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    return np.where(below, 0.5 * (lo + hi), 0.0)


def eta_mgf_two_sided(a: float, b: float, q: float, x: float, u: float, sigma: float = 1.0) -> float:
    """E exp(u eta(x)) for the two-sided reward, |u| < sqrt(2q)/sigma."""
    beta = _check_two_sided(a, b, q, sigma)
    if not abs(u) < beta:
        raise DomainError(f"|u| must be below {beta}")
    if x >= two_sided_switch(a, b):
        return beta / (beta - u)
    c = two_sided_threshold(a, b, x)
    return (beta / (beta - u) * math.exp(-c * (beta - u))
            - beta / (beta + u) * math.exp(-c * (beta + u))
            + beta / (beta + u))


class TwoSidedLaw(NuLaw):
    """Closed-form law of eta(x) for exp(a y) + exp(-b y) - 2 over driftless Brownian motion.

    Above the switch point this is Exp(beta) with beta = sqrt(2q)/sigma.
    Below it, mass e^{-beta c} sits on [c, inf) with the supremum density and
    the rest on (-c, 0] with the infimum density.  Sampling draws E ~ Exp(beta)
    and returns E if E >= c, else -E.
    """

    def __init__(self, a: float, b: float, q: float, x: float, sigma: float = 1.0):
        self.beta = _check_two_sided(a, b, q, sigma)
        self.a, self.b, self.q, self.x, self.sigma = a, b, q, x, sigma
        self.upper = x >= two_sided_switch(a, b)
        self.threshold = 0.0 if self.upper else two_sided_threshold(a, b, x)
        self.interval = (-math.inf, self.beta) if self.upper else (-self.beta, self.beta)
        self.tag = f"two_sided:{a:g},{b:g},{q:g}@{x:.6g}"

    def mgf(self, u):
        u = np.asarray(u, dtype=float)
        lo, hi = self.interval
        if np.any((u <= lo) | (u >= hi)):
            raise DomainError(f"u outside {self.interval}")
        B, c = self.beta, self.threshold
        if self.upper:
            return B / (B - u)
        return B / (B - u) * np.exp(-c * (B - u)) - B / (B + u) * np.exp(-c * (B + u)) + B / (B + u)

    def taylor_coeffs(self, a, k):
        self.check(a)
        B, c = self.beta, self.threshold
        up = _geometric(B / (B - a), 1.0 / (B - a), k)
        if self.upper:
            return up
        down = _geometric(B / (B + a), -1.0 / (B + a), k)
        exp_up = math.exp(-c * (B - a)) * c ** np.arange(k + 1) / _factorials(k)
        exp_down = math.exp(-c * (B + a)) * (-c) ** np.arange(k + 1) / _factorials(k)
        return series_mul(up, exp_up) - series_mul(down, exp_down) + down

    def sample(self, seed, size=None):
        e = np.random.default_rng([int(seed), 14]).exponential(1.0 / self.beta, size)
        return np.where(e >= self.threshold, e, -e)


# ---------------------------------------------------------------------------
# empirical law
# ---------------------------------------------------------------------------

class EmpiricalLaw(NuLaw):
    """Law of a sample, with delete-one jackknife errors for smooth functionals."""

    def __init__(self, samples, tag: str = "empirical"):
        s = np.asarray(samples, dtype=float).ravel()
        if s.size < MIN_EMPIRICAL_SAMPLES:
            raise ValueError(f"need at least {MIN_EMPIRICAL_SAMPLES} samples, got {s.size}")
        self.samples = s
        self.tag = f"{tag}[{s.size}]"

    def mgf(self, u):
        u = np.asarray(u, dtype=float)
        return np.exp(np.multiply.outer(u, self.samples)).mean(axis=-1)

    def _terms(self, a, k):
        """Per-sample contributions nu^j e^{a nu} / j!, shape (k+1, n)."""
        s = self.samples
        powers = s[None, :] ** np.arange(k + 1)[:, None] / _factorials(k)[:, None]
        return powers * np.exp(a * s)[None, :]

    def taylor_coeffs(self, a, k):
        return self._terms(a, k).mean(axis=1)

    def leave_one_out_taylor(self, a, k) -> np.ndarray:
        """Taylor coefficients with each sample deleted in turn, shape (n, k+1)."""
        t = self._terms(a, k)
        n = t.shape[1]
        return ((t.sum(axis=1)[:, None] - t) / (n - 1)).T

    def jackknife_se(self, stat_from_taylor, a, k) -> float:
        """Jackknife standard error of stat(taylor_coeffs(a, k)).

        stat must act row-wise on an (n, k+1) array of leave-one-out coefficients.
        """
        vals = np.asarray(stat_from_taylor(self.leave_one_out_taylor(a, k)))
        n = vals.size
        return float(math.sqrt((n - 1) / n * np.sum((vals - vals.mean()) ** 2)))

    def mgf_se(self, u: float) -> float:
        # for a plain mean the jackknife reduces to the usual standard error
        v = np.exp(u * self.samples)
        return float(v.std(ddof=1) / math.sqrt(v.size))

    def moments(self, k):
        return float(np.mean(self.samples**k))

    def sample(self, seed, size=None):
        rng = np.random.default_rng([int(seed), 15])
        return rng.choice(self.samples, size=size, replace=True)


def empirical_law(samples) -> EmpiricalLaw:
    return EmpiricalLaw(samples)


def monotone_law(model: LevyModel, side: str) -> NuLaw:
    rates = extrema_rates(model)
    if side == "sup":
        return ExponentialLaw(rates.beta_plus)
    if side == "inf":
        return NegExponentialLaw(rates.beta_minus)
    raise ValueError(side)
