"""The A-transform of exponential-polynomial rewards.

For a random variable nu with MGF M and a reward term y**n * exp(r*y) the
image is the n-th u-derivative of exp(u*y) / M(u) at u = r.  By Leibniz
that is

    exp(r*y) * sum_j C(n, j) * y**j * (1/M)^(n-j)(r),

so every image is again an exponential polynomial whose coefficients are
Taylor coefficients of 1/M at the term rates.  Those come from the Taylor
series of M by the usual reciprocal recursion, which keeps everything
exact up to floating point for any law that can report its own Taylor data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .levy import DomainError, LevyModel
from .reward import RewardExpr


class SingularLawError(ArithmeticError):
    """The MGF vanishes where its reciprocal is needed."""


# ---------------------------------------------------------------------------
# truncated power series, stored as normalized Taylor coefficients f^(j)/j!
# ---------------------------------------------------------------------------

def series_mul(f, g):
    k = min(len(f), len(g))
    return np.convolve(f[:k], g[:k])[:k]


def series_reciprocal(f):
    """Coefficients of 1/f from those of f (f[..., 0] != 0), along the last axis."""
    f = np.asarray(f, dtype=float)
    f0 = f[..., 0]
    if np.any(f0 == 0.0) or not np.all(np.isfinite(f0)):
        raise SingularLawError("series has zero constant term")
    out = np.zeros_like(f)
    out[..., 0] = 1.0 / f0
    for j in range(1, f.shape[-1]):
        acc = np.sum(f[..., 1 : j + 1] * out[..., j - 1 :: -1][..., :j], axis=-1)
        out[..., j] = -acc / f0
    return out


def series_exp(f):
    """Coefficients of exp(f) via the recursion e' = f' e."""
    f = np.asarray(f, dtype=float)
    out = np.zeros_like(f)
    out[0] = math.exp(f[0])
    for j in range(1, len(f)):
        i = np.arange(1, j + 1)
        out[j] = np.dot(i * f[1 : j + 1], out[j - i]) / j
    return out


def _geometric(scale, ratio, k):
    """Coefficients of scale / (1 - ratio*h)."""
    return scale * ratio ** np.arange(k + 1)


def _factorials(k):
    return np.array([math.factorial(j) for j in range(k + 1)], dtype=float)


# ---------------------------------------------------------------------------
# laws
# ---------------------------------------------------------------------------

class NuLaw:
    """A random variable known through its MGF on an open interval around 0.

    Subclasses provide ``interval``, ``mgf``, ``taylor_coeffs`` and ``sample``.
    """

    interval: tuple[float, float] = (-math.inf, math.inf)
    tag: str = "law"

    def contains(self, u: float) -> bool:
        lo, hi = self.interval
        return lo < u < hi

    def check(self, u: float) -> None:
        if not self.contains(u):
            raise DomainError(f"u={u} outside MGF validity interval {self.interval} of {self.tag}")

    def mgf(self, u):
        raise NotImplementedError

    def taylor_coeffs(self, a: float, k: int) -> np.ndarray:
        """M^(j)(a) / j! for j = 0..k."""
        raise NotImplementedError

    def taylor(self, a: float, k: int) -> np.ndarray:
        """M^(j)(a) for j = 0..k."""
        return self.taylor_coeffs(a, k) * _factorials(k)

    def moments(self, k: int) -> float:
        return float(self.taylor(0.0, k)[k])

    def sample(self, seed: int, size=None):
        raise NotImplementedError

    def __repr__(self):
        return f"<{self.tag}>"


class DegenerateLaw(NuLaw):
    def __init__(self, value: float = 0.0):
        self.value = float(value)
        self.tag = f"const:{self.value:g}"

    def mgf(self, u):
        return np.exp(np.asarray(u, dtype=float) * self.value)

    def taylor_coeffs(self, a, k):
        return math.exp(a * self.value) * self.value ** np.arange(k + 1) / _factorials(k)

    def sample(self, seed, size=None):
        return np.full(size, self.value) if size is not None else self.value


class ExponentialLaw(NuLaw):
    """nu ~ Exp(beta) on [0, inf); the law of the killed supremum."""

    def __init__(self, beta: float):
        if not beta > 0:
            raise ValueError("beta must be positive")
        self.beta = float(beta)
        self.interval = (-math.inf, self.beta)
        self.tag = f"exp:{self.beta:g}"

    def mgf(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u >= self.beta):
            raise DomainError(f"u must be below {self.beta}")
        return self.beta / (self.beta - u)

    def taylor_coeffs(self, a, k):
        self.check(a)
        d = self.beta - a
        return _geometric(self.beta / d, 1.0 / d, k)

    def sample(self, seed, size=None):
        return np.random.default_rng([int(seed), 11]).exponential(1.0 / self.beta, size)


class NegExponentialLaw(NuLaw):
    """nu = -Exp(beta) on (-inf, 0]; the law of the killed infimum."""

    def __init__(self, beta: float):
        if not beta > 0:
            raise ValueError("beta must be positive")
        self.beta = float(beta)
        self.interval = (-self.beta, math.inf)
        self.tag = f"negexp:{self.beta:g}"

    def mgf(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u <= -self.beta):
            raise DomainError(f"u must be above {-self.beta}")
        return self.beta / (self.beta + u)

    def taylor_coeffs(self, a, k):
        self.check(a)
        d = self.beta + a
        return _geometric(self.beta / d, -1.0 / d, k)

    def sample(self, seed, size=None):
        return -np.random.default_rng([int(seed), 12]).exponential(1.0 / self.beta, size)


class NormalLaw(NuLaw):
    def __init__(self, mean: float, var: float):
        if var < 0:
            raise ValueError("variance must be nonnegative")
        self.mean = float(mean)
        self.var = float(var)
        self.tag = f"normal:{self.mean:g},{self.var:g}"

    @classmethod
    def of_process(cls, model: LevyModel, t: float) -> "NormalLaw":
        """Law of X_t, whose MGF is exp(t * psi(u))."""
        law = cls(model.mu * t, model.sigma**2 * t)
        law.tag = f"bm:{model.mu:g},{model.sigma:g},{t:g}"
        return law

    def mgf(self, u):
        u = np.asarray(u, dtype=float)
        return np.exp(self.mean * u + 0.5 * self.var * u * u)

    def taylor_coeffs(self, a, k):
        cgf = np.zeros(k + 1)
        cgf[0] = self.mean * a + 0.5 * self.var * a * a
        if k >= 1:
            cgf[1] = self.mean + self.var * a
        if k >= 2:
            cgf[2] = 0.5 * self.var
        return series_exp(cgf)

    def sample(self, seed, size=None):
        rng = np.random.default_rng([int(seed), 13])
        return self.mean + math.sqrt(self.var) * rng.standard_normal(size)


def parse_law(spec: str) -> NuLaw:
    """``exp:<beta>``, ``negexp:<beta>``, ``bm:<mu>,<sigma>,<t>`` or ``const:<v>``."""
    kind, _, args = spec.partition(":")
    try:
        vals = [float(v) for v in args.split(",")] if args else []
    except ValueError:
        raise ValueError(f"bad law parameters in {spec!r}") from None
    if kind == "exp" and len(vals) == 1:
        return ExponentialLaw(vals[0])
    if kind == "negexp" and len(vals) == 1:
        return NegExponentialLaw(vals[0])
    if kind == "bm" and len(vals) == 3:
        mu, sigma, t = vals
        return NormalLaw.of_process(LevyModel(mu, sigma, 1.0), t)
    if kind == "const" and len(vals) <= 1:
        return DegenerateLaw(vals[0] if vals else 0.0)
    raise ValueError(f"unknown law spec {spec!r}")


# ---------------------------------------------------------------------------
# images
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransformImage:
    """sum over terms of exp(rate*y) * poly(y), poly coefficients ascending."""

    terms: tuple[tuple[float, tuple[float, ...]], ...]
    law_tag: str = ""

    def __call__(self, y):
        return eval_image(self, y)

    def coefficients(self, rate: float) -> np.ndarray:
        for r, poly in self.terms:
            if r == rate:
                return np.array(poly)
        return np.zeros(1)

    def scaled(self, k: float) -> "TransformImage":
        return _image_from({r: k * np.array(p) for r, p in self.terms}, self.law_tag)

    def __add__(self, other: "TransformImage") -> "TransformImage":
        acc: dict[float, np.ndarray] = {}
        for r, p in self.terms + other.terms:
            acc[r] = _poly_add(acc.get(r, np.zeros(1)), np.array(p))
        return _image_from(acc, self.law_tag)

    def derivative(self) -> "TransformImage":
        acc = {}
        for r, p in self.terms:
            p = np.array(p)
            dp = p[1:] * np.arange(1, len(p)) if len(p) > 1 else np.zeros(1)
            acc[r] = _poly_add(dp, r * p)
        return _image_from(acc, self.law_tag)


def _poly_add(p, q):
    out = np.zeros(max(len(p), len(q)))
    out[: len(p)] += p
    out[: len(q)] += q
    return out


def _image_from(acc, tag) -> TransformImage:
    terms = []
    for r in sorted(acc):
        p = np.trim_zeros(np.asarray(acc[r], dtype=float), "b")
        if p.size:
            terms.append((float(r), tuple(float(v) for v in p)))
    return TransformImage(tuple(terms), tag)


def eval_image(img: TransformImage, y):
    y_arr = np.asarray(y, dtype=float)
    out = np.zeros_like(y_arr)
    for r, poly in img.terms:
        val = np.polynomial.polynomial.polyval(y_arr, poly)
        out = out + (val * np.exp(r * y_arr) if r != 0.0 else val)
    return out if out.ndim else float(out)


def reciprocal_mgf_derivs(law: NuLaw, a: float, k: int) -> np.ndarray:
    """d^j/du^j (1/M)(a) for j = 0..k."""
    law.check(a)
    coeffs = law.taylor_coeffs(a, k)
    if coeffs[0] == 0.0:
        raise SingularLawError(f"M({a}) = 0 for {law.tag}")
    return series_reciprocal(coeffs) * _factorials(k)


def transform(expr: RewardExpr, law: NuLaw) -> TransformImage:
    if expr.positive_part:
        raise ValueError("transform the analytic part (expr.analytic) of a positive-part reward")
    acc: dict[float, np.ndarray] = {}
    for t in expr.terms:
        law.check(t.r)
        rho = series_reciprocal(law.taylor_coeffs(t.r, t.n))
        if not np.all(np.isfinite(rho)):
            raise SingularLawError(f"non-finite reciprocal series at rate {t.r} for {law.tag}")
        j = np.arange(t.n + 1)
        # n!/j! * rho_{n-j} is C(n, j) * (1/M)^(n-j)(r)
        ratio = np.array([math.factorial(t.n) / math.factorial(i) for i in j])
        poly = t.c * ratio * rho[t.n - j]
        acc[t.r] = _poly_add(acc.get(t.r, np.zeros(1)), poly)
    return _image_from(acc, law.tag)


def appell_poly(law: NuLaw, n: int) -> np.ndarray:
    """Ascending coefficients of the Appell polynomial Q_n generated by law."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    img = transform(RewardExpr.from_terms([(1.0, n, 0.0)]), law)
    coeffs = np.zeros(n + 1)
    poly = img.coefficients(0.0)
    if not np.all(np.isfinite(poly)):
        raise ValueError(f"{law.tag} lacks finite moments up to order {n}")
    coeffs[: len(poly)] = poly
    return coeffs


def transform_power(law: NuLaw, nu_exp: float, y: float, tol: float = 1e-9) -> float:
    """Image of y**nu_exp (nu_exp < 0) under the A-transform.

    Integrates u**(-nu_exp-1)/Gamma(-nu_exp) * exp(-u*y) / M(-u) over
    (0, inf).  The algebraic factor near 0 is handled by a weighted rule on
    (0, 1/y]; the tail [1/y, inf) uses QUADPACK's infinite-range mapping.
    """
    if not nu_exp < 0:
        raise ValueError("nu_exp must be negative")
    if not y > 0:
        raise ValueError("y must be positive; the integral diverges otherwise")
    if law.interval[0] != -math.inf:
        raise DomainError(f"{law.tag} has no MGF on the whole negative half-line")
    s = -nu_exp
    log_gamma = math.lgamma(s)

    def smooth(u):
        return math.exp(-u * y - log_gamma) / float(law.mgf(-u))

    split = 1.0 / y
    head, err_h = integrate.quad(smooth, 0.0, split, weight="alg", wvar=(s - 1.0, 0.0),
                                 epsabs=tol / 2, epsrel=0.0, limit=200)
    tail, err_t = integrate.quad(lambda u: u ** (s - 1.0) * smooth(u), split, math.inf,
                                 epsabs=tol / 2, epsrel=0.0, limit=200)
    return head + tail
