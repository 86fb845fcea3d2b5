"""Brownian motion with drift, killed at an independent exponential time.

The process is X_t = mu*t + sigma*W_t started at 0, discounted at rate q.
Everything the rest of the package needs from the driving process lives
here: the Laplace exponent, the exact extrema laws at the killing time
and seeded path samplers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# -zeta(1/2)/sqrt(2*pi): the grid maximum of a Brownian path with step h
# sits on average this many sigma*sqrt(h) below the continuous maximum.
GRID_EXTREMUM_SHIFT = 0.5825971579390106


class DomainError(ValueError):
    """Raised when a transform or MGF is evaluated outside its validity interval."""


@dataclass(frozen=True)
class LevyModel:
    mu: float
    sigma: float
    q: float

    def __post_init__(self):
        for name in ("mu", "sigma", "q"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive (degenerate diffusion is not supported)")
        if self.q <= 0.0:
            raise ValueError("q must be positive")


@dataclass(frozen=True)
class ExtremaRates:
    beta_plus: float
    beta_minus: float


@dataclass(frozen=True)
class GridPath:
    times: np.ndarray
    values: np.ndarray
    killed_at: float

    def alive(self) -> "GridPath":
        """Restriction of the path to grid times not after the killing time."""
        keep = self.times <= self.killed_at
        return GridPath(self.times[keep], self.values[keep], self.killed_at)


def laplace_exponent(model: LevyModel, u):
    """psi(u) = log E exp(u X_1) = sigma^2 u^2 / 2 + mu u."""
    return 0.5 * model.sigma**2 * u * u + model.mu * u


def extrema_rates(model: LevyModel) -> ExtremaRates:
    """Rates of the exponential laws of sup and -inf of X over [0, e_q].

    beta_plus and -beta_minus are the two roots of psi(u) = q.
    """
    s2 = model.sigma**2
    disc = math.sqrt(model.mu**2 + 2.0 * model.q * s2)
    # written to avoid cancellation when mu dominates
    if model.mu >= 0.0:
        beta_minus = (model.mu + disc) / s2
        beta_plus = 2.0 * model.q / (model.mu + disc)
    else:
        beta_plus = (disc - model.mu) / s2
        beta_minus = 2.0 * model.q / (disc - model.mu)
    return ExtremaRates(beta_plus, beta_minus)


def mgf_extremum(model: LevyModel, side: str, u: float) -> float:
    """E exp(u * sup) or E exp(u * inf) of X over [0, e_q]."""
    rates = extrema_rates(model)
    if side == "sup":
        if u >= rates.beta_plus:
            raise DomainError(f"u={u} outside sup MGF domain (-inf, {rates.beta_plus})")
        return rates.beta_plus / (rates.beta_plus - u)
    if side == "inf":
        if u <= -rates.beta_minus:
            raise DomainError(f"u={u} outside inf MGF domain ({-rates.beta_minus}, inf)")
        return rates.beta_minus / (rates.beta_minus + u)
    raise ValueError(f"side must be 'sup' or 'inf', got {side!r}")


def grid_extremum_bias(model: LevyModel, step: float) -> float:
    """Leading-order gap between continuous and grid extrema, in space units."""
    return GRID_EXTREMUM_SHIFT * model.sigma * math.sqrt(step)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator keyed by (seed, *stream); chunk k of a run uses stream (tag, k)."""
    return np.random.default_rng([int(seed), *map(int, stream)])


def sample_killing(model: LevyModel, seed: int, size=None):
    rng = make_rng(seed, 0)
    return rng.exponential(1.0 / model.q, size=size)


def sample_path(model: LevyModel, horizon: float, step: float, seed: int) -> GridPath:
    if not step > 0.0:
        raise ValueError("step must be positive")
    if horizon < step:
        raise ValueError("horizon must be at least one step")
    n = int(math.floor(horizon / step + 1e-9))
    times = step * np.arange(n + 1)
    rng = make_rng(seed, 1)
    incr = model.mu * step + model.sigma * math.sqrt(step) * rng.standard_normal(n)
    values = np.concatenate(([0.0], np.cumsum(incr)))
    # killing draws come from a separate stream so they never shift increments
    killed_at = float(sample_killing(model, seed))
    return GridPath(times, values, killed_at)


def sample_increments(model: LevyModel, step: float, n_paths: int, n_steps: int, seed: int) -> np.ndarray:
    """Array (n_paths, n_steps) of independent grid increments."""
    if not step > 0.0:
        raise ValueError("step must be positive")
    rng = make_rng(seed, 2)
    z = rng.standard_normal((n_paths, n_steps))
    return model.mu * step + model.sigma * math.sqrt(step) * z
