"""Statistical checks of the transform identities and of the stopping rule.

Each check returns CheckReport rows.  A row passes when
|estimate - target| <= 3 * stderr + allowance, where the allowance is a
deterministic discretization budget computed from the grid step (zero for
checks that involve no path discretization).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .atransform import DegenerateLaw, ExponentialLaw, NegExponentialLaw, NormalLaw, NuLaw, transform
from .eta import eta_mgf_two_sided, two_sided_switch
from .levy import LevyModel, extrema_rates, grid_extremum_bias, make_rng
from .region import Region
from .reward import RewardExpr, derivative, power_reward, two_sided_reward
from .simulate import killed_argmax
from .solver import StoppingProblem, StoppingSolution, stopping_region, value_definition_mc, value_mc

SUITES = ("averaging", "martingale", "dominance", "etalaw", "identity")
SHIFTS = (-1.0, -0.5, -0.25, 0.25, 0.5, 1.0)


@dataclass(frozen=True)
class CheckReport:
    name: str
    x: float
    estimate: float
    target: float
    stderr: float
    allowance: float
    passed: bool
    seed: int
    samples: int

    def as_row(self) -> dict:
        return asdict(self)


def _report(name, x, estimate, target, stderr, allowance, seed, samples) -> CheckReport:
    if stderr < 0:
        raise ValueError("stderr must be nonnegative")
    ok = abs(estimate - target) <= 3.0 * stderr + allowance
    return CheckReport(name, float(x), float(estimate), float(target), float(stderr),
                       float(allowance), bool(ok), int(seed), int(samples))


def _mean_se(v):
    v = np.asarray(v, dtype=float)
    if np.all(v == v[0]):
        return float(v[0]), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def check_averaging(law: NuLaw, g: RewardExpr, y_grid, samples: int, seed: int,
                    name: str = "averaging") -> list[CheckReport]:
    """E image(y + nu) against g(y) for each y."""
    img = transform(g.analytic, law)
    nu = np.asarray(law.sample(seed, samples), dtype=float)
    out = []
    for y in np.asarray(y_grid, dtype=float):
        est, se = _mean_se(img(y + nu))
        out.append(_report(name, y, est, float(g.analytic(y)), se, 0.0, seed, samples))
    return out


def check_martingale(model: LevyModel, g: RewardExpr, times, paths: int, step: float,
                     seed: int) -> list[CheckReport]:
    """E A^{X_t}{g}(X_t) against g(0), with X_t taken at the grid time nearest below t."""
    if not step > 0:
        raise ValueError("step must be positive")
    out = []
    for i, t in enumerate(times):
        n = int(math.floor(t / step + 1e-9))
        tg = n * step
        if n == 0:
            out.append(_report(f"martingale[t={t:g}]", 0.0, float(g.analytic(0.0)),
                               float(g.analytic(0.0)), 0.0, 0.0, seed, paths))
            continue
        law = NormalLaw.of_process(model, tg)
        img = transform(g.analytic, law)
        # the sum of n Gaussian increments is drawn in one go; its law is exact
        rng = make_rng(seed, 201, i)
        xt = model.mu * tg + model.sigma * math.sqrt(tg) * rng.standard_normal(paths)
        est, se = _mean_se(img(xt))
        out.append(_report(f"martingale[t={t:g}]", 0.0, est, float(g.analytic(0.0)), se, 0.0, seed, paths))
    return out


def entry_allowance(problem: StoppingProblem, region: Region, step: float) -> float:
    """Bias budget for grid first-entry payoffs.

    Discrete monitoring overshoots a boundary b by about
    GRID_EXTREMUM_SHIFT * sigma * sqrt(step); to first order this moves the
    payoff by |g'(b)| times the overshoot and the discount by the extra
    travel time, bounded here by beta * |g(b)| per unit overshoot.
    """
    pts = region.boundaries
    if not pts:
        return 0.0
    delta = grid_extremum_bias(problem.model, step)
    rates = extrema_rates(problem.model)
    beta = max(rates.beta_plus, rates.beta_minus)
    dg = derivative(problem.reward.analytic)
    slope = max(abs(float(dg(b))) + beta * abs(float(problem.reward(b))) for b in pts)
    return delta * slope


def perturbed_strategies(region: Region, shifts=SHIFTS) -> list[tuple[str, Region]]:
    out = []
    for i, b in enumerate(region.boundaries):
        for d in shifts:
            out.append((f"b{i}{d:+g}", region.shift_boundary(i, d)))
    return out


def check_dominance(problem: StoppingProblem, strategies, x_list, paths: int, step: float,
                    seed: int, solution: StoppingSolution | None = None,
                    workers: int = 1) -> list[CheckReport]:
    """Value of each strategy region against the value of S, one-sided.

    A row passes when strategy <= V + 3 * combined SE + allowance.  The
    estimate column holds the strategy value and target holds V.
    """
    solution = solution or stopping_region(problem, comonotone=False)
    out = []
    for x in x_list:
        v = value_mc(problem, x, paths, step, seed, region=solution.region, workers=workers)
        for k, (label, region) in enumerate(strategies):
            s = value_mc(problem, x, paths, step, seed + 1 + k, region=region, workers=workers)
            se = math.hypot(v.stderr, s.stderr)
            allow = max(entry_allowance(problem, region, step), entry_allowance(problem, solution.region, step))
            ok = s.estimate <= v.estimate + 3.0 * se + allow
            out.append(CheckReport(f"dominance[{label}]", float(x), s.estimate, v.estimate, se, allow,
                                   bool(ok), seed + 1 + k, paths))
    return out


def check_eta_law(problem: StoppingProblem, x_list, u_list, samples: int, step: float,
                  seed: int, workers: int = 1) -> list[CheckReport]:
    """Empirical MGF of simulated eta(x) against the closed-form two-sided MGF."""
    mode = problem.eta_mode
    if mode.kind != "two_sided":
        raise ValueError("eta-law check needs the two-sided mode")
    m = problem.model
    beta = math.sqrt(2.0 * m.q) / m.sigma
    for u in u_list:
        if not abs(u) < beta:
            raise ValueError(f"u={u} outside (-{beta}, {beta})")
    eta, _, _ = killed_argmax(m, [(problem.reward, x) for x in x_list], samples, step, seed, workers)
    delta = grid_extremum_bias(m, step)
    out = []
    for x, e in zip(x_list, eta):
        for u in u_list:
            target = eta_mgf_two_sided(mode.a, mode.b, m.q, x, u, m.sigma)
            est, se = _mean_se(np.exp(u * e))
            allow = abs(target) * math.expm1(abs(u) * delta)
            out.append(_report(f"etalaw[u={u:g}]", x, est, target, se, allow, seed, samples))
    return out


def check_identity(problem: StoppingProblem, x_list, paths: int, step: float, seed: int,
                   solution: StoppingSolution | None = None, workers: int = 1) -> list[CheckReport]:
    """Value from the transform identity against the first-entry value."""
    solution = solution or stopping_region(problem, comonotone=False)
    out = []
    for x in x_list:
        d = value_definition_mc(problem, x, paths, step, seed, region=solution.region, workers=workers)
        v = value_mc(problem, x, paths, step, seed + 1, region=solution.region, workers=workers)
        se = math.hypot(d.stderr, v.stderr)
        allow = entry_allowance(problem, solution.region, step)
        out.append(_report("identity", x, d.estimate, v.estimate, se, allow, seed, paths))
    return out


# ---------------------------------------------------------------------------
# default suites
# ---------------------------------------------------------------------------

def averaging_laws() -> list[NuLaw]:
    return [DegenerateLaw(0.0), ExponentialLaw(0.2), NegExponentialLaw(0.2), NormalLaw(0.0, 1.0)]


def averaging_rewards() -> list[tuple[str, RewardExpr]]:
    return [
        ("exp", RewardExpr.from_terms([(1.0, 0, 0.1)])),
        ("square", power_reward(2).analytic),
        ("linexp", RewardExpr.from_terms([(1.0, 1, 0.05)])),
        ("two_sided", two_sided_reward(0.1, 0.05)),
    ]


def probe_points(problem: StoppingProblem) -> list[float]:
    """threshold - 10, 0 and threshold + 10, clipped to the scan grid."""
    center = 0.0
    if problem.eta_mode.kind == "two_sided":
        center = two_sided_switch(problem.eta_mode.a, problem.eta_mode.b)
    lo, hi = problem.grid.lo, problem.grid.hi
    pts = []
    for x in (center - 10.0, 0.0, center + 10.0):
        x = min(max(x, lo), hi)
        if x not in pts:
            pts.append(x)
    return pts


def run_suite(name: str, problem: StoppingProblem, paths: int, step: float, seed: int,
              solution: StoppingSolution | None = None, workers: int = 1) -> list[CheckReport]:
    if name == "all":
        out = []
        for s in SUITES:
            if s == "etalaw" and problem.eta_mode.kind != "two_sided":
                continue
            out += run_suite(s, problem, paths, step, seed, solution, workers)
        return out
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
    if name == "averaging":
        out = []
        for i, law in enumerate(averaging_laws()):
            for j, (label, g) in enumerate(averaging_rewards()):
                out += check_averaging(law, g, [-10.0, -5.0, 0.0, 5.0, 10.0], paths, seed + 10 * i + j,
                                       name=f"averaging[{law.tag}|{label}]")
        return out
    if name == "martingale":
        return check_martingale(problem.model, problem.reward, [0.5, 1.0, 2.0], paths, step, seed)
    if name == "etalaw":
        return check_eta_law(problem, [-10.0, -6.0, 0.0, 5.0], [-0.1, -0.05, 0.05, 0.1], paths, step,
                             seed, workers)
    solution = solution or stopping_region(problem, comonotone=False)
    xs = probe_points(problem)
    if name == "dominance":
        return check_dominance(problem, perturbed_strategies(solution.region), xs, paths, step, seed,
                               solution, workers)
    return check_identity(problem, xs, paths, step, seed, solution, workers)
