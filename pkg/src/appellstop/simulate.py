"""Vectorized Monte Carlo path engines.

Paths are generated in fixed-size chunks; chunk k of a run with seed s
draws from ``make_rng(s, tag, k)``.  Results therefore depend only on
(seed, chunk size), never on how many workers process the chunks, and
per-chunk outputs are concatenated in chunk order before any reduction.

Two engines live here:

* ``killed_argmax`` streams grid paths up to an independent exponential
  killing time and tracks the earliest grid argmax of g(x + X) for
  several (g, x) targets at once.
* ``first_entry`` finds the first grid time at which x + X lies in a
  region.  Far from the region it jumps over runs of grid points at once:
  a jump of m steps is taken only if the chance that any skipped grid point
  lands in the region is below ``SKIP_EPS``, so the estimator has the law
  of the plain grid scheme up to that probability per jump.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.special import ndtri

from .levy import LevyModel, make_rng
from .region import Region

CHUNK = 8192
BLOCK = 512
SKIP_EPS = 1e-12
_SKIP_Z = float(-ndtri(SKIP_EPS / 4.0))


def horizon_cap(q: float, level: float = 1e-8) -> float:
    """Time T with exp(-q T) = level."""
    return math.log(1.0 / level) / q


def run_chunks(fn, n: int, seed: int, tag: int, chunk: int = CHUNK, workers: int = 1):
    """Call fn(rng, size) for each chunk; results returned in chunk order."""
    sizes = [min(chunk, n - i) for i in range(0, n, chunk)]
    jobs = [(make_rng(seed, tag, k), size) for k, size in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda job: fn(*job), jobs))
    return [fn(*job) for job in jobs]


def _killing_steps(model, rng, size, step):
    eq = rng.exponential(1.0 / model.q, size)
    return np.floor(eq / step).astype(np.int64)


def _block(model, rng, start, n_rows, blk, step):
    incr = model.mu * step + model.sigma * math.sqrt(step) * rng.standard_normal((n_rows, blk))
    return start[:, None] + np.cumsum(incr, axis=1)


def _last_positions(P, steps_left):
    idx = np.minimum(steps_left, P.shape[1]) - 1
    return P[np.arange(P.shape[0]), idx]


def killed_argmax(model: LevyModel, targets, n: int, step: float, seed: int, workers: int = 1):
    """Argmax process values up to e_q for each (g, x) in targets.

    Returns (eta, sup, inf) where eta has shape (len(targets), n) and holds
    X at the earliest grid time maximizing g(x + X), and sup/inf are the grid
    extrema of X over [0, e_q].
    """
    if not step > 0:
        raise ValueError("step must be positive")
    targets = list(targets)

    def chunk(rng, size):
        steps = _killing_steps(model, rng, size, step)
        best_g = np.array([np.full(size, float(g(x))) for g, x in targets]).reshape(len(targets), size)
        best_v = np.zeros((len(targets), size))
        sup = np.zeros(size)
        inf = np.zeros(size)
        last = np.zeros(size)
        alive = np.flatnonzero(steps > 0)
        done = 0
        while alive.size:
            left = steps[alive] - done
            blk = int(min(BLOCK, left.max()))
            P = _block(model, rng, last[alive], alive.size, blk, step)
            valid = np.arange(1, blk + 1)[None, :] <= left[:, None]
            sup[alive] = np.maximum(sup[alive], np.where(valid, P, -np.inf).max(axis=1))
            inf[alive] = np.minimum(inf[alive], np.where(valid, P, np.inf).min(axis=1))
            rows = np.arange(alive.size)
            for k, (g, x) in enumerate(targets):
                G = np.where(valid, g(x + P), -np.inf)
                j = np.argmax(G, axis=1)
                gm = G[rows, j]
                # strict improvement keeps the earliest maximizer
                upd = gm > best_g[k, alive]
                best_g[k, alive[upd]] = gm[upd]
                best_v[k, alive[upd]] = P[rows[upd], j[upd]]
            last[alive] = _last_positions(P, left)
            done += blk
            alive = alive[steps[alive] > done]
        return best_v, sup, inf

    parts = run_chunks(chunk, n, seed, 101, workers=workers)
    eta = np.concatenate([p[0] for p in parts], axis=1)
    sup = np.concatenate([p[1] for p in parts])
    inf = np.concatenate([p[2] for p in parts])
    return eta, sup, inf


def skip_steps(model: LevyModel, dist, step: float) -> np.ndarray:
    """Largest number of grid steps whose skipped points stay outside a region at distance dist."""
    z = _SKIP_Z * model.sigma
    m = abs(model.mu)
    dist = np.asarray(dist, dtype=float)
    if m == 0.0:
        root = dist / z
    else:
        root = (-z + np.sqrt(z * z + 4.0 * m * dist)) / (2.0 * m)
    with np.errstate(invalid="ignore", over="ignore"):
        k = np.floor(root * root / step)
    k = np.where(np.isfinite(k), k, 2**40)
    return np.maximum(k, 1).astype(np.int64)


def _advance_to_entry(model, region, rng, pos, k, tau, idx, step, max_steps):
    """Continue paths idx (in place) until grid entry into region or max_steps."""
    alive = idx
    while alive.size:
        m = skip_steps(model, region.distance(pos[alive]), step)
        m = np.minimum(m, max_steps - k[alive])
        dt = m * step
        pos[alive] += model.mu * dt + model.sigma * np.sqrt(dt) * rng.standard_normal(alive.size)
        k[alive] += m
        hit = region.contains(pos[alive])
        tau[alive[hit]] = k[alive[hit]] * step
        alive = alive[~hit & (k[alive] < max_steps)]


def first_entry(model: LevyModel, region: Region, x: float, n: int, step: float, seed: int,
                horizon: float, workers: int = 1):
    """First grid entry of x + X into region.

    Returns (tau, position) arrays; tau is nan for paths that have not
    entered by the horizon.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    max_steps = int(math.floor(horizon / step))

    def chunk(rng, size):
        pos = np.full(size, float(x))
        tau = np.full(size, np.nan)
        k = np.zeros(size, dtype=np.int64)
        if region.contains(x):
            tau[:] = 0.0
            return tau, pos
        _advance_to_entry(model, region, rng, pos, k, tau, np.arange(size), step, max_steps)
        return tau, pos

    parts = run_chunks(chunk, n, seed, 102, workers=workers)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def argmax_and_entry(model: LevyModel, g, x: float, region: Region, n: int, step: float,
                     seed: int, horizon: float, workers: int = 1):
    """eta(x) and first entry into region on the same paths.

    Returns (eta, tau, position): eta is the argmax process value minus x
    over [0, e_q]; (tau, position) describe the first grid entry, searched
    past e_q when necessary.
    """
    max_steps = int(math.floor(horizon / step))
    g0 = float(g(x))
    start_in = bool(region.contains(x))

    def chunk(rng, size):
        steps = _killing_steps(model, rng, size, step)
        best_g = np.full(size, g0)
        best_v = np.zeros(size)
        tau = np.full(size, 0.0 if start_in else np.nan)
        entry = np.full(size, float(x))
        last = np.zeros(size)
        alive = np.flatnonzero(steps > 0)
        done = 0
        while alive.size:
            left = steps[alive] - done
            blk = int(min(BLOCK, left.max()))
            P = _block(model, rng, last[alive], alive.size, blk, step)
            valid = np.arange(1, blk + 1)[None, :] <= left[:, None]
            rows = np.arange(alive.size)
            G = np.where(valid, g(x + P), -np.inf)
            j = np.argmax(G, axis=1)
            gm = G[rows, j]
            upd = gm > best_g[alive]
            best_g[alive[upd]] = gm[upd]
            best_v[alive[upd]] = P[rows[upd], j[upd]]
            pending = np.isnan(tau[alive])
            if pending.any():
                inside = valid & region.contains(x + P)
                has = inside.any(axis=1) & pending
                first = np.argmax(inside, axis=1)
                r = rows[has]
                tau[alive[r]] = (done + first[r] + 1) * step
                entry[alive[r]] = x + P[r, first[r]]
            last[alive] = _last_positions(P, left)
            done += blk
            alive = alive[steps[alive] > done]
        # paths still outside the region at e_q continue with the jump engine
        rest = np.flatnonzero(np.isnan(tau) & (steps < max_steps))
        pos = x + last
        k = steps.copy()
        _advance_to_entry(model, region, rng, pos, k, tau, rest, step, max_steps)
        hit = np.isin(np.arange(size), rest) & ~np.isnan(tau)
        entry[hit] = pos[hit]
        return best_v, tau, entry

    parts = run_chunks(chunk, n, seed, 103, workers=workers)
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(3))
