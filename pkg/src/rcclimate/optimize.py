"""Gradient-free box-constrained optimisers: bounded Nelder-Mead, multistart, real-coded GA.

All three work on plain callables ``f(x) -> float`` and numpy boxes, and never
evaluate ``f`` outside ``[lower, upper]``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

SENTINEL = 1e30


@dataclass
class LocalResult:
    x: np.ndarray
    fun: float
    evals: int
    converged: bool
    history: list = field(default_factory=list)


@dataclass
class StartSummary:
    index: int
    x0: list
    x: list
    fun: float
    evals: int
    converged: bool

    def to_dict(self):
        return {"index": self.index, "x0": self.x0, "x": self.x, "fun": self.fun,
                "evals": self.evals, "converged": self.converged}


@dataclass
class SearchResult:
    x: np.ndarray
    fun: float
    evals: int
    converged: bool
    starts: list = field(default_factory=list)
    history: list = field(default_factory=list)


def _box(bounds):
    b = np.asarray(bounds, dtype=float)
    if b.ndim != 2 or b.shape[1] != 2:
        raise ValueError("bounds must be a sequence of (lower, upper) pairs")
    lo, hi = b[:, 0].copy(), b[:, 1].copy()
    if np.any(~(lo < hi)):
        raise ValueError("every lower bound must be below its upper bound")
    return lo, hi


def local_search(func, start, bounds, f_tol=1e-8, x_tol=1e-8, max_evals=2000,
                 initial_step=0.05) -> LocalResult:
    """Nelder-Mead simplex descent with trial points clamped into the box.

    Uses the dimension-adaptive coefficients of Gao and Han (2012). Stops when
    the simplex spans less than ``x_tol`` in every coordinate and its values
    differ by less than ``f_tol``, or when ``max_evals`` is used up
    (``converged=False``). ``history`` holds the incumbent value after each
    evaluation, hence is non-increasing.
    """
    lo, hi = _box(bounds)
    x0 = np.asarray(start, dtype=float).reshape(-1)
    if x0.shape != lo.shape:
        raise ValueError(f"start has {x0.size} entries, bounds {lo.size}")
    if np.any(x0 < lo) or np.any(x0 > hi):
        raise ValueError("start lies outside the bounds")
    n = x0.size
    alpha, gamma = 1.0, 1.0 + 2.0 / n
    rho, sigma = 0.75 - 1.0 / (2.0 * n), 1.0 - 1.0 / n

    evals = 0
    best = np.inf
    history = []

    def f(x):
        nonlocal evals, best
        evals += 1
        v = float(func(x))
        if not np.isfinite(v):
            v = SENTINEL
        best = min(best, v)
        history.append(best)
        return v

    sim = np.empty((n + 1, n))
    sim[0] = x0
    width = hi - lo
    for i in range(n):
        v = x0.copy()
        step = initial_step * width[i]
        v[i] = x0[i] + step if x0[i] + step <= hi[i] else x0[i] - step
        sim[i + 1] = np.clip(v, lo, hi)
    fs = np.empty(n + 1)
    for i in range(n + 1):
        if evals >= max_evals:
            fs[i:] = np.inf
            break
        fs[i] = f(sim[i])

    converged = False
    while True:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        if (np.max(np.abs(sim[1:] - sim[0])) <= x_tol
                and np.max(np.abs(fs[1:] - fs[0])) <= f_tol):
            converged = True
            break
        if evals >= max_evals:
            break
        centroid = sim[:-1].mean(axis=0)
        xr = np.clip(centroid + alpha * (centroid - sim[-1]), lo, hi)
        fr = f(xr)
        if fr < fs[0]:
            xe = np.clip(centroid + gamma * (xr - centroid), lo, hi)
            fe = f(xe) if evals < max_evals else np.inf
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
            continue
        if evals >= max_evals:
            break
        if fr < fs[-1]:
            xc = np.clip(centroid + rho * (xr - centroid), lo, hi)
            fc = f(xc)
            if fc <= fr:
                sim[-1], fs[-1] = xc, fc
                continue
        else:
            xc = np.clip(centroid + rho * (sim[-1] - centroid), lo, hi)
            fc = f(xc)
            if fc < fs[-1]:
                sim[-1], fs[-1] = xc, fc
                continue
        for i in range(1, n + 1):
            if evals >= max_evals:
                break
            sim[i] = sim[0] + sigma * (sim[i] - sim[0])
            fs[i] = f(sim[i])

    i_best = int(np.argmin(fs))
    return LocalResult(sim[i_best].copy(), float(fs[i_best]), evals, converged, history)


def polish(func, start, bounds, restarts=3, **kw) -> LocalResult:
    """Rerun :func:`local_search` from its own answer while it keeps improving.

    A fresh simplex recovers from the collapse that clamping can cause on a
    bound face. ``max_evals`` is shared across the restarts.
    """
    budget = kw.pop("max_evals", 2000)
    f_tol = kw.get("f_tol", 1e-8)
    res = local_search(func, start, bounds, max_evals=budget, **kw)
    evals, history = res.evals, list(res.history)
    for _ in range(restarts):
        if evals >= budget:
            break
        nxt = local_search(func, res.x, bounds, max_evals=budget - evals, **kw)
        evals += nxt.evals
        history.extend(min(h, res.fun) for h in nxt.history)
        improved = res.fun - nxt.fun
        if nxt.fun < res.fun:
            res = LocalResult(nxt.x, nxt.fun, evals, nxt.converged, history)
        if improved <= f_tol:
            break
    return LocalResult(res.x, res.fun, evals, res.converged, history)


def sample_starts(bounds, n_starts, initial=None, seed=0, log_scale=None):
    """Start points: ``initial`` first, the rest uniform in the box.

    Coordinates flagged in ``log_scale`` are sampled log-uniformly (their
    bounds must then be positive).
    """
    lo, hi = _box(bounds)
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    rng = np.random.default_rng(seed)
    log_scale = np.zeros(lo.size, bool) if log_scale is None else np.asarray(log_scale, bool)
    pts = []
    if initial is not None:
        pts.append(np.clip(np.asarray(initial, dtype=float), lo, hi))
    while len(pts) < n_starts:
        r = rng.random(lo.size)
        p = lo + r * (hi - lo)
        if log_scale.any():
            llo, lhi = np.log(lo[log_scale]), np.log(hi[log_scale])
            p[log_scale] = np.exp(llo + r[log_scale] * (lhi - llo))
        pts.append(np.clip(p, lo, hi))
    return pts


def multistart(func, bounds, initial=None, n_starts=8, seed=0, log_scale=None,
               n_jobs=1, restarts=3, **local_kw) -> SearchResult:
    """Run :func:`polish` from several starts and keep the best.

    Start points depend only on ``seed``, and ties go to the lowest start
    index, so ``n_jobs > 1`` returns exactly what a sequential run returns.
    """
    starts = sample_starts(bounds, n_starts, initial, seed, log_scale)

    def run(x0):
        return polish(func, x0, bounds, restarts=restarts, **local_kw)

    if n_jobs > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(x0) for x0 in starts]

    summaries = [StartSummary(i, x0.tolist(), r.x.tolist(), r.fun, r.evals, r.converged)
                 for i, (x0, r) in enumerate(zip(starts, results))]
    i_best = min(range(len(results)), key=lambda i: (results[i].fun, i))
    best = results[i_best]
    history, inc = [], np.inf
    for r in results:
        for h in r.history:
            inc = min(inc, h)
            history.append(inc)
    total = sum(r.evals for r in results)
    converged = best.converged and best.fun < SENTINEL
    return SearchResult(best.x.copy(), best.fun, total, converged, summaries, history)


def genetic_search(func, bounds, population=40, generations=100, seed=0,
                   crossover_alpha=0.5, mutation_rate=0.1, mutation_scale=0.1) -> SearchResult:
    """Real-coded genetic algorithm.

    Binary tournaments pick parents, BLX-alpha crossover mixes them, Gaussian
    mutation (``mutation_scale`` times the box width, applied per gene with
    probability ``mutation_rate``) perturbs the child, and children are
    clipped into the box. The single best individual survives unchanged, so
    the best value never increases between generations.
    """
    lo, hi = _box(bounds)
    if population < 8 or population % 2:
        raise ValueError("population must be an even number >= 8")
    rng = np.random.default_rng(seed)
    dim = lo.size
    width = hi - lo
    evals = 0

    def f(x):
        nonlocal evals
        evals += 1
        v = float(func(x))
        return v if np.isfinite(v) else SENTINEL

    pop = lo + rng.random((population, dim)) * width
    fit = np.array([f(x) for x in pop])
    history = [float(fit.min())]

    def tournament():
        i, j = rng.integers(population, size=2)
        return pop[i] if fit[i] <= fit[j] else pop[j]

    for _ in range(generations):
        elite = int(np.argmin(fit))
        children = [pop[elite].copy()]
        while len(children) < population:
            a, b = tournament(), tournament()
            cmin, cmax = np.minimum(a, b), np.maximum(a, b)
            span = cmax - cmin
            for _pair in range(2):
                child = cmin - crossover_alpha * span + rng.random(dim) * (1 + 2 * crossover_alpha) * span
                mutate = rng.random(dim) < mutation_rate
                child = child + mutate * rng.normal(0.0, mutation_scale, dim) * width
                children.append(np.clip(child, lo, hi))
                if len(children) == population:
                    break
        new_pop = np.array(children)
        new_fit = np.empty(population)
        new_fit[0] = fit[elite]
        for i in range(1, population):
            new_fit[i] = f(new_pop[i])
        pop, fit = new_pop, new_fit
        history.append(float(fit.min()))

    i_best = int(np.argmin(fit))
    return SearchResult(pop[i_best].copy(), float(fit[i_best]), evals, bool(fit[i_best] < SENTINEL),
                        [], history)
