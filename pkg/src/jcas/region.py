"""Achievable (rate, exponent) region, its Pareto frontier, and the time-sharing comparison."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .scenario import ChannelParams, RegionPoint, ScenarioContext

__all__ = [
    "RegionPoint",
    "Frontier",
    "DominanceReport",
    "split_grid",
    "build_region",
    "pareto_frontier",
    "time_sharing_baseline",
    "dominance_report",
    "thread_count",
]

DOMINANCE_SLACK = 1e-12


@dataclass(frozen=True)
class Frontier:
    """Undominated points sorted by exponent ascending (rates strictly decreasing)."""

    points: list[RegionPoint]
    indices: list[int]

    def exponents(self) -> np.ndarray:
        return np.array([p.exponent for p in self.points])

    def rates(self) -> np.ndarray:
        return np.array([p.rate for p in self.points])

    def rate_at(self, exponent: float) -> float:
        """Piecewise-linear frontier rate at ``exponent``; must lie within the frontier's range."""
        e = self.exponents()
        if not e[0] <= exponent <= e[-1]:
            raise DomainError(f"exponent {exponent} outside frontier range [{e[0]}, {e[-1]}]")
        return float(np.interp(exponent, e, self.rates()))


@dataclass(frozen=True)
class DominanceReport:
    max_margin: float
    baseline_point: RegionPoint | None
    witness: RegionPoint | None
    witness_margin: float
    partial_overlap: bool


def thread_count() -> int:
    """Worker count from ``JCAS_THREADS`` (default 1)."""
    raw = os.environ.get("JCAS_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise DomainError(f"JCAS_THREADS must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise DomainError(f"JCAS_THREADS must be a positive integer, got {raw!r}")
    return n


def split_grid(n_total: float, size: int) -> list[tuple[float, float]]:
    """Triangular grid ``(n_s, n_m) = N (i, j) / (size - 1)`` with ``i + j <= size - 1``."""
    if size < 2:
        raise DomainError(f"split grid size must be >= 2, got {size}")
    k = size - 1
    return [(n_total * i / k, n_total * j / k) for i in range(size) for j in range(size - i)]


def _split_points(
    args: tuple[ChannelParams, str, str, float | None, float, float, tuple[float, ...]]
) -> list[RegionPoint]:
    params, ea_mode, ua_mode, tail_eps, n_s, n_m, lams = args
    ctx = _context(params, ea_mode, ua_mode, tail_eps)
    prof = ctx.profile(n_s, n_m)
    return [prof.point(lam) for lam in lams]


_CTX_CACHE: dict[tuple, ScenarioContext] = {}


def _context(params: ChannelParams, ea_mode: str, ua_mode: str, tail_eps: float | None) -> ScenarioContext:
    key = (params, ea_mode, ua_mode, tail_eps)
    ctx = _CTX_CACHE.get(key)
    if ctx is None:
        _CTX_CACHE.clear()
        ctx = _CTX_CACHE[key] = ScenarioContext(params, ea_mode, ua_mode, tail_eps)
    return ctx


def pareto_frontier(points: list[RegionPoint]) -> Frontier:
    """Undominated subset. Among exact duplicates the earliest point is kept."""
    if not points:
        raise DomainError("empty point set")
    order = sorted(range(len(points)), key=lambda i: (-points[i].exponent, -points[i].rate, i))
    best_rate = -np.inf
    keep: list[int] = []
    for i in order:
        if points[i].rate > best_rate:
            keep.append(i)
            best_rate = points[i].rate
    keep.reverse()
    return Frontier([points[i] for i in keep], keep)


def build_region(
    params: ChannelParams,
    lambda_grid_size: int = 101,
    split_grid_size: int = 51,
    ea_mode: str = "closed",
    ua_mode: str = "bound",
    tail_eps: float | None = None,
    threads: int | None = None,
) -> tuple[list[RegionPoint], Frontier]:
    """Evaluate every (split, lambda) operating point and extract the Pareto frontier.

    Points are ordered split-major (splits in :func:`split_grid` order, then
    lambda ascending), independent of the worker count.
    """
    if lambda_grid_size < 2:
        raise DomainError(f"lambda grid size must be >= 2, got {lambda_grid_size}")
    lams = tuple(float(x) for x in np.linspace(0.0, 1.0, lambda_grid_size))
    splits = split_grid(params.n_total, split_grid_size)
    # fail fast on configuration errors (unknown modes, infeasible truncations)
    _context(params, ea_mode, ua_mode, tail_eps)
    jobs = [(params, ea_mode, ua_mode, tail_eps, n_s, n_m, lams) for n_s, n_m in splits]
    workers = thread_count() if threads is None else threads
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_split_points, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        chunks = [_split_points(job) for job in jobs]
    points = [p for chunk in chunks for p in chunk]
    return points, pareto_frontier(points)


def time_sharing_baseline(
    params: ChannelParams, grid: int = 101, ea_mode: str = "closed", ua_mode: str = "bound"
) -> list[RegionPoint]:
    """Convex combinations of the all-communication and all-sensing (``N_S = N``, ``N_m = 0``) endpoints."""
    if grid < 2:
        raise DomainError(f"baseline grid size must be >= 2, got {grid}")
    prof = _context(params, ea_mode, ua_mode, None).profile(params.n_total, 0.0)
    comm, sense = prof.point(1.0), prof.point(0.0)
    out = []
    for t in np.linspace(0.0, 1.0, grid):
        t = float(t)
        out.append(
            RegionPoint(
                t * comm.rate + (1.0 - t) * sense.rate,
                t * comm.exponent + (1.0 - t) * sense.exponent,
                t,
                params.n_total,
                0.0,
            )
        )
    return out


def dominance_report(frontier: Frontier, baseline: list[RegionPoint]) -> DominanceReport:
    """Largest rate gain of the frontier over the baseline at equal exponent.

    ``max_margin`` uses linear interpolation along the frontier. The witness
    is the highest-rate frontier point whose exponent is at least the
    baseline point's, so ``witness_margin`` is attained by an actual grid point.
    Baseline points outside the frontier's exponent range are skipped and
    flagged through ``partial_overlap``.
    """
    if not frontier.points or not baseline:
        raise DomainError("frontier and baseline must be non-empty")
    e = frontier.exponents()
    r = frontier.rates()
    best = (-np.inf, None, None, -np.inf)
    skipped = False
    for b in baseline:
        if not e[0] <= b.exponent <= e[-1]:
            skipped = True
            continue
        margin = float(np.interp(b.exponent, e, r)) - b.rate
        k = int(np.searchsorted(e, b.exponent, side="left"))
        witness = frontier.points[k]
        if margin > best[0]:
            best = (margin, b, witness, witness.rate - b.rate)
    if best[1] is None:
        return DominanceReport(0.0, None, None, 0.0, True)
    return DominanceReport(best[0], best[1], best[2], best[3], skipped)
