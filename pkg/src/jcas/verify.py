"""Truncation-convergence studies and Monte-Carlo discrimination of commuting hypotheses."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.stats import nbinom

from .chernoff import optimize_exponent
from .errors import DomainError
from .fock import FockMatrix, fock_qs_fn, thermal_pmf, thermal_tail_dim

CHUNK_TRIALS = 4096
Z95 = 1.959963984540054
MIN_ERROR_COUNT = 30


# ---------------------------------------------------------------------------
# Truncation convergence


@dataclass(frozen=True)
class ConvergenceTable:
    dims: list[int]
    exponents: list[float]
    limit: float | None

    def errors(self) -> list[float]:
        if self.limit is None:
            raise DomainError("no analytic limit attached")
        return [abs(e - self.limit) for e in self.exponents]


def truncation_convergence(
    factory_a: Callable[[int], FockMatrix],
    factory_b: Callable[[int], FockMatrix],
    dims: Sequence[int],
    limit: float | None = None,
) -> ConvergenceTable:
    """Chernoff exponent of the unrenormalized ``D``-level truncations for each cutoff ``D``.

    ``factory(D)`` must return the projection ``Π_D ρ Π_D`` without
    renormalizing, so the exponent picks up ``-log`` of the retained trace.
    """
    dims = list(dims)
    if not dims or any(d < 1 for d in dims) or dims != sorted(dims):
        raise DomainError("dims must be a non-empty ascending list of positive cutoffs")
    exps = []
    for d in dims:
        res = optimize_exponent(fock_qs_fn(factory_a(d), factory_b(d)))
        exps.append(res.exponent)
    return ConvergenceTable(dims, exps, limit)


# ---------------------------------------------------------------------------
# Monte-Carlo discrimination


@dataclass(frozen=True)
class McEstimate:
    """MAP error estimate at ``copies`` copies; ``error_rate`` is the worst hypothesis's error."""

    copies: int
    trials: int
    error_rate: float
    half_width: float
    per_hypothesis: tuple[float, ...] = field(default=())


def _as_slot_pmfs(hypotheses: Sequence[NDArray[np.float64]]) -> NDArray[np.float64]:
    if not hypotheses:
        raise DomainError("empty hypothesis list")
    arrs = [np.atleast_2d(np.asarray(h, dtype=float)) for h in hypotheses]
    shape = arrs[0].shape
    if any(a.shape != shape for a in arrs):
        raise DomainError("all hypotheses need the same (slots, dim) shape")
    pm = np.stack(arrs)  # (hyp, slot, dim)
    if np.any(pm < 0) or np.any(np.abs(pm.sum(axis=2) - 1.0) > 1e-9):
        raise DomainError("each slot distribution must be non-negative and sum to 1 (tail ≤ 1e-9)")
    return pm / pm.sum(axis=2, keepdims=True)


def _wilson_half_width(k: int, n: int) -> float:
    p = k / n
    return Z95 * math.sqrt(p * (1 - p) / n + Z95**2 / (4 * n * n)) / (1 + Z95**2 / n)


def _chunk_errors(
    pm: NDArray[np.float64],
    cdf: NDArray[np.float64],
    logp: NDArray[np.float64],
    h: int,
    copies: int,
    size: int,
    key: tuple[int, ...],
) -> int:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(key))))
    n_hyp, n_slot, dim = pm.shape
    u = rng.random((size, copies, n_slot))
    loglik = np.zeros((size, n_hyp))
    for s in range(n_slot):
        x = np.minimum(np.searchsorted(cdf[h, s], u[:, :, s], side="right"), dim - 1)
        loglik += logp[:, s, :][:, x].sum(axis=2).T
    best = loglik.max(axis=1, keepdims=True)
    # equal count statistics can differ in the last bits through summation order
    ties = loglik >= best - 1e-9 * (1.0 + np.abs(best))
    # random tie-break: a uniform key per candidate, largest key among maxima wins
    keys = np.where(ties, rng.random((size, n_hyp)), -1.0)
    decided = np.argmax(keys, axis=1)
    return int(np.count_nonzero(decided != h))


def mc_discrimination(
    hypotheses: Sequence[NDArray[np.float64]],
    copies: int,
    trials: int,
    seed: int,
    threads: int = 1,
) -> McEstimate:
    """Estimate the equal-prior MAP error for ``copies`` i.i.d. copies of commuting hypotheses.

    ``hypotheses[h]`` is either a photon-number pmf or a ``(slots, dim)``
    array of independent per-slot pmfs. Samples are drawn by CDF inversion in
    fixed-size chunks; each chunk has its own generator keyed by
    ``(seed, copies, h, chunk)``, so results do not depend on ``threads``.
    """
    if copies < 1:
        raise DomainError(f"copies must be >= 1, got {copies}")
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    pm = _as_slot_pmfs(hypotheses)
    cdf = np.cumsum(pm, axis=2)
    cdf[:, :, -1] = 1.0
    with np.errstate(divide="ignore"):
        logp = np.log(pm)
    jobs = []
    for h in range(pm.shape[0]):
        for c, start in enumerate(range(0, trials, CHUNK_TRIALS)):
            size = min(CHUNK_TRIALS, trials - start)
            jobs.append((h, size, (seed, copies, h, c)))
    run = lambda job: _chunk_errors(pm, cdf, logp, job[0], copies, job[1], job[2])  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            counts = list(pool.map(run, jobs))
    else:
        counts = [run(job) for job in jobs]
    per_h = np.zeros(pm.shape[0], dtype=np.int64)
    for (h, _, _), k in zip(jobs, counts):
        per_h[h] += k
    worst = int(np.argmax(per_h))
    rates = tuple(float(k) / trials for k in per_h)
    return McEstimate(copies, trials, rates[worst], _wilson_half_width(int(per_h[worst]), trials), rates)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    points: int


def slope_fit(estimates: Sequence[McEstimate]) -> SlopeFit:
    """Weighted least-squares slope of ``-log(error)`` against ``n``.

    Weights are ``1 / var`` with ``var = (half_width / (1.96 error))^2``, the
    delta-method variance of ``log(error)``. Estimates with error 0 or 1 are dropped.
    """
    usable = [e for e in estimates if 0.0 < e.error_rate < 1.0]
    if len(usable) < 3:
        raise DomainError(f"need at least 3 estimates with error in (0, 1), got {len(usable)}")
    n = np.array([e.copies for e in usable], dtype=float)
    y = -np.log([e.error_rate for e in usable])
    sd = np.array([max(e.half_width, 1e-300) / (Z95 * e.error_rate) for e in usable])
    w = 1.0 / sd**2
    x = np.column_stack([n, np.ones_like(n)])
    xtw = x.T * w
    cov = np.linalg.inv(xtw @ x)
    beta = cov @ (xtw @ y)
    return SlopeFit(float(beta[0]), float(math.sqrt(cov[0, 0])), float(beta[1]), len(usable))


def copies_grid(exponent: float, trials: int, n_max: int = 80, points: int = 6) -> list[int]:
    """Copy counts whose expected errors stay above ``30 / trials``.

    The upper end uses ``0.7 log(trials / 30) / exponent`` to leave room for
    the sub-exponential prefactor; the grid spans ``[n_hi / 3, n_hi]``.
    """
    if exponent <= 0:
        raise DomainError("exponent must be positive")
    n_hi = min(n_max, int(0.7 * math.log(trials / MIN_ERROR_COUNT) / exponent))
    n_lo = max(1, n_hi // 3)
    if n_hi - n_lo + 1 < 3:
        raise DomainError(f"cannot place 3 copy counts below {n_hi}; raise trials")
    return sorted({int(round(v)) for v in np.linspace(n_lo, n_hi, points)})


# ---------------------------------------------------------------------------
# Position hypotheses and exact MAP oracles


def position_hypotheses(n_target: float, n_background: float, m: int, dim: int | None = None) -> list[NDArray[np.float64]]:
    """``m`` slot pmfs per hypothesis: thermal ``n_target`` in slot ``h``, thermal ``n_background`` elsewhere."""
    if m < 2:
        raise DomainError("need m >= 2 positions")
    if dim is None:
        dim = thermal_tail_dim(max(n_target, n_background), 1e-13) + 1
    t, b = thermal_pmf(n_target, dim), thermal_pmf(n_background, dim)
    t, b = t / t.sum(), b / b.sum()
    return [np.stack([t if k == h else b for k in range(m)]) for h in range(m)]


def _nb_pmf(n_mean: float, copies: int, top: int) -> NDArray[np.float64]:
    """Law of the total photon count of ``copies`` thermal modes, truncated below ``top``."""
    t = np.arange(top)
    if n_mean == 0:
        out = np.zeros(top)
        out[0] = 1.0
        return out
    return nbinom.pmf(t, copies, 1.0 / (1.0 + n_mean))


def _count_top(n_mean: float, copies: int) -> int:
    mean = copies * n_mean
    sd = math.sqrt(copies * n_mean * (n_mean + 1.0))
    return int(mean + 40.0 * sd + 200)


def exact_binary_thermal_error(n_a: float, n_b: float, copies: int) -> float:
    """Worst-hypothesis MAP error for thermal ``n_a`` vs ``n_b`` with random tie-breaking.

    The total count is sufficient, so the decision reduces to comparing two
    negative-binomial likelihoods.
    """
    top = _count_top(max(n_a, n_b), copies)
    pa, pb = _nb_pmf(n_a, copies, top), _nb_pmf(n_b, copies, top)
    err_a = float(np.sum(np.where(pb > pa, pa, np.where(pb == pa, 0.5 * pa, 0.0))))
    err_b = float(np.sum(np.where(pa > pb, pb, np.where(pa == pb, 0.5 * pb, 0.0))))
    return max(err_a, err_b)


def exact_position_error(n_target: float, n_background: float, m: int, copies: int) -> float:
    """MAP error for the brighter-slot position problem (``n_target > n_background``).

    The per-slot total counts are sufficient and the likelihood is increasing
    in the target slot's count, so MAP picks the largest total, ties at random.
    """
    if not n_target > n_background:
        raise DomainError("requires n_target > n_background")
    top = _count_top(n_target, copies)
    p1, p0 = _nb_pmf(n_target, copies, top), _nb_pmf(n_background, copies, top)
    below = np.concatenate([[0.0], np.cumsum(p0)[:-1]])
    correct = np.zeros(top)
    for j in range(m):
        correct += math.comb(m - 1, j) * p0**j * below ** (m - 1 - j) / (j + 1)
    return float(1.0 - np.sum(p1 * correct))
