"""Quantum Chernoff quantities: closed forms, Gaussian states, and the m-ary/controlled exponents."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence, Union

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import cho_factor, cho_solve

from .errors import DomainError, NumericalDomainError
from .fock import FockMatrix, fock_qs_fn
from .gaussian import GaussianState, williamson

State = Union[GaussianState, FockMatrix]

S_LO = 1e-6
S_HI = 1.0 - 1e-6
S_TOL = 1e-6
PURE_TOL = 1e-12
# exponents at or below this are identically zero in s (non-negative concave function)
FLAT_EXPONENT = 1e-15

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ChernoffResult:
    s_star: float
    q_value: float
    exponent: float

    @classmethod
    def from_log_q(cls, s_star: float, log_q: float) -> "ChernoffResult":
        log_q = min(log_q, 0.0)
        return cls(s_star, math.exp(log_q), 0.0 - log_q)


@dataclass(frozen=True)
class PairwiseExponents:
    """Chernoff results for every unordered hypothesis pair ``i < j``."""

    m: int
    table: dict[tuple[int, int], ChernoffResult] = field(default_factory=dict)

    def __getitem__(self, pair: tuple[int, int]) -> ChernoffResult:
        i, j = pair
        if i == j:
            raise KeyError("diagonal pairs are undefined")
        return self.table[(min(i, j), max(i, j))]

    def min_pair(self) -> tuple[tuple[int, int], ChernoffResult]:
        return min(self.table.items(), key=lambda kv: kv[1].exponent)


# ---------------------------------------------------------------------------
# Thermal closed form


def log_qs_thermal_closed(n1: float, n2: float, s: float) -> float:
    """``log tr(rho_th(n1)^s rho_th(n2)^(1-s))``.

    Uses ``Q_s = 1 / ((n1+1)^s (n2+1)^(1-s) - n1^s n2^(1-s))`` with the
    difference written as ``-(n1+1)^s (n2+1)^(1-s) expm1(-s log1p(1/n1) - (1-s) log1p(1/n2))``.
    """
    if n1 < 0 or n2 < 0:
        raise DomainError("thermal photon numbers must be >= 0")
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"s must lie in [0, 1], got {s}")
    if s == 0.0 or s == 1.0:
        return 0.0
    log_lead = s * math.log1p(n1) + (1.0 - s) * math.log1p(n2)
    if n1 == 0.0 or n2 == 0.0:
        return -log_lead
    t = -s * math.log1p(1.0 / n1) - (1.0 - s) * math.log1p(1.0 / n2)
    return -log_lead - math.log(-math.expm1(t))


def log_qs_thermal_swap(n_base: float, delta: float, s: float) -> float:
    """``log Q_s`` for ``th(n+δ) ⊗ th(n)`` against ``th(n) ⊗ th(n+δ)``.

    The pair value is ``-log1p(X)`` with
    ``X = n (n+δ+1) expm1(s L) expm1((1-s) L)`` and ``L = log1p(δ / (n (n+δ+1)))``,
    which keeps full relative accuracy when ``δ`` is tiny against ``n``.
    """
    if n_base < 0 or delta < 0:
        raise DomainError("thermal photon numbers must be >= 0")
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"s must lie in [0, 1], got {s}")
    if delta == 0.0 or s == 0.0 or s == 1.0:
        return 0.0
    n1 = n_base + delta
    if n_base == 0.0:
        return log_qs_thermal_closed(n1, 0.0, s) + log_qs_thermal_closed(0.0, n1, s)
    lead = n_base * (n1 + 1.0)
    L = math.log1p(delta / lead)
    return -math.log1p(lead * math.expm1(s * L) * math.expm1((1.0 - s) * L))


def qs_thermal_closed(n1: float, n2: float, s: float) -> float:
    return math.exp(log_qs_thermal_closed(n1, n2, s))


# ---------------------------------------------------------------------------
# General Gaussian states


def _lambda_and_log_g(nu: NDArray[np.float64], p: float) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """``Λ_p(ν)`` and ``log G_p(ν)``, with the ν = 1 limits ``Λ = G = 1``."""
    lam = np.ones_like(nu)
    log_g = np.zeros_like(nu)
    mixed = (nu - 1.0) >= PURE_TOL
    x = nu[mixed]
    t = p * np.log1p(-2.0 / (x + 1.0))  # p log((x-1)/(x+1))
    denom = -np.expm1(t)  # ((x+1)^p - (x-1)^p) / (x+1)^p
    lam[mixed] = (1.0 + np.exp(t)) / denom
    log_g[mixed] = p * math.log(2.0) - p * np.log(x + 1.0) - np.log(denom)
    return lam, log_g


def gaussian_log_qs_fn(
    a: GaussianState, b: GaussianState, *, include_mean: bool = True
) -> Callable[[float], float]:
    """Return ``s -> log Q_s(a || b)`` with both Williamson decompositions computed once.

    ``Q_s = 2^M prod_k G_s(ν_a,k) G_{1-s}(ν_b,k) / sqrt(det Σ) * exp(-d^T Σ^{-1} d / 2)``
    where ``Σ = V_a(s) + V_b(1-s)`` and ``V(p) = S diag(Λ_p(ν)) S^T``.
    ``include_mean=False`` drops the displacement factor.
    """
    if a.num_modes != b.num_modes:
        raise DomainError(f"mode count mismatch {a.num_modes} vs {b.num_modes}")
    wa, wb = williamson(a), williamson(b)
    d = a.mean - b.mean
    use_mean = include_mean and bool(np.any(d != 0.0))
    m = a.num_modes

    def log_q(s: float) -> float:
        if not 0.0 < s < 1.0:
            raise DomainError(f"s must lie in (0, 1), got {s}")
        lam_a, lg_a = _lambda_and_log_g(wa.nu, s)
        lam_b, lg_b = _lambda_and_log_g(wb.nu, 1.0 - s)
        sigma = (wa.symplectic * np.repeat(lam_a, 2)) @ wa.symplectic.T
        sigma = sigma + (wb.symplectic * np.repeat(lam_b, 2)) @ wb.symplectic.T
        sigma = 0.5 * (sigma + sigma.T)
        try:
            factor = cho_factor(sigma, lower=True)
        except np.linalg.LinAlgError as exc:
            raise NumericalDomainError(f"singular Chernoff covariance at s={s}") from exc
        log_det = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
        out = m * math.log(2.0) + float(np.sum(lg_a) + np.sum(lg_b)) - 0.5 * log_det
        if use_mean:
            out -= 0.5 * float(d @ cho_solve(factor, d))
        return out

    return log_q


def qs_gaussian(a: GaussianState, b: GaussianState, s: float, *, include_mean: bool = True) -> float:
    """``tr(rho_a^s rho_b^(1-s))`` for Gaussian states; ``s`` in the open interval (0, 1)."""
    return math.exp(gaussian_log_qs_fn(a, b, include_mean=include_mean)(s))


# ---------------------------------------------------------------------------
# Backend dispatch


def backend_of(state: State) -> str:
    if isinstance(state, GaussianState):
        return "gaussian"
    if isinstance(state, FockMatrix):
        return "fock"
    raise DomainError(f"unsupported state type {type(state).__name__}")


def log_qs_fn(a: State, b: State) -> Callable[[float], float]:
    """``s -> log tr(a^s b^(1-s))`` for two states of the same representation."""
    ba, bb = backend_of(a), backend_of(b)
    if ba != bb:
        raise DomainError(f"incompatible representations {ba} and {bb}")
    if ba == "gaussian":
        return gaussian_log_qs_fn(a, b)
    q = fock_qs_fn(a, b)

    def log_q(s: float) -> float:
        v = q(s)
        return math.log(v) if v > 0 else -math.inf

    return log_q


# ---------------------------------------------------------------------------
# Optimization over s


def golden_section_min(
    f: Callable[[float], float], lo: float, hi: float, tol: float = S_TOL
) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on ``[lo, hi]`` until the bracket is shorter than ``tol``."""
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_PHI * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def optimize_exponent(
    q_of_s: Callable[[float], float],
    *,
    log_domain: bool = False,
    s_lo: float = S_LO,
    s_hi: float = S_HI,
    tol: float = S_TOL,
) -> ChernoffResult:
    """Maximize ``-log q(s)`` over ``s`` by golden-section search on the convex ``log q``.

    ``q_of_s`` returns ``Q_s`` (or ``log Q_s`` when ``log_domain`` is set). The
    interval endpoints are also evaluated and win if they are lower.
    """

    def f(s: float) -> float:
        v = q_of_s(s)
        if not log_domain:
            v = math.log(v) if v > 0 else -math.inf
        if not math.isfinite(v):
            raise NumericalDomainError(f"non-finite log Q at s={s!r}")
        return v

    s_best, f_best = golden_section_min(f, s_lo, s_hi, tol)
    for s_end in (s_lo, s_hi):
        v = f(s_end)
        if v < f_best:
            s_best, f_best = s_end, v
    return ChernoffResult.from_log_q(s_best, f_best)


def mary_exponent(
    states: Sequence[State], backend: str | None = None
) -> tuple[PairwiseExponents, float]:
    """Pairwise Chernoff table and the m-ary exponent ``min_{i<j} max_s -log Q_s``."""
    if len(states) < 2:
        raise DomainError("need at least two hypotheses")
    kinds = {backend_of(s) for s in states}
    if len(kinds) != 1 or (backend is not None and kinds != {backend}):
        raise DomainError(f"incompatible representations {sorted(kinds)} (requested {backend})")
    table = {
        (i, j): optimize_exponent(log_qs_fn(states[i], states[j]), log_domain=True)
        for i, j in combinations(range(len(states)), 2)
    }
    pairs = PairwiseExponents(len(states), table)
    return pairs, pairs.min_pair()[1].exponent


class SharedSPair:
    """One hypothesis pair observed through several control symbols.

    Holds ``log Q_s`` per symbol and each symbol's own optimum, so that the
    shared-``s`` exponent ``max_s -sum_x p_x log Q_s^x`` can be evaluated for
    many weight vectors cheaply.

    For a weight vector the sum of the per-symbol maxima is an upper bound on
    the shared-``s`` value, and the weighted objective at any per-symbol
    optimum is a lower bound. When the two agree to ``rel_tol`` the bound is
    returned; otherwise the weighted objective is optimized directly.
    """

    def __init__(
        self,
        log_qs: Sequence[Callable[[float], float]],
        per_symbol: Sequence[ChernoffResult] | None = None,
        rel_tol: float = 1e-9,
    ) -> None:
        self.log_qs = list(log_qs)
        self.per_symbol = list(per_symbol) if per_symbol is not None else [
            optimize_exponent(f, log_domain=True) for f in self.log_qs
        ]
        self.rel_tol = rel_tol
        self._candidates = [r.s_star for r in self.per_symbol]
        # table[x, c] = log Q at symbol x, candidate s_c
        self._table = np.array([[f(s) for s in self._candidates] for f in self.log_qs])

    def exponent(self, weights: Sequence[float]) -> ChernoffResult:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(self.log_qs),):
            raise DomainError(f"expected {len(self.log_qs)} weights, got {w.shape}")
        active = w > 0
        if not np.any(active):
            raise DomainError("all control weights are zero")
        upper = float(sum(wi * r.exponent for wi, r, a in zip(w, self.per_symbol, active) if a))
        values = -(w[active] @ self._table[active])
        cand = [c for c, a in enumerate(active) if a]
        best = max(cand, key=lambda c: values[c])
        lower = float(values[best])
        if upper - lower <= self.rel_tol * upper + FLAT_EXPONENT:
            return ChernoffResult.from_log_q(self._candidates[best], -lower)
        fns = [f for f, a in zip(self.log_qs, active) if a]
        ws = w[active]
        return optimize_exponent(lambda s: float(sum(wi * f(s) for wi, f in zip(ws, fns))), log_domain=True)


def joint_exponent(
    log_qs: Sequence[Callable[[float], float]], weights: Sequence[float]
) -> ChernoffResult:
    """``max_s -sum_x p_x log Q_s^x`` for one hypothesis pair with a single shared ``s``."""
    keep = [i for i, p in enumerate(weights) if p > 0]
    return SharedSPair([log_qs[i] for i in keep]).exponent([weights[i] for i in keep])


def controlled_exponent(
    families: Sequence[Sequence[State]], p_x: Sequence[float]
) -> ChernoffResult:
    """Exponent for hypotheses probed with a control sequence of fixed type ``p_x``.

    ``families[x][i]`` is the state produced under hypothesis ``i`` when the
    control symbol is ``x``. Returns the minimum over pairs of the shared-``s``
    maximum of ``-sum_x p_x log Q_s``.
    """
    if len(families) != len(p_x):
        raise DomainError(f"{len(families)} families but {len(p_x)} control weights")
    p = np.asarray(p_x, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise DomainError("control weights must form a probability vector")
    m = len(families[0])
    if m < 2 or any(len(f) != m for f in families):
        raise DomainError("every control symbol needs the same number (>= 2) of hypotheses")
    best: ChernoffResult | None = None
    for i, j in combinations(range(m), 2):
        fns = [log_qs_fn(f[i], f[j]) if w > 0 else None for f, w in zip(families, p)]
        res = joint_exponent([f for f in fns if f is not None], [w for w in p if w > 0])
        if best is None or res.exponent < best.exponent:
            best = res
    assert best is not None
    return best
