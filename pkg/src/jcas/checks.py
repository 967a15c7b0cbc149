"""Oracle suites run by ``jcas verify``: each check compares two independent routes at a tolerance."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .chernoff import (
    gaussian_log_qs_fn,
    log_qs_thermal_closed,
    optimize_exponent,
    qs_gaussian,
    qs_thermal_closed,
)
from .fock import (
    adaptive_psk_pmf,
    displaced_psk_pmf,
    displaced_thermal_fock,
    fock_qs,
    log_hyp1f1_np1_1,
    log_hyp1f1_np1_1_recurrence,
    receiver_thermal_photons,
    thermal_fock,
    thermal_tail_dim,
    ua_psk_holevo,
)
from .gaussian import (
    GaussianState,
    displace,
    make_thermal,
    make_tmsv,
    return_idler_state,
    symplectic_eigenvalues,
    symplectic_form,
    williamson,
)
from .region import build_region, dominance_report, time_sharing_baseline
from .scenario import (
    ChannelParams,
    ResourceSplit,
    ScenarioContext,
    e_nqi,
    e_qi_d,
    nqi_log_qs_fn,
    qi_log_qs_fn,
    r_ua,
)


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)


def _rel(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0.0 else abs(a - b) / scale


def _random_symplectic(rng: np.random.Generator, m: int) -> np.ndarray:
    """Product of a random passive unitary, single-mode squeezers and another passive unitary."""

    def passive() -> np.ndarray:
        z = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        q, r = np.linalg.qr(z)
        u = q * (np.diag(r) / np.abs(np.diag(r)))
        out = np.zeros((2 * m, 2 * m))
        # xp-interleaved real form of U acting on annihilation operators
        out[0::2, 0::2] = u.real
        out[0::2, 1::2] = -u.imag
        out[1::2, 0::2] = u.imag
        out[1::2, 1::2] = u.real
        return out

    sq = np.diag(np.repeat(np.exp(rng.uniform(-1, 1, m)), 2) ** np.tile([1, -1], m))
    return passive() @ sq @ passive()


def gaussian_suite() -> list[CheckResult]:
    rng = np.random.default_rng(2024)
    worst_recon, worst_sympl, worst_nu = 0.0, 0.0, 0.0
    for trial in range(200):
        m = 1 + trial % 4
        s = _random_symplectic(rng, m)
        nu = 1.0 + rng.exponential(2.0, m)
        cov = s @ np.diag(np.repeat(nu, 2)) @ s.T
        w = williamson(cov)
        omega = symplectic_form(m)
        recon = w.symplectic @ np.diag(np.repeat(w.nu, 2)) @ w.symplectic.T
        worst_recon = max(worst_recon, float(np.max(np.abs(recon - cov)) / np.max(np.abs(cov))))
        worst_sympl = max(worst_sympl, float(np.max(np.abs(w.symplectic @ omega @ w.symplectic.T - omega))))
        worst_nu = max(worst_nu, float(np.max(np.abs(np.sort(nu) - symplectic_eigenvalues(cov)) / np.sort(nu))))
    ri = return_idler_state(0.7, 0.8, 0.3, 0.5)
    v = ri.cov
    n_s, n_th, eta = 0.8, 0.5, 0.7
    corr = 2.0 * math.sqrt(1 - eta) * math.sqrt(n_s * (n_s + 1))
    return [
        CheckResult("gaussian", "williamson reconstruction (200 random states)", worst_recon, 1e-9),
        CheckResult("gaussian", "williamson symplecticity", worst_sympl, 1e-8),
        CheckResult("gaussian", "symplectic eigenvalues vs construction", worst_nu, 1e-9),
        CheckResult("gaussian", "return variance 2((1-eta)N_S+N_th)+1", abs(v[0, 0] - (2 * ((1 - eta) * n_s + n_th) + 1)), 1e-12),
        CheckResult("gaussian", "return-idler correlation magnitude", abs(abs(v[0, 2]) - corr), 1e-12),
        CheckResult("gaussian", "return-idler state physical", 0.0 if ri.is_physical() else 1.0, 0.0),
    ]


def chernoff_suite() -> list[CheckResult]:
    worst = 0.0
    for n1, n2, s in itertools.product([0.0, 0.1, 1.0, 5.0, 50.0], [0.0, 0.1, 1.0, 5.0, 50.0], np.linspace(0.1, 0.9, 9)):
        g = qs_gaussian(make_thermal(n1), make_thermal(n2), float(s))
        worst = max(worst, _rel(g, qs_thermal_closed(n1, n2, float(s))))
    alpha = 0.7 + 0.2j
    coh = qs_gaussian(displace(make_thermal(0.0), 0, alpha), make_thermal(0.0), 0.5)
    nqi = optimize_exponent(nqi_log_qs_fn(ChannelParams(0.5, 0.1, 2.0)), log_domain=True)
    qi = optimize_exponent(qi_log_qs_fn(ChannelParams(0.9, 2.0, 1.0), ResourceSplit(0, 0.3, 0.4)), log_domain=True)
    ref = optimize_exponent(lambda s: log_qs_thermal_closed(0.1, 1.0, s), log_domain=True)
    grid = max(-log_qs_thermal_closed(0.1, 1.0, s) for s in np.linspace(1e-4, 1 - 1e-4, 20001))
    return [
        CheckResult("chernoff", "gaussian vs thermal closed form (5x5x9)", worst, 1e-10),
        CheckResult("chernoff", "coherent vs vacuum overlap exp(-|alpha|^2)", _rel(coh, math.exp(-abs(alpha) ** 2)), 1e-12),
        CheckResult("chernoff", "unassisted swap pair s* = 1/2", abs(nqi.s_star - 0.5), 1e-4),
        CheckResult("chernoff", "idler-assisted swap pair s* = 1/2", abs(qi.s_star - 0.5), 1e-4),
        CheckResult("chernoff", "golden section vs dense grid", max(0.0, grid - ref.exponent), 1e-9),
    ]


def fock_suite() -> list[CheckResult]:
    worst_th = 0.0
    for n1, n2 in itertools.product([0.1, 0.5, 2.0], repeat=2):
        dim = thermal_tail_dim(max(n1, n2), 1e-14)
        for s in (0.2, 0.5, 0.8):
            worst_th = max(worst_th, _rel(fock_qs(thermal_fock(n1, dim), thermal_fock(n2, dim), s), qs_thermal_closed(n1, n2, s)))
    worst_disp = 0.0
    for n_mean, alpha in [(0.3, 0.5), (0.8, 1.0 + 0.0j), (0.2, 0.6j)]:
        dim = 60
        a = displaced_thermal_fock(n_mean, alpha, dim)
        b = thermal_fock(0.5, dim)
        ga = displace(make_thermal(n_mean), 0, alpha)
        worst_disp = max(worst_disp, _rel(fock_qs(a, b, 0.5), qs_gaussian(ga, make_thermal(0.5), 0.5)))
    worst_norm, worst_mean = 0.0, 0.0
    for n_s, n_m, n_th in itertools.product([0.0, 0.5, 2.0], [0.0, 0.5, 3.0], [0.1, 1.0, 10.0]):
        pmf = adaptive_psk_pmf(0.9, n_s, n_m, n_th, tail_eps=1e-12)
        worst_norm = max(worst_norm, abs(math.fsum(pmf.probabilities) - 1.0))
        target = 0.9 * n_m + receiver_thermal_photons(0.9, n_s, n_th)
        worst_mean = max(worst_mean, abs(pmf.mean() - target))
    worst_rec = 0.0
    for z in (1e-3, 0.5, 20.0, 300.0):
        rec = log_hyp1f1_np1_1_recurrence(200, z)
        for n in (0, 7, 50, 199):
            worst_rec = max(worst_rec, _rel(rec[n], log_hyp1f1_np1_1(n, z)))
    viol = 0.0
    for n_s, n_m, n_th in itertools.product([0.0, 0.1, 0.5, 1.0], [0.01, 0.1, 0.5, 1.0], [0.1, 1.0, 100.0]):
        split = ResourceSplit(0.0, n_s, n_m)
        params = ChannelParams(0.9, n_th, n_s + n_m)
        viol = max(viol, r_ua(params, split) - ua_psk_holevo(0.9, n_s, n_m, n_th))
    small = displaced_psk_pmf(0.9, 0.0, 1.0, 0.1, 4)
    return [
        CheckResult("fock", "truncated thermal vs closed form", worst_th, 1e-6),
        CheckResult("fock", "displaced thermal vs gaussian", worst_disp, 1e-6),
        CheckResult("fock", "PSK pmf normalization defect", worst_norm, 1e-9),
        CheckResult("fock", "PSK pmf mean photon number", worst_mean, 1e-6),
        CheckResult("fock", "1F1 series vs recurrence", worst_rec, 1e-9),
        CheckResult("fock", "Holevo lower bound below exact (4x4x3)", max(viol, 0.0), 1e-12),
        CheckResult("fock", "tail reported at small cutoff", 0.0 if small.tail_mass > 0 else 1.0, 0.0),
    ]


def region_suite() -> list[CheckResult]:
    params = ChannelParams(0.99, 1e4, 10.0)
    points, frontier = build_region(params, 11, 11)
    worst_dom = 0.0
    for f in frontier.points:
        for p in points:
            worst_dom = max(worst_dom, min(p.rate - f.rate, p.exponent - f.exponent))
    rates = frontier.rates()
    mono = float(np.max(np.diff(rates))) if len(rates) > 1 else -1.0
    base = time_sharing_baseline(params, 11)
    prof = ScenarioContext(params).profile(params.n_total, 0.0)
    end_gap = max(
        abs(base[-1].rate - prof.point(1.0).rate),
        abs(base[-1].exponent - e_nqi(params)),
        _rel(base[0].exponent, e_qi_d(params, ResourceSplit(0.0, params.n_total, 0.0))),
    )
    rep = dominance_report(frontier, base)
    return [
        CheckResult("region", "no grid point dominates the frontier", max(worst_dom, 0.0), 1e-12),
        CheckResult("region", "frontier rates strictly decreasing", max(mono, 0.0), 0.0),
        CheckResult("region", "baseline endpoints", end_gap, 1e-8),
        CheckResult("region", "region beats time-sharing (negated margin)", -rep.max_margin, 0.0),
    ]


SUITES: dict[str, Callable[[], list[CheckResult]]] = {
    "gaussian": gaussian_suite,
    "chernoff": chernoff_suite,
    "fock": fock_suite,
    "region": region_suite,
}


def run_suites(name: str) -> list[CheckResult]:
    names = list(SUITES) if name == "all" else [name]
    out: list[CheckResult] = []
    for n in names:
        out.extend(SUITES[n]())
    return out
