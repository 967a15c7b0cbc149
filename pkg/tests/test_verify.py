import itertools
import math

import numpy as np
import pytest

from jcas.chernoff import log_qs_thermal_closed, optimize_exponent
from jcas.errors import DomainError
from jcas.fock import thermal_fock, thermal_pmf
from jcas.verify import (
    McEstimate,
    copies_grid,
    exact_binary_thermal_error,
    exact_position_error,
    mc_discrimination,
    position_hypotheses,
    slope_fit,
    truncation_convergence,
)

REF_EXPONENT = optimize_exponent(lambda s: log_qs_thermal_closed(0.1, 1.0, s), log_domain=True).exponent


def _pmf(n, dim=80):
    p = thermal_pmf(n, dim)
    return p / p.sum()


def test_identical_state_table_goes_to_zero():
    tab = truncation_convergence(lambda d: thermal_fock(1.0, d), lambda d: thermal_fock(1.0, d), [2, 8, 32, 128])
    retained = [1 - (0.5) ** d for d in tab.dims]
    assert tab.exponents == pytest.approx([-math.log(r) for r in retained], rel=1e-9)
    assert tab.exponents[-1] < 1e-12


def test_thermal_truncation_converges():
    dims = [4, 8, 16, 32, 64, 128]
    tab = truncation_convergence(lambda d: thermal_fock(0.1, d), lambda d: thermal_fock(1.0, d), dims, REF_EXPONENT)
    err = tab.errors()
    assert err[-1] <= 1e-6
    assert abs(tab.exponents[-1] - tab.exponents[-2]) < 1e-8
    # beyond the tail-threshold cutoff successive changes shrink (factor-2 slack)
    deltas = np.abs(np.diff(tab.exponents))[2:]
    assert np.all(deltas[1:] <= 2 * deltas[:-1] + 1e-15)


def test_truncation_dims_validated():
    with pytest.raises(DomainError):
        truncation_convergence(lambda d: thermal_fock(0.1, d), lambda d: thermal_fock(1.0, d), [8, 4])


def test_exact_binary_oracle_by_enumeration():
    # two copies, direct sum over count pairs
    a, b, dim = 0.3, 1.5, 150
    pa, pb = _pmf(a, dim), _pmf(b, dim)
    err_a = err_b = 0.0
    for x, y in itertools.product(range(60), repeat=2):
        la, lb = pa[x] * pa[y], pb[x] * pb[y]
        if lb > la:
            err_a += la
        elif la > lb:
            err_b += lb
        else:
            err_a += la / 2
            err_b += lb / 2
    assert exact_binary_thermal_error(a, b, 2) == pytest.approx(max(err_a, err_b), rel=1e-9)


def test_exact_position_oracle_by_enumeration():
    nt, nb, dim = 1.0, 0.2, 60
    pt, pb = _pmf(nt, dim), _pmf(nb, dim)
    correct = 0.0
    for x in itertools.product(range(40), repeat=3):
        p = pt[x[0]] * pb[x[1]] * pb[x[2]]
        top = max(x)
        if x[0] == top:
            correct += p / sum(1 for v in x if v == top)
    assert exact_position_error(nt, nb, 3, 1) == pytest.approx(1 - correct, rel=1e-9)


def test_mc_identical_hypotheses_is_coin_flip():
    p = _pmf(0.5)
    est = mc_discrimination([p, p], 3, 40000, seed=1)
    assert abs(np.mean(est.per_hypothesis) - 0.5) < 3 * est.half_width
    assert abs(est.error_rate - 0.5) < 3 * est.half_width + 0.01


def test_mc_easy_pair():
    est = mc_discrimination([_pmf(0.0), _pmf(5.0)], 4, 20000, seed=2)
    exact = exact_binary_thermal_error(0.0, 5.0, 4)
    assert est.error_rate < 1e-2 and exact < 1e-2
    assert abs(est.error_rate - exact) <= 3 * est.half_width + 1e-4


@pytest.mark.parametrize("n", [5, 15])
def test_mc_matches_exact_binary(n):
    est = mc_discrimination([_pmf(0.1), _pmf(1.0)], n, 100000, seed=3)
    assert abs(est.error_rate - exact_binary_thermal_error(0.1, 1.0, n)) <= 3 * est.half_width


def test_mc_matches_exact_position():
    est = mc_discrimination(position_hypotheses(1.1, 0.1, 3), 8, 60000, seed=4)
    assert abs(est.error_rate - exact_position_error(1.1, 0.1, 3, 8)) <= 3.5 * est.half_width


def test_mc_deterministic_and_thread_independent():
    hyps = position_hypotheses(1.1, 0.1, 3)
    a = mc_discrimination(hyps, 6, 10000, seed=9)
    b = mc_discrimination(hyps, 6, 10000, seed=9, threads=4)
    c = mc_discrimination(hyps, 6, 10000, seed=10)
    assert a == b
    assert a != c


def test_mc_input_validation():
    with pytest.raises(DomainError):
        mc_discrimination([], 2, 10, 0)
    with pytest.raises(DomainError):
        mc_discrimination([_pmf(0.1), _pmf(1.0)], 2, 0, 0)
    with pytest.raises(DomainError):
        mc_discrimination([np.array([0.5, 0.4]), np.array([0.5, 0.5])], 2, 10, 0)


def _synthetic(rate, c):
    return [McEstimate(n, 10**6, c * math.exp(-rate * n), 1.96 * 0.01 * c * math.exp(-rate * n) * (1 + n / 10)) for n in (2, 5, 9, 14, 20)]


def test_slope_fit_exact_synthetic():
    fit = slope_fit(_synthetic(0.3, 1.0))
    assert fit.slope == pytest.approx(0.3, rel=1e-12)
    assert fit.intercept == pytest.approx(0.0, abs=1e-12)
    fit_c = slope_fit(_synthetic(0.3, 0.4))
    assert fit_c.slope == pytest.approx(0.3, rel=1e-12)
    assert fit_c.intercept == pytest.approx(-math.log(0.4), rel=1e-12)


def test_slope_fit_needs_three_points():
    pts = _synthetic(0.3, 1.0)[:2] + [McEstimate(30, 100, 0.0, 0.01)]
    with pytest.raises(DomainError):
        slope_fit(pts)


def test_copies_grid_respects_error_floor():
    g = copies_grid(REF_EXPONENT, 100000)
    assert len(g) >= 3 and g == sorted(g) and g[-1] <= 80
    assert all(exact_binary_thermal_error(0.1, 1.0, n) * 100000 >= 30 for n in g)
    with pytest.raises(DomainError):
        copies_grid(5.0, 100)


def test_mc_slope_tracks_exact_finite_n_slope():
    """Finite-n curvature is a property of the exact MAP error; MC must reproduce it."""
    g = copies_grid(REF_EXPONENT, 100000)
    ests = [mc_discrimination([_pmf(0.1), _pmf(1.0)], n, 100000, seed=11) for n in g]
    fit = slope_fit(ests)
    exact = [McEstimate(e.copies, e.trials, exact_binary_thermal_error(0.1, 1.0, e.copies), e.half_width) for e in ests]
    assert abs(fit.slope - slope_fit(exact).slope) <= 3 * fit.stderr
