import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_covariance
from jcas.chernoff import (
    SharedSPair,
    controlled_exponent,
    gaussian_log_qs_fn,
    golden_section_min,
    joint_exponent,
    log_qs_fn,
    log_qs_thermal_closed,
    log_qs_thermal_swap,
    mary_exponent,
    optimize_exponent,
    qs_gaussian,
    qs_thermal_closed,
)
from jcas.errors import DomainError
from jcas.fock import thermal_fock
from jcas.gaussian import GaussianState, displace, make_thermal, tensor, vacuum

THERMAL_GRID = [0.0, 0.1, 1.0, 5.0, 50.0]


def test_closed_form_values():
    assert qs_thermal_closed(1.0, 2.0, 0.5) == pytest.approx(1 / (math.sqrt(6) - math.sqrt(2)), rel=1e-14)
    assert qs_thermal_closed(0.0, 3.0, 0.5) == pytest.approx(0.5, rel=1e-14)
    assert qs_thermal_closed(0.7, 0.7, 0.3) == pytest.approx(1.0, rel=1e-14)
    assert log_qs_thermal_closed(2.0, 5.0, 0.0) == 0.0


@pytest.mark.parametrize("n1,n2", list(itertools.product(THERMAL_GRID, THERMAL_GRID)))
def test_gaussian_matches_thermal_closed_form(n1, n2):
    for s in np.linspace(0.1, 0.9, 9):
        g = qs_gaussian(make_thermal(n1), make_thermal(n2), float(s))
        assert g == pytest.approx(qs_thermal_closed(n1, n2, float(s)), rel=1e-10)


def test_coherent_states_overlap():
    a = displace(vacuum(), 0, 0.6 - 0.2j)
    b = displace(vacuum(), 0, -0.1 + 0.3j)
    # pure states: Q_s = |<a|b>|^2 for all s
    assert qs_gaussian(a, b, 0.3) == pytest.approx(math.exp(-abs(0.7 - 0.5j) ** 2), rel=1e-12)


def test_mean_term_can_be_dropped():
    a = displace(make_thermal(0.5), 0, 1.0)
    assert qs_gaussian(a, make_thermal(0.5), 0.5, include_mean=False) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("n,delta,s", [(100.0, 1e-3, 0.5), (1e4, 0.1, 0.3), (0.5, 2.0, 0.7), (0.0, 1.0, 0.4), (7.0, 1e-6, 0.5)])
def test_thermal_swap_against_mpmath(n, delta, s):
    mpmath.mp.dps = 60
    nb, d, sm = mpmath.mpf(n), mpmath.mpf(delta), mpmath.mpf(s)
    n1 = nb + d

    def lq(a, b):
        return -mpmath.log((a + 1) ** sm * (b + 1) ** (1 - sm) - a**sm * b ** (1 - sm))

    ref = float(lq(n1, nb) + lq(nb, n1))
    assert log_qs_thermal_swap(n, delta, s) == pytest.approx(ref, rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 3))
def test_log_q_is_convex_and_vanishes_at_ends(seed, m):
    rng = np.random.default_rng(seed)
    cov_a, _ = random_covariance(rng, m, squeeze=0.5, spread=1.0)
    cov_b, _ = random_covariance(rng, m, squeeze=0.5, spread=1.0)
    a = GaussianState(m, rng.normal(size=2 * m), cov_a)
    b = GaussianState(m, rng.normal(size=2 * m), cov_b)
    f = gaussian_log_qs_fn(a, b)
    s = np.linspace(0.02, 0.98, 25)
    v = np.array([f(x) for x in s])
    assert np.all(v <= 1e-12)
    assert np.all(np.diff(v, 2) >= -1e-9)


@pytest.mark.parametrize("n1,n2", [(0.1, 1.0), (0.0, 2.0), (3.0, 0.5)])
def test_optimize_exponent_matches_grid(n1, n2):
    res = optimize_exponent(lambda s: log_qs_thermal_closed(n1, n2, s), log_domain=True)
    grid = max(-log_qs_thermal_closed(n1, n2, s) for s in np.linspace(1e-6, 1 - 1e-6, 200001))
    assert res.exponent == pytest.approx(grid, rel=1e-9)
    assert res.q_value == pytest.approx(math.exp(-res.exponent))


def test_optimize_exponent_reference_pair():
    res = optimize_exponent(lambda s: qs_thermal_closed(0.1, 1.0, s))
    assert res.exponent == pytest.approx(0.16271750170140, rel=1e-10)
    assert res.s_star == pytest.approx(0.38441, abs=1e-4)


def test_golden_section_quadratic():
    x, fx = golden_section_min(lambda x: (x - 0.3) ** 2, 0.0, 1.0, 1e-9)
    assert x == pytest.approx(0.3, abs=1e-8)
    assert fx == pytest.approx(0.0, abs=1e-15)


def test_identical_states_give_zero_exponent():
    res = optimize_exponent(gaussian_log_qs_fn(make_thermal(0.4), make_thermal(0.4)), log_domain=True)
    assert res.exponent == pytest.approx(0.0, abs=1e-14)


def test_mary_position_pairs_all_equal():
    n_t, n_b = 1.1, 0.1
    hyps = []
    for h in range(3):
        modes = [make_thermal(n_t if k == h else n_b) for k in range(3)]
        hyps.append(tensor(tensor(modes[0], modes[1]), modes[2]))
    pairs, e = mary_exponent(hyps)
    vals = [r.exponent for r in pairs.table.values()]
    assert max(vals) - min(vals) < 1e-12
    assert e == pytest.approx(-log_qs_thermal_swap(n_b, n_t - n_b, 0.5), rel=1e-9)
    assert all(abs(r.s_star - 0.5) < 1e-4 for r in pairs.table.values())
    assert pairs[(2, 0)] is pairs[(0, 2)]


def test_mary_rejects_mixed_backends():
    with pytest.raises(DomainError):
        mary_exponent([make_thermal(0.1), thermal_fock(0.1, 10)])
    with pytest.raises(DomainError):
        log_qs_fn(make_thermal(0.1), thermal_fock(0.1, 10))


def test_fock_and_gaussian_backends_agree():
    fg = optimize_exponent(log_qs_fn(make_thermal(0.1), make_thermal(1.0)), log_domain=True)
    ff = optimize_exponent(log_qs_fn(thermal_fock(0.1, 120), thermal_fock(1.0, 120)), log_domain=True)
    assert fg.exponent == pytest.approx(ff.exponent, rel=1e-9)


def test_joint_exponent_shared_optimum_is_convex_combination():
    f1 = lambda s: log_qs_thermal_swap(0.1, 1.0, s)  # noqa: E731
    f2 = lambda s: log_qs_thermal_swap(2.0, 0.5, s)  # noqa: E731
    e1 = -f1(0.5)
    e2 = -f2(0.5)
    res = joint_exponent([f1, f2], [0.3, 0.7])
    assert res.exponent == pytest.approx(0.3 * e1 + 0.7 * e2, rel=1e-12)
    assert res.s_star == pytest.approx(0.5, abs=1e-4)


def test_joint_exponent_distinct_optima_uses_joint_search():
    f1 = lambda s: log_qs_thermal_closed(0.1, 1.0, s)  # noqa: E731  s* ~ 0.38
    f2 = lambda s: log_qs_thermal_closed(1.0, 0.1, s)  # noqa: E731  s* ~ 0.62
    res = joint_exponent([f1, f2], [0.5, 0.5])
    grid = max(-(0.5 * f1(s) + 0.5 * f2(s)) for s in np.linspace(1e-4, 1 - 1e-4, 20001))
    assert res.exponent == pytest.approx(grid, rel=1e-9)
    assert res.exponent < 0.5 * optimize_exponent(f1, log_domain=True).exponent + 0.5 * optimize_exponent(f2, log_domain=True).exponent
    assert res.s_star == pytest.approx(0.5, abs=1e-4)


def test_shared_pair_reuses_candidates():
    f1 = lambda s: log_qs_thermal_swap(0.1, 1.0, s)  # noqa: E731
    pair = SharedSPair([f1, lambda s: 0.0])
    assert pair.exponent([1.0, 0.0]).exponent == pytest.approx(-f1(0.5), rel=1e-12)
    assert pair.exponent([0.0, 1.0]).exponent == 0.0
    with pytest.raises(DomainError):
        pair.exponent([0.0, 0.0])


def test_controlled_exponent_with_states():
    n_t, n_b = 1.2, 0.2
    fam_a = [tensor(make_thermal(n_t), make_thermal(n_b)), tensor(make_thermal(n_b), make_thermal(n_t))]
    fam_b = [make_thermal(0.3), make_thermal(0.3)]  # uninformative symbol
    res = controlled_exponent([fam_a, fam_b], [0.25, 0.75])
    assert res.exponent == pytest.approx(0.25 * -log_qs_thermal_swap(n_b, n_t - n_b, 0.5), rel=1e-9)
    with pytest.raises(DomainError):
        controlled_exponent([fam_a, fam_b], [0.5, 0.6])
