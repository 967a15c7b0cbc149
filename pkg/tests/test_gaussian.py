import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_covariance, random_symplectic
from jcas.errors import DomainError
from jcas.gaussian import (
    GaussianState,
    beamsplitter,
    bob_idler_state,
    displace,
    gaussian_entropy,
    make_thermal,
    make_tmsv,
    partial_trace,
    phase_rotate,
    return_idler_state,
    symplectic_eigenvalues,
    symplectic_form,
    tensor,
    thermal_entropy,
    vacuum,
    williamson,
)


def test_vacuum_and_thermal():
    assert np.array_equal(vacuum(2).cov, np.eye(4))
    th = make_thermal(1.5)
    assert np.allclose(th.cov, 4.0 * np.eye(2))
    assert th.mean_photon(0) == pytest.approx(1.5)


def test_coherent_mean_convention():
    st_ = displace(vacuum(), 0, 0.3 - 0.4j)
    assert np.allclose(st_.mean, [0.6, -0.8])
    assert st_.mean_photon(0) == pytest.approx(0.25)


def test_state_is_immutable_and_symmetric_checked():
    th = make_thermal(0.2)
    with pytest.raises(ValueError):
        th.cov[0, 0] = 3.0
    with pytest.raises(DomainError):
        GaussianState(1, np.zeros(2), np.array([[1.0, 0.1], [0.0, 1.0]]))
    with pytest.raises(DomainError):
        GaussianState(1, np.zeros(3), np.eye(2))


def test_tmsv_marginals_are_thermal():
    t = make_tmsv(0.7)
    for mode in (0, 1):
        assert np.allclose(partial_trace(t, [mode]).cov, make_thermal(0.7).cov)
    assert np.allclose(symplectic_eigenvalues(t), [1.0, 1.0])
    assert gaussian_entropy(t) == pytest.approx(0.0, abs=1e-9)


def test_beamsplitter_mixes_annihilation_operators():
    # coherent alpha on mode a, vacuum on b: outputs sqrt(eta) alpha and -sqrt(1-eta) alpha
    st_ = tensor(displace(vacuum(), 0, 1.0), vacuum())
    out = beamsplitter(st_, 0, 1, 0.3)
    assert np.allclose(out.mean, [2 * math.sqrt(0.3), 0.0, -2 * math.sqrt(0.7), 0.0])
    assert np.allclose(out.cov, np.eye(4))


def test_phase_rotate_moves_displacement():
    st_ = phase_rotate(displace(vacuum(), 0, 1.0), 0, math.pi / 2)
    assert np.allclose(st_.mean, [0.0, 2.0], atol=1e-15)


@pytest.mark.parametrize("n", [0.0, 0.5, 3.0, 1e4])
def test_thermal_entropy_matches_williamson(n):
    assert gaussian_entropy(make_thermal(n)) == pytest.approx(thermal_entropy(n), rel=1e-12)


def test_thermal_entropy_values():
    assert thermal_entropy(0.0) == 0.0
    assert thermal_entropy(1.0) == pytest.approx(2 * math.log(2))
    with pytest.raises(DomainError):
        thermal_entropy(-0.1)


@settings(max_examples=1000, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 4))
def test_williamson_random_states(seed, m):
    rng = np.random.default_rng(seed)
    cov, nu = random_covariance(rng, m)
    w = williamson(cov)
    omega = symplectic_form(m)
    scale = np.max(np.abs(cov))
    assert np.max(np.abs(w.symplectic @ w.normal_form() @ w.symplectic.T - cov)) <= 1e-9 * scale
    assert np.max(np.abs(w.symplectic @ omega @ w.symplectic.T - omega)) <= 1e-8 * max(1.0, scale)
    assert np.allclose(w.nu, nu, rtol=1e-9)
    assert np.all(np.diff(w.nu) >= 0)


def test_williamson_pure_state_clamped():
    rng = np.random.default_rng(5)
    s = random_symplectic(rng, 3)
    w = williamson(s @ s.T)
    assert np.all(w.nu >= 1.0)
    assert np.allclose(w.nu, 1.0, atol=1e-12)


def test_unphysical_state_flagged():
    bad = GaussianState(1, np.zeros(2), np.diag([0.5, 0.5]))
    assert not bad.is_physical()
    assert make_thermal(0.0).is_physical()


@pytest.mark.parametrize("eta,n_s,n_m,n_th", [(0.99, 0.1, 0.0, 1e3), (0.7, 0.8, 0.3, 0.5), (0.2, 2.0, 1.0, 5.0)])
def test_return_idler_moments(eta, n_s, n_m, n_th):
    ri = return_idler_state(eta, n_s, n_m, n_th)
    n1 = (1 - eta) * n_s + n_th
    c = 2 * math.sqrt(1 - eta) * math.sqrt(n_s * (n_s + 1))
    expected = np.block(
        [[(2 * n1 + 1) * np.eye(2), -c * np.diag([1.0, -1.0])], [-c * np.diag([1.0, -1.0]), (2 * n_s + 1) * np.eye(2)]]
    )
    assert np.allclose(ri.cov, expected, rtol=1e-12, atol=1e-12)
    assert np.allclose(ri.mean, [-2 * math.sqrt((1 - eta) * n_m), 0.0, 0.0, 0.0])
    assert ri.is_physical()


def test_return_idler_strict_variant_scales_correlation():
    base = return_idler_state(0.5, 1.0, 0.0, 1.0)
    strict = return_idler_state(0.5, 1.0, 0.0, 1.0, extra_loss_factor=True)
    assert strict.cov[0, 2] == pytest.approx(base.cov[0, 2] * math.sqrt(0.5))


def test_bob_idler_receiver_photons():
    eta, n_s, n_th = 0.8, 0.6, 2.0
    bi = bob_idler_state(eta, n_s, n_th)
    assert bi.mean_photon(0) == pytest.approx(eta * n_s + (1 - eta) * n_th / eta)
    assert bi.mean_photon(1) == pytest.approx(n_s)


def test_partial_trace_reorders():
    st_ = tensor(make_thermal(1.0), make_thermal(2.0))
    swapped = partial_trace(st_, [1, 0])
    assert swapped.mean_photon(0) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        partial_trace(st_, [0, 0])
