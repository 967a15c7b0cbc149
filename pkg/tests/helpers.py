"""Shared constructions for the test suite."""

import numpy as np

# criterion id -> one-line PASS/FAIL summary, filled by test_acceptance
ACCEPTANCE: dict[str, str] = {}


def random_passive(rng, m):
    """Real 2m x 2m form of a Haar-ish random m-mode unitary, xp-interleaved."""
    z = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    q, r = np.linalg.qr(z)
    u = q * (np.diag(r) / np.abs(np.diag(r)))
    out = np.zeros((2 * m, 2 * m))
    out[0::2, 0::2] = u.real
    out[0::2, 1::2] = -u.imag
    out[1::2, 0::2] = u.imag
    out[1::2, 1::2] = u.real
    return out


def random_symplectic(rng, m, squeeze=1.0):
    r = rng.uniform(-squeeze, squeeze, m)
    sq = np.diag(np.exp(np.repeat(r, 2) * np.tile([1.0, -1.0], m)))
    return random_passive(rng, m) @ sq @ random_passive(rng, m)


def random_covariance(rng, m, squeeze=1.0, spread=2.0):
    s = random_symplectic(rng, m, squeeze)
    nu = 1.0 + rng.exponential(spread, m)
    return s @ np.diag(np.repeat(nu, 2)) @ s.T, np.sort(nu)
