"""Phase-space representation of bosonic Gaussian states.

Conventions: quadratures are ordered ``(x1, p1, ..., xM, pM)`` with
``x = a + a^dag`` and ``p = -i (a - a^dag)``, so the vacuum covariance is the
identity and a coherent state ``|alpha>`` has mean ``2 (Re alpha, Im alpha)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import schur

from .errors import DomainError, NumericalDomainError

SYMMETRY_TOL = 1e-12
PHYSICAL_TOL = 1e-9


def symplectic_form(num_modes: int) -> NDArray[np.float64]:
    """Block-diagonal symplectic form with blocks ``[[0, 1], [-1, 0]]``."""
    return np.kron(np.eye(num_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def thermal_entropy(n: float) -> float:
    """``g(n) = (n+1) log(n+1) - n log n`` in nats, with ``g(0) = 0``."""
    if n < 0:
        raise DomainError(f"mean photon number must be >= 0, got {n}")
    if n == 0:
        return 0.0
    return (n + 1.0) * np.log1p(n) - n * np.log(n)


def _symmetrize(m: NDArray[np.float64]) -> NDArray[np.float64]:
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class GaussianState:
    """Mean vector and covariance matrix of an ``num_modes``-mode Gaussian state."""

    num_modes: int
    mean: NDArray[np.float64]
    cov: NDArray[np.float64]

    def __post_init__(self) -> None:
        if self.num_modes < 1:
            raise DomainError("num_modes must be positive")
        dim = 2 * self.num_modes
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if mean.shape != (dim,) or cov.shape != (dim, dim):
            raise DomainError(
                f"expected mean of length {dim} and {dim}x{dim} covariance, "
                f"got {mean.shape} and {cov.shape}"
            )
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL * scale:
            raise DomainError("covariance matrix is not symmetric")
        cov = _symmetrize(cov)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def is_physical(self, tol: float = PHYSICAL_TOL) -> bool:
        try:
            return bool(np.min(williamson(self).nu) >= 1.0 - tol)
        except NumericalDomainError:
            return False

    def mean_photon(self, mode: int) -> float:
        """Mean photon number ``<a^dag a>`` of one mode."""
        _check_mode(self, mode)
        sl = slice(2 * mode, 2 * mode + 2)
        block = self.cov[sl, sl]
        return 0.25 * (np.trace(block) + float(self.mean[sl] @ self.mean[sl])) - 0.5


@dataclass(frozen=True)
class WilliamsonDecomposition:
    """``cov = symplectic @ diag(nu_1, nu_1, ..., nu_M, nu_M) @ symplectic.T``."""

    symplectic: NDArray[np.float64]
    nu: NDArray[np.float64]

    def normal_form(self) -> NDArray[np.float64]:
        return np.diag(np.repeat(self.nu, 2))


def _check_mode(state: GaussianState, mode: int) -> None:
    if not 0 <= mode < state.num_modes:
        raise DomainError(f"mode {mode} out of range for a {state.num_modes}-mode state")


def vacuum(num_modes: int = 1) -> GaussianState:
    return GaussianState(num_modes, np.zeros(2 * num_modes), np.eye(2 * num_modes))


def make_thermal(n_mean: float) -> GaussianState:
    """Single-mode thermal state with ``n_mean`` photons on average."""
    if n_mean < 0:
        raise DomainError(f"thermal mean photon number must be >= 0, got {n_mean}")
    return GaussianState(1, np.zeros(2), (2.0 * n_mean + 1.0) * np.eye(2))


def make_tmsv(n_s: float) -> GaussianState:
    """Two-mode squeezed vacuum with ``n_s`` photons per arm, modes (signal, idler)."""
    if n_s < 0:
        raise DomainError(f"TMSV photon number must be >= 0, got {n_s}")
    a = 2.0 * n_s + 1.0
    c = 2.0 * np.sqrt(n_s * (n_s + 1.0))
    z = np.diag([1.0, -1.0])
    cov = np.block([[a * np.eye(2), c * z], [c * z, a * np.eye(2)]])
    return GaussianState(2, np.zeros(4), cov)


def displace(state: GaussianState, mode: int, alpha: complex) -> GaussianState:
    _check_mode(state, mode)
    mean = state.mean.copy()
    mean[2 * mode] += 2.0 * np.real(alpha)
    mean[2 * mode + 1] += 2.0 * np.imag(alpha)
    return GaussianState(state.num_modes, mean, state.cov)


def apply_symplectic(
    state: GaussianState, matrix: NDArray[np.float64], modes: Sequence[int]
) -> GaussianState:
    """Apply a symplectic (or any linear) map acting on ``modes`` to the state."""
    modes = list(modes)
    if len(set(modes)) != len(modes):
        raise DomainError(f"repeated mode indices {modes}")
    for m in modes:
        _check_mode(state, m)
    if matrix.shape != (2 * len(modes), 2 * len(modes)):
        raise DomainError("symplectic matrix size does not match the mode list")
    full = np.eye(2 * state.num_modes)
    idx = np.array([[2 * m, 2 * m + 1] for m in modes]).reshape(-1)
    full[np.ix_(idx, idx)] = matrix
    return GaussianState(
        state.num_modes, full @ state.mean, _symmetrize(full @ state.cov @ full.T)
    )


def rotation_matrix(theta: float) -> NDArray[np.float64]:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def phase_rotate(state: GaussianState, mode: int, theta: float) -> GaussianState:
    """Phase shift ``exp(i theta a^dag a)`` on one mode (``alpha -> alpha e^{i theta}``)."""
    return apply_symplectic(state, rotation_matrix(theta), [mode])


def beamsplitter_matrix(eta: float) -> NDArray[np.float64]:
    t, r = np.sqrt(eta), np.sqrt(1.0 - eta)
    eye = np.eye(2)
    return np.block([[t * eye, r * eye], [-r * eye, t * eye]])


def beamsplitter(state: GaussianState, mode_a: int, mode_b: int, eta: float) -> GaussianState:
    """Mix two modes with transmissivity ``eta``.

    Output ``mode_a`` carries ``sqrt(eta) a + sqrt(1-eta) b`` and ``mode_b``
    carries ``-sqrt(1-eta) a + sqrt(eta) b``.
    """
    if mode_a == mode_b:
        raise DomainError("beamsplitter needs two distinct modes")
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"transmissivity must lie in [0, 1], got {eta}")
    return apply_symplectic(state, beamsplitter_matrix(eta), [mode_a, mode_b])


def tensor(a: GaussianState, b: GaussianState) -> GaussianState:
    n = 2 * a.num_modes
    m = 2 * b.num_modes
    cov = np.zeros((n + m, n + m))
    cov[:n, :n] = a.cov
    cov[n:, n:] = b.cov
    return GaussianState(a.num_modes + b.num_modes, np.concatenate([a.mean, b.mean]), cov)


def partial_trace(state: GaussianState, keep: Sequence[int]) -> GaussianState:
    """Restrict to the modes in ``keep``; the output mode order follows ``keep``."""
    keep = list(keep)
    if not keep:
        raise DomainError("keep must list at least one mode")
    if len(set(keep)) != len(keep):
        raise DomainError(f"repeated mode indices {keep}")
    for m in keep:
        _check_mode(state, m)
    idx = np.array([[2 * m, 2 * m + 1] for m in keep]).reshape(-1)
    return GaussianState(len(keep), state.mean[idx], state.cov[np.ix_(idx, idx)])


def williamson(state: GaussianState | NDArray[np.float64]) -> WilliamsonDecomposition:
    """Williamson normal form of a positive-definite covariance matrix.

    Uses the real Schur form of the antisymmetric matrix ``V^{-1/2} Ω V^{-1/2}``,
    which is similar to ``i Ω V`` and has eigenvalues ``±i/ν_k``. The Schur
    vectors are orthonormal, so ``S = V^{1/2} Z D^{-1/2}`` is symplectic.
    Symplectic eigenvalues are returned in ascending order.
    """
    cov = state.cov if isinstance(state, GaussianState) else np.asarray(state, dtype=float)
    dim = cov.shape[0]
    num_modes = dim // 2
    w, u = np.linalg.eigh(_symmetrize(cov))
    if not np.all(np.isfinite(w)) or w[0] <= 0:
        raise NumericalDomainError("covariance matrix is not positive definite")
    sqrt_v = (u * np.sqrt(w)) @ u.T
    inv_sqrt_v = (u / np.sqrt(w)) @ u.T
    omega = symplectic_form(num_modes)
    m = inv_sqrt_v @ omega @ inv_sqrt_v
    m = 0.5 * (m - m.T)
    t, z = schur(m, output="real")

    freqs = np.empty(num_modes)
    for k in range(num_modes):
        b = t[2 * k, 2 * k + 1]
        if b < 0:
            z[:, [2 * k, 2 * k + 1]] = z[:, [2 * k + 1, 2 * k]]
        freqs[k] = abs(b)
    if np.any(freqs <= 0):
        raise NumericalDomainError("degenerate symplectic spectrum")

    nu = 1.0 / freqs
    order = np.argsort(nu, kind="stable")
    nu = nu[order]
    cols = np.array([[2 * k, 2 * k + 1] for k in order]).reshape(-1)
    z = z[:, cols]
    s = sqrt_v @ z @ np.diag(np.repeat(1.0 / np.sqrt(nu), 2))
    # pure-mode round-off
    nu = np.where((nu < 1.0) & (nu >= 1.0 - PHYSICAL_TOL), 1.0, nu)
    return WilliamsonDecomposition(s, nu)


def symplectic_eigenvalues(state: GaussianState | NDArray[np.float64]) -> NDArray[np.float64]:
    """Moduli of the eigenvalues of ``i Ω V``, each listed once, ascending."""
    cov = state.cov if isinstance(state, GaussianState) else np.asarray(state, dtype=float)
    omega = symplectic_form(cov.shape[0] // 2)
    ev = np.sort(np.abs(np.linalg.eigvals(1j * omega @ cov)))
    return ev[::2]


def gaussian_entropy(state: GaussianState) -> float:
    """Von Neumann entropy in nats: sum of ``g((nu_k - 1) / 2)``."""
    nu = williamson(state).nu
    return float(sum(thermal_entropy(max(0.0, 0.5 * (v - 1.0))) for v in nu))


def _dilated_output(
    eta: float, n_s: float, n_m: float, n_th: float, theta: float
) -> GaussianState:
    """TMSV signal, displaced and sent through the target beamsplitter.

    Returns the 3-mode state ordered (forward output b, idler, returned d).
    The environment entering the beamsplitter is thermal with ``n_th / eta``
    photons.
    """
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"transmissivity must lie in (0, 1], got {eta}")
    if n_s < 0 or n_m < 0 or n_th < 0:
        raise DomainError("photon numbers must be non-negative")
    state = make_tmsv(n_s)
    state = displace(state, 0, np.sqrt(n_m) * np.exp(1j * theta))
    state = tensor(state, make_thermal(n_th / eta))
    return beamsplitter(state, 0, 2, eta)


def return_idler_state(
    eta: float,
    n_s: float,
    n_m: float,
    n_th: float,
    theta: float = 0.0,
    *,
    extra_loss_factor: bool = False,
) -> GaussianState:
    """Two-mode (returned, idler) state seen by the transmitter under the true hypothesis.

    With ``extra_loss_factor=True`` the return/idler correlation block is scaled by
    an extra ``sqrt(1 - eta)``, i.e. its magnitude becomes
    ``2 (1 - eta) sqrt(n_s (n_s + 1))`` instead of the value implied by the
    beamsplitter relations, ``2 sqrt(1 - eta) sqrt(n_s (n_s + 1))``.
    """
    state = partial_trace(_dilated_output(eta, n_s, n_m, n_th, theta), [2, 1])
    if not extra_loss_factor:
        return state
    cov = state.cov.copy()
    cov[0:2, 2:4] *= np.sqrt(1.0 - eta)
    cov[2:4, 0:2] *= np.sqrt(1.0 - eta)
    return GaussianState(2, state.mean, cov)


def bob_idler_state(eta: float, n_s: float, n_th: float, theta: float = 0.0) -> GaussianState:
    """Two-mode (receiver, idler) state when the idler is shared with the receiver."""
    state = partial_trace(_dilated_output(eta, n_s, 0.0, n_th, 0.0), [0, 1])
    return phase_rotate(state, 0, theta) if theta else state
