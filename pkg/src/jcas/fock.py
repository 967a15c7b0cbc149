"""Truncated Fock-space numerics.

Everything here works on a finite cutoff ``dim`` (number states ``0..dim-1``).
Truncated operators are never renormalized: a projected state keeps a trace
slightly below one, which is what the projection arguments need.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import expm

from .errors import CapabilityError, DomainError
from .gaussian import bob_idler_state, gaussian_entropy, thermal_entropy

HERMITIAN_TOL = 1e-12
EIG_CLAMP = 1e-15
MAX_DIAGONAL_DIM = 4096
MAX_DENSE_DIM = 512
ENV_TAIL = 1e-9


@dataclass(frozen=True)
class FockMatrix:
    """A ``dim x dim`` complex operator in the truncated number basis."""

    entries: NDArray[np.complex128]
    hermitian: bool = True
    dim: int = field(init=False)

    def __post_init__(self) -> None:
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError(f"FockMatrix needs a square matrix, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "dim", m.shape[0])

    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    def truncate(self, dim: int) -> "FockMatrix":
        """Projection onto the first ``dim`` number states."""
        return FockMatrix(self.entries[:dim, :dim], self.hermitian)

    def check_density(self) -> None:
        """Raise if this is not a (sub-normalized) density matrix."""
        m = self.entries
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL * max(1.0, np.max(np.abs(m))):
            raise DomainError("matrix is not Hermitian")
        ev = np.linalg.eigvalsh(m)
        if ev[0] < -1e-10:
            raise DomainError(f"matrix has negative eigenvalue {ev[0]:.3e}")
        if np.sum(ev) > 1.0 + 1e-12:
            raise DomainError(f"trace {np.sum(ev)!r} exceeds one")


@dataclass(frozen=True)
class PhotonDistribution:
    """Photon-number probabilities on ``0..dim-1`` plus the mass beyond the cutoff.

    ``flagged`` is set when the cutoff did not reach the requested tail tolerance.
    """

    probabilities: NDArray[np.float64]
    tail_mass: float
    flagged: bool = False

    @property
    def dim(self) -> int:
        return len(self.probabilities)

    def mean(self) -> float:
        return math.fsum(np.arange(self.dim) * self.probabilities)

    def entropy(self) -> float:
        p = self.probabilities[self.probabilities > 0]
        return -math.fsum(p * np.log(p))


# ---------------------------------------------------------------------------
# Confluent hypergeometric 1F1(n+1; 1; z)


def _log_series(next_ratio: Callable[[int], float], max_terms: int | None = None) -> float:
    """Log of ``sum_k t_k`` for positive terms with ``t_0 = 1`` and ``t_{k+1} = t_k * next_ratio(k)``.

    Neumaier-compensated, rescaled to stay finite. Stops once the ratio has
    dropped below one and three consecutive terms are below ``1e-18`` of the sum,
    or after ``max_terms`` terms for a terminating series.
    """
    total, comp, term = 1.0, 0.0, 1.0
    log_scale = 0.0
    small = 0
    k = 0
    while True:
        if max_terms is not None and k + 1 >= max_terms:
            break
        r = next_ratio(k)
        term *= r
        k += 1
        t = total + term
        if abs(total) >= abs(term):
            comp += (total - t) + term
        else:
            comp += (term - t) + total
        total = t
        if total > 1e280:
            log_scale += math.log(total)
            term /= total
            comp /= total
            total = 1.0
        if max_terms is None and r < 1.0:
            small = small + 1 if term < 1e-18 * total else 0
            if small >= 3:
                break
    return math.log(total + comp) + log_scale


def log_hyp1f1_np1_1(n: int, z: float) -> float:
    """``log 1F1(n+1; 1; z)`` for integer ``n >= 0`` and real ``z >= 0``.

    Sums the defining series ``sum_k (n+1)_k z^k / (k!)^2``. When that series
    would need more terms than ``n + 1`` (large ``z``), the equivalent finite
    Kummer form ``e^z sum_{k<=n} C(n,k) z^k / k!`` is summed instead. Both have
    positive terms only.
    """
    if n < 0 or int(n) != n:
        raise DomainError(f"n must be a non-negative integer, got {n}")
    if z < 0:
        raise DomainError(f"z must be >= 0, got {z}")
    n = int(n)
    if z == 0:
        return 0.0
    peak = 0.5 * (z + math.sqrt(z * z + 4.0 * (n + 1) * z))
    if peak + 10.0 * math.sqrt(peak + 1.0) + 40 > n + 1:
        # finite Kummer form: t_{k+1}/t_k = (n-k) z / (k+1)^2
        return z + _log_series(lambda k: (n - k) * z / (k + 1) ** 2, max_terms=n + 1)
    return _log_series(lambda k: (n + 1 + k) * z / (k + 1) ** 2)


def log_hyp1f1_np1_1_recurrence(n_max: int, z: float) -> NDArray[np.float64]:
    """``log 1F1(n+1; 1; z)`` for ``n = 0..n_max`` from the contiguous recurrence in ``n``.

    ``(n+1) M_{n+1} = (2n+1+z) M_n - n M_{n-1}`` run on the ratio
    ``M_n / M_{n-1} >= 1``, which keeps the subtraction benign.
    """
    out = np.empty(n_max + 1)
    out[0] = z
    if n_max == 0:
        return out
    ratio = 1.0 + z
    out[1] = z + math.log1p(z)
    for n in range(1, n_max):
        ratio = ((2 * n + 1 + z) - n / ratio) / (n + 1)
        out[n + 1] = out[n] + math.log(ratio)
    return out


# ---------------------------------------------------------------------------
# Displaced-PSK ensemble seen by the receiver


def receiver_thermal_photons(eta: float, n_s: float, n_th: float) -> float:
    """``N_eta = eta n_s + (1 - eta) n_th / eta``."""
    return eta * n_s + (1.0 - eta) * n_th / eta


def _check_channel(eta: float, n_s: float, n_m: float, n_th: float) -> None:
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"transmissivity must lie in (0, 1], got {eta}")
    if min(n_s, n_m, n_th) < 0:
        raise DomainError("photon numbers must be non-negative")


def _psk_log_pmf(n_eta: float, x: float, dim: int) -> NDArray[np.float64]:
    """Log of the phase-averaged displaced-thermal pmf for ``n < dim``.

    ``x = eta n_m`` is the received displacement power.
    """
    n = np.arange(dim)
    if n_eta == 0.0:
        if x == 0.0:
            out = np.full(dim, -np.inf)
            out[0] = 0.0
            return out
        return -x + n * math.log(x) - np.array([math.lgamma(k + 1) for k in n])
    base = -math.log1p(n_eta) + n * (math.log(n_eta) - math.log1p(n_eta))
    if x == 0.0:
        return base
    z = x / (n_eta * (n_eta + 1.0))
    log_m = np.array([log_hyp1f1_np1_1(k, z) for k in range(dim)])
    return base - x / n_eta + log_m


def _tail_from(probabilities: NDArray[np.float64]) -> float:
    return max(0.0, 1.0 - math.fsum(probabilities))


def displaced_psk_pmf(
    eta: float,
    n_s: float,
    n_m: float,
    n_th: float,
    dim: int,
    tail_eps: float | None = None,
) -> PhotonDistribution:
    """Photon-number distribution of the receiver state averaged over a uniform PSK phase.

    ``p_n = exp(-x/N) N^n / (N+1)^(n+1) 1F1(n+1; 1; x / (N (N+1)))`` with
    ``N = N_eta`` and ``x = eta n_m``.
    """
    _check_channel(eta, n_s, n_m, n_th)
    if dim < 1:
        raise DomainError("dim must be >= 1")
    n_eta = receiver_thermal_photons(eta, n_s, n_th)
    p = np.exp(_psk_log_pmf(n_eta, eta * n_m, dim))
    tail = _tail_from(p)
    flagged = tail_eps is not None and tail > tail_eps
    return PhotonDistribution(p, tail, flagged)


def _initial_dim(mean: float, tail_eps: float) -> int:
    if mean <= 0:
        return 16
    r = mean / (mean + 1.0)
    return max(16, int(math.ceil(math.log(tail_eps) / math.log(r))) + 8)


def adaptive_psk_pmf(
    eta: float,
    n_s: float,
    n_m: float,
    n_th: float,
    tail_eps: float = 1e-12,
    max_dim: int = MAX_DIAGONAL_DIM,
) -> PhotonDistribution:
    """Like :func:`displaced_psk_pmf` with the cutoff doubled until the tail is below ``tail_eps``."""
    n_eta = receiver_thermal_photons(eta, n_s, n_th)
    x = eta * n_m
    dim = min(max_dim, _initial_dim(n_eta + x + math.sqrt(x), tail_eps))
    while True:
        pmf = displaced_psk_pmf(eta, n_s, n_m, n_th, dim, tail_eps)
        if not pmf.flagged:
            return pmf
        if dim >= max_dim:
            raise CapabilityError(
                f"photon-number tail {pmf.tail_mass:.3e} still above {tail_eps:.1e} "
                f"at the maximum cutoff {max_dim}"
            )
        dim = min(max_dim, 2 * dim)


def ua_psk_holevo(
    eta: float,
    n_s: float,
    n_m: float,
    n_th: float,
    tail_eps: float = 1e-12,
    max_dim: int = MAX_DIAGONAL_DIM,
) -> float:
    """Holevo information (nats) of the displaced-PSK ensemble without entanglement assistance.

    ``chi = H(p) - g(N_eta)``: every ensemble member is a displaced thermal
    state of entropy ``g(N_eta)`` and the average state is diagonal with
    photon-number law ``p``.
    """
    if not 0.0 < tail_eps <= 1e-6:
        raise DomainError("tail_eps must lie in (0, 1e-6]")
    _check_channel(eta, n_s, n_m, n_th)
    if n_m == 0:
        return 0.0
    pmf = adaptive_psk_pmf(eta, n_s, n_m, n_th, tail_eps, max_dim)
    n_eta = receiver_thermal_photons(eta, n_s, n_th)
    return pmf.entropy() - thermal_entropy(n_eta)


# ---------------------------------------------------------------------------
# Basic truncated operators


def thermal_pmf(n_mean: float, dim: int) -> NDArray[np.float64]:
    """``N^n / (N+1)^(n+1)`` for ``n < dim``."""
    if n_mean < 0:
        raise DomainError(f"thermal mean photon number must be >= 0, got {n_mean}")
    if dim < 1:
        raise DomainError("dim must be >= 1")
    if n_mean == 0:
        p = np.zeros(dim)
        p[0] = 1.0
        return p
    n = np.arange(dim)
    return np.exp(n * (math.log(n_mean) - math.log1p(n_mean)) - math.log1p(n_mean))


def thermal_tail_dim(n_mean: float, tail_eps: float) -> int:
    """Smallest cutoff whose thermal tail ``(N/(N+1))^dim`` is at most ``tail_eps``."""
    if n_mean == 0:
        return 1
    r = n_mean / (n_mean + 1.0)
    return max(1, int(math.ceil(math.log(tail_eps) / math.log(r))))


def thermal_fock(n_mean: float, dim: int) -> FockMatrix:
    return FockMatrix(np.diag(thermal_pmf(n_mean, dim)).astype(complex))


def coherent_amplitudes(alpha: complex, dim: int) -> NDArray[np.complex128]:
    """``e^{-|alpha|^2/2} alpha^n / sqrt(n!)`` for ``n < dim``."""
    c = np.empty(dim, dtype=complex)
    c[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, dim):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    return c


def displacement_matrix(alpha: complex, dim: int) -> FockMatrix:
    """Block ``<m|D(alpha)|n>`` for ``m, n < dim``.

    Column recursion from ``D a^dag = (a^dag - alpha*) D``:
    ``<m|D|n> = (sqrt(m) <m-1|D|n-1> - alpha* <m|D|n-1>) / sqrt(n)``.
    Each entry is exact (not affected by the cutoff).
    """
    if dim < 1:
        raise DomainError("dim must be >= 1")
    d = np.zeros((dim, dim), dtype=complex)
    d[:, 0] = coherent_amplitudes(alpha, dim)
    sq = np.sqrt(np.arange(dim))
    ac = np.conj(alpha)
    for n in range(1, dim):
        col = -ac * d[:, n - 1]
        col[1:] += sq[1:] * d[:-1, n - 1]
        d[:, n] = col / sq[n]
    return FockMatrix(d, hermitian=False)


def coherent_fock(alpha: complex, dim: int) -> FockMatrix:
    c = coherent_amplitudes(alpha, dim)
    return FockMatrix(np.outer(c, c.conj()))


def displaced_thermal_fock(
    n_mean: float, alpha: complex, dim: int, work_dim: int | None = None
) -> FockMatrix:
    """Projection of ``D(alpha) rho_th D(alpha)^dag`` onto the first ``dim`` number states.

    The thermal state is represented on ``work_dim`` levels before displacing;
    the result is accurate up to the thermal tail beyond ``work_dim``.
    """
    if work_dim is None:
        work_dim = max(dim, thermal_tail_dim(n_mean, 1e-16)) + dim
    d = displacement_matrix(alpha, work_dim).entries[:dim, :]
    p = thermal_pmf(n_mean, work_dim)
    return FockMatrix((d * p) @ d.conj().T)


# ---------------------------------------------------------------------------
# Chernoff trace functional


def _hermitian_spectrum(m: FockMatrix) -> tuple[NDArray[np.float64], NDArray[np.complex128]]:
    a = m.entries
    if np.max(np.abs(a - a.conj().T)) > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(a)))):
        raise DomainError("fock_qs needs Hermitian inputs")
    if np.count_nonzero(a - np.diag(np.diag(a))) == 0:
        # diagonal entries are the exact spectrum; keep tiny ones, they matter for s near 0 or 1
        w = np.maximum(np.diag(a).real, 0.0)
        return w, np.eye(len(w), dtype=complex)
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    w = np.where(w > EIG_CLAMP * max(float(w[-1]), 0.0), w, 0.0)
    return w, v


def fock_qs_fn(rho: FockMatrix, sigma: FockMatrix) -> Callable[[float], float]:
    """Return ``s -> tr(rho^s sigma^(1-s))`` with both spectra computed once."""
    if rho.dim != sigma.dim:
        raise DomainError(f"dimension mismatch {rho.dim} vs {sigma.dim}")
    lam, u = _hermitian_spectrum(rho)
    mu, v = _hermitian_spectrum(sigma)
    overlap = np.abs(u.conj().T @ v) ** 2
    lam_pos, mu_pos = lam > 0, mu > 0

    def q(s: float) -> float:
        a = np.where(lam_pos, np.power(lam, s, where=lam_pos, out=np.zeros_like(lam)), 0.0)
        b = np.where(mu_pos, np.power(mu, 1.0 - s, where=mu_pos, out=np.zeros_like(mu)), 0.0)
        return float(a @ overlap @ b)

    return q


def fock_qs(rho: FockMatrix, sigma: FockMatrix, s: float) -> float:
    """``tr(rho^s sigma^(1-s))`` via Hermitian eigendecompositions."""
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"s must lie in [0, 1], got {s}")
    return fock_qs_fn(rho, sigma)(s)


# ---------------------------------------------------------------------------
# Thermal-loss channel in the number basis


@lru_cache(maxsize=4096)
def _sector_unitary(eta: float, total: int) -> NDArray[np.float64]:
    """Beamsplitter restricted to ``total`` photons, basis ``|k, total-k>``.

    ``U^dag a U = sqrt(eta) a + sqrt(1-eta) e``.
    """
    theta = math.acos(math.sqrt(eta))
    k = np.arange(total)
    off = theta * np.sqrt((k + 1.0) * (total - k))
    g = np.zeros((total + 1, total + 1))
    g[k + 1, k] = off
    g[k, k + 1] = -off
    u = expm(g)
    u.setflags(write=False)
    return u


def _transition_amplitudes(eta: float, dim_in: int, dim_out: int, env_in: int) -> NDArray[np.float64]:
    """``amp[j, n, k] = <n, k+j-n| U |k, j>`` (zero where ``n > k + j``)."""
    amp = np.zeros((env_in, dim_out, dim_in))
    for j in range(env_in):
        for k in range(dim_in):
            u = _sector_unitary(eta, k + j)
            top = min(dim_out, k + j + 1)
            amp[j, :top, k] = u[:top, k]
    return amp


def attenuator_apply(
    rho: FockMatrix, eta: float, n_env: float, env_dim: int | None = None
) -> FockMatrix:
    """Send ``rho`` through a beamsplitter of transmissivity ``eta`` with a thermal environment.

    The environment is thermal with ``n_env`` photons, truncated to ``env_dim``
    levels (chosen from a ``1e-9`` tail when omitted). The output keeps the
    input cutoff.
    """
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"transmissivity must lie in [0, 1], got {eta}")
    if n_env < 0:
        raise DomainError("environment photon number must be >= 0")
    if env_dim is None:
        env_dim = thermal_tail_dim(n_env, ENV_TAIL)
    env_tail = _tail_from(thermal_pmf(n_env, env_dim))
    if env_tail > ENV_TAIL:
        warnings.warn(
            f"environment cutoff {env_dim} leaves thermal tail {env_tail:.2e} > {ENV_TAIL:.0e}",
            RuntimeWarning,
            stacklevel=2,
        )
    dim = rho.dim
    t = thermal_pmf(n_env, env_dim)
    n_out_env = dim + env_dim - 1
    out = np.zeros((dim, dim), dtype=complex)
    for j in range(env_dim):
        if t[j] == 0.0:
            continue
        # iso[(n, e), k] = <n, e| U |k, j>
        iso = np.zeros((dim, n_out_env, dim))
        for k in range(dim):
            u = _sector_unitary(eta, k + j)
            n = np.arange(min(dim, k + j + 1))
            iso[n, k + j - n, k] = u[n, k]
        flat = iso.reshape(dim * n_out_env, dim)
        b = (flat @ rho.entries).reshape(dim, n_out_env, dim)
        out += t[j] * np.tensordot(b, iso.conj(), axes=([1, 2], [1, 2]))
    return FockMatrix(0.5 * (out + out.conj().T))


# ---------------------------------------------------------------------------
# Entanglement-assisted PSK ensemble


def ea_dims(eta: float, n_s: float, n_th: float, tail_eps: float = 1e-10) -> tuple[int, int, int]:
    """Cutoffs (receiver, idler, environment) meeting ``tail_eps`` for the relevant thermal laws."""
    n_eta = receiver_thermal_photons(eta, n_s, n_th)
    return (
        thermal_tail_dim(n_eta, tail_eps) + 2,
        thermal_tail_dim(n_s, tail_eps) + 1,
        thermal_tail_dim(n_th / eta, tail_eps) + 1,
    )


def _check_dense(dims: tuple[int, int, int], max_dim: int) -> None:
    if max(dims) > max_dim or dims[0] * dims[1] > max_dim * 8:
        raise CapabilityError(
            f"two-mode truncation {dims} exceeds the dense-matrix limit {max_dim}; "
            "use the closed-form entanglement-assisted rate at this scale"
        )


def bob_idler_fock(eta: float, n_s: float, n_th: float, dims: tuple[int, int, int]) -> NDArray[np.complex128]:
    """Dense ``rho_BI[b, k, b', l]`` of the TMSV after the signal crosses the channel.

    Receiver mode ``b`` on ``dims[0]`` levels, idler ``k`` on ``dims[1]``,
    environment truncated to ``dims[2]`` levels.
    """
    d_b, d_i, d_e = dims
    c = np.sqrt(thermal_pmf(n_s, d_i))
    t = thermal_pmf(n_th / eta, d_e)
    amp = _transition_amplitudes(eta, d_i, d_b, d_e)  # [j, b, k]
    # e = k + j - b must match on both sides: b - k == b' - l
    rho = np.einsum("j,jbk,jcl->bkcl", t, amp, amp) * np.multiply.outer(c, c)[None, :, None, :]
    b_idx = np.arange(d_b)[:, None, None, None]
    k_idx = np.arange(d_i)[None, :, None, None]
    c_idx = np.arange(d_b)[None, None, :, None]
    l_idx = np.arange(d_i)[None, None, None, :]
    return np.where(b_idx - k_idx == c_idx - l_idx, rho, 0.0).astype(complex)


def ea_psk_holevo(
    eta: float,
    n_s: float,
    n_th: float,
    dims: tuple[int, int, int] | None = None,
    tail_eps: float = 1e-10,
    max_dim: int = MAX_DENSE_DIM,
) -> float:
    """Holevo information (nats) of the uniform phase-modulated TMSV with the idler at the receiver.

    ``chi = S(avg rho_BI) - S(rho_BI)``. The second term is the Gaussian
    entropy of the channel output. The phase average removes every element
    with different receiver photon numbers, so the average state splits into
    one idler block per receiver photon number; each block is diagonalized
    separately.
    """
    _check_channel(eta, n_s, 0.0, n_th)
    if n_s == 0:
        return 0.0
    if dims is None:
        dims = ea_dims(eta, n_s, n_th, tail_eps)
    _check_dense(dims, max_dim)
    d_b, d_i, d_e = dims
    c2 = thermal_pmf(n_s, d_i)
    t = thermal_pmf(n_th / eta, d_e)
    amp = _transition_amplitudes(eta, d_i, d_b, d_e)
    entropy_terms = []
    for b in range(d_b):
        # block[k, l] = c_k c_l <b,k| rho_BI |b,l>, nonzero only for k == l
        block = np.diag(c2 * np.einsum("j,jk,jk->k", t, amp[:, b, :], amp[:, b, :]))
        ev = np.linalg.eigvalsh(block)
        ev = ev[ev > 0]
        entropy_terms.append(-math.fsum(ev * np.log(ev)))
    averaged = math.fsum(entropy_terms)
    return averaged - gaussian_entropy(bob_idler_state(eta, n_s, n_th))
