"""Rates and exponents of the joint communication and sensing scenario over a thermal-loss channel.

Photon numbers follow ``N_t = t N_S + (1 - t) N_th / eta``: the receiver sees
``N_eta`` thermal photons and the returned mode carries ``N_{1-eta}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .chernoff import (
    ChernoffResult,
    SharedSPair,
    gaussian_log_qs_fn,
    log_qs_thermal_swap,
    optimize_exponent,
)
from .errors import DomainError
from .fock import ea_psk_holevo, ua_psk_holevo
from .gaussian import (
    GaussianState,
    make_thermal,
    partial_trace,
    return_idler_state,
    tensor,
    thermal_entropy,
)

SPLIT_SLACK = 1e-12


@dataclass(frozen=True)
class ChannelParams:
    """Transmissivity ``eta``, received thermal photons ``n_th`` and photon budget ``n_total``."""

    eta: float
    n_th: float
    n_total: float

    def __post_init__(self) -> None:
        if not (0.0 < self.eta <= 1.0):
            raise DomainError(f"eta must lie in (0, 1], got {self.eta}")
        if not (self.n_th > 0.0 and math.isfinite(self.n_th)):
            raise DomainError(f"n_th must be a finite positive number, got {self.n_th}")
        if not (self.n_total >= 0.0 and math.isfinite(self.n_total)):
            raise DomainError(f"n_total must be finite and >= 0, got {self.n_total}")

    def photons(self, t: float, n_s: float) -> float:
        """``t n_s + (1 - t) n_th / eta``."""
        return t * n_s + (1.0 - t) * self.n_th / self.eta


@dataclass(frozen=True)
class ResourceSplit:
    """Fraction ``lam`` of channel uses for entanglement-assisted communication and the sensing powers."""

    lam: float
    n_s: float
    n_m: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.lam <= 1.0):
            raise DomainError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.n_s < 0 or self.n_m < 0:
            raise DomainError(f"n_s and n_m must be >= 0, got {self.n_s}, {self.n_m}")

    def check(self, params: ChannelParams) -> None:
        if self.n_s + self.n_m > params.n_total + SPLIT_SLACK:
            raise DomainError(
                f"n_s + n_m = {self.n_s + self.n_m} exceeds the photon budget {params.n_total}"
            )


@dataclass(frozen=True)
class DerivedParams:
    n_eta: float
    n_1meta: float
    d: float


@dataclass(frozen=True)
class RegionPoint:
    rate: float
    exponent: float
    lam: float
    n_s: float
    n_m: float


def g_func(n: float) -> float:
    """``(n+1) log(n+1) - n log n`` in nats."""
    return thermal_entropy(n)


def _d_value(params: ChannelParams, n_eta: float) -> float:
    n = params.n_total
    # non-negative in exact arithmetic; clamp rounding at eta = 1
    val = (n + n_eta + 1.0) ** 2 - 4.0 * params.eta * n * (n + 1.0)
    return math.sqrt(max(val, 0.0))


def derived_params(params: ChannelParams, split: ResourceSplit | None = None) -> DerivedParams:
    """``N_eta`` and ``N_{1-eta}`` at the split's ``n_s`` (``N`` if no split) and ``D`` at ``N_S = N``."""
    n_s = params.n_total if split is None else split.n_s
    n_eta = params.photons(params.eta, n_s)
    n_1meta = (1.0 - params.eta) * n_s + params.n_th
    d = _d_value(params, params.photons(params.eta, params.n_total))
    return DerivedParams(n_eta, n_1meta, d)


# ---------------------------------------------------------------------------
# Sensing exponents


def nqi_log_qs_fn(params: ChannelParams) -> Callable[[float], float]:
    """``s -> log Q_s`` of the two-position thermal hypotheses with the whole budget in the signal."""
    delta = (1.0 - params.eta) * params.n_total
    return lambda s: log_qs_thermal_swap(params.n_th, delta, s)


def e_nqi(params: ChannelParams, mode: str = "exact") -> float:
    """Unassisted (no idler) position-sensing exponent in nats per copy.

    ``exact`` is ``2 log(sqrt((1+N1)(1+N_th)) - sqrt(N1 N_th))`` with
    ``N1 = (1-eta) N + N_th``, evaluated without cancellation. ``approx`` is
    the small-signal, high-noise form ``((1-eta) N / (2 N_th))^2``.
    """
    if mode == "approx":
        return ((1.0 - params.eta) * params.n_total / (2.0 * params.n_th)) ** 2
    if mode != "exact":
        raise DomainError(f"unknown mode {mode!r}")
    return max(0.0, -nqi_log_qs_fn(params)(0.5))


def qi_hypotheses(
    params: ChannelParams, split: ResourceSplit, *, extra_loss_factor: bool = False
) -> tuple[GaussianState, GaussianState]:
    """Three-mode states on (D1, D2, idler) for the target in slot 1 or slot 2."""
    ri = return_idler_state(params.eta, split.n_s, split.n_m, params.n_th, 0.0, extra_loss_factor=extra_loss_factor)
    joint = tensor(ri, make_thermal(params.n_th))  # (R, I, th)
    return partial_trace(joint, [0, 2, 1]), partial_trace(joint, [2, 0, 1])


def qi_log_qs_fn(
    params: ChannelParams, split: ResourceSplit, *, extra_loss_factor: bool = False
) -> Callable[[float], float]:
    h1, h2 = qi_hypotheses(params, split, extra_loss_factor=extra_loss_factor)
    return gaussian_log_qs_fn(h1, h2)


def e_qi_d(
    params: ChannelParams,
    split: ResourceSplit,
    mode: str = "exact",
    *,
    optimize_s: bool = False,
    extra_loss_factor: bool = False,
) -> float:
    """Idler-assisted, displaced-probe sensing exponent in nats per copy.

    ``exact`` evaluates ``-log Q_{1/2}`` between the two three-mode hypotheses
    (or the full optimum over ``s`` when ``optimize_s`` is set). ``approx`` is
    ``(1-eta) (2 N_S + N_m / 2) / N_th``.
    """
    split.check(params)
    if mode == "approx":
        return (1.0 - params.eta) * (2.0 * split.n_s + 0.5 * split.n_m) / params.n_th
    if mode != "exact":
        raise DomainError(f"unknown mode {mode!r}")
    if split.n_s == 0.0 and split.n_m == 0.0:
        return 0.0
    f = qi_log_qs_fn(params, split, extra_loss_factor=extra_loss_factor)
    if optimize_s:
        return optimize_exponent(f, log_domain=True).exponent
    return max(0.0, -f(0.5))


def e_qi_parts(params: ChannelParams, split: ResourceSplit) -> tuple[float, float]:
    """``e_qi_d`` at ``s = 1/2`` separated into its covariance and displacement contributions."""
    split.check(params)
    h1, h2 = qi_hypotheses(params, split)
    no_mean = -gaussian_log_qs_fn(h1, h2, include_mean=False)(0.5)
    total = -gaussian_log_qs_fn(h1, h2)(0.5)
    return max(0.0, no_mean), max(0.0, total - no_mean)


# ---------------------------------------------------------------------------
# Communication rates


def c_ea(params: ChannelParams) -> float:
    """Entanglement-assisted rate (nats per mode) with the whole budget in the TMSV.

    ``g(N) + g(N_eta) - g((D + N_eta - N - 1)/2) - g((D - N_eta + N - 1)/2)``.
    """
    n = params.n_total
    if n == 0.0:
        return 0.0
    dp = derived_params(params)
    a = 0.5 * (dp.d + dp.n_eta - n - 1.0)
    b = 0.5 * (dp.d - dp.n_eta + n - 1.0)
    val = g_func(n) + g_func(dp.n_eta) - g_func(max(a, 0.0)) - g_func(max(b, 0.0))
    return max(val, 0.0)


def r_ua(params: ChannelParams, split: ResourceSplit) -> float:
    """Lower bound (nats per mode) on the displaced-PSK Holevo information without assistance.

    ``x/(N_eta+1) + x log(1 + 1/N_eta) - (N_eta + x) log(1 + x/(N_eta (N_eta+1)))``
    with ``x = eta N_m``. The bound can dip below zero when ``N_eta`` is small
    and ``x`` large; the Holevo information itself is non-negative, so the
    returned value is clamped at zero.
    """
    split.check(params)
    x = params.eta * split.n_m
    if x == 0.0:
        return 0.0
    n_eta = params.photons(params.eta, split.n_s)
    if n_eta == 0.0:
        val = x - x * math.log(x)
    else:
        val = (
            x / (n_eta + 1.0)
            + x * math.log1p(1.0 / n_eta)
            - (n_eta + x) * math.log1p(x / (n_eta * (n_eta + 1.0)))
        )
    return max(val, 0.0)


def ea_rate(params: ChannelParams, mode: str = "closed", tail_eps: float = 1e-10) -> float:
    """Entanglement-assisted rate at ``N_S = N``: closed form or the truncated Fock Holevo information."""
    if mode == "closed":
        return c_ea(params)
    if mode == "fock":
        return ea_psk_holevo(params.eta, params.n_total, params.n_th, tail_eps=tail_eps)
    raise DomainError(f"unknown EA mode {mode!r}")


def ua_rate(
    params: ChannelParams, split: ResourceSplit, mode: str = "bound", tail_eps: float = 1e-12
) -> float:
    """Unassisted rate: the analytic lower bound or the exact Holevo information."""
    if mode == "bound":
        return r_ua(params, split)
    if mode == "fock":
        split.check(params)
        return ua_psk_holevo(params.eta, split.n_s, split.n_m, params.n_th, tail_eps=tail_eps)
    raise DomainError(f"unknown UA mode {mode!r}")


# ---------------------------------------------------------------------------
# Operating points


class ScenarioContext:
    """Split-independent quantities shared by every operating point of one channel."""

    def __init__(
        self, params: ChannelParams, ea_mode: str = "closed", ua_mode: str = "bound", tail_eps: float | None = None
    ) -> None:
        self.params = params
        self.ea_mode = ea_mode
        self.ua_mode = ua_mode
        if ua_mode not in ("bound", "fock"):
            raise DomainError(f"unknown UA mode {ua_mode!r}")
        self.tail_eps = tail_eps
        kw = {} if tail_eps is None else {"tail_eps": tail_eps}
        self.ea_rate = ea_rate(params, ea_mode, **kw)
        self.nqi_fn = nqi_log_qs_fn(params)
        self.nqi_result = optimize_exponent(self.nqi_fn, log_domain=True)

    def profile(self, n_s: float, n_m: float) -> "SplitProfile":
        return SplitProfile(self, n_s, n_m)


class SplitProfile:
    """Everything about one ``(n_s, n_m)`` split that does not depend on ``lambda``."""

    def __init__(self, ctx: ScenarioContext, n_s: float, n_m: float) -> None:
        params = ctx.params
        split = ResourceSplit(0.0, n_s, n_m)
        split.check(params)
        self.ctx = ctx
        self.n_s = n_s
        self.n_m = n_m
        kw = {} if ctx.tail_eps is None else {"tail_eps": ctx.tail_eps}
        self.ua_rate = ua_rate(params, split, ctx.ua_mode, **kw)
        if n_s == 0.0 and n_m == 0.0:
            qi_fn: Callable[[float], float] = lambda s: 0.0
            qi_result = ChernoffResult(0.5, 1.0, 0.0)
        else:
            qi_fn = qi_log_qs_fn(params, split)
            qi_result = optimize_exponent(qi_fn, log_domain=True)
        self.qi_result = qi_result
        self.pair = SharedSPair([ctx.nqi_fn, qi_fn], [ctx.nqi_result, qi_result])

    def point(self, lam: float) -> RegionPoint:
        if not 0.0 <= lam <= 1.0:
            raise DomainError(f"lambda must lie in [0, 1], got {lam}")
        rate = float(lam * self.ctx.ea_rate + (1.0 - lam) * self.ua_rate)
        exponent = self.pair.exponent([lam, 1.0 - lam]).exponent
        return RegionPoint(rate, exponent, lam, self.n_s, self.n_m)


def combine_operating_point(
    params: ChannelParams,
    split: ResourceSplit,
    ea_mode: str = "closed",
    ua_mode: str = "bound",
) -> RegionPoint:
    """Rate and shared-``s`` sensing exponent when a fraction ``lam`` of uses is entanglement-assisted.

    ``R = lam * EA_rate(N) + (1 - lam) * UA_rate(n_s, n_m)`` and ``E`` is the
    controlled Chernoff exponent of the two-position hypotheses with control
    weights ``(lam, 1 - lam)``.
    """
    ctx = ScenarioContext(params, ea_mode, ua_mode)
    return ctx.profile(split.n_s, split.n_m).point(split.lam)
