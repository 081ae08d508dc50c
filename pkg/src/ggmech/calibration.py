"""Noise-scale calibration for the GG mechanism family.

Closed forms cover the Laplace, truncated GG and Gaussian (pDP and aDP)
mechanisms. GG mechanisms of order ``p >= 2`` without a closed form are
calibrated either deterministically (disjoint queries, through the
incomplete gamma function) or by Monte Carlo over unit-scale noise.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from math import comb
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import ConfigurationError, ConvergenceError, DomainError, NoSolutionError
from .ggdist import GGParams, gg_sample
from .numerics import RngStream, as_stream, reg_upper_gamma, std_normal_cdf, std_normal_quantile
from .sensitivity import SensitivityProfile, effective_lp_gs

MC_CHUNK = 65_536


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise DomainError(f"epsilon must be positive and finite, got {self.epsilon!r}")
        if not (0 <= self.delta < 1):
            raise DomainError(f"delta must lie in [0, 1), got {self.delta!r}")


@dataclass(frozen=True)
class McConfig:
    draws: int = 200_000
    bisection_tol: float = 1e-4
    b_hi_factor: float = 64.0

    def __post_init__(self):
        if self.draws < 10_000:
            raise ConfigurationError(f"Monte-Carlo calibration needs >= 10^4 draws, got {self.draws}")
        if not self.bisection_tol > 0:
            raise ConfigurationError("bisection_tol must be positive")
        if not self.b_hi_factor > 1:
            raise ConfigurationError("b_hi_factor must exceed 1")


@dataclass(frozen=True)
class CalibrationResult:
    mechanism: str
    p: int
    epsilon: float
    delta: float
    b: float
    sigma: Optional[float]
    method: str
    draws: Optional[int] = None

    def to_dict(self) -> dict:
        return asdict(self)


def _require_pdp_delta(params: PrivacyParams) -> None:
    if not 0 < params.delta < 1:
        raise ConfigurationError(
            "pure epsilon-DP is unreachable for unbounded noise of order p != 1; "
            f"a delta in (0, 1) is required, got {params.delta!r}"
        )


def _positive(name: str, value: float) -> float:
    if not (value > 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return float(value)


def bisect(f: Callable[[float], bool], lo: float, hi: float, rtol: float, max_iter: int = 400) -> float:
    """Smallest x in (lo, hi] with ``f(x)`` true, for monotone ``f``.

    ``f(hi)`` must be true and ``f(lo)`` false; returns the upper end of the
    final bracket once ``hi - lo <= rtol * hi``.
    """
    for _ in range(max_iter):
        if hi - lo <= rtol * hi:
            break
        mid = 0.5 * (lo + hi)
        if f(mid):
            hi = mid
        else:
            lo = mid
    return hi


def laplace_scale(delta1_total: float, epsilon: float) -> float:
    return _positive("delta1_total", delta1_total) / _positive("epsilon", epsilon)


def tgg_scale(profile: SensitivityProfile, p: int, epsilon: float) -> float:
    """Scale making the truncated GG mechanism epsilon-DP.

    ``b**p = 2/eps * (sum_k sum_{j<p} C(p,j) w_k**(p-j) d_k**j + Delta_p**p)``
    with ``w_k`` the width of element k's bounds. For disjoint profiles only
    one element moves, so the largest per-element term replaces the sum.
    """
    epsilon = _positive("epsilon", epsilon)
    if profile.bounds is None:
        raise ConfigurationError("the truncated GG mechanism requires bounds for every element")
    if int(p) != p or p < 1:
        raise DomainError(f"order p must be an integer >= 1, got {p!r}")
    p = int(p)
    cross = []
    for (lo, hi), dk in zip(profile.bounds, profile.delta1):
        w = hi - lo
        cross.append(sum(comb(p, j) * w ** (p - j) * dk**j for j in range(1, p)))
    if profile.disjoint:
        delta_p = effective_lp_gs(profile, p)
        k = int(np.argmax(profile.delta1))
        total = cross[k] + delta_p**p
    else:
        total = sum(cross) + effective_lp_gs(profile, p) ** p
    return (2.0 / epsilon * total) ** (1.0 / p)


def gauss_pdp_sigma(delta2: float, params: PrivacyParams) -> float:
    """Smallest Gaussian standard deviation giving (eps, delta)-pDP.

    ``sigma = Delta_2 / (2 eps) * (sqrt(z**2 + 2 eps) - z)`` with
    ``z = Phi^-1(delta / 2)``; the GG scale is ``sqrt(2) * sigma``.
    """
    delta2 = _positive("delta2", delta2)
    _require_pdp_delta(params)
    eps = params.epsilon
    z = std_normal_quantile(params.delta / 2.0)
    return delta2 / (2.0 * eps) * (math.sqrt(z * z + 2.0 * eps) - z)


def gauss_adp_sigma(delta2: float, params: PrivacyParams, allow_large_epsilon: bool = False) -> float:
    """Classical (eps, delta)-aDP Gaussian scale ``Delta_2 sqrt(2 ln(1.25/delta)) / eps``.

    The guarantee only holds for ``eps < 1``. ``allow_large_epsilon`` applies
    the formula anyway, for reproducing studies that did so.
    """
    delta2 = _positive("delta2", delta2)
    _require_pdp_delta(params)
    if params.epsilon >= 1 and not allow_large_epsilon:
        raise DomainError(f"the aDP Gaussian bound requires epsilon < 1, got {params.epsilon}")
    return delta2 * math.sqrt(2.0 * math.log(1.25 / params.delta)) / params.epsilon


def _mc_coefficients(delta1: np.ndarray, p: int, draws: int, rng: RngStream) -> np.ndarray:
    r = delta1.size
    unit = GGParams(0.0, 1.0, p)
    blocks = []
    for c, start in enumerate(range(0, draws, MC_CHUNK)):
        rows = min(MC_CHUNK, draws - start)
        sub = rng.spawn(c)
        u = np.abs(gg_sample(unit, sub, rows * r)).reshape(rows, r)
        blocks.append(kernels.mc_coefficients(u, delta1, p))
    return np.concatenate(blocks, axis=0)


def gg_pdp_scale_mc(
    profile: SensitivityProfile,
    p: int,
    params: PrivacyParams,
    mc: Optional[McConfig] = None,
    rng=None,
) -> float:
    """Monte-Carlo lower bound on b for the (eps, delta)-pDP GG mechanism.

    Noise is written as ``b * u`` with ``u ~ GG(0, 1, p)``; the failure event
    ``sum_k sum_{j<p} C(p,j) |u_k|**(p-j) (d_k/b)**j > eps - (Delta_p/b)**p``
    becomes less likely as b grows, so a single batch of ``u`` serves every
    bisection probe. Disjoint profiles reduce to the most sensitive element.
    """
    mc = mc or McConfig()
    if int(p) != p or p < 1:
        raise DomainError(f"order p must be an integer >= 1, got {p!r}")
    p = int(p)
    if p == 1:
        raise ConfigurationError("p = 1 admits pure epsilon-DP; use laplace_scale instead")
    _require_pdp_delta(params)
    rng = as_stream(0 if rng is None else rng)
    eps, delta = params.epsilon, params.delta

    delta_p = effective_lp_gs(profile, p)
    if profile.disjoint:
        delta1 = np.array([delta_p])
    else:
        delta1 = np.asarray(profile.delta1, dtype=float)
    coef = _mc_coefficients(delta1, p, mc.draws, rng)

    def failure_rate(b: float) -> float:
        return kernels.exceed_fraction(coef, 1.0 / b, eps - (delta_p / b) ** p)

    lo = (delta_p**p / eps) ** (1.0 / p)
    seed = max(2.0 * lo, math.sqrt(2.0) * gauss_pdp_sigma(delta_p, params))
    hi = seed
    while failure_rate(hi) >= delta:
        hi *= 2.0
        if hi > mc.b_hi_factor * seed:
            raise ConvergenceError(
                f"no scale below {mc.b_hi_factor} x {seed:.6g} meets the pDP target"
            )
    return bisect(lambda b: failure_rate(b) < delta, lo, hi, mc.bisection_tol)


def _binomial_excess(t: float, delta: float, p: int) -> float:
    """(t + delta)**p - t**p expanded so no cancellation occurs."""
    return sum(comb(p, j) * t ** (p - j) * delta**j for j in range(1, p + 1))


def disjoint_threshold(b: float, delta: float, p: int, epsilon: float) -> float:
    """Noise magnitude t* where ``(t + delta)**p - t**p = b**p eps``; 0 if none is positive."""
    target = b**p * epsilon
    if _binomial_excess(0.0, delta, p) >= target:
        return 0.0
    hi = max(delta, (target / (p * delta)) ** (1.0 / (p - 1)) if p > 1 else target)
    while _binomial_excess(hi, delta, p) < target:
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _binomial_excess(mid, delta, p) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)


def disjoint_failure_probability(b: float, delta: float, p: int, epsilon: float) -> float:
    """Pr(|e| > t*) for e ~ GG(0, b, p)."""
    t = disjoint_threshold(b, delta, p, epsilon)
    if t == 0.0:
        return 1.0
    return reg_upper_gamma(1.0 / p, (t / b) ** p)


def disjoint_pdp_scale(delta: float, p: int, params: PrivacyParams, rtol: float = 1e-8) -> float:
    """Deterministic pDP scale for queries on disjoint data subsets.

    The failure event ``sum_{j=1..p} C(p,j) |e|**(p-j) delta**j > b**p eps``
    is ``|e| > t*`` since the left side is increasing in ``|e|``.
    """
    delta = _positive("delta", delta)
    if int(p) != p or p < 2:
        raise DomainError(f"order p must be an integer >= 2, got {p!r}")
    p = int(p)
    _require_pdp_delta(params)
    eps, target = params.epsilon, params.delta

    lo = delta * eps ** (-1.0 / p)
    hi = 2.0 * lo
    for _ in range(200):
        if disjoint_failure_probability(hi, delta, p, eps) < target:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("could not bracket the disjoint pDP scale")
    return bisect(lambda b: disjoint_failure_probability(b, delta, p, eps) < target, lo, hi, rtol)


def equivalent_epsilon(
    epsilon1: float, delta: float, t: float, delta_s: float, rtol: float = 1e-12
) -> float:
    """Gaussian pDP budget whose tail at ``t`` matches the Laplace tail at ``epsilon1``.

    Solves ``2 Phi(-t / sigma(eps2, delta)) = exp(-t eps1 / Delta)``.
    """
    epsilon1 = _positive("epsilon1", epsilon1)
    delta_s = _positive("delta_s", delta_s)
    if not t > 0:
        raise DomainError(f"t must be positive (both tails equal 1 at t = 0), got {t!r}")
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta!r}")
    target = math.exp(-t * epsilon1 / delta_s)

    def tail(eps2: float) -> float:
        sigma = gauss_pdp_sigma(delta_s, PrivacyParams(eps2, delta))
        return 2.0 * std_normal_cdf(-t / sigma)

    lo, hi = 1e-12, 1e12
    if not (tail(lo) >= target >= tail(hi)) or target <= 0:
        raise NoSolutionError(f"tail target {target:.3g} is outside the achievable range")
    # bisect on log(eps2); the tail is decreasing in eps2
    llo, lhi = math.log(lo), math.log(hi)
    for _ in range(400):
        mid = 0.5 * (llo + lhi)
        if tail(math.exp(mid)) > target:
            llo = mid
        else:
            lhi = mid
        if lhi - llo <= rtol:
            break
    return math.exp(0.5 * (llo + lhi))
