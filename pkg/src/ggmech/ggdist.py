"""Generalized Gaussian distribution GG(mu, b, p).

Density ``p / (2 b Gamma(1/p)) * exp(-(|x - mu| / b)**p)``: Laplace at
``p = 1`` and Normal with variance ``b**2 / 2`` at ``p = 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .numerics import (
    RngStream,
    as_stream,
    ln_gamma,
    log_reg_upper_gamma,
    reg_lower_gamma,
    reg_upper_gamma,
)

# truncated sampling switches from rejection to inverse CDF below this mass
REJECTION_MIN_MASS = 0.01
INVERSE_CDF_TOL = 1e-12


@dataclass(frozen=True)
class GGParams:
    mu: float
    b: float
    p: int

    def __post_init__(self):
        if not (self.b > 0 and math.isfinite(self.b)):
            raise DomainError(f"scale b must be positive and finite, got {self.b!r}")
        if int(self.p) != self.p or self.p < 1:
            raise DomainError(f"shape p must be an integer >= 1, got {self.p!r}")
        object.__setattr__(self, "p", int(self.p))
        if not math.isfinite(self.mu):
            raise DomainError(f"location mu must be finite, got {self.mu!r}")

    @property
    def variance(self) -> float:
        return self.b**2 * math.exp(ln_gamma(3.0 / self.p) - ln_gamma(1.0 / self.p))

    def log_norm(self) -> float:
        """Log of the density normalizer p / (2 b Gamma(1/p))."""
        return math.log(self.p) - math.log(2.0 * self.b) - ln_gamma(1.0 / self.p)


def gg_logpdf(x, params: GGParams):
    z = np.abs(np.asarray(x, dtype=float) - params.mu) / params.b
    out = params.log_norm() - z**params.p
    return float(out) if out.ndim == 0 else out


def gg_pdf(x, params: GGParams):
    out = np.exp(gg_logpdf(x, params))
    return float(out) if np.ndim(out) == 0 else out


def _half_mass(params: GGParams, x: float) -> float:
    """Signed mass between mu and x: F(x) - 1/2."""
    if x == params.mu:
        return 0.0
    z = (abs(x - params.mu) / params.b) ** params.p
    half = 0.5 * reg_lower_gamma(1.0 / params.p, z)
    return half if x > params.mu else -half


def _cdf_scalar(x: float, params: GGParams) -> float:
    if x == math.inf:
        return 1.0
    if x == -math.inf:
        return 0.0
    z = (abs(x - params.mu) / params.b) ** params.p
    a = 1.0 / params.p
    if x < params.mu:
        return 0.5 * reg_upper_gamma(a, z)
    return 0.5 + 0.5 * reg_lower_gamma(a, z)


def _sf_scalar(x: float, params: GGParams) -> float:
    return _cdf_scalar(2.0 * params.mu - x, params) if math.isfinite(x) else 1.0 - _cdf_scalar(x, params)


def _log_sf_upper(x: float, params: GGParams) -> float:
    """log Pr(X > x) for x >= mu, safe far into the tail."""
    if x == math.inf:
        return -math.inf
    z = ((x - params.mu) / params.b) ** params.p
    return math.log(0.5) + log_reg_upper_gamma(1.0 / params.p, z)


def gg_cdf(x, params: GGParams):
    """CDF; the lower tail is computed from Q so it keeps relative accuracy."""
    if np.ndim(x) == 0:
        return _cdf_scalar(float(x), params)
    flat = np.asarray(x, dtype=float)
    return np.array([_cdf_scalar(v, params) for v in flat.ravel()]).reshape(flat.shape)


def gg_sf(x, params: GGParams):
    if np.ndim(x) == 0:
        return _sf_scalar(float(x), params)
    flat = np.asarray(x, dtype=float)
    return np.array([_sf_scalar(v, params) for v in flat.ravel()]).reshape(flat.shape)


def standard_gamma(shape: float, rng: RngStream, count: int) -> np.ndarray:
    """Gamma(shape, 1) variates; shapes below 1 are boosted by U**(1/shape)."""
    if shape >= 1.0:
        return rng.gen.standard_gamma(shape, count)
    g = rng.gen.standard_gamma(shape + 1.0, count)
    u = rng.gen.random(count)
    return g * u ** (1.0 / shape)


def gg_sample(params: GGParams, rng, count: int) -> np.ndarray:
    """Draw ``count`` i.i.d. values as ``mu + S * b * G**(1/p)``."""
    rng = as_stream(rng)
    if count < 0:
        raise DomainError(f"count must be nonnegative, got {count}")
    if count == 0:
        return np.empty(0)
    g = standard_gamma(1.0 / params.p, rng, count)
    sign = rng.gen.integers(0, 2, count) * 2 - 1
    return params.mu + sign * params.b * g ** (1.0 / params.p)


def _check_interval(c0: float, c1: float) -> None:
    if not c0 < c1:
        raise DomainError(f"interval requires c0 < c1, got [{c0!r}, {c1!r}]")


def gg_tail_masses(params: GGParams, c0: float, c1: float) -> tuple[float, float]:
    """(Pr(X < c0), Pr(X > c1))."""
    _check_interval(c0, c1)
    return _cdf_scalar(c0, params), _sf_scalar(c1, params)


def gg_interval_mass(params: GGParams, c0: float, c1: float) -> float:
    """Pr(c0 <= X <= c1), the truncation normalizer."""
    _check_interval(c0, c1)
    return math.exp(gg_log_interval_mass(params, c0, c1))


def gg_log_interval_mass(params: GGParams, c0: float, c1: float) -> float:
    _check_interval(c0, c1)
    mu = params.mu
    if c0 >= mu:
        l0 = _log_sf_upper(c0, params)
        l1 = _log_sf_upper(c1, params)
        return l0 + math.log(-math.expm1(l1 - l0))
    if c1 <= mu:
        mirrored = GGParams(-mu, params.b, params.p)
        return gg_log_interval_mass(mirrored, -c1, -c0)
    below, above = gg_tail_masses(params, c0, c1)
    return math.log1p(-(below + above))


def _conditional_cdf(params: GGParams, c0: float, c1: float):
    """Return H(x) = Pr(X <= x | c0 <= X <= c1) built on a stable side."""
    mu = params.mu
    if c0 >= mu:
        l0 = _log_sf_upper(c0, params)
        denom = -math.expm1(_log_sf_upper(c1, params) - l0)
        return lambda x: -math.expm1(_log_sf_upper(x, params) - l0) / denom
    if c1 <= mu:
        mirrored = GGParams(-mu, params.b, params.p)
        inner = _conditional_cdf(mirrored, -c1, -c0)
        return lambda x: 1.0 - inner(-x)
    g0 = _half_mass(params, c0)
    span = _half_mass(params, c1) - g0
    return lambda x: (_half_mass(params, x) - g0) / span


def _inverse_cdf_draw(params: GGParams, c0: float, c1: float, u: float) -> float:
    cdf = _conditional_cdf(params, c0, c1)
    lo, hi = c0, c1
    tol = INVERSE_CDF_TOL * max(c1 - c0, 1e-300)
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if cdf(mid) < u:
            lo = mid
        else:
            hi = mid
    return min(max(0.5 * (lo + hi), c0), c1)


def gg_truncated_sample(params: GGParams, c0: float, c1: float, rng, count: int | None = None):
    """Draw from GG(mu, b, p) conditioned on ``[c0, c1]``.

    Rejection is used when the interval holds at least 1% of the mass,
    otherwise inverse-CDF bisection on the conditional CDF. Returns a
    float when ``count`` is None, else an array of ``count`` draws.
    """
    _check_interval(c0, c1)
    rng = as_stream(rng)
    n = 1 if count is None else int(count)
    mass = gg_interval_mass(params, c0, c1)
    if mass >= REJECTION_MIN_MASS:
        out = np.empty(n)
        filled = 0
        while filled < n:
            batch = max(16, int(math.ceil(1.5 * (n - filled) / mass)))
            draws = gg_sample(params, rng, batch)
            keep = draws[(draws >= c0) & (draws <= c1)][: n - filled]
            out[filled:filled + keep.size] = keep
            filled += keep.size
    else:
        u = rng.gen.random(n)
        out = np.array([_inverse_cdf_draw(params, c0, c1, ui) for ui in u])
    return float(out[0]) if count is None else out
