"""Mechanism specifications, sanitization, post-processing and auditing."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .calibration import (
    CalibrationResult,
    McConfig,
    PrivacyParams,
    disjoint_pdp_scale,
    gauss_adp_sigma,
    gauss_pdp_sigma,
    gg_pdp_scale_mc,
    laplace_scale,
    tgg_scale,
)
from .errors import ConfigurationError, DomainError
from .ggdist import GGParams, gg_log_interval_mass, gg_sample, gg_truncated_sample
from .numerics import RngStream, as_stream
from .sensitivity import SensitivityProfile, effective_lp_gs, utility_sensitivity

KINDS = ("laplace", "gauss_pdp", "gauss_adp", "gg_pdp", "tgg_edp", "exp_gg")
PURE_DP = ("laplace", "tgg_edp", "exp_gg")
BOUNDED = ("tgg_edp", "exp_gg")
FORCED_ORDER = {"laplace": 1, "gauss_pdp": 2, "gauss_adp": 2}

# stream used for Monte-Carlo calibration so a spec always maps to one scale
CALIBRATION_SEED = 0x6767_6D65_6368
_AUDIT_SPAN = 10.0


@dataclass(frozen=True)
class MechanismSpec:
    kind: str
    privacy: PrivacyParams
    profile: SensitivityProfile
    p: Optional[int] = None
    mc: Optional[McConfig] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown mechanism kind {self.kind!r}; expected one of {KINDS}")
        forced = FORCED_ORDER.get(self.kind)
        p = self.p if self.p is not None else (forced if forced is not None else 2)
        if int(p) != p or p < 1:
            raise ConfigurationError(f"order p must be an integer >= 1, got {p!r}")
        p = int(p)
        if forced is not None and p != forced:
            raise ConfigurationError(f"{self.kind} has fixed order p={forced}, got p={p}")
        object.__setattr__(self, "p", p)
        delta = self.privacy.delta
        if self.kind in PURE_DP and delta != 0:
            raise ConfigurationError(f"{self.kind} is a pure epsilon-DP mechanism; delta must be 0")
        if self.kind not in PURE_DP and not delta > 0:
            raise ConfigurationError(f"{self.kind} needs delta in (0, 1)")
        if self.kind == "gg_pdp" and p < 2:
            raise ConfigurationError("gg_pdp needs p >= 2; p = 1 is the Laplace mechanism")
        if self.kind in BOUNDED and self.profile.bounds is None:
            raise ConfigurationError(f"{self.kind} needs bounds for every element")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "p": self.p,
            "epsilon": self.privacy.epsilon,
            "delta": self.privacy.delta,
            "profile": self.profile.to_dict(),
            "mc": None if self.mc is None else {
                "draws": self.mc.draws,
                "bisection_tol": self.mc.bisection_tol,
                "b_hi_factor": self.mc.b_hi_factor,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MechanismSpec":
        allowed = {"kind", "p", "epsilon", "delta", "profile", "mc"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigurationError(f"unknown mechanism fields: {sorted(unknown)}")
        missing = {"kind", "epsilon", "profile"} - set(data)
        if missing:
            raise ConfigurationError(f"missing mechanism fields: {sorted(missing)}")
        mc = data.get("mc")
        try:
            privacy = PrivacyParams(float(data["epsilon"]), float(data.get("delta", 0.0)))
            mc_cfg = None if mc is None else McConfig(**mc)
        except (TypeError, DomainError) as exc:
            raise ConfigurationError(str(exc)) from exc
        return cls(
            kind=data["kind"],
            privacy=privacy,
            profile=SensitivityProfile.from_dict(data["profile"]),
            p=data.get("p"),
            mc=mc_cfg,
        )


@dataclass
class SanitizedResult:
    values: np.ndarray
    scale_used: float
    post_ops: list = field(default_factory=list)

    def with_post(self, tag: str, values) -> "SanitizedResult":
        return SanitizedResult(np.asarray(values, dtype=float), self.scale_used, self.post_ops + [tag])


def _noise_sd(b: float, p: int) -> float:
    return math.sqrt(GGParams(0.0, b, p).variance)


def calibrate(spec: MechanismSpec, rng=None, allow_large_epsilon: bool = False) -> CalibrationResult:
    """Scale calibration for a mechanism spec.

    Monte-Carlo calibration draws from a fixed internal stream unless
    ``rng`` is given, so a spec maps to one scale.
    """
    if rng is None:
        return _calibrate_cached(spec, allow_large_epsilon)
    return _calibrate(spec, as_stream(rng), allow_large_epsilon)


@functools.lru_cache(maxsize=256)
def _calibrate_cached(spec: MechanismSpec, allow_large_epsilon: bool) -> CalibrationResult:
    return _calibrate(spec, RngStream(CALIBRATION_SEED), allow_large_epsilon)


def _calibrate(spec: MechanismSpec, rng: RngStream, allow_large_epsilon: bool) -> CalibrationResult:
    eps, delta, p, profile = spec.privacy.epsilon, spec.privacy.delta, spec.p, spec.profile
    method, draws, sigma = "closed-form", None, None
    if spec.kind == "laplace":
        b = laplace_scale(effective_lp_gs(profile, 1), eps)
    elif spec.kind in ("gauss_pdp", "gauss_adp"):
        d2 = effective_lp_gs(profile, 2)
        if spec.kind == "gauss_pdp":
            sigma = gauss_pdp_sigma(d2, spec.privacy)
        else:
            sigma = gauss_adp_sigma(d2, spec.privacy, allow_large_epsilon=allow_large_epsilon)
        b = math.sqrt(2.0) * sigma
    elif spec.kind == "gg_pdp":
        if profile.disjoint:
            b = disjoint_pdp_scale(effective_lp_gs(profile, p), p, spec.privacy)
            method = "deterministic"
        else:
            mc = spec.mc or McConfig()
            b = gg_pdp_scale_mc(profile, p, spec.privacy, mc, rng)
            method, draws = "mc", mc.draws
    elif spec.kind == "tgg_edp":
        b = tgg_scale(profile, p, eps)
    else:  # exp_gg
        du = utility_sensitivity(p, profile).delta_u
        b = (2.0 * du / eps) ** (1.0 / p)
    if sigma is None:
        sigma = _noise_sd(b, p)
    return CalibrationResult(spec.kind, p, eps, delta, b, sigma, method, draws)


def _as_query(spec: MechanismSpec, s) -> np.ndarray:
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if s.ndim != 1 or s.size != spec.profile.r:
        raise ConfigurationError(f"query has {s.size} elements, profile expects {spec.profile.r}")
    if not np.all(np.isfinite(s)):
        raise DomainError("query values must be finite")
    if spec.kind in BOUNDED:
        for k, (v, (lo, hi)) in enumerate(zip(s, spec.profile.bounds)):
            if not lo <= v <= hi:
                raise DomainError(f"element {k} = {v} lies outside its bounds [{lo}, {hi}]")
    return s


def sanitize_with_scale(spec: MechanismSpec, s, b: float, rng) -> SanitizedResult:
    """Perturb ``s`` with GG noise of the given scale, truncating for bounded kinds."""
    rng = as_stream(rng)
    s = _as_query(spec, s)
    if spec.kind in BOUNDED:
        out = np.array([
            gg_truncated_sample(GGParams(v, b, spec.p), lo, hi, rng)
            for v, (lo, hi) in zip(s, spec.profile.bounds)
        ])
    else:
        out = s + gg_sample(GGParams(0.0, b, spec.p), rng, s.size)
    return SanitizedResult(out, float(b))


def sanitize(spec: MechanismSpec, s, rng) -> SanitizedResult:
    return sanitize_with_scale(spec, s, calibrate(spec).b, rng)


def clamp(values, lo, hi) -> np.ndarray:
    """Project onto ``[lo, hi]`` elementwise; scalar bounds broadcast."""
    values = np.asarray(values, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), values.shape)
    hi = np.broadcast_to(np.asarray(hi, dtype=float), values.shape)
    if np.any(lo > hi):
        raise DomainError("clamp needs lo <= hi elementwise")
    return np.minimum(np.maximum(values, lo), hi)


def normalize_to_total(values, n: float) -> np.ndarray:
    """Rescale nonnegative values to sum to ``n``; all-zero input becomes uniform."""
    values = np.asarray(values, dtype=float)
    if not n > 0:
        raise DomainError(f"target total must be positive, got {n!r}")
    if np.any(values < 0):
        raise DomainError("normalize_to_total needs nonnegative values; clamp first")
    total = values.sum()
    if total == 0:
        return np.full(values.shape, n / values.size)
    return values * (n / total)


def round_counts(values) -> np.ndarray:
    """Round half away from zero, then clamp at 0."""
    values = np.asarray(values, dtype=float)
    rounded = np.sign(values) * np.floor(np.abs(values) + 0.5)
    return np.maximum(rounded, 0).astype(np.int64)


def _check_neighbors(spec: MechanismSpec, s, s_prime) -> tuple[np.ndarray, np.ndarray]:
    s = _as_query(spec, s)
    sp = _as_query(spec, s_prime)
    d = np.abs(s - sp)
    tol = 1e-12
    delta1 = np.asarray(spec.profile.delta1)
    if np.any(d > delta1 * (1 + tol) + tol):
        raise DomainError("neighbouring queries differ by more than the per-element sensitivity")
    if spec.profile.disjoint and np.count_nonzero(d) > 1:
        raise DomainError("disjoint profile: neighbouring queries may differ in one element only")
    norm = float(np.sum(d**spec.p) ** (1.0 / spec.p))
    if norm > effective_lp_gs(spec.profile, spec.p) * (1 + tol) + tol:
        raise DomainError("neighbouring queries differ by more than the l_p sensitivity")
    return s, sp


def _element_log_density(spec: MechanismSpec, x: np.ndarray, mu: float, b: float, k: int) -> np.ndarray:
    """Log density of element k's output up to terms shared by all centres."""
    out = -(np.abs(x - mu) / b) ** spec.p
    if spec.kind in BOUNDED:
        lo, hi = spec.profile.bounds[k]
        out = out - gg_log_interval_mass(GGParams(mu, b, spec.p), lo, hi)
    return out


def audit_privacy_loss(spec: MechanismSpec, s, s_prime, grid_points: int = 2001) -> float:
    """Largest |log f(s*|s) - log f(s*|s')| over a deterministic output grid.

    The output density factorizes over elements, so the supremum over the
    product grid is assembled from per-element extrema.
    """
    if grid_points < 2:
        raise DomainError("grid_points must be at least 2")
    s, sp = _check_neighbors(spec, s, s_prime)
    b = calibrate(spec).b
    upper = lower = 0.0
    for k in np.flatnonzero(s != sp):
        if spec.kind in BOUNDED:
            lo, hi = spec.profile.bounds[k]
        else:
            lo = min(s[k], sp[k]) - _AUDIT_SPAN * b
            hi = max(s[k], sp[k]) + _AUDIT_SPAN * b
        x = np.linspace(lo, hi, grid_points)
        ratio = _element_log_density(spec, x, s[k], b, k) - _element_log_density(spec, x, sp[k], b, k)
        upper += float(ratio.max())
        lower += float(ratio.min())
    return max(upper, -lower, 0.0)


def privacy_loss_violation_rate(spec: MechanismSpec, s, s_prime, draws: int, rng) -> tuple[float, float]:
    """Monte-Carlo Pr(|log f(s*|s) - log f(s*|s')| > eps) for s* drawn given s.

    Returns ``(rate, standard_error)``.
    """
    s, sp = _check_neighbors(spec, s, s_prime)
    if spec.kind in BOUNDED:
        raise ConfigurationError("violation rates are for unbounded pDP mechanisms")
    rng = as_stream(rng)
    b = calibrate(spec).b
    noise = gg_sample(GGParams(0.0, b, spec.p), rng, draws * s.size).reshape(draws, s.size)
    out = s + noise
    loss = np.sum((np.abs(out - sp) / b) ** spec.p - (np.abs(out - s) / b) ** spec.p, axis=1)
    rate = float(np.mean(np.abs(loss) > spec.privacy.epsilon))
    return rate, math.sqrt(max(rate * (1 - rate), 1e-300) / draws)


def with_privacy(spec: MechanismSpec, epsilon: float, delta: float) -> MechanismSpec:
    return replace(spec, privacy=PrivacyParams(epsilon, delta))
