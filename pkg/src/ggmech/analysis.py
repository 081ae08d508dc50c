"""Utility metrics and Laplace-versus-Gaussian comparison studies."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .calibration import PrivacyParams, gauss_pdp_sigma
from .errors import DomainError
from .numerics import std_normal_cdf

DEFAULT_PSEUDOCOUNT = 0.5
DEFAULT_CUTOFF = 1e-4


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise DomainError(f"length mismatch: {a.size} vs {b.size}")
    return a, b


def l1_distance(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.sum(np.abs(a - b)))


def kl_divergence(orig_counts, san_counts, pseudocount: float = DEFAULT_PSEUDOCOUNT) -> float:
    """KL(P || Q) between pseudocount-smoothed empirical distributions.

    ``p_k = (o_k + a) / (sum(o) + r a)`` and likewise for ``q``.
    """
    o, s = _pair(orig_counts, san_counts)
    if not pseudocount >= 0:
        raise DomainError(f"pseudocount must be nonnegative, got {pseudocount!r}")
    for name, v in (("original", o), ("sanitized", s)):
        if np.any(v < 0):
            raise DomainError(f"{name} counts must be nonnegative")
        if not np.any(v > 0):
            raise DomainError(f"{name} counts are all zero")
    p = (o + pseudocount) / (o.sum() + o.size * pseudocount)
    q = (s + pseudocount) / (s.sum() + s.size * pseudocount)
    mask = p > 0
    if np.any(q[mask] == 0):
        return math.inf
    return float(max(np.sum(p[mask] * np.log(p[mask] / q[mask])), 0.0))


def _check_t(t: float) -> None:
    if not t >= 0:
        raise DomainError(f"t must be nonnegative, got {t!r}")


def laplace_tail(t: float, epsilon: float, delta1: float) -> float:
    """Two-sided Laplace tail Pr(|e| > t) with scale delta1 / epsilon."""
    _check_t(t)
    return math.exp(-t * epsilon / delta1)


def gaussian_tail(t: float, sigma: float) -> float:
    """Two-sided Gaussian tail Pr(|e| > t) = 2 Phi(-t / sigma)."""
    _check_t(t)
    return 2.0 * std_normal_cdf(-t / sigma)


@dataclass(frozen=True)
class TailCurvePoint:
    t: float
    p1: float
    p2: float
    ratio: Optional[float]
    likely: bool


def tail_ratio_curve(
    epsilon: float,
    delta: float,
    delta_s: float,
    t_grid: Sequence[float],
    cutoff: float = DEFAULT_CUTOFF,
) -> list[TailCurvePoint]:
    """Laplace-to-Gaussian tail ratio over ``t_grid`` at matched (epsilon, delta)."""
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid < 0) or np.any(np.diff(t_grid) < 0):
        raise DomainError("t_grid must be nonnegative and ascending")
    sigma = gauss_pdp_sigma(delta_s, PrivacyParams(epsilon, delta))
    points = []
    for t in t_grid:
        p1 = laplace_tail(t, epsilon, delta_s)
        p2 = gaussian_tail(t, sigma)
        ratio = p1 / p2 if p2 > 0 else None
        points.append(TailCurvePoint(float(t), p1, p2, ratio, max(p1, p2) > cutoff))
    return points


def ratio_crossings(points: Sequence[TailCurvePoint]) -> list[float]:
    """t values where the ratio crosses 1 from below, linearly interpolated."""
    out = []
    for a, b in zip(points, points[1:]):
        if a.ratio is None or b.ratio is None:
            continue
        if a.ratio < 1.0 <= b.ratio:
            w = (1.0 - a.ratio) / (b.ratio - a.ratio)
            out.append(a.t + w * (b.t - a.t))
    return out


def variance_comparison(epsilon: float, delta: float, delta_s: float) -> float:
    """Var(Gaussian pDP noise) / Var(Laplace noise) at matched privacy."""
    sigma = gauss_pdp_sigma(delta_s, PrivacyParams(epsilon, delta))
    return sigma**2 / (2.0 * (delta_s / epsilon) ** 2)


def variance_threshold_delta() -> float:
    """delta below which the Gaussian variance always exceeds the Laplace one."""
    return 2.0 * std_normal_cdf(-math.sqrt(2.0))


def curve_to_csv(points: Sequence[TailCurvePoint]) -> str:
    lines = ["t,p1,p2,ratio,likely"]
    for pt in points:
        ratio = "" if pt.ratio is None else f"{pt.ratio:.9g}"
        lines.append(f"{pt.t:.9g},{pt.p1:.9g},{pt.p2:.9g},{ratio},{str(pt.likely).lower()}")
    return "\n".join(lines) + "\n"
