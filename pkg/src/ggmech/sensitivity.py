"""l_p global sensitivity bounds and utility-function sensitivity."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

_TOL = 1e-12


def _check_order(p) -> int:
    if int(p) != p or p < 1:
        raise DomainError(f"order p must be an integer >= 1, got {p!r}")
    return int(p)


@dataclass(frozen=True)
class SensitivityProfile:
    """Per-element l1 sensitivities of a vector query.

    ``disjoint`` marks queries (histograms) whose elements are computed on
    disjoint subsets of the data, so a single record moves one element.
    """

    delta1: tuple
    bounds: Optional[tuple] = None
    disjoint: bool = False
    delta_p_override: Optional[float] = None

    def __post_init__(self):
        d = tuple(float(v) for v in np.atleast_1d(np.asarray(self.delta1, dtype=float)))
        if len(d) == 0:
            raise DomainError("delta1 must have at least one element")
        if any(not (v >= 0 and math.isfinite(v)) for v in d):
            raise DomainError(f"delta1 entries must be finite and nonnegative, got {d}")
        object.__setattr__(self, "delta1", d)
        if self.bounds is not None:
            bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
            if len(bounds) != len(d):
                raise DomainError(f"bounds has {len(bounds)} pairs for {len(d)} elements")
            for k, ((lo, hi), dk) in enumerate(zip(bounds, d)):
                if not lo < hi:
                    raise DomainError(f"element {k}: bounds need lo < hi, got [{lo}, {hi}]")
                if dk > hi - lo + _TOL:
                    raise DomainError(
                        f"element {k}: sensitivity {dk} exceeds the range {hi - lo}"
                    )
            object.__setattr__(self, "bounds", bounds)
        if self.delta_p_override is not None and not self.delta_p_override > 0:
            raise DomainError(f"delta_p_override must be positive, got {self.delta_p_override!r}")
        object.__setattr__(self, "disjoint", bool(self.disjoint))

    @property
    def r(self) -> int:
        return len(self.delta1)

    @classmethod
    def histogram(cls, bins: int, n: Optional[float] = None) -> "SensitivityProfile":
        """Disjoint unit-sensitivity profile, bounded to ``[0, n]`` when n is given."""
        bounds = None if n is None else tuple((0.0, float(n)) for _ in range(bins))
        return cls(delta1=(1.0,) * bins, bounds=bounds, disjoint=True)

    def to_dict(self) -> dict:
        return {
            "delta1": list(self.delta1),
            "bounds": None if self.bounds is None else [list(b) for b in self.bounds],
            "disjoint": self.disjoint,
            "delta_p_override": self.delta_p_override,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SensitivityProfile":
        unknown = set(data) - {"delta1", "bounds", "disjoint", "delta_p_override"}
        if unknown:
            raise ConfigurationError(f"unknown profile fields: {sorted(unknown)}")
        if "delta1" not in data:
            raise ConfigurationError("profile requires 'delta1'")
        return cls(
            delta1=data["delta1"],
            bounds=data.get("bounds"),
            disjoint=data.get("disjoint", False),
            delta_p_override=data.get("delta_p_override"),
        )


@dataclass(frozen=True)
class UtilitySensitivity:
    delta_u: float
    p: int
    deltaj: Optional[tuple] = field(default=None)


def lp_gs_upper_bound(delta1: Sequence[float], p: int) -> float:
    """(sum_k delta1_k**p)**(1/p), an upper bound on the l_p sensitivity."""
    p = _check_order(p)
    d = np.asarray(delta1, dtype=float)
    if d.size == 0 or np.any(d < 0) or not np.any(d > 0):
        raise DomainError("delta1 must be nonempty, nonnegative and not all zero")
    m = d.max()
    # factor out the max so large p does not overflow
    return float(m * np.sum((d / m) ** p) ** (1.0 / p))


def range_gs_bound(bounds, p: int) -> float:
    p = _check_order(p)
    widths = []
    for pair in bounds:
        if len(pair) != 2 or not pair[0] < pair[1]:
            raise DomainError(f"malformed bound pair {pair!r}")
        widths.append(pair[1] - pair[0])
    return lp_gs_upper_bound(widths, p)


def effective_lp_gs(profile: SensitivityProfile, p: int) -> float:
    """Best available l_p sensitivity for the profile."""
    p = _check_order(p)
    if profile.delta_p_override is not None:
        return float(profile.delta_p_override)
    if profile.disjoint:
        m = max(profile.delta1)
        if m <= 0:
            raise DomainError("profile sensitivities are all zero")
        return m
    return lp_gs_upper_bound(profile.delta1, p)


def default_deltaj(profile: SensitivityProfile, p: int) -> tuple:
    """Mean-value bound j * M**(j-1) * delta1 on the sensitivity of s**j."""
    if profile.bounds is None:
        raise ConfigurationError("bounds are required to default the power sensitivities")
    rows = []
    for j in range(1, p + 1):
        row = []
        for (lo, hi), dk in zip(profile.bounds, profile.delta1):
            m = max(abs(lo), abs(hi))
            row.append(j * m ** (j - 1) * dk)
        rows.append(tuple(row))
    return tuple(rows)


def _reduce(profile: SensitivityProfile, terms: list[float]) -> float:
    return max(terms) if profile.disjoint else sum(terms)


def _normalize_deltaj(profile: SensitivityProfile, p: int, deltaj) -> tuple:
    if deltaj is None:
        return default_deltaj(profile, p)
    deltaj = tuple(tuple(float(v) for v in row) for row in deltaj)
    if len(deltaj) != p or any(len(row) != profile.r for row in deltaj):
        raise ConfigurationError(f"deltaj must be a {p} x {profile.r} table")
    if any(abs(a - b) > _TOL for a, b in zip(deltaj[0], profile.delta1)):
        raise ConfigurationError("deltaj[0] must equal the profile's delta1")
    return deltaj


def binomial_utility_bound(profile: SensitivityProfile, p: int, deltaj=None) -> float:
    """sum_k sum_j C(p, j) max(|lo_k|, |hi_k|)**(p-j) deltaj[j-1][k]."""
    p = _check_order(p)
    if profile.bounds is None:
        raise ConfigurationError(f"utility sensitivity at p={p} requires element bounds")
    deltaj = _normalize_deltaj(profile, p, deltaj)
    terms = []
    for k, (lo, hi) in enumerate(profile.bounds):
        m = max(abs(lo), abs(hi))
        terms.append(sum(comb(p, j) * m ** (p - j) * deltaj[j - 1][k] for j in range(1, p + 1)))
    return _reduce(profile, terms)


def squared_utility_bound(profile: SensitivityProfile) -> float:
    """2 sum_k delta1_k (hi_k - lo_k), the bound for the squared l2 utility."""
    if profile.bounds is None:
        raise ConfigurationError("utility sensitivity at p=2 requires element bounds")
    terms = [2.0 * dk * (hi - lo) for (lo, hi), dk in zip(profile.bounds, profile.delta1)]
    return _reduce(profile, terms)


def utility_sensitivity(p: int, profile: SensitivityProfile, deltaj=None) -> UtilitySensitivity:
    """Sensitivity of the utility -||s* - s||_p**p.

    ``p = 1`` gives the sum of element sensitivities, capped at the
    profile's l1 sensitivity; ``p = 2`` uses :func:`squared_utility_bound`;
    ``p >= 3`` uses :func:`binomial_utility_bound` with per-power
    sensitivities ``deltaj[j-1][k]`` (defaulted by :func:`default_deltaj`).
    For disjoint profiles only one element can move, so the per-element
    maximum replaces the sum.
    """
    p = _check_order(p)
    if p == 1:
        du = min(sum(profile.delta1), effective_lp_gs(profile, 1))
        return UtilitySensitivity(delta_u=float(du), p=1)
    if p == 2:
        du, table = squared_utility_bound(profile), None
    else:
        if profile.bounds is None:
            raise ConfigurationError(f"utility sensitivity at p={p} requires element bounds")
        table = _normalize_deltaj(profile, p, deltaj)
        du = binomial_utility_bound(profile, p, table)
    if not du > 0:
        raise DomainError("utility sensitivity evaluated to zero")
    return UtilitySensitivity(delta_u=float(du), p=p, deltaj=table)
