import math

import mpmath
import numpy as np
import pytest
from scipy import optimize, special, stats

from ggmech.calibration import (
    McConfig,
    PrivacyParams,
    bisect,
    disjoint_failure_probability,
    disjoint_pdp_scale,
    equivalent_epsilon,
    gauss_adp_sigma,
    gauss_pdp_sigma,
    gg_pdp_scale_mc,
    laplace_scale,
    tgg_scale,
)
from ggmech.errors import ConfigurationError, ConvergenceError, DomainError, NoSolutionError
from ggmech.numerics import RngStream
from ggmech.sensitivity import SensitivityProfile

EPS_GRID = [0.1 * k for k in range(1, 10)]
DELTA_GRID = [0.01, 0.05, 0.1, 0.25]

# mpmath oracles at 40 digits
SIGMA_PDP_1_05 = 2.18843749628063
SIGMA_PDP_2_05 = 1.19005612
SIGMA_ADP_05_05 = 5.07454496
SIGMA_ADP_09_25 = 1.99346953
# deterministic disjoint solver at p=3, cross-checked by a 10^7-draw MC run
DISJOINT_P3 = 4.6624445505


def mp_pdp_sigma(delta2, eps, delta):
    with mpmath.workdps(40):
        z = mpmath.sqrt(2) * mpmath.erfinv(mpmath.mpf(delta) - 1)
        return float(delta2 / (2 * mpmath.mpf(eps)) * (mpmath.sqrt(z * z + 2 * mpmath.mpf(eps)) - z))


def test_privacy_params_validation():
    with pytest.raises(DomainError):
        PrivacyParams(0.0)
    with pytest.raises(DomainError):
        PrivacyParams(1.0, 1.0)
    with pytest.raises(ConfigurationError):
        McConfig(draws=100)


def test_bisect_finds_threshold():
    x = bisect(lambda v: v >= math.pi, 0.0, 10.0, 1e-12)
    assert x == pytest.approx(math.pi, rel=1e-11)
    assert x >= math.pi


def test_laplace_examples():
    assert laplace_scale(1, 0.5) == 2.0
    assert laplace_scale(1, 1) == 1.0
    assert laplace_scale(2, 4) == 0.5
    with pytest.raises(DomainError):
        laplace_scale(0, 1)


def test_tgg_examples():
    assert tgg_scale(SensitivityProfile((1,), bounds=((0, 1),)), 1, 0.5) == pytest.approx(4.0)
    assert tgg_scale(SensitivityProfile((1,), bounds=((0, 1),)), 2, 1) == pytest.approx(math.sqrt(6))
    hist = SensitivityProfile.histogram(64, 70)
    assert tgg_scale(hist, 2, 1) == pytest.approx(math.sqrt(282), rel=1e-14)
    with pytest.raises(ConfigurationError):
        tgg_scale(SensitivityProfile((1,)), 2, 1)


def test_gauss_pdp_examples():
    assert gauss_pdp_sigma(1, PrivacyParams(1, 0.05)) == pytest.approx(SIGMA_PDP_1_05, abs=1e-12)
    assert gauss_pdp_sigma(1, PrivacyParams(1, 0.05)) == pytest.approx(2.188435, abs=1e-5)
    assert gauss_pdp_sigma(1, PrivacyParams(2, 0.05)) == pytest.approx(SIGMA_PDP_2_05, abs=1e-8)
    base = gauss_pdp_sigma(1, PrivacyParams(0.7, 0.1))
    assert gauss_pdp_sigma(3.5, PrivacyParams(0.7, 0.1)) == pytest.approx(3.5 * base, rel=1e-14)
    with pytest.raises(ConfigurationError):
        gauss_pdp_sigma(1, PrivacyParams(1, 0.0))


@pytest.mark.parametrize("eps", [0.1, 0.5, 1.0, 3.0])
@pytest.mark.parametrize("delta", [1e-6, 0.01, 0.05, 0.25, 0.9])
def test_gauss_pdp_matches_mpmath(eps, delta):
    assert gauss_pdp_sigma(1.0, PrivacyParams(eps, delta)) == pytest.approx(mp_pdp_sigma(1, eps, delta), rel=1e-10)


def test_gauss_pdp_is_tail_solution():
    # sigma solves Pr(|N(0, s^2)| > t*) = delta where t* is the loss threshold
    eps, delta = 0.8, 0.05
    s = gauss_pdp_sigma(1.0, PrivacyParams(eps, delta))
    t_star = s * s * eps - 0.5
    assert 2 * stats.norm.sf(t_star / s) == pytest.approx(delta, rel=1e-9)


def test_gauss_adp_examples():
    assert gauss_adp_sigma(1, PrivacyParams(0.5, 0.05)) == pytest.approx(SIGMA_ADP_05_05, abs=1e-8)
    assert gauss_adp_sigma(1, PrivacyParams(0.9, 0.25)) == pytest.approx(1.993, abs=1e-3)
    assert gauss_adp_sigma(1, PrivacyParams(0.9, 0.25)) == pytest.approx(SIGMA_ADP_09_25, abs=1e-8)
    with pytest.raises(DomainError):
        gauss_adp_sigma(1, PrivacyParams(1.0, 0.05))
    assert gauss_adp_sigma(1, PrivacyParams(2.0, 0.05), allow_large_epsilon=True) == pytest.approx(
        SIGMA_ADP_05_05 / 4, rel=1e-8
    )


def test_pdp_below_adp_on_grid():
    for eps in EPS_GRID:
        for delta in DELTA_GRID:
            prm = PrivacyParams(eps, delta)
            assert gauss_pdp_sigma(1, prm) < gauss_adp_sigma(1, prm)


def test_pdp_scale_internal_bound():
    for eps in np.linspace(0.05, 5, 40):
        for delta in (1e-4, 0.01, 0.3, 0.8):
            s = gauss_pdp_sigma(1.0, PrivacyParams(eps, delta))
            assert math.sqrt(2) * s >= eps ** -0.5


def test_disjoint_examples():
    b2 = disjoint_pdp_scale(1.0, 2, PrivacyParams(1, 0.05))
    assert b2 == pytest.approx(math.sqrt(2) * SIGMA_PDP_1_05, abs=1e-6)
    assert b2 == pytest.approx(3.094916, abs=1e-4)
    assert disjoint_pdp_scale(1.0, 3, PrivacyParams(1, 0.05)) == pytest.approx(DISJOINT_P3, rel=1e-8)
    with pytest.raises(DomainError):
        disjoint_pdp_scale(1.0, 1, PrivacyParams(1, 0.05))


def scipy_disjoint_scale(delta_s, p, eps, delta):
    """Independent root find: Pr((|e| + D)^p - |e|^p > b^p eps) = delta."""

    def fail(b):
        t = optimize.brentq(lambda v: (v + delta_s) ** p - v**p - b**p * eps, 0.0, 1e6 * b + 1e3, xtol=1e-14)
        return special.gammaincc(1.0 / p, (t / b) ** p) - delta

    lo = delta_s / eps ** (1.0 / p)
    return optimize.brentq(fail, lo * (1 + 1e-12), 1e3 * lo, xtol=1e-13)


@pytest.mark.parametrize("p", [2, 3, 4, 6])
@pytest.mark.parametrize("eps,delta", [(0.5, 0.01), (1.0, 0.05), (2.0, 0.25)])
def test_disjoint_matches_scipy_root(p, eps, delta):
    got = disjoint_pdp_scale(1.0, p, PrivacyParams(eps, delta))
    assert got == pytest.approx(scipy_disjoint_scale(1.0, p, eps, delta), rel=1e-7)


def test_disjoint_failure_probability_at_solution():
    b = disjoint_pdp_scale(2.0, 3, PrivacyParams(0.7, 0.1))
    assert disjoint_failure_probability(b, 2.0, 3, 0.7) == pytest.approx(0.1, rel=1e-6)


def test_mc_p2_matches_closed_form():
    prm = PrivacyParams(1.0, 0.05)
    b = gg_pdp_scale_mc(SensitivityProfile((1.0,)), 2, prm, McConfig(), RngStream(1))
    assert b == pytest.approx(math.sqrt(2) * SIGMA_PDP_1_05, rel=0.02)


def test_mc_disjoint_histogram_matches_deterministic():
    prm = PrivacyParams(1.0, 0.05)
    b = gg_pdp_scale_mc(SensitivityProfile.histogram(64), 3, prm, McConfig(), RngStream(2))
    assert b == pytest.approx(DISJOINT_P3, rel=0.02)


def test_mc_reproducible_and_errors():
    prof = SensitivityProfile((1.0, 0.1, 0.05))
    prm = PrivacyParams(1.0, 0.05)
    a = gg_pdp_scale_mc(prof, 3, prm, McConfig(draws=20_000), RngStream(4))
    assert a == gg_pdp_scale_mc(prof, 3, prm, McConfig(draws=20_000), RngStream(4))
    with pytest.raises(ConfigurationError):
        gg_pdp_scale_mc(prof, 1, prm, McConfig(draws=20_000), RngStream(4))
    with pytest.raises(ConfigurationError):
        gg_pdp_scale_mc(prof, 3, PrivacyParams(1.0), McConfig(draws=20_000), RngStream(4))
    with pytest.raises(ConvergenceError):
        gg_pdp_scale_mc(prof, 3, PrivacyParams(1.0, 1e-9), McConfig(draws=20_000, b_hi_factor=1.01), RngStream(4))


def test_mc_large_delta_approaches_positivity_floor():
    prof = SensitivityProfile((1.0,))
    b = gg_pdp_scale_mc(prof, 3, PrivacyParams(1.0, 0.999), McConfig(draws=20_000), RngStream(5))
    assert 1.0 <= b <= 1.05


@pytest.mark.slow
def test_mc_monotone_in_eps_and_delta():
    prof = SensitivityProfile((1.0, 0.5))
    mc = McConfig(draws=50_000)
    by_eps = [gg_pdp_scale_mc(prof, 3, PrivacyParams(e, 0.05), mc, RngStream(6)) for e in (0.5, 1, 2)]
    by_delta = [gg_pdp_scale_mc(prof, 3, PrivacyParams(1, d), mc, RngStream(6)) for d in (0.01, 0.05, 0.25)]
    assert by_eps[0] > by_eps[1] > by_eps[2]
    assert by_delta[0] > by_delta[1] > by_delta[2]


def test_closed_forms_monotone():
    for solver in (
        lambda e, d: gauss_pdp_sigma(1, PrivacyParams(e, d)),
        lambda e, d: gauss_adp_sigma(1, PrivacyParams(e, d)),
        lambda e, d: disjoint_pdp_scale(1, 3, PrivacyParams(e, d)),
    ):
        for d in DELTA_GRID:
            vals = [solver(e, d) for e in EPS_GRID]
            assert all(a > b for a, b in zip(vals, vals[1:]))
        for e in EPS_GRID:
            vals = [solver(e, d) for d in DELTA_GRID]
            assert all(a > b for a, b in zip(vals, vals[1:]))


def test_equivalent_epsilon_example():
    eps2 = equivalent_epsilon(1.0, 0.05, 5.0, 1.0)
    sigma = gauss_pdp_sigma(1.0, PrivacyParams(eps2, 0.05))
    assert abs(2 * stats.norm.cdf(-5.0 / sigma) - math.exp(-5.0)) <= 1e-10
    assert eps2 == pytest.approx(1.20894518, abs=1e-7)


def test_equivalent_epsilon_monotone_in_delta():
    vals = [equivalent_epsilon(1.0, d, 5.0, 1.0) for d in (0.01, 0.05, 0.1, 0.25)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_equivalent_epsilon_errors():
    with pytest.raises(DomainError):
        equivalent_epsilon(1.0, 0.05, 0.0, 1.0)
    with pytest.raises(NoSolutionError):
        # target tail exp(-1000) underflows to zero
        equivalent_epsilon(1.0, 0.05, 1000.0, 1.0)
