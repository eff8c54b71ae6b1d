import math

import numpy as np
import pytest

from oovtransfer.errors import InsufficientSamplesError
from oovtransfer.moments import (
    MomentSummary,
    central_moments,
    cross_central_moments,
    gaussian_noise_moment,
    residual_powers,
)


def test_symmetric_two_point_sample():
    s = central_moments([-1.0, 1.0], max_order=3)
    assert s.mean == 0.0
    assert s.m2 == 1.0
    assert s.m3 == 0.0


def test_exponential_third_moment():
    # Gamma(1,1) is Exp(1); its third central moment is exactly 2.
    rng = np.random.default_rng(123)
    x = rng.gamma(1.0, 1.0, size=1_000_000)
    s = central_moments(x, max_order=3)
    assert abs(s.m3 - 2.0) / 2.0 < 0.03


def test_gaussian_moments():
    rng = np.random.default_rng(7)
    sigma = 0.1
    x = rng.normal(0.0, sigma, size=1_000_000)
    s = central_moments(x, max_order=6)
    # standard error of the m3 plug-in is sqrt((m6 - m3^2)/n)
    se = math.sqrt((gaussian_noise_moment(sigma, 6) - 0.0) / x.size)
    assert abs(s.m3) < 3 * se
    assert abs(s.m2 - sigma**2) / sigma**2 < 0.02


def test_insufficient_samples():
    with pytest.raises(InsufficientSamplesError):
        central_moments([1.0], max_order=2)


def test_max_order_validation():
    with pytest.raises(ValueError):
        central_moments([1.0, 2.0], max_order=7)


def test_moment_summary_rejects_negative_variance():
    with pytest.raises(ValueError):
        MomentSummary(count=10, mean=0.0, m2=-1.0)


def test_moment_summary_rejects_jensen_violation():
    with pytest.raises(ValueError):
        MomentSummary(count=10, mean=0.0, m2=2.0, m3=0.0, m4=1.0)


def test_residual_powers_zero():
    y = np.array([1.0, 2.0, 3.0])
    assert np.all(residual_powers(y, y, 3) == 0.0)


def test_residual_powers_arithmetic():
    y = np.array([1.0, -2.0])
    zero = np.zeros(2)
    assert np.array_equal(residual_powers(y, zero, 3), [1.0, -8.0])
    assert np.array_equal(residual_powers(y, zero, 2), [1.0, 4.0])


def test_residual_powers_length_mismatch():
    with pytest.raises(ValueError):
        residual_powers([1.0, 2.0], [1.0], 2)


def test_residual_powers_order():
    with pytest.raises(ValueError):
        residual_powers([1.0], [1.0], 4)


@pytest.mark.parametrize(
    "k,expected",
    [(0, 1.0), (1, 0.0), (2, 0.01), (3, 0.0), (4, 3e-4), (5, 0.0), (6, 15 * 0.1**6)],
)
def test_gaussian_noise_moment_table(k, expected):
    assert gaussian_noise_moment(0.1, k) == pytest.approx(expected, rel=1e-12)


def test_gaussian_noise_moment_errors():
    with pytest.raises(ValueError):
        gaussian_noise_moment(0.1, 7)
    with pytest.raises(ValueError):
        gaussian_noise_moment(-0.1, 2)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_translation_invariance(seed):
    rng = np.random.default_rng(seed)
    x = rng.gamma(2.0, 1.5, size=5000)
    shift = 3.7
    a = central_moments(x, max_order=6)
    b = central_moments(x + shift, max_order=6)
    assert b.mean == pytest.approx(a.mean + shift, abs=1e-9)
    for k in range(2, 7):
        assert b.central(k) == pytest.approx(a.central(k), abs=1e-9, rel=1e-9)


@pytest.mark.parametrize("seed,c", [(0, 2.0), (1, -1.5), (2, 0.25)])
def test_scale_equivariance(seed, c):
    rng = np.random.default_rng(seed)
    x = rng.gamma(1.0, 1.0, size=5000)
    a = central_moments(x, max_order=6)
    b = central_moments(c * x, max_order=6)
    for k in range(2, 7):
        assert b.central(k) == pytest.approx(c**k * a.central(k), rel=1e-9)


def _simulate_conditional_residual_moments(d, sigma, n_draws, seed):
    """Brute-force oracle for the residual-moment identity at one (x1, x2).

    For Y = b + d*x3 + eps the conditional mean is b + d*mu3; simulate
    (Y - E[Y|x1,x2])^n directly from fresh X3 and noise draws.
    """
    rng = np.random.default_rng(seed)
    x3 = rng.gamma(1.0, 1.0, size=n_draws)
    eps = rng.normal(0.0, sigma, size=n_draws)
    resid = d * (x3 - 1.0) + eps  # Exp(1) has mean exactly 1
    r2 = resid**2
    r3 = resid**3
    return (
        r2.mean(),
        r2.std(ddof=1) / math.sqrt(n_draws),
        r3.mean(),
        r3.std(ddof=1) / math.sqrt(n_draws),
    )


@pytest.mark.parametrize("d,seed", [(1.0, 10), (-2.0, 11), (0.5, 12)])
def test_residual_moment_identity_linear_case(d, seed):
    # For functions exactly linear in the hidden covariate the conditional
    # residual moments are d^2 m2 + sigma^2 and d^3 m3 + E[eps^3] exactly.
    sigma = 0.1
    m2, m3 = 1.0, 2.0  # Exp(1) central moments
    sim2, se2, sim3, se3 = _simulate_conditional_residual_moments(d, sigma, 1_000_000, seed)
    assert abs(sim2 - (d**2 * m2 + gaussian_noise_moment(sigma, 2))) < 3 * se2
    assert abs(sim3 - (d**3 * m3 + gaussian_noise_moment(sigma, 3))) < 3 * se3


def test_cross_central_moments_match_marginals():
    rng = np.random.default_rng(5)
    a = rng.gamma(1.0, 1.0, size=200_000)
    b = rng.gamma(1.0, 1.0, size=200_000)
    cm = cross_central_moments(a, b)
    sa = central_moments(a, max_order=3)
    sb = central_moments(b, max_order=3)
    assert cm.m20 == pytest.approx(sa.m2, rel=1e-12)
    assert cm.m02 == pytest.approx(sb.m2, rel=1e-12)
    assert cm.m30 == pytest.approx(sa.m3, rel=1e-12)
    assert cm.m03 == pytest.approx(sb.m3, rel=1e-12)
    # independent draws: joint central moments factor, so m11, m21, m12 vanish
    assert abs(cm.m11) < 0.01
    assert abs(cm.m21) < 0.02
    assert abs(cm.m12) < 0.02
