"""Empirical moment machinery: central moments up to order six, residual
powers, Gaussian noise moments, and cross moments of a covariate pair.

Central moments are plug-in estimates (divide by n). Accumulation runs in
extended precision with a two-pass scheme because sixth powers cancel badly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSamplesError

# Relative slack when validating Jensen-type inequalities on float results.
_JENSEN_RTOL = 1e-10


@dataclass(frozen=True)
class MomentSummary:
    """Plug-in mean and central moments m2..mk of one sample.

    Moments beyond the requested order are None. m_k = (1/n) sum (x_i - mean)^k.
    """

    count: int
    mean: float
    m2: float
    m3: float | None = None
    m4: float | None = None
    m5: float | None = None
    m6: float | None = None

    def __post_init__(self):
        if self.count < 2:
            raise InsufficientSamplesError("need at least 2 samples")
        for name in ("mean", "m2", "m3", "m4", "m5", "m6"):
            v = getattr(self, name)
            if v is not None and not math.isfinite(v):
                raise ValueError(f"non-finite moment {name}={v}")
        slack = _JENSEN_RTOL * max(1.0, abs(self.m2))
        if self.m2 < -slack:
            raise ValueError("m2 must be non-negative")
        for name in ("m4", "m6"):
            v = getattr(self, name)
            if v is not None and v < -_JENSEN_RTOL * max(1.0, abs(v)):
                raise ValueError(f"{name} must be non-negative")
        if self.m4 is not None and self.m4 < self.m2**2 * (1.0 - _JENSEN_RTOL) - _JENSEN_RTOL:
            raise ValueError("m4 >= m2^2 violated")

    @property
    def max_order(self) -> int:
        for k in (6, 5, 4, 3):
            if getattr(self, f"m{k}") is not None:
                return k
        return 2

    def central(self, k: int) -> float:
        """Central moment of order k (k=0..max_order; m0=1, m1=0)."""
        if k == 0:
            return 1.0
        if k == 1:
            return 0.0
        v = getattr(self, f"m{k}", None) if 2 <= k <= 6 else None
        if v is None:
            raise ValueError(f"moment of order {k} not computed")
        return v


def central_moments(samples, max_order: int = 3) -> MomentSummary:
    """Estimate mean and central moments m2..m_max_order of a 1-d sample."""
    if not 2 <= max_order <= 6:
        raise ValueError("max_order must be in 2..6")
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 2:
        raise InsufficientSamplesError(f"need at least 2 samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples contain non-finite values")
    mean = math.fsum(x.tolist()) / x.size
    d = x.astype(np.longdouble) - np.longdouble(mean)
    vals = {}
    p = d
    for k in range(2, max_order + 1):
        p = p * d
        vals[f"m{k}"] = float(p.mean())
    return MomentSummary(count=int(x.size), mean=float(mean), **vals)


def residual_powers(targets, predictions, n: int) -> np.ndarray:
    """Elementwise (y_i - yhat_i)^n for n in {2, 3}."""
    if n not in (2, 3):
        raise ValueError("power must be 2 or 3")
    y = np.asarray(targets, dtype=np.float64).ravel()
    yhat = np.asarray(predictions, dtype=np.float64).ravel()
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch: {y.size} targets vs {yhat.size} predictions")
    return (y - yhat) ** n


def gaussian_noise_moment(sigma: float, k: int) -> float:
    """E[eps^k] for eps ~ Normal(0, sigma^2), k = 0..6.

    Odd moments vanish; even ones are sigma^k times the double factorial
    (k-1)!!, i.e. 1, sigma^2, 3 sigma^4, 15 sigma^6.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if not 0 <= k <= 6:
        raise ValueError(f"unsupported order {k}: only moments 0..6 are provided")
    if k % 2 == 1:
        return 0.0
    double_factorial = {0: 1.0, 2: 1.0, 4: 3.0, 6: 15.0}
    return double_factorial[k] * sigma**k


@dataclass(frozen=True)
class CrossMoments:
    """Joint central moments E[(A - muA)^j (B - muB)^k] for j + k <= 3.

    Used by the two-unobserved-variables extension; estimated from covariate
    samples of the environment that never observes the outcome.
    """

    count: int
    mean_a: float
    mean_b: float
    m20: float
    m11: float
    m02: float
    m30: float
    m21: float
    m12: float
    m03: float

    def __post_init__(self):
        if self.count < 2:
            raise InsufficientSamplesError("need at least 2 samples")
        if self.m20 < 0 or self.m02 < 0:
            raise ValueError("marginal variances must be non-negative")


def cross_central_moments(a_samples, b_samples) -> CrossMoments:
    """Plug-in joint central moments of a paired sample, orders j + k <= 3."""
    a = np.asarray(a_samples, dtype=np.float64).ravel()
    b = np.asarray(b_samples, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal length")
    if a.size < 2:
        raise InsufficientSamplesError("need at least 2 samples")
    mean_a = math.fsum(a.tolist()) / a.size
    mean_b = math.fsum(b.tolist()) / b.size
    da = a.astype(np.longdouble) - np.longdouble(mean_a)
    db = b.astype(np.longdouble) - np.longdouble(mean_b)
    mom = lambda j, k: float((da**j * db**k).mean())
    return CrossMoments(
        count=int(a.size),
        mean_a=float(mean_a),
        mean_b=float(mean_b),
        m20=mom(2, 0),
        m11=mom(1, 1),
        m02=mom(0, 2),
        m30=mom(3, 0),
        m21=mom(2, 1),
        m12=mom(1, 2),
        m03=mom(0, 3),
    )
