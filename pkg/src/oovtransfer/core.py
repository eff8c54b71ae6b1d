"""Zero-shot transfer via residual moments.

The source environment observes (X1, X2, Y); the target environment observes
only (X2, X3). The conditional third moment of the source residual equals
(dphi/dx3 at (x1, x2, mu3))^3 * m3(X3) up to the noise skew, so fitting a
surrogate h to the cubed residual with the cubed loss recovers the partial
derivative with respect to the never-co-observed covariate. The zero-shot
predictor Monte-Carlo-averages the source model plus the first-order
correction h * (x3 - mu3) over a frozen pool of X1 draws.

Also here: the exact parametric route for the interaction polynomial, the
second-order (curvature) and two-unobserved-variable extensions, and the
chain-composition predictor for the mediated possibility scenario.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import DegenerateMomentsError, ShapeMismatchError, SkewDegenerateError
from .moments import CrossMoments, MomentSummary, residual_powers
from .regressor import (
    CUBED_RESIDUAL,
    FeedforwardRegressor,
    LossSpec,
    TrainConfig,
    _init_params,
    normalization_from_inputs,
    sgd_fit,
    train,
)
from .scm import EnvironmentDataset, PolyPredictor

# |m3(X3)| below this (on the standardized covariate scale) carries no usable
# sign/scale information for the cubed-residual fit.
SKEW_THRESHOLD = 1e-3

# Condition-number ceiling for the second-moment matrix of the two-variable
# extension, and the minimum standardized third-moment magnitude it needs.
CROSS_CONDITION_LIMIT = 1e8
CROSS_SKEW_THRESHOLD = 1e-3


def _require_skew(k3: float) -> None:
    if not math.isfinite(k3) or abs(k3) < SKEW_THRESHOLD:
        raise SkewDegenerateError(
            f"third central moment {k3:.3g} is below the identifiability "
            f"threshold {SKEW_THRESHOLD:g}; the residual skew carries no signal"
        )


def _require_target(data: EnvironmentDataset) -> np.ndarray:
    if data.target is None:
        raise ValueError("dataset has no outcome column")
    return data.target


@dataclass(frozen=True)
class DerivativeModel:
    """Learned surrogate of dphi/dx3 at (x1, x2, mu3) plus the X3 moments it used.

    second_order, when present, is the surrogate of the quadratic Taylor
    coefficient (the (x3 - mu3)^2 weight) fitted by the curvature extension.
    """

    surrogate: object
    mean: float
    skew: float
    variance: float
    second_order: object | None = None

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.skew)):
            raise ValueError("moment estimates must be finite")
        _require_skew(self.skew)
        if isinstance(self.surrogate, FeedforwardRegressor) and self.surrogate.input_width != 2:
            raise ShapeMismatchError("derivative surrogate must take (x1, x2)")

    def derivative(self, x1, x2):
        return self.surrogate(x1, x2)

    def to_dict(self) -> dict:
        if not isinstance(self.surrogate, FeedforwardRegressor):
            raise TypeError("only network-backed derivative models serialize")
        d = {
            "surrogate": self.surrogate.to_dict(),
            "mean": self.mean,
            "skew": self.skew,
            "variance": self.variance,
            "second_order": None,
        }
        if self.second_order is not None:
            d["second_order"] = self.second_order.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DerivativeModel":
        second = d.get("second_order")
        return cls(
            surrogate=FeedforwardRegressor.from_dict(d["surrogate"]),
            mean=d["mean"],
            skew=d["skew"],
            variance=d["variance"],
            second_order=None if second is None else FeedforwardRegressor.from_dict(second),
        )


@dataclass(frozen=True)
class ZeroShotPredictor:
    """Frozen Monte-Carlo composition of source model and derivative surrogate.

    prediction(x2, x3) = mean_i [ f_S(x1_i, x2) + h(x1_i, x2) * (x3 - mu3) ]
    over the stored pool of X1 draws; deterministic once built.
    """

    source: object
    derivative: DerivativeModel
    pool: np.ndarray

    def __post_init__(self):
        pool = np.asarray(self.pool, dtype=np.float64).ravel()
        if pool.size < 1:
            raise ValueError("need a non-empty X1 pool")
        if not np.all(np.isfinite(pool)):
            raise ValueError("pool values must be finite")
        pool.setflags(write=False)
        object.__setattr__(self, "pool", pool)

    def _pool_means(self, x2_values):
        """Pool averages of f_S and h at each x2; the x3 dependence is affine."""
        x2_values = np.asarray(x2_values, dtype=np.float64).ravel()
        n = self.pool.size
        x1_rep = np.tile(self.pool, x2_values.size)
        x2_rep = np.repeat(x2_values, n)
        f_vals = np.asarray(self.source(x1_rep, x2_rep)).reshape(x2_values.size, n)
        h_vals = np.asarray(self.derivative.surrogate(x1_rep, x2_rep)).reshape(
            x2_values.size, n
        )
        return f_vals, h_vals

    def predict_point(self, x2: float, x3: float) -> float:
        f_vals, h_vals = self._pool_means([x2])
        return float(np.mean(f_vals[0] + h_vals[0] * (x3 - self.derivative.mean)))

    def predict_grid(self, x2_values, x3_values) -> np.ndarray:
        """Predictions over the Cartesian grid, shape (len(x2), len(x3))."""
        x3_values = np.asarray(x3_values, dtype=np.float64).ravel()
        f_vals, h_vals = self._pool_means(x2_values)
        return f_vals.mean(axis=1)[:, None] + np.outer(
            h_vals.mean(axis=1), x3_values - self.derivative.mean
        )

    def grid_standard_error(self, x2_values, x3_values) -> np.ndarray:
        """Monte-Carlo standard error of the pool mean at each grid point."""
        x3_values = np.asarray(x3_values, dtype=np.float64).ravel()
        f_vals, h_vals = self._pool_means(x2_values)
        n = self.pool.size
        out = np.empty((f_vals.shape[0], x3_values.size))
        for j, x3 in enumerate(x3_values):
            samples = f_vals + h_vals * (x3 - self.derivative.mean)
            out[:, j] = samples.std(axis=1, ddof=1) / math.sqrt(n)
        return out

    def marginal_average(self, x2_values) -> np.ndarray:
        """Pool average of the source model alone (the x3-free term of Eq.-style mean)."""
        f_vals, _ = self._pool_means(x2_values)
        return f_vals.mean(axis=1)

    def __call__(self, x2, x3):
        x2 = np.atleast_1d(np.asarray(x2, dtype=np.float64))
        x3 = np.atleast_1d(np.asarray(x3, dtype=np.float64))
        x2, x3 = np.broadcast_arrays(x2, x3)
        flat2, flat3 = x2.ravel(), x3.ravel()
        uniq, inverse = np.unique(flat2, return_inverse=True)
        f_vals, h_vals = self._pool_means(uniq)
        fm = f_vals.mean(axis=1)[inverse]
        hm = h_vals.mean(axis=1)[inverse]
        out = fm + hm * (flat3 - self.derivative.mean)
        return out.reshape(x2.shape)

    def to_dict(self) -> dict:
        if not isinstance(self.source, FeedforwardRegressor):
            raise TypeError("only network-backed predictors serialize")
        return {
            "source": self.source.to_dict(),
            "derivative": self.derivative.to_dict(),
            "pool": self.pool.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ZeroShotPredictor":
        return cls(
            source=FeedforwardRegressor.from_dict(d["source"]),
            derivative=DerivativeModel.from_dict(d["derivative"]),
            pool=np.asarray(d["pool"], dtype=np.float64),
        )


def fit_skew_derivative(
    source: EnvironmentDataset,
    f_s,
    x3_moments: MomentSummary,
    config: TrainConfig,
) -> DerivativeModel:
    """Fit the derivative surrogate from the cubed source residuals.

    Computes Z = (Y - f_S(X1, X2))^3 and trains h to minimize
    mean((Z - m3 * h(x1, x2)^3)^2), where m3 is the third central moment of
    X3 estimated in the target environment. The Gaussian noise skew is zero,
    so no offset is applied to Z.
    """
    k3 = x3_moments.central(3)
    _require_skew(k3)
    y = _require_target(source)
    x = source.matrix(("X1", "X2"))
    z = residual_powers(y, np.asarray(f_s(x[:, 0], x[:, 1])), 3)
    surrogate = train(x, z, LossSpec(CUBED_RESIDUAL, k3=k3), config)
    return DerivativeModel(
        surrogate=surrogate,
        mean=x3_moments.mean,
        skew=k3,
        variance=x3_moments.m2,
    )


def build_predictor(
    f_s, derivative: DerivativeModel, source: EnvironmentDataset, n: int, seed: int
) -> ZeroShotPredictor:
    """Freeze a zero-shot predictor with n X1 draws (uniform, with replacement)."""
    if n < 1:
        raise ValueError("pool size must be >= 1")
    column = source.column("X1")
    if column.size == 0:
        raise ValueError("source environment is empty")
    rng = np.random.default_rng(seed)
    pool = rng.choice(column, size=n, replace=True)
    return ZeroShotPredictor(source=f_s, derivative=derivative, pool=pool)


def zero_shot_predict(predictor: ZeroShotPredictor, x2: float, x3: float) -> float:
    return predictor.predict_point(x2, x3)


def fit_parametric_poly(
    source: EnvironmentDataset,
    f_s_coeffs: PolyPredictor,
    x3_moments: MomentSummary,
) -> np.ndarray:
    """Exact-recovery route for the interaction polynomial.

    Fits theta = (t0, t1, t2, t3) minimizing
    mean((Z / m3 - (t0 + t1 x1 + t2 x2 + t3 x1 x2)^3)^2); theta estimates the
    coefficients of the x3, x1*x3, x2*x3 and x1*x2*x3 monomials.
    """
    k3 = x3_moments.central(3)
    _require_skew(k3)
    y = _require_target(source)
    x1 = source.column("X1")
    x2 = source.column("X2")
    z = residual_powers(y, f_s_coeffs(x1, x2), 3)
    w = z / k3
    g = np.column_stack([np.ones_like(x1), x1, x2, x1 * x2])

    theta0, *_ = np.linalg.lstsq(g, np.cbrt(w), rcond=None)

    def residual(theta):
        return (g @ theta) ** 3 - w

    def jacobian(theta):
        return (3.0 * (g @ theta) ** 2)[:, None] * g

    result = least_squares(residual, theta0, jac=jacobian, method="lm")
    return result.x


def recover_target_coefficients(
    theta, f_s_coeffs: PolyPredictor, mu1: float, mu3: float
) -> PolyPredictor:
    """Target-environment predictor from the source fit and the derivative fit.

    Marginalizes the first-order reconstruction
    phi(x1, x2, x3) = f_S(x1, x2) + d(x1, x2) (x3 - mu3), d = theta features,
    over X1; on inputs consistent with the interaction polynomial this equals
    the closed-form optimal target predictor.
    """
    t0, t1, t2, t3 = (float(t) for t in np.asarray(theta, dtype=np.float64).ravel())
    c0, c1, c2, c3 = f_s_coeffs.as_tuple()
    d_const = t0 + t1 * mu1
    d_x2 = t2 + t3 * mu1
    return PolyPredictor(
        const=c0 + c1 * mu1 - d_const * mu3,
        lin_a=c2 + c3 * mu1 - d_x2 * mu3,
        lin_b=d_const,
        cross=d_x2,
    )


def _second_order_moment_values(moments: MomentSummary):
    m2 = moments.central(2)
    m3 = moments.central(3)
    m4 = moments.central(4)
    m5 = moments.central(5)
    m6 = moments.central(6)
    return m2, m3, m4, m5, m6


def fit_second_order(
    source: EnvironmentDataset,
    f_s,
    x3_moments: MomentSummary,
    sigma: float,
    config: TrainConfig,
) -> DerivativeModel:
    """Jointly fit first- and second-order Taylor coefficient surrogates.

    Pointwise targets are the squared and cubed source residuals; the model
    equations are the quadratic-expansion conditional moments

        M2 = h^2 m2 + 2 h q m3 + q^2 (m4 - m2^2) + sigma^2
        M3 = h^3 m3 + 3 h^2 q (m4 - m2^2) + 3 h q^2 (m5 - 2 m2 m3)
             + q^3 (m6 - 3 m2 m4 + 2 m2^3)

    with h the first-order and q the quadratic coefficient; noise adds
    sigma^2 to the n=2 target and nothing to the n=3 target.
    """
    m2, m3, m4, m5, m6 = _second_order_moment_values(x3_moments)
    if m2 < 1e-12:
        raise SkewDegenerateError("X3 has (near-)zero variance: no signal to fit")
    _require_skew(m3)
    y = _require_target(source)
    x = source.matrix(("X1", "X2"))
    pred = np.asarray(f_s(x[:, 0], x[:, 1]))
    t2 = residual_powers(y, pred, 2)
    t3 = residual_powers(y, pred, 3)

    c22 = m4 - m2 * m2
    c32 = m4 - m2 * m2
    c33 = m5 - 2.0 * m2 * m3
    c34 = m6 - 3.0 * m2 * m4 + 2.0 * m2**3

    dtype = config.dtype
    in_off, in_scale = normalization_from_inputs(x)
    xn = ((x - in_off) / in_scale).astype(dtype)
    t2 = t2.astype(dtype)
    t3 = t3.astype(dtype)
    rng = np.random.default_rng(config.seed)
    widths = (2, *config.hidden, 1)
    params_h = _init_params(widths, rng, config.init_scale, dtype)
    params_q = _init_params(widths, rng, config.init_scale, dtype)
    sig2 = sigma * sigma

    # warm start both offsets at the mean-level solution of the two moment
    # equations; allocate the observed residual skew to the first-order term
    # when choosing among the exactly-tied solution branches
    second = np.array([[m2, m3], [m3, c22]])
    cubic = lambda h, q: m3 * h**3 + 3.0 * c32 * h * h * q + 3.0 * c33 * h * q * q + c34 * q**3
    h_off, q_off = _warm_start_pair(
        float(np.mean(t2)) - sig2,
        float(np.mean(t3)),
        second,
        cubic,
        (float(np.cbrt(np.mean(t3) / m3)), 0.0),
    )

    # Both residuals vanish jointly at the solution (two equations, two
    # unknowns), so fixed per-equation weights leave the minimizer unchanged;
    # normalizing by the target spreads stops the heavy-tailed cubed targets
    # from drowning the squared-moment equation's gradient.
    w2 = 1.0 / max(float(t2.std()), 1e-12) ** 2
    w3 = 1.0 / max(float(t3.std()), 1e-12) ** 2

    def grad_fn(outs, idx):
        h = h_off + outs[0]
        q = q_off + outs[1]
        r2 = t2[idx] - (h * h * m2 + 2.0 * h * q * m3 + q * q * c22 + sig2)
        r3 = t3[idx] - (
            h**3 * m3 + 3.0 * h * h * q * c32 + 3.0 * h * q * q * c33 + q**3 * c34
        )
        batch_loss = float(np.mean(w2 * r2 * r2 + w3 * r3 * r3))
        dm2_dh = 2.0 * h * m2 + 2.0 * q * m3
        dm2_dq = 2.0 * h * m3 + 2.0 * q * c22
        dm3_dh = 3.0 * h * h * m3 + 6.0 * h * q * c32 + 3.0 * q * q * c33
        dm3_dq = 3.0 * h * h * c32 + 6.0 * h * q * c33 + 3.0 * q * q * c34
        scale = -2.0 / idx.size
        d_h = scale * (w2 * r2 * dm2_dh + w3 * r3 * dm3_dh)
        d_q = scale * (w2 * r2 * dm2_dq + w3 * r3 * dm3_dq)
        return batch_loss, [d_h, d_q]

    sgd_fit([params_h, params_q], xn, grad_fn, config, rng)
    h_model = FeedforwardRegressor(
        *params_h,
        input_offset=in_off,
        input_scale=in_scale,
        output_offset=h_off,
    )
    q_model = FeedforwardRegressor(
        *params_q, input_offset=in_off, input_scale=in_scale
    )
    return DerivativeModel(
        surrogate=h_model,
        mean=x3_moments.mean,
        skew=m3,
        variance=m2,
        second_order=q_model,
    )


def _enumerate_pair_roots(second_matrix, c2, cubic, c3, n_scan=4096):
    """All real solutions of {x' S x = c2, cubic(x) = c3} for positive
    definite S: scan the level ellipse for sign changes of the cubic residual
    and bisect each crossing.
    """
    if c2 <= 0:
        return []
    chol = np.linalg.cholesky(second_matrix)
    to_ellipse = math.sqrt(c2) * np.linalg.inv(chol).T
    thetas = np.linspace(0.0, 2.0 * np.pi, n_scan, endpoint=False)
    pts = to_ellipse @ np.stack([np.cos(thetas), np.sin(thetas)])
    vals = cubic(pts[0], pts[1]) - c3
    step = 2.0 * np.pi / n_scan
    roots = []
    for i in range(n_scan):
        j = (i + 1) % n_scan
        if vals[i] == 0.0:
            roots.append((float(pts[0, i]), float(pts[1, i])))
            continue
        if (vals[i] < 0.0) == (vals[j] < 0.0):
            continue
        lo, hi = thetas[i], thetas[i] + step
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            p = to_ellipse @ np.array([math.cos(mid), math.sin(mid)])
            if ((cubic(p[0], p[1]) - c3) < 0.0) == (vals[i] < 0.0):
                lo = mid
            else:
                hi = mid
        mid = 0.5 * (lo + hi)
        p = to_ellipse @ np.array([math.cos(mid), math.sin(mid)])
        roots.append((float(p[0]), float(p[1])))
    return roots


def _warm_start_pair(t2_mean, t3_mean, second_matrix, cubic, heuristic):
    """Mean-level exact solution of the two moment equations, branch-selected.

    The conic/cubic system generically has several real solutions that fit
    the first two residual moments equally well; the returned one is the
    root nearest to the skew-allocation heuristic point. Falls back to the
    heuristic itself when the ellipse level is empty.
    """
    roots = _enumerate_pair_roots(second_matrix, t2_mean, cubic, t3_mean)
    if not roots:
        return heuristic
    target = np.asarray(heuristic, dtype=np.float64)
    dists = [float(np.hypot(r[0] - target[0], r[1] - target[1])) for r in roots]
    return roots[int(np.argmin(dists))]


def fit_bivariate_derivatives(
    source: EnvironmentDataset,
    f_s,
    cross_moments: CrossMoments,
    config: TrainConfig,
    noise_std: float = 0.0,
):
    """Fit surrogates of both partials when two covariates are unobserved.

    The source observes only (X1, Y); the residual moments mix the two
    partial derivatives through the joint central moments of the unobserved
    pair (no independence assumed):

        M2 = hx^2 m20 + 2 hx hy m11 + hy^2 m02 + sigma^2
        M3 = hx^3 m30 + 3 hx^2 hy m21 + 3 hx hy^2 m12 + hy^3 m03

    Returns (hx, hy), surrogates over x1 of dphi/dA and dphi/dB at the means.
    """
    cm = cross_moments
    second = np.array([[cm.m20, cm.m11], [cm.m11, cm.m02]])
    cond = np.linalg.cond(second)
    if not np.isfinite(cond) or cond > CROSS_CONDITION_LIMIT:
        raise DegenerateMomentsError(
            f"second-moment matrix condition number {cond:.3g} exceeds "
            f"{CROSS_CONDITION_LIMIT:g}"
        )
    scale3 = max(cm.m20, cm.m02) ** 1.5
    third_mag = max(abs(cm.m30), abs(cm.m21), abs(cm.m12), abs(cm.m03))
    if scale3 <= 0 or third_mag < CROSS_SKEW_THRESHOLD * scale3:
        raise DegenerateMomentsError(
            "third-order cross moments all vanish: the n=3 equations carry no signal"
        )

    y = _require_target(source)
    x = source.matrix(("X1",))
    pred = np.asarray(f_s(x[:, 0]))
    t2 = residual_powers(y, pred, 2)
    t3 = residual_powers(y, pred, 3)
    sig2 = noise_std * noise_std

    eigmin = float(np.linalg.eigvalsh(second).min())
    radius = 1.5 * math.sqrt(max(float(np.mean(t2)) - sig2, 1e-12) / max(eigmin, 1e-12))
    hx0, hy0 = _warm_start_pair(
        float(np.mean(t2)) - sig2,
        float(np.mean(t3)),
        (cm.m20, cm.m11, cm.m02),
        (cm.m30, cm.m21, cm.m12, cm.m03),
        radius,
    )

    dtype = config.dtype
    in_off, in_scale = normalization_from_inputs(x)
    xn = ((x - in_off) / in_scale).astype(dtype)
    t2 = t2.astype(dtype)
    t3 = t3.astype(dtype)
    rng = np.random.default_rng(config.seed)
    widths = (1, *config.hidden, 1)
    params_x = _init_params(widths, rng, config.init_scale, dtype)
    params_y = _init_params(widths, rng, config.init_scale, dtype)

    # same per-equation normalization as the curvature fit: minimizer
    # unchanged, gradient scales balanced
    w2 = 1.0 / max(float(t2.std()), 1e-12) ** 2
    w3 = 1.0 / max(float(t3.std()), 1e-12) ** 2

    def grad_fn(outs, idx):
        hx = hx0 + outs[0]
        hy = hy0 + outs[1]
        m2v = cm.m20 * hx * hx + 2.0 * cm.m11 * hx * hy + cm.m02 * hy * hy + sig2
        m3v = (
            cm.m30 * hx**3
            + 3.0 * cm.m21 * hx * hx * hy
            + 3.0 * cm.m12 * hx * hy * hy
            + cm.m03 * hy**3
        )
        r2 = t2[idx] - m2v
        r3 = t3[idx] - m3v
        batch_loss = float(np.mean(w2 * r2 * r2 + w3 * r3 * r3))
        dm2_dx = 2.0 * cm.m20 * hx + 2.0 * cm.m11 * hy
        dm2_dy = 2.0 * cm.m11 * hx + 2.0 * cm.m02 * hy
        dm3_dx = 3.0 * cm.m30 * hx * hx + 6.0 * cm.m21 * hx * hy + 3.0 * cm.m12 * hy * hy
        dm3_dy = 3.0 * cm.m21 * hx * hx + 6.0 * cm.m12 * hx * hy + 3.0 * cm.m03 * hy * hy
        scale = -2.0 / idx.size
        return batch_loss, [
            scale * (w2 * r2 * dm2_dx + w3 * r3 * dm3_dx),
            scale * (w2 * r2 * dm2_dy + w3 * r3 * dm3_dy),
        ]

    sgd_fit([params_x, params_y], xn, grad_fn, config, rng)
    hx_model = FeedforwardRegressor(
        *params_x, input_offset=in_off, input_scale=in_scale, output_offset=hx0
    )
    hy_model = FeedforwardRegressor(
        *params_y, input_offset=in_off, input_scale=in_scale, output_offset=hy0
    )
    return hx_model, hy_model


@dataclass(frozen=True)
class CompositionPredictor:
    """Chain of a parent->mediator regressor and a mediator->outcome regressor."""

    head: FeedforwardRegressor
    feeder: FeedforwardRegressor
    parent_names: tuple[str, ...]

    def __post_init__(self):
        if self.head.input_width != 1:
            raise ShapeMismatchError("head must consume the single mediator value")

    def predict(self, parents) -> np.ndarray:
        z = self.feeder.predict(parents)
        return self.head.predict(z[:, None])

    def __call__(self, parents):
        return self.predict(parents)


def compose_possibility(
    env_s1: EnvironmentDataset,
    env_s2: EnvironmentDataset,
    config: TrainConfig,
) -> CompositionPredictor:
    """Train the two-stage predictor of the mediated possibility scenario.

    env_s1 observes (Z, Y): the head learns z -> y by mean squared error.
    env_s2 observes (parents, Z): the feeder learns parents -> z. Their
    composition predicts y from the parents, which were never observed
    jointly with y.
    """
    if env_s1.n_rows == 0 or env_s2.n_rows == 0:
        raise ValueError("both environments must be non-empty")
    if len(env_s1.names) != 1:
        raise ValueError("mediator environment must have exactly one covariate")
    z_name = env_s1.names[0]
    if z_name not in env_s2.names:
        raise ValueError(f"environments do not share the mediator column {z_name!r}")
    parent_names = tuple(n for n in env_s2.names if n != z_name)
    if not parent_names:
        raise ValueError("parent environment has no parent columns")
    y = _require_target(env_s1)
    head = train(env_s1.column(z_name)[:, None], y, LossSpec("mean_squared"), config)
    feeder = train(
        env_s2.matrix(parent_names),
        env_s2.column(z_name),
        LossSpec("mean_squared"),
        config,
    )
    return CompositionPredictor(head=head, feeder=feeder, parent_names=parent_names)
