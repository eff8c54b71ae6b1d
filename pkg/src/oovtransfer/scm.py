"""Structural causal models with additive noise over three covariates.

The outcome is Y = phi(X1, X2, X3) + eps with jointly independent Gamma
covariates and Gaussian noise. Covariates are min-max standardized into a
fixed range before phi is applied, and environments are column projections
of a joint sample. Closed-form optimal predictors exist for the polynomial
family and serve as oracles everywhere else in the package.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteSampleError, UnknownVariableError, WrongVariantError

POLYNOMIAL = "polynomial"
NONLINEAR_NORM = "nonlinear_norm"
TRIGONOMETRIC = "trigonometric"

COEFF_LENGTHS = {POLYNOMIAL: 7, NONLINEAR_NORM: 3, TRIGONOMETRIC: 4}

JOINT_NAMES = ("X1", "X2", "X3")


@dataclass(frozen=True)
class GeneratingFunction:
    """Symbolic description of the generating mechanism phi.

    variant "polynomial": coeffs (a1..a7) weight the monomials
        [x1, x2, x3, x1*x2, x1*x3, x2*x3, x1*x2*x3].
    variant "nonlinear_norm": coeffs (a1..a3), phi = sqrt(sum (ai*xi)^2).
    variant "trigonometric": coeffs (a1..a4),
        phi = a1*cos(x1) + a2*sin(x2) + a3*cos(x3) + a4*cos(x1*x3).
    """

    variant: str
    coeffs: tuple[float, ...]

    def __post_init__(self):
        if self.variant not in COEFF_LENGTHS:
            raise WrongVariantError(f"unknown variant {self.variant!r}")
        coeffs = tuple(float(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        expected = COEFF_LENGTHS[self.variant]
        if len(coeffs) != expected:
            raise ValueError(
                f"{self.variant} takes {expected} coefficients, got {len(coeffs)}"
            )
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("coefficients must be finite")

    def __call__(self, x1, x2, x3):
        return eval_function(self, x1, x2, x3)

    def to_dict(self) -> dict:
        return {"variant": self.variant, "coeffs": list(self.coeffs)}

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratingFunction":
        return cls(variant=d["variant"], coeffs=tuple(d["coeffs"]))


def random_function(variant: str, rng: np.random.Generator) -> GeneratingFunction:
    """Draw coefficients i.i.d. standard normal for the given variant."""
    n = COEFF_LENGTHS.get(variant)
    if n is None:
        raise WrongVariantError(f"unknown variant {variant!r}")
    return GeneratingFunction(variant, tuple(rng.standard_normal(n)))


def eval_function(func: GeneratingFunction, x1, x2, x3):
    """Noiseless phi(x1, x2, x3); accepts scalars or broadcastable arrays."""
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    x3 = np.asarray(x3, dtype=np.float64)
    a = func.coeffs
    if func.variant == POLYNOMIAL:
        out = (
            a[0] * x1 + a[1] * x2 + a[2] * x3
            + a[3] * x1 * x2 + a[4] * x1 * x3 + a[5] * x2 * x3
            + a[6] * x1 * x2 * x3
        )
    elif func.variant == NONLINEAR_NORM:
        out = np.sqrt((a[0] * x1) ** 2 + (a[1] * x2) ** 2 + (a[2] * x3) ** 2)
    else:
        out = a[0] * np.cos(x1) + a[1] * np.sin(x2) + a[2] * np.cos(x3) + a[3] * np.cos(x1 * x3)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ScmConfig:
    """Sampling configuration: covariate law, noise scale, target range, seed."""

    gamma_shape: float = 1.0
    gamma_scale: float = 1.0
    noise_std: float = 0.1
    standard_lo: float = 0.0
    standard_hi: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.gamma_shape <= 0 or self.gamma_scale <= 0:
            raise ValueError("Gamma shape and scale must be positive")
        if self.noise_std < 0:
            raise ValueError("noise std must be non-negative")
        if not self.standard_lo < self.standard_hi:
            raise ValueError("standardization range must satisfy lo < hi")

    def to_dict(self) -> dict:
        return {
            "gamma_shape": self.gamma_shape,
            "gamma_scale": self.gamma_scale,
            "noise_std": self.noise_std,
            "standard_lo": self.standard_lo,
            "standard_hi": self.standard_hi,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScmConfig":
        return cls(**d)


@dataclass(frozen=True)
class StandardizationTransform:
    """Per-variable affine map x_std = offset + scale * x, fit by min-max.

    One transform is shared by every environment observing the same physical
    variable, so projections agree on variable semantics.
    """

    names: tuple[str, ...]
    offsets: tuple[float, ...]
    scales: tuple[float, ...]
    lo: float
    hi: float

    def __post_init__(self):
        if not (len(self.names) == len(self.offsets) == len(self.scales)):
            raise ValueError("names, offsets and scales must align")
        if any(s <= 0 for s in self.scales):
            raise ValueError("every per-variable scale must be positive")

    @classmethod
    def fit(cls, names, matrix, lo: float, hi: float) -> "StandardizationTransform":
        matrix = np.asarray(matrix, dtype=np.float64)
        mins = matrix.min(axis=0)
        maxs = matrix.max(axis=0)
        spans = maxs - mins
        if np.any(spans <= 0):
            raise ValueError("cannot fit min-max transform on a constant column")
        scales = (hi - lo) / spans
        offsets = lo - scales * mins
        return cls(tuple(names), tuple(offsets.tolist()), tuple(scales.tolist()), lo, hi)

    def _index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownVariableError(name) from None

    def apply(self, matrix, names=None) -> np.ndarray:
        names = self.names if names is None else tuple(names)
        idx = [self._index(n) for n in names]
        off = np.array([self.offsets[i] for i in idx])
        sc = np.array([self.scales[i] for i in idx])
        return np.asarray(matrix, dtype=np.float64) * sc + off

    def invert(self, matrix, names=None) -> np.ndarray:
        names = self.names if names is None else tuple(names)
        idx = [self._index(n) for n in names]
        off = np.array([self.offsets[i] for i in idx])
        sc = np.array([self.scales[i] for i in idx])
        return (np.asarray(matrix, dtype=np.float64) - off) / sc

    def apply_scalar(self, name: str, value: float) -> float:
        i = self._index(name)
        return self.offsets[i] + self.scales[i] * value

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "offsets": list(self.offsets),
            "scales": list(self.scales),
            "lo": self.lo,
            "hi": self.hi,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StandardizationTransform":
        return cls(tuple(d["names"]), tuple(d["offsets"]), tuple(d["scales"]), d["lo"], d["hi"])


@dataclass(frozen=True)
class EnvironmentDataset:
    """Named covariate columns plus an optional outcome vector for one environment."""

    names: tuple[str, ...]
    covariates: np.ndarray
    target: np.ndarray | None = None

    def __post_init__(self):
        cov = np.asarray(self.covariates, dtype=np.float64)
        if cov.ndim != 2 or cov.shape[1] != len(self.names):
            raise ValueError("covariate matrix must be (rows, len(names))")
        if not np.all(np.isfinite(cov)):
            raise NonFiniteSampleError("covariates contain non-finite entries")
        object.__setattr__(self, "covariates", cov)
        if self.target is not None:
            y = np.asarray(self.target, dtype=np.float64).ravel()
            if y.shape[0] != cov.shape[0]:
                raise ValueError("target length must equal covariate row count")
            if not np.all(np.isfinite(y)):
                raise NonFiniteSampleError("target contains non-finite entries")
            object.__setattr__(self, "target", y)

    @property
    def n_rows(self) -> int:
        return self.covariates.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            i = self.names.index(name)
        except ValueError:
            raise UnknownVariableError(name) from None
        return self.covariates[:, i]

    def matrix(self, names) -> np.ndarray:
        """Covariate columns in the requested order as one matrix."""
        return np.column_stack([self.column(n) for n in names])

    def to_csv(self, path) -> None:
        header = list(self.names) + (["Y"] if self.target is not None else [])
        data = self.covariates if self.target is None else np.column_stack(
            [self.covariates, self.target]
        )
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in data:
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "EnvironmentDataset":
        with open(path, "r", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(v) for v in row] for row in reader if row]
        data = np.asarray(rows, dtype=np.float64)
        if header and header[-1] == "Y":
            return cls(tuple(header[:-1]), data[:, :-1], data[:, -1])
        return cls(tuple(header), data)


def sample_joint(
    config: ScmConfig,
    func: GeneratingFunction,
    n: int,
    *,
    transform: StandardizationTransform | None = None,
    seed: int | None = None,
) -> tuple[EnvironmentDataset, StandardizationTransform]:
    """Sample n joint observations (X1, X2, X3, Y) from the additive-noise SCM.

    Raw covariates are i.i.d. Gamma draws; they are standardized into
    [lo, hi] by a min-max transform fit on this sample (or by a supplied
    transform, so a later environment can share the semantics of an earlier
    one), then Y = phi(std covariates) + Normal(0, noise_std^2).
    """
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(config.seed if seed is None else seed)
    raw = rng.gamma(config.gamma_shape, config.gamma_scale, size=(n, 3))
    if not np.all(np.isfinite(raw)):
        raise NonFiniteSampleError("Gamma sampling produced non-finite values")
    if transform is None:
        transform = StandardizationTransform.fit(
            JOINT_NAMES, raw, config.standard_lo, config.standard_hi
        )
    std = transform.apply(raw, JOINT_NAMES)
    noise = rng.normal(0.0, config.noise_std, size=n) if config.noise_std > 0 else np.zeros(n)
    y = eval_function(func, std[:, 0], std[:, 1], std[:, 2]) + noise
    if not np.all(np.isfinite(y)):
        raise NonFiniteSampleError("outcome evaluation produced non-finite values")
    return EnvironmentDataset(JOINT_NAMES, std, y), transform


def project_environment(
    data: EnvironmentDataset, keep, include_target: bool
) -> EnvironmentDataset:
    """Restrict a dataset to the named columns, optionally dropping the outcome."""
    keep = tuple(keep)
    cov = data.matrix(keep)
    target = data.target if include_target else None
    return EnvironmentDataset(keep, cov, target)


@dataclass(frozen=True)
class PolyPredictor:
    """Bivariate predictor c0 + c1*a + c2*b + c3*a*b."""

    const: float
    lin_a: float
    lin_b: float
    cross: float

    def __post_init__(self):
        for v in (self.const, self.lin_a, self.lin_b, self.cross):
            if not math.isfinite(v):
                raise ValueError("predictor coefficients must be finite")

    def __call__(self, a, b):
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        out = self.const + self.lin_a * a + self.lin_b * b + self.cross * a * b
        return out if out.ndim else float(out)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.const, self.lin_a, self.lin_b, self.cross)


def _require_polynomial(func: GeneratingFunction) -> tuple[float, ...]:
    if func.variant != POLYNOMIAL:
        raise WrongVariantError(
            f"closed-form predictors exist only for the polynomial variant, got {func.variant}"
        )
    return func.coeffs


def analytic_source_predictor(poly: GeneratingFunction, mu3: float) -> PolyPredictor:
    """Exact E[Y | x1, x2] of the interaction polynomial, slots (const, x1, x2, x1*x2)."""
    a = _require_polynomial(poly)
    return PolyPredictor(
        const=a[2] * mu3,
        lin_a=a[0] + a[4] * mu3,
        lin_b=a[1] + a[5] * mu3,
        cross=a[3] + a[6] * mu3,
    )


def analytic_target_predictor(poly: GeneratingFunction, mu1: float) -> PolyPredictor:
    """Exact E[Y | x2, x3] of the interaction polynomial, slots (const, x2, x3, x2*x3)."""
    a = _require_polynomial(poly)
    return PolyPredictor(
        const=a[0] * mu1,
        lin_a=a[1] + a[3] * mu1,
        lin_b=a[2] + a[4] * mu1,
        cross=a[5] + a[6] * mu1,
    )


def dataset_to_csv_string(data: EnvironmentDataset) -> str:
    buf = io.StringIO()
    header = list(data.names) + (["Y"] if data.target is not None else [])
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    mat = data.covariates if data.target is None else np.column_stack(
        [data.covariates, data.target]
    )
    for row in mat:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def save_function_json(func: GeneratingFunction, path) -> None:
    with open(path, "w") as fh:
        json.dump(func.to_dict(), fh, indent=2)


def load_function_json(path) -> GeneratingFunction:
    with open(path) as fh:
        return GeneratingFunction.from_dict(json.load(fh))
