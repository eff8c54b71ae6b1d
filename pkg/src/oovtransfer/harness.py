"""Benchmark orchestration: per (function class, seed) cell it draws an SCM,
trains every method, scores noiseless grid error against a shared reference
target predictor, sweeps from-scratch sample budgets, and writes CSV reports.

The report CSV is a pure function of the configuration on one platform;
wall-clock runtimes live in the report object and a side file only.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .baselines import finetune_baseline, marginal_baseline, optimal_baseline
from .core import DerivativeModel, ZeroShotPredictor, build_predictor, fit_skew_derivative
from .errors import SkewDegenerateError
from .moments import central_moments
from .regressor import LossSpec, TrainConfig, train
from .scm import (
    NONLINEAR_NORM,
    POLYNOMIAL,
    TRIGONOMETRIC,
    EnvironmentDataset,
    GeneratingFunction,
    ScmConfig,
    StandardizationTransform,
    analytic_target_predictor,
    eval_function,
    project_environment,
    random_function,
    sample_joint,
)

ALL_CLASSES = (POLYNOMIAL, NONLINEAR_NORM, TRIGONOMETRIC)
_CLASS_ALIASES = {
    "polynomial": POLYNOMIAL,
    "poly": POLYNOMIAL,
    "nonlinear": NONLINEAR_NORM,
    "nonlinear_norm": NONLINEAR_NORM,
    "trigonometric": TRIGONOMETRIC,
    "trig": TRIGONOMETRIC,
}

METHODS = ("proposed", "optimal", "marginal", "finetune")

# Epoch cap for tiny-budget from-scratch models when equalizing gradient steps.
_MAX_SCALED_EPOCHS = 5000


def normalize_classes(classes) -> tuple[str, ...]:
    if isinstance(classes, str):
        classes = [classes]
    out = []
    for c in classes:
        key = str(c).lower()
        if key == "all":
            return ALL_CLASSES
        if key not in _CLASS_ALIASES:
            raise ValueError(f"unknown function class {c!r}")
        out.append(_CLASS_ALIASES[key])
    return tuple(out)


@dataclass(frozen=True)
class ExperimentConfig:
    classes: tuple[str, ...] = ALL_CLASSES
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    source_size: int = 100_000
    target_cov_size: int = 50
    pool_size: int = 1000
    budgets: tuple[int, ...] = (10, 100, 1000, 10_000)
    scm: ScmConfig = ScmConfig()
    source_train: TrainConfig = TrainConfig()
    derivative_train: TrainConfig = TrainConfig()
    optimal_train: TrainConfig = TrainConfig()
    scratch_train: TrainConfig = TrainConfig()
    grid_resolution: int = 50
    reference_draws: int = 1_000_000

    def __post_init__(self):
        object.__setattr__(self, "classes", normalize_classes(self.classes))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ValueError("need at least one seed")
        for name in ("source_size", "target_cov_size", "pool_size", "grid_resolution"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if any(b < 1 for b in self.budgets):
            raise ValueError("budgets must be >= 1")
        if self.budgets and max(self.budgets) > self.source_size:
            raise ValueError("largest budget cannot exceed the joint sample size")

    def grid_axis(self) -> np.ndarray:
        return np.linspace(self.scm.standard_lo, self.scm.standard_hi, self.grid_resolution)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "scm" in d:
            d["scm"] = ScmConfig.from_dict(d["scm"])
        for key in ("source_train", "derivative_train", "optimal_train", "scratch_train"):
            if key in d:
                d[key] = TrainConfig.from_dict(d[key])
        for key in ("classes", "seeds", "budgets"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass
class ReportRow:
    function_class: str
    seed: int
    method: str
    budget: int | None
    loss: float
    pct_loss: float
    flag: str = ""


@dataclass
class EvaluationReport:
    config: ExperimentConfig
    rows: list[ReportRow] = field(default_factory=list)
    moment_errors: dict = field(default_factory=dict)
    runtimes: dict = field(default_factory=dict)

    @property
    def excluded_cells(self) -> int:
        return len({(r.function_class, r.seed) for r in self.rows if r.flag})

    def cell_loss(self, function_class: str, seed: int, method: str) -> float:
        for r in self.rows:
            if (
                r.function_class == function_class
                and r.seed == seed
                and r.method == method
                and r.budget is None
            ):
                return r.loss
        raise KeyError((function_class, seed, method))

    def median_loss(self, function_class: str, method: str) -> float:
        vals = [
            r.loss
            for r in self.rows
            if r.function_class == function_class
            and r.method == method
            and r.budget is None
            and not r.flag
            and math.isfinite(r.loss)
        ]
        if not vals:
            raise ValueError(f"no unflagged cells for ({function_class}, {method})")
        return float(np.median(vals))

    def median_pct_loss(self, function_class: str, method: str, budget: int) -> float:
        vals = [
            r.pct_loss
            for r in self.rows
            if r.function_class == function_class
            and r.method == method
            and r.budget == budget
            and not r.flag
            and math.isfinite(r.pct_loss)
        ]
        if not vals:
            raise ValueError(f"no unflagged cells for ({function_class}, {method}, {budget})")
        return float(np.median(vals))

    def aggregate_pct_loss(self, method: str, budget: int) -> dict:
        """Unweighted mean over classes of the per-class medians, with the
        inter-seed min/max spread pooled across classes."""
        medians = [
            self.median_pct_loss(c, method, budget) for c in self.config.classes
        ]
        spread = [
            r.pct_loss
            for r in self.rows
            if r.method == method and r.budget == budget and not r.flag
        ]
        return {
            "mean_of_medians": float(np.mean(medians)),
            "min": float(np.min(spread)),
            "max": float(np.max(spread)),
            "excluded_cells": self.excluded_cells,
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["class", "seed", "method", "budget", "loss", "pct_loss", "flags"])
            for r in self.rows:
                writer.writerow(
                    [
                        r.function_class,
                        r.seed,
                        r.method,
                        "" if r.budget is None else r.budget,
                        repr(float(r.loss)),
                        "" if math.isnan(r.pct_loss) else repr(float(r.pct_loss)),
                        r.flag,
                    ]
                )

    def moment_errors_to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["class", "seed", "mu3", "mu3_se", "k3", "k3_se"])
            for (cls_name, seed), d in sorted(self.moment_errors.items()):
                writer.writerow(
                    [cls_name, seed] + [repr(float(d[k])) for k in ("mu3", "mu3_se", "k3", "k3_se")]
                )

    def runtimes_to_json(self, path) -> None:
        payload = {f"{c}/{s}": t for (c, s), t in sorted(self.runtimes.items())}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)


def percentage_loss(loss_m: float, loss_o: float) -> float:
    """Relative regret of a method versus from-scratch training."""
    if loss_o <= 0:
        raise ZeroDivisionError("from-scratch reference loss must be positive")
    return (loss_m - loss_o) / loss_o


def _substream(seed: int, class_index: int, role: int):
    return np.random.SeedSequence(entropy=(int(seed), int(class_index), int(role)))


_ROLE_ALPHA = 0
_ROLE_SOURCE = 1
_ROLE_TARGET = 2
_ROLE_JOINT = 3
_ROLE_POOL = 4
_ROLE_REFERENCE = 5


def reference_target_grid(
    func: GeneratingFunction,
    transform: StandardizationTransform,
    scm: ScmConfig,
    x2_values,
    x3_values,
    draws: int,
    seed,
) -> np.ndarray:
    """Noiseless optimal target predictor on the grid: E_X1[phi(X1, x2, x3)].

    Closed form for the polynomial class; Monte-Carlo marginalization over
    standardized covariate draws otherwise.
    """
    x2_values = np.asarray(x2_values, dtype=np.float64)
    x3_values = np.asarray(x3_values, dtype=np.float64)
    if func.variant == POLYNOMIAL:
        mu1 = transform.apply_scalar("X1", scm.gamma_shape * scm.gamma_scale)
        pred = analytic_target_predictor(func, mu1)
        g2, g3 = np.meshgrid(x2_values, x3_values, indexing="ij")
        return np.asarray(pred(g2, g3))
    rng = np.random.default_rng(seed)
    raw = rng.gamma(scm.gamma_shape, scm.gamma_scale, size=draws)
    x1 = transform.offsets[0] + transform.scales[0] * raw
    if func.variant == TRIGONOMETRIC:
        a = func.coeffs
        mean_cos_x1 = float(np.mean(np.cos(x1)))
        mean_cos_cross = np.array([np.mean(np.cos(x1 * x3)) for x3 in x3_values])
        base = a[0] * mean_cos_x1 + a[1] * np.sin(x2_values)[:, None]
        return base + a[2] * np.cos(x3_values)[None, :] + a[3] * mean_cos_cross[None, :]
    out = np.zeros((x2_values.size, x3_values.size))
    chunk = 200_000
    for start in range(0, draws, chunk):
        part = x1[start : start + chunk]
        for i, x2 in enumerate(x2_values):
            vals = eval_function(
                func,
                part[None, :],
                np.full((x3_values.size, 1), x2),
                x3_values[:, None],
            )
            out[i] += vals.sum(axis=1)
    return out / draws


def grid_mse(pred_grid: np.ndarray, ref_grid: np.ndarray) -> float:
    return float(np.mean((np.asarray(pred_grid) - np.asarray(ref_grid)) ** 2))


def _scaled_epochs(base: TrainConfig, rows: int, reference_rows: int) -> int:
    steps_ref = base.epochs * max(1, math.ceil(reference_rows / base.batch_size))
    batches = max(1, math.ceil(rows / base.batch_size))
    return min(_MAX_SCALED_EPOCHS, max(1, round(steps_ref / batches)))


@dataclass
class CellArtifacts:
    """Everything run_benchmark built for one (class, seed) cell."""

    function: GeneratingFunction
    transform: StandardizationTransform
    source_env: EnvironmentDataset
    target_env: EnvironmentDataset
    optimal_env: EnvironmentDataset
    f_s: object
    derivative: DerivativeModel | None
    proposed: ZeroShotPredictor | None
    baselines: dict
    reference: np.ndarray
    flag: str = ""


def run_cell(config: ExperimentConfig, function_class: str, seed: int) -> CellArtifacts:
    """Generate data and fit all methods for one benchmark cell."""
    class_index = ALL_CLASSES.index(function_class)
    rng_alpha = np.random.default_rng(_substream(seed, class_index, _ROLE_ALPHA))
    func = random_function(function_class, rng_alpha)

    joint, transform = sample_joint(
        config.scm, func, config.source_size, seed=_substream(seed, class_index, _ROLE_SOURCE)
    )
    source_env = project_environment(joint, ("X1", "X2"), include_target=True)

    target_joint, _ = sample_joint(
        config.scm,
        func,
        config.target_cov_size,
        transform=transform,
        seed=_substream(seed, class_index, _ROLE_TARGET),
    )
    target_env = project_environment(target_joint, ("X2", "X3"), include_target=False)

    f_s = train(
        source_env.matrix(("X1", "X2")),
        source_env.target,
        LossSpec("mean_squared"),
        config.source_train,
    )

    pool_seed = _substream(seed, class_index, _ROLE_POOL)
    pool = np.random.default_rng(pool_seed).choice(
        source_env.column("X1"), size=config.pool_size, replace=True
    )

    x3_moments = central_moments(target_env.column("X3"), max_order=3)
    flag = ""
    derivative = None
    proposed = None
    try:
        derivative = fit_skew_derivative(source_env, f_s, x3_moments, config.derivative_train)
        proposed = ZeroShotPredictor(source=f_s, derivative=derivative, pool=pool)
    except SkewDegenerateError:
        flag = "skew_degenerate"

    optimal_joint, _ = sample_joint(
        config.scm,
        func,
        config.source_size,
        transform=transform,
        seed=_substream(seed, class_index, _ROLE_JOINT),
    )
    optimal_env = project_environment(optimal_joint, ("X2", "X3"), include_target=True)

    baselines = {
        "marginal": marginal_baseline(f_s, pool),
        "finetune": finetune_baseline(f_s),
        "optimal": optimal_baseline(optimal_env, config.optimal_train),
    }

    axis = config.grid_axis()
    reference = reference_target_grid(
        func,
        transform,
        config.scm,
        axis,
        axis,
        config.reference_draws,
        _substream(seed, class_index, _ROLE_REFERENCE),
    )
    return CellArtifacts(
        function=func,
        transform=transform,
        source_env=source_env,
        target_env=target_env,
        optimal_env=optimal_env,
        f_s=f_s,
        derivative=derivative,
        proposed=proposed,
        baselines=baselines,
        reference=reference,
        flag=flag,
    )


def run_benchmark(config: ExperimentConfig) -> EvaluationReport:
    report = EvaluationReport(config=config)
    axis = config.grid_axis()
    for function_class in config.classes:
        for seed in config.seeds:
            started = time.perf_counter()
            cell = run_cell(config, function_class, seed)

            x3 = cell.target_env.column("X3")
            mom6 = central_moments(x3, max_order=6)
            n = mom6.count
            report.moment_errors[(function_class, seed)] = {
                "mu3": mom6.mean,
                "mu3_se": math.sqrt(mom6.m2 / n),
                "k3": mom6.m3,
                "k3_se": math.sqrt(max(mom6.m6 - mom6.m3**2, 0.0) / n),
            }

            losses = {}
            for method in METHODS:
                if method == "proposed":
                    if cell.proposed is None:
                        losses[method] = float("nan")
                        continue
                    grid = cell.proposed.predict_grid(axis, axis)
                else:
                    grid = cell.baselines[method].predict_grid(axis, axis)
                losses[method] = grid_mse(grid, cell.reference)

            scratch_losses = {}
            for budget in config.budgets:
                rows = cell.optimal_env
                sub = EnvironmentDataset(
                    rows.names, rows.covariates[:budget], rows.target[:budget]
                )
                cfg = config.scratch_train
                epochs = _scaled_epochs(
                    cfg, budget, max(config.budgets) if config.budgets else budget
                )
                scratch_cfg = TrainConfig(
                    learning_rate=cfg.learning_rate,
                    epochs=epochs,
                    batch_size=cfg.batch_size,
                    init_scale=cfg.init_scale,
                    seed=cfg.seed,
                    momentum=cfg.momentum,
                    clip_threshold=cfg.clip_threshold,
                    hidden=cfg.hidden,
                )
                scratch = optimal_baseline(sub, scratch_cfg)
                scratch_losses[budget] = grid_mse(
                    scratch.predict_grid(axis, axis), cell.reference
                )

            for method in METHODS:
                flag = cell.flag if method == "proposed" else ""
                report.rows.append(
                    ReportRow(function_class, seed, method, None, losses[method], float("nan"), flag)
                )
                for budget in config.budgets:
                    pct = (
                        float("nan")
                        if math.isnan(losses[method])
                        else percentage_loss(losses[method], scratch_losses[budget])
                    )
                    report.rows.append(
                        ReportRow(function_class, seed, method, budget, losses[method], pct, flag)
                    )
            for budget in config.budgets:
                report.rows.append(
                    ReportRow(
                        function_class, seed, "scratch", budget, scratch_losses[budget], 0.0, ""
                    )
                )
            report.runtimes[(function_class, seed)] = time.perf_counter() - started
    return report


def contour_grid(predictor, x2_range, x3_range, resolution: int, path) -> np.ndarray:
    """Evaluate a predictor on the Cartesian grid and write it as CSV.

    First row holds the x3 axis, first column the x2 axis; cell (i, j) is the
    prediction at (x2_i, x3_j).
    """
    if resolution < 2:
        raise ValueError("need at least 2 points per axis")
    x2_values = np.linspace(float(x2_range[0]), float(x2_range[1]), resolution)
    x3_values = np.linspace(float(x3_range[0]), float(x3_range[1]), resolution)
    if hasattr(predictor, "predict_grid"):
        grid = np.asarray(predictor.predict_grid(x2_values, x3_values))
    else:
        g2, g3 = np.meshgrid(x2_values, x3_values, indexing="ij")
        grid = np.asarray(predictor(g2, g3))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x2/x3"] + [repr(float(v)) for v in x3_values])
        for i, x2 in enumerate(x2_values):
            writer.writerow([repr(float(x2))] + [repr(float(v)) for v in grid[i]])
    return grid
