"""Comparison predictors: Optimal, Marginal, FineTune, and the naive
additive model that assumes no interactions between covariates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError
from .regressor import FeedforwardRegressor, LossSpec, TrainConfig, train
from .scm import EnvironmentDataset


@dataclass(frozen=True)
class MarginalBaseline:
    """Pool average of the source model; ignores the new covariate entirely."""

    tag = "marginal"
    source: object
    pool: np.ndarray

    def __post_init__(self):
        pool = np.asarray(self.pool, dtype=np.float64).ravel()
        if pool.size < 1:
            raise ValueError("need a non-empty pool")
        pool.setflags(write=False)
        object.__setattr__(self, "pool", pool)

    def __call__(self, x2, x3=None):
        x2 = np.atleast_1d(np.asarray(x2, dtype=np.float64))
        if x3 is not None:
            x2, _ = np.broadcast_arrays(x2, np.atleast_1d(np.asarray(x3)))
        flat = x2.ravel()
        uniq, inverse = np.unique(flat, return_inverse=True)
        n = self.pool.size
        x1_rep = np.tile(self.pool, uniq.size)
        x2_rep = np.repeat(uniq, n)
        means = np.asarray(self.source(x1_rep, x2_rep)).reshape(uniq.size, n).mean(axis=1)
        return means[inverse].reshape(x2.shape)

    def predict_grid(self, x2_values, x3_values) -> np.ndarray:
        col = self(np.asarray(x2_values, dtype=np.float64))
        return np.repeat(col[:, None], len(np.atleast_1d(x3_values)), axis=1)


def marginal_baseline(f_s, pool) -> MarginalBaseline:
    return MarginalBaseline(source=f_s, pool=np.asarray(pool, dtype=np.float64))


@dataclass(frozen=True)
class FineTuneBaseline:
    """The source model reused verbatim with target covariates wired into its
    input slots (step zero of fine-tuning, no weight updates)."""

    tag = "finetune"
    source: object
    slot_names: tuple[str, ...]

    def __post_init__(self):
        if sorted(self.slot_names) != ["X2", "X3"]:
            raise ValueError(
                "slot mapping must assign each source input one of X2/X3, got "
                f"{self.slot_names}"
            )

    def __call__(self, x2, x3):
        by_name = {"X2": x2, "X3": x3}
        a, b = (by_name[n] for n in self.slot_names)
        return self.source(a, b)

    def predict_grid(self, x2_values, x3_values) -> np.ndarray:
        g2, g3 = np.meshgrid(x2_values, x3_values, indexing="ij")
        return np.asarray(self(g2, g3))


def finetune_baseline(f_s, mapping=("X3", "X2")) -> FineTuneBaseline:
    """mapping[i] names the target covariate fed into source input slot i.

    The default keeps the shared variable in its own slot and routes the new
    covariate into the slot the never-shared one used to occupy.
    """
    slot_names = tuple(mapping)
    if len(slot_names) != 2:
        raise ValueError("mapping must assign both source input slots")
    return FineTuneBaseline(source=f_s, slot_names=slot_names)


@dataclass(frozen=True)
class OptimalBaseline:
    """Regressor trained directly on target-environment joint data."""

    tag = "optimal"
    model: FeedforwardRegressor

    def __call__(self, x2, x3):
        return self.model(x2, x3)

    def predict_grid(self, x2_values, x3_values) -> np.ndarray:
        g2, g3 = np.meshgrid(x2_values, x3_values, indexing="ij")
        return np.asarray(self(g2, g3))


def optimal_baseline(target_joint: EnvironmentDataset, config: TrainConfig) -> OptimalBaseline:
    if target_joint.target is None:
        raise ValueError("optimal baseline needs outcome observations")
    x = target_joint.matrix(("X2", "X3"))
    model = train(x, target_joint.target, LossSpec("mean_squared"), config)
    return OptimalBaseline(model=model)


@dataclass(frozen=True)
class NaiveAdditiveBaseline:
    """Sum of per-covariate univariate fits with the double-counted level removed.

    Each univariate fit absorbs the full outcome mean, so a k-term sum
    subtracts (k - 1) times the pooled outcome mean.
    """

    tag = "naive_additive"
    fits: dict
    outcome_mean: float

    def predict_subset(self, names, columns) -> np.ndarray:
        names = tuple(names)
        mat = np.asarray(columns, dtype=np.float64)
        if mat.ndim == 1:
            mat = mat[:, None]
        if mat.shape[1] != len(names):
            raise ShapeMismatchError("column count must match the requested names")
        missing = [n for n in names if n not in self.fits]
        if missing:
            raise KeyError(f"no univariate fit for {missing}")
        total = np.zeros(mat.shape[0])
        for j, name in enumerate(names):
            total += self.fits[name].predict(mat[:, j][:, None])
        return total - (len(names) - 1) * self.outcome_mean

    def __call__(self, x2, x3):
        x2 = np.atleast_1d(np.asarray(x2, dtype=np.float64))
        x3 = np.atleast_1d(np.asarray(x3, dtype=np.float64))
        x2, x3 = np.broadcast_arrays(x2, x3)
        out = self.predict_subset(("X2", "X3"), np.column_stack([x2.ravel(), x3.ravel()]))
        return out.reshape(x2.shape)

    def predict_grid(self, x2_values, x3_values) -> np.ndarray:
        g2, g3 = np.meshgrid(x2_values, x3_values, indexing="ij")
        return np.asarray(self(g2, g3))


def naive_additive(pair_datasets: dict, config: TrainConfig) -> NaiveAdditiveBaseline:
    """Train one univariate regressor per (covariate, outcome) dataset.

    pair_datasets maps a variable name to an EnvironmentDataset holding that
    single covariate column and the outcome.
    """
    if not pair_datasets:
        raise ValueError("need at least one covariate pair dataset")
    fits = {}
    target_chunks = []
    for name, data in pair_datasets.items():
        if data.target is None:
            raise ValueError(f"pair dataset for {name!r} lacks the outcome column")
        if data.n_rows == 0:
            raise ValueError(f"pair dataset for {name!r} is empty")
        fits[name] = train(
            data.column(name)[:, None], data.target, LossSpec("mean_squared"), config
        )
        target_chunks.append(data.target)
    outcome_mean = float(np.concatenate(target_chunks).mean())
    return NaiveAdditiveBaseline(fits=fits, outcome_mean=outcome_mean)
