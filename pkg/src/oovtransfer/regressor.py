"""Minimal feedforward regressor trained by minibatch SGD with momentum.

Two rectified-linear hidden layers, identity output, gradients computed by
hand. Supports the plain mean-squared objective and the cubed-residual
objective mean((z - k3 * h(x)^3)^2) used to fit derivative surrogates from
residual third moments. The SGD loop is shared with the joint two-network
fits of the extensions, which supply their own per-sample output gradients.

Inputs and (for the mean-squared loss) targets are affinely normalized
inside train(); the normalization is folded into the returned model so the
stated objective is optimized exactly in original units.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import CheckpointFormatError, DivergenceError, ShapeMismatchError

MEAN_SQUARED = "mean_squared"
CUBED_RESIDUAL = "cubed_residual"


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings. init_scale None means Glorot uniform limits.

    precision selects the internal SGD dtype; returned models always carry
    float64 parameters, and runs are deterministic per seed either way.
    """

    learning_rate: float = 1e-3
    epochs: int = 200
    batch_size: int = 256
    init_scale: float | None = None
    seed: int = 0
    momentum: float = 0.9
    clip_threshold: float | None = 10.0
    hidden: tuple[int, int] = (64, 64)
    precision: str = "float32"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 1:
            raise ValueError("need at least 1 epoch")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden widths must be >= 1")
        if self.precision not in ("float32", "float64"):
            raise ValueError("precision must be float32 or float64")

    @property
    def dtype(self):
        return np.float32 if self.precision == "float32" else np.float64

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "init_scale": self.init_scale,
            "seed": self.seed,
            "momentum": self.momentum,
            "clip_threshold": self.clip_threshold,
            "hidden": list(self.hidden),
            "precision": self.precision,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "hidden" in d:
            d["hidden"] = tuple(d["hidden"])
        return cls(**d)


@dataclass(frozen=True)
class LossSpec:
    """Training objective tag; k3 is the skew multiplier of the cubed loss."""

    kind: str
    k3: float | None = None

    def __post_init__(self):
        if self.kind not in (MEAN_SQUARED, CUBED_RESIDUAL):
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.kind == CUBED_RESIDUAL:
            if self.k3 is None or not math.isfinite(self.k3) or self.k3 == 0.0:
                raise ValueError("cubed-residual loss needs a finite nonzero k3")


class FeedforwardRegressor:
    """Immutable fully-connected network with folded affine input/output maps.

    prediction(x) = out_offset + out_scale * net((x - in_offset) / in_scale)
    """

    def __init__(
        self,
        weights,
        biases,
        *,
        input_offset=None,
        input_scale=None,
        output_offset: float = 0.0,
        output_scale: float = 1.0,
        loss_history=None,
    ):
        weights = [np.array(w, dtype=np.float64) for w in weights]
        biases = [np.array(b, dtype=np.float64).ravel() for b in biases]
        if len(weights) != len(biases) or not weights:
            raise ShapeMismatchError("need matching non-empty weight/bias lists")
        for layer, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or b.shape[0] != w.shape[1]:
                raise ShapeMismatchError(f"layer {layer}: bias does not match weight columns")
            if layer > 0 and w.shape[0] != weights[layer - 1].shape[1]:
                raise ShapeMismatchError(f"layer {layer}: widths do not chain")
        if weights[-1].shape[1] != 1:
            raise ShapeMismatchError("output layer must have width 1")
        if not all(np.all(np.isfinite(w)) for w in weights) or not all(
            np.all(np.isfinite(b)) for b in biases
        ):
            raise DivergenceError("non-finite parameters")
        d_in = weights[0].shape[0]
        self._weights = weights
        self._biases = biases
        self.input_offset = (
            np.zeros(d_in) if input_offset is None else np.asarray(input_offset, dtype=np.float64)
        )
        self.input_scale = (
            np.ones(d_in) if input_scale is None else np.asarray(input_scale, dtype=np.float64)
        )
        if self.input_offset.shape != (d_in,) or self.input_scale.shape != (d_in,):
            raise ShapeMismatchError("input normalization must match input width")
        self.output_offset = float(output_offset)
        self.output_scale = float(output_scale)
        self.loss_history = None if loss_history is None else list(loss_history)
        for w in self._weights:
            w.setflags(write=False)
        for b in self._biases:
            b.setflags(write=False)

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(w.shape[0] for w in self._weights) + (1,)

    @property
    def input_width(self) -> int:
        return self._weights[0].shape[0]

    @property
    def weights(self):
        return list(self._weights)

    @property
    def biases(self):
        return list(self._biases)

    def _as_matrix(self, inputs) -> np.ndarray:
        x = np.asarray(inputs, dtype=np.float64)
        if x.ndim == 1:
            if self.input_width == 1:
                x = x[:, None]
            else:
                raise ShapeMismatchError(
                    f"model expects {self.input_width} input columns, got 1-d input"
                )
        if x.ndim != 2 or x.shape[1] != self.input_width:
            raise ShapeMismatchError(
                f"model expects {self.input_width} input columns, got shape {x.shape}"
            )
        return x

    def predict(self, inputs) -> np.ndarray:
        """Deterministic forward pass over a (rows, input_width) matrix."""
        x = self._as_matrix(inputs)
        xn = (x - self.input_offset) / self.input_scale
        out, _ = _forward(self._weights, self._biases, xn)
        return self.output_offset + self.output_scale * out

    def __call__(self, a, b=None):
        """Convenience bivariate/univariate call with broadcasting scalars."""
        if b is None:
            return self.predict(np.atleast_1d(np.asarray(a, dtype=np.float64)))
        a = np.atleast_1d(np.asarray(a, dtype=np.float64))
        bb = np.atleast_1d(np.asarray(b, dtype=np.float64))
        a, bb = np.broadcast_arrays(a, bb)
        out = self.predict(np.column_stack([a.ravel(), bb.ravel()]))
        return out.reshape(a.shape)

    def to_dict(self) -> dict:
        return {
            "widths": list(self.widths),
            "weights": [w.ravel().tolist() for w in self._weights],
            "biases": [b.tolist() for b in self._biases],
            "input_offset": self.input_offset.tolist(),
            "input_scale": self.input_scale.tolist(),
            "output_offset": self.output_offset,
            "output_scale": self.output_scale,
        }

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_dict(cls, d: dict) -> "FeedforwardRegressor":
        try:
            widths = [int(w) for w in d["widths"]]
            raw_w = d["weights"]
            raw_b = d["biases"]
        except (KeyError, TypeError) as exc:
            raise CheckpointFormatError(f"missing checkpoint field: {exc}") from exc
        if len(widths) < 2 or len(raw_w) != len(widths) - 1 or len(raw_b) != len(widths) - 1:
            raise CheckpointFormatError("layer counts inconsistent with widths")
        weights, biases = [], []
        for layer, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
            w = np.asarray(raw_w[layer], dtype=np.float64)
            b = np.asarray(raw_b[layer], dtype=np.float64)
            if w.size != fan_in * fan_out:
                raise CheckpointFormatError(
                    f"layer {layer}: expected {fan_in * fan_out} weights, got {w.size}"
                )
            if b.size != fan_out:
                raise CheckpointFormatError(
                    f"layer {layer}: expected {fan_out} biases, got {b.size}"
                )
            weights.append(w.reshape(fan_in, fan_out))
            biases.append(b)
        try:
            return cls(
                weights,
                biases,
                input_offset=d.get("input_offset"),
                input_scale=d.get("input_scale"),
                output_offset=d.get("output_offset", 0.0),
                output_scale=d.get("output_scale", 1.0),
            )
        except ShapeMismatchError as exc:
            raise CheckpointFormatError(str(exc)) from exc

    @classmethod
    def load_json(cls, path) -> "FeedforwardRegressor":
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise CheckpointFormatError(f"not valid JSON: {exc}") from exc
        return cls.from_dict(d)


def _forward(weights, biases, xn):
    """Forward pass on normalized inputs; returns (output (n,), caches)."""
    act = xn
    pre = []
    acts = [xn]
    last = len(weights) - 1
    for layer, (w, b) in enumerate(zip(weights, biases)):
        z = act @ w + b
        pre.append(z)
        act = z if layer == last else np.maximum(z, 0.0)
        acts.append(act)
    return act[:, 0], (pre, acts)


def _backward(weights, caches, dout):
    """Gradients of a scalar loss given dL/d(output) per sample."""
    pre, acts = caches
    dz = dout[:, None]
    grads_w = [None] * len(weights)
    grads_b = [None] * len(weights)
    for layer in range(len(weights) - 1, -1, -1):
        grads_w[layer] = acts[layer].T @ dz
        grads_b[layer] = dz.sum(axis=0)
        if layer > 0:
            da = dz @ weights[layer].T
            dz = da * (pre[layer - 1] > 0.0)
    return grads_w, grads_b


def _init_params(widths, rng, init_scale, dtype=np.float64):
    # Hidden layers get scale-preserving uniform draws; the output layer
    # starts at zero so the initial prediction is exactly the output offset.
    weights, biases = [], []
    n_layers = len(widths) - 1
    for layer, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        limit = math.sqrt(6.0 / (fan_in + fan_out)) if init_scale is None else init_scale
        if layer == n_layers - 1:
            weights.append(np.zeros((fan_in, fan_out), dtype=dtype))
        else:
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))
    return weights, biases


def _clip_gradients(grads_w, grads_b, threshold):
    if threshold is None:
        return
    total = 0.0
    for g in grads_w:
        total += float(np.sum(g * g))
    for g in grads_b:
        total += float(np.sum(g * g))
    norm = math.sqrt(total)
    if norm > threshold:
        factor = threshold / norm
        for g in grads_w:
            g *= factor
        for g in grads_b:
            g *= factor


def sgd_fit(param_sets, inputs_normalized, grad_fn, config: TrainConfig, rng):
    """Minibatch SGD with momentum over one or more networks sharing samples.

    grad_fn(outputs, batch_index) must return (batch loss, per-net dL/dout
    arrays); outputs are the raw network outputs on the batch. Mutates the
    parameter arrays in place and returns the per-epoch loss history.
    """
    n = inputs_normalized.shape[0]
    batch = min(config.batch_size, n)
    velocities = [
        ([np.zeros_like(w) for w in ws], [np.zeros_like(b) for b in bs])
        for ws, bs in param_sets
    ]
    history = []
    for _ in range(config.epochs):
        perm = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, batch):
            idx = perm[start : start + batch]
            xb = inputs_normalized[idx]
            outs = []
            caches = []
            for ws, bs in param_sets:
                out, cache = _forward(ws, bs, xb)
                outs.append(out)
                caches.append(cache)
            loss, douts = grad_fn(outs, idx)
            if not math.isfinite(loss):
                raise DivergenceError(
                    "training loss became non-finite; lower the learning rate"
                )
            loss_sum += loss * idx.size
            for k, (ws, bs) in enumerate(param_sets):
                gw, gb = _backward(ws, caches[k], douts[k])
                _clip_gradients(gw, gb, config.clip_threshold)
                vw, vb = velocities[k]
                for j in range(len(ws)):
                    vw[j] *= config.momentum
                    vw[j] -= config.learning_rate * gw[j]
                    ws[j] += vw[j]
                    vb[j] *= config.momentum
                    vb[j] -= config.learning_rate * gb[j]
                    bs[j] += vb[j]
        history.append(loss_sum / n)
        for ws, bs in param_sets:
            if not all(np.all(np.isfinite(w)) for w in ws) or not all(
                np.all(np.isfinite(b)) for b in bs
            ):
                raise DivergenceError("parameters became non-finite during training")
    return history


def normalization_from_inputs(x):
    """Column mean/std pair guarding against constant columns."""
    offset = x.mean(axis=0)
    scale = x.std(axis=0)
    scale = np.where(scale > 1e-12, scale, 1.0)
    return offset, scale


def train(inputs, targets, loss: LossSpec, config: TrainConfig) -> FeedforwardRegressor:
    """Fit a two-hidden-layer regressor to (inputs, targets) under the loss spec.

    For the cubed-residual loss the network output h enters the objective as
    k3 * h^3, so the output map stays identity apart from a cube-root warm
    offset; the mean-squared loss trains in standardized target units.
    """
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(targets, dtype=np.float64).ravel()
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ShapeMismatchError("inputs rows must equal targets length")
    if x.shape[0] < 1:
        raise ShapeMismatchError("need at least one training row")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("training data must be finite")

    in_off, in_scale = normalization_from_inputs(x)
    dtype = config.dtype
    xn = ((x - in_off) / in_scale).astype(dtype)
    yt = y.astype(dtype)
    widths = (x.shape[1], *config.hidden, 1)
    rng = np.random.default_rng(config.seed)
    ws, bs = _init_params(widths, rng, config.init_scale, dtype)

    if loss.kind == MEAN_SQUARED:
        out_off = float(y.mean())
        out_scale = float(y.std())
        if out_scale <= 1e-12:
            out_scale = 1.0
        off_t, scale_t = dtype(out_off), dtype(out_scale)

        def grad_fn(outs, idx):
            pred = off_t + scale_t * outs[0]
            r = pred - yt[idx]
            batch_loss = float(np.mean(r * r))
            dout = (2.0 * out_scale / idx.size) * r
            return batch_loss, [dout.astype(dtype)]

    else:
        k3 = float(loss.k3)
        out_off = float(np.cbrt(np.mean(y) / k3))
        out_scale = 1.0
        off_t = dtype(out_off)

        def grad_fn(outs, idx):
            h = off_t + outs[0]
            r = yt[idx] - dtype(k3) * h**3
            batch_loss = float(np.mean(r * r))
            dout = (-6.0 * k3 / idx.size) * (h * h) * r
            return batch_loss, [dout.astype(dtype)]

    history = sgd_fit([(ws, bs)], xn, grad_fn, config, rng)
    return FeedforwardRegressor(
        ws,
        bs,
        input_offset=in_off,
        input_scale=in_scale,
        output_offset=out_off,
        output_scale=out_scale,
        loss_history=history,
    )


def predict(model: FeedforwardRegressor, inputs) -> np.ndarray:
    return model.predict(inputs)


def evaluate_loss(model: FeedforwardRegressor, loss: LossSpec, inputs, targets) -> float:
    """The training objective of `loss` evaluated at the model's parameters."""
    pred = model.predict(inputs)
    y = np.asarray(targets, dtype=np.float64).ravel()
    if pred.shape != y.shape:
        raise ShapeMismatchError("inputs rows must equal targets length")
    if loss.kind == MEAN_SQUARED:
        return float(np.mean((y - pred) ** 2))
    return float(np.mean((y - loss.k3 * pred**3) ** 2))


def gradient_check(model: FeedforwardRegressor, loss: LossSpec, batch) -> float:
    """Max relative gap between analytic and central finite-difference gradients.

    Perturbs every raw parameter entry with step 1e-5; intended for small
    networks. Near-zero gradient pairs compare on an absolute scale.
    """
    x_raw, y = batch
    x = model._as_matrix(np.asarray(x_raw, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape[0] != y.shape[0] or x.shape[0] == 0:
        raise ShapeMismatchError("batch must be non-empty with matching lengths")
    xn = (x - model.input_offset) / model.input_scale
    ws = [w.copy() for w in model.weights]
    bs = [b.copy() for b in model.biases]

    def batch_loss(out):
        pred = model.output_offset + model.output_scale * out
        if loss.kind == MEAN_SQUARED:
            return float(np.mean((y - pred) ** 2))
        return float(np.mean((y - loss.k3 * pred**3) ** 2))

    out, caches = _forward(ws, bs, xn)
    pred = model.output_offset + model.output_scale * out
    if loss.kind == MEAN_SQUARED:
        dout = (2.0 * model.output_scale / y.size) * (pred - y)
    else:
        dout = (-6.0 * loss.k3 * model.output_scale / y.size) * (pred * pred) * (
            y - loss.k3 * pred**3
        )
    grads_w, grads_b = _backward(ws, caches, dout)

    step = 1e-5
    worst = 0.0
    for arrays, grads in ((ws, grads_w), (bs, grads_b)):
        for arr, grad in zip(arrays, grads):
            flat = arr.ravel()
            gflat = grad.ravel()
            for i in range(flat.size):
                saved = flat[i]
                flat[i] = saved + step
                up = batch_loss(_forward(ws, bs, xn)[0])
                flat[i] = saved - step
                down = batch_loss(_forward(ws, bs, xn)[0])
                flat[i] = saved
                fd = (up - down) / (2.0 * step)
                denom = max(abs(gflat[i]), abs(fd), 1e-6)
                worst = max(worst, abs(gflat[i] - fd) / denom)
    return worst
