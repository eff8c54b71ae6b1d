import json

import numpy as np
import pytest

from oovtransfer.errors import CheckpointFormatError, DivergenceError, ShapeMismatchError
from oovtransfer.regressor import (
    FeedforwardRegressor,
    LossSpec,
    TrainConfig,
    _backward,
    _forward,
    evaluate_loss,
    gradient_check,
    predict,
    train,
)

MSE = LossSpec("mean_squared")


def _small_random_model(seed, width_in=2, hidden=(4, 3)):
    rng = np.random.default_rng(seed)
    widths = (width_in, *hidden, 1)
    weights = [rng.normal(size=(a, b)) for a, b in zip(widths[:-1], widths[1:])]
    biases = [rng.normal(size=b) for b in widths[1:]]
    return FeedforwardRegressor(weights, biases)


# ------------------------------------------------------------------ train


def test_constant_targets():
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 5, size=(500, 2))
    y = np.full(500, 3.25)
    model = train(x, y, MSE, TrainConfig(epochs=50, seed=1))
    assert np.all(np.abs(model.predict(x) - 3.25) < 1e-2)


def test_linear_function_matches_least_squares():
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 5, size=(10_000, 2))
    y = 2.0 * x[:, 0] + 3.0 * x[:, 1]
    model = train(x, y, MSE, TrainConfig(epochs=150, seed=2))
    mse = float(np.mean((model.predict(x) - y) ** 2))
    assert mse < 1e-3
    # independent oracle: the exact least-squares fit of the same design is 0
    design = np.column_stack([np.ones(len(x)), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    exact = design @ coef
    assert float(np.mean((exact - y) ** 2)) < 1e-20
    assert mse < 1e-3 + float(np.mean((exact - y) ** 2))


def test_cubed_residual_recovers_cube_root_target():
    rng = np.random.default_rng(3)
    x = rng.uniform(0, 2, size=(20_000, 2))
    plant = x[:, 0] + x[:, 1]
    z = 2.0 * plant**3
    model = train(
        x, z, LossSpec("cubed_residual", k3=2.0), TrainConfig(epochs=250, seed=4)
    )
    mae = float(np.mean(np.abs(model.predict(x) - plant)))
    assert mae < 5e-2


def test_training_loss_tail_non_increasing_on_average():
    rng = np.random.default_rng(5)
    x = rng.uniform(0, 5, size=(5_000, 2))
    y = 2.0 * x[:, 0] + 3.0 * x[:, 1]
    model = train(x, y, MSE, TrainConfig(epochs=100, seed=6))
    hist = np.asarray(model.loss_history)
    assert np.all(np.isfinite(hist))
    tail = hist[-max(2, len(hist) // 10) :]
    assert np.mean(np.diff(tail)) <= 1e-6 + 1e-3 * abs(tail.mean())


def test_divergence_raises():
    rng = np.random.default_rng(7)
    x = rng.uniform(0, 5, size=(256, 2))
    y = 100.0 * x[:, 0]
    with pytest.raises(DivergenceError):
        train(x, y, MSE, TrainConfig(learning_rate=1e4, epochs=10, clip_threshold=None))


def test_train_shape_validation():
    with pytest.raises(ShapeMismatchError):
        train(np.ones((5, 2)), np.ones(4), MSE, TrainConfig(epochs=1))


def test_seed_determinism():
    rng = np.random.default_rng(8)
    x = rng.uniform(0, 5, size=(1_000, 2))
    y = x[:, 0] * x[:, 1]
    cfg = TrainConfig(epochs=5, seed=123)
    a = train(x, y, MSE, cfg)
    b = train(x, y, MSE, cfg)
    for wa, wb in zip(a.weights, b.weights):
        assert np.array_equal(wa, wb)
    for ba, bb in zip(a.biases, b.biases):
        assert np.array_equal(ba, bb)


# ---------------------------------------------------------------- predict


def test_zero_weights_return_output_bias():
    weights = [np.zeros((2, 4)), np.zeros((4, 1))]
    biases = [np.zeros(4), np.array([1.5])]
    model = FeedforwardRegressor(weights, biases)
    out = model.predict(np.random.default_rng(0).normal(size=(10, 2)))
    assert np.all(out == 1.5)


def test_predict_deterministic():
    model = _small_random_model(0)
    x = np.random.default_rng(1).normal(size=(20, 2))
    assert np.array_equal(model.predict(x), model.predict(x))


def test_hand_set_relu_unit():
    # one hidden unit computing w * max(0, x) + b
    w, b = 0.7, -0.2
    model = FeedforwardRegressor(
        [np.array([[1.0]]), np.array([[w]])], [np.zeros(1), np.array([b])]
    )
    grid = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    expected = w * np.maximum(grid, 0.0) + b
    assert np.allclose(model.predict(grid[:, None]), expected)
    assert np.allclose(predict(model, grid[:, None]), expected)


def test_predict_shape_mismatch():
    model = _small_random_model(2)
    with pytest.raises(ShapeMismatchError):
        model.predict(np.ones((4, 3)))


def test_weight_chain_validation():
    with pytest.raises(ShapeMismatchError):
        FeedforwardRegressor([np.ones((2, 3)), np.ones((4, 1))], [np.ones(3), np.ones(1)])
    with pytest.raises(ShapeMismatchError):
        FeedforwardRegressor([np.ones((2, 3)), np.ones((3, 2))], [np.ones(3), np.ones(2)])


# ---------------------------------------------------------- gradient check


@pytest.mark.parametrize("seed", range(5))
def test_gradient_check_mean_squared(seed):
    model = _small_random_model(seed)
    rng = np.random.default_rng(seed + 100)
    batch = (rng.normal(size=(8, 2)), rng.normal(size=8))
    assert gradient_check(model, MSE, batch) < 1e-4


@pytest.mark.parametrize("seed", range(5))
def test_gradient_check_cubed_residual(seed):
    model = _small_random_model(seed)
    rng = np.random.default_rng(seed + 200)
    batch = (rng.normal(size=(8, 2)), rng.normal(size=8))
    assert gradient_check(model, LossSpec("cubed_residual", k3=1.7), batch) < 1e-4


def test_zero_gradient_at_perfect_constant_fit():
    weights = [np.zeros((2, 4)), np.zeros((4, 1))]
    biases = [np.zeros(4), np.array([2.0])]
    model = FeedforwardRegressor(weights, biases)
    x = np.random.default_rng(0).normal(size=(16, 2))
    y = np.full(16, 2.0)
    out, caches = _forward(model.weights, model.biases, x)
    dout = (2.0 / 16) * (out - y)  # identity normalization here
    gw, gb = _backward(model.weights, caches, dout)
    worst = max(max(np.abs(g).max() for g in gw), max(np.abs(g).max() for g in gb))
    assert worst < 1e-8
    assert gradient_check(model, MSE, (x, y)) < 1e-4


def test_gradient_check_empty_batch_rejected():
    model = _small_random_model(3)
    with pytest.raises(ShapeMismatchError):
        gradient_check(model, MSE, (np.ones((0, 2)), np.ones(0)))


# ------------------------------------------------------------- loss specs


def test_loss_spec_validation():
    with pytest.raises(ValueError):
        LossSpec("cubed_residual")
    with pytest.raises(ValueError):
        LossSpec("cubed_residual", k3=0.0)
    with pytest.raises(ValueError):
        LossSpec("absolute")


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)


def test_evaluate_loss_matches_definitions():
    model = _small_random_model(4)
    rng = np.random.default_rng(5)
    x = rng.normal(size=(32, 2))
    y = rng.normal(size=32)
    pred = model.predict(x)
    assert evaluate_loss(model, MSE, x, y) == pytest.approx(np.mean((y - pred) ** 2))
    spec = LossSpec("cubed_residual", k3=2.0)
    assert evaluate_loss(model, spec, x, y) == pytest.approx(
        np.mean((y - 2.0 * pred**3) ** 2)
    )


# ------------------------------------------------------------- checkpoints


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(9)
    x = rng.uniform(0, 5, size=(500, 2))
    y = x[:, 0] + x[:, 1]
    model = train(x, y, MSE, TrainConfig(epochs=10, seed=10))
    path = tmp_path / "model.json"
    model.save_json(path)
    back = FeedforwardRegressor.load_json(path)
    assert back.widths == model.widths
    assert np.array_equal(back.predict(x), model.predict(x))


def test_checkpoint_rejects_inconsistent_shapes(tmp_path):
    model = _small_random_model(11)
    d = model.to_dict()
    d["widths"][1] += 1
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(d))
    with pytest.raises(CheckpointFormatError):
        FeedforwardRegressor.load_json(path)

    d = model.to_dict()
    d["weights"][0] = d["weights"][0][:-1]
    path.write_text(json.dumps(d))
    with pytest.raises(CheckpointFormatError):
        FeedforwardRegressor.load_json(path)

    path.write_text("not json {")
    with pytest.raises(CheckpointFormatError):
        FeedforwardRegressor.load_json(path)

    d = model.to_dict()
    del d["widths"]
    path.write_text(json.dumps(d))
    with pytest.raises(CheckpointFormatError):
        FeedforwardRegressor.load_json(path)


# ------------------------------------------------------------- capacity


def test_capacity_on_generated_function_class():
    # width-64 model fitting the full mechanism (all three covariates) must
    # reach training error within 3x the noise variance
    from oovtransfer.scm import GeneratingFunction, ScmConfig, sample_joint

    cfg = ScmConfig(seed=21)
    func = GeneratingFunction("polynomial", (1.0,) * 7)
    data, _ = sample_joint(cfg, func, 100_000)
    model = train(
        data.covariates, data.target, MSE, TrainConfig(epochs=100, seed=22)
    )
    final = model.loss_history[-1]
    assert final < 3.0 * cfg.noise_std**2
