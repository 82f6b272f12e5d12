"""LSTM core tests: cell math, BPTT gradients, optimizer, training, model files."""

import math

import numpy as np
import pytest

from demandlab.lstm.io import ModelFormatError, load_model, save_model
from demandlab.lstm.network import (
    LayerWeights,
    LstmState,
    NetworkConfig,
    backward,
    cell_forward,
    forward,
    init_params,
    loss_and_grads,
    loss_mse,
    network_forward,
    sigmoid,
    tanh,
)
from demandlab.lstm.optimizer import (
    AdamState,
    adam_step,
    clip_global_norm,
    clone_params,
    init_adam,
)
from demandlab.lstm.training import LstmNetwork, TrainingDiverged, train
from demandlab.preprocess import WindowedDataset
from demandlab.tuning import HyperParams


def zero_weights(units, in_dim):
    return LayerWeights(
        w_h={g: np.zeros((units, units)) for g in "ifog"},
        w_x={g: np.zeros((units, in_dim)) for g in "ifog"},
        b={g: np.zeros(units) for g in "ifog"},
    )


class TestActivations:
    def test_tanh_zero(self):
        assert tanh(0.0) == 0.0

    def test_sigmoid_zero(self):
        assert sigmoid(0.0) == 0.5

    def test_identity_against_tanh(self):
        rng = np.random.default_rng(0)
        x = rng.normal(scale=3.0, size=1000)
        assert np.allclose(tanh(x), 2.0 * sigmoid(2.0 * x) - 1.0, atol=1e-12)

    def test_stable_at_extremes(self):
        assert sigmoid(700.0) == pytest.approx(1.0)
        assert sigmoid(-700.0) == pytest.approx(0.0)
        assert np.isfinite(sigmoid(np.array([-700.0, 700.0]))).all()


class TestCellForward:
    def test_all_zero_weights(self):
        w = zero_weights(3, 2)
        state, cache = cell_forward(np.zeros((1, 2)), LstmState.zeros(1, 3), w)
        assert np.allclose(cache["i"], 0.5)
        assert np.allclose(cache["f"], 0.5)
        assert np.allclose(cache["o"], 0.5)
        assert np.allclose(cache["g"], 0.0)
        assert np.allclose(state.c, 0.0)
        assert np.allclose(state.h, 0.0)

    def test_previous_cell_decay(self):
        w = zero_weights(2, 1)
        prev = LstmState(np.zeros((1, 2)), np.ones((1, 2)))
        state, _ = cell_forward(np.zeros((1, 1)), prev, w)
        assert np.allclose(state.c, 0.5)
        assert np.allclose(state.h, 0.5 * math.tanh(0.5))

    def test_hidden_state_bounded(self):
        rng = np.random.default_rng(1)
        units, dim = 4, 3
        w = LayerWeights(
            w_h={g: rng.normal(scale=5, size=(units, units)) for g in "ifog"},
            w_x={g: rng.normal(scale=5, size=(units, dim)) for g in "ifog"},
            b={g: rng.normal(scale=5, size=units) for g in "ifog"},
        )
        state = LstmState.zeros(8, units)
        for _ in range(10):
            x = rng.normal(scale=100, size=(8, dim))
            state, _ = cell_forward(x, state, w)
            assert np.all(np.abs(state.h) <= 1.0)

    def test_shape_mismatch(self):
        w = zero_weights(3, 2)
        with pytest.raises(ValueError):
            cell_forward(np.zeros((1, 5)), LstmState.zeros(1, 3), w)


class TestForward:
    def test_zero_network_predicts_zero(self):
        net = NetworkConfig([4], input_dim=2, output_dim=3, dropout_rate=0.0)
        params = init_params(net, np.random.default_rng(0))
        for key in params:
            params[key] = np.zeros_like(params[key])
        pred = network_forward(np.ones((5, 2)), net, params)
        assert np.allclose(pred, 0.0)

    def test_infer_deterministic(self):
        net = NetworkConfig([6, 5], input_dim=3, output_dim=2, dropout_rate=0.4)
        params = init_params(net, np.random.default_rng(1))
        x = np.random.default_rng(2).normal(size=(4, 7, 3))
        a, _ = forward(params, net, x, mode="infer")
        b, _ = forward(params, net, x, mode="infer")
        assert np.array_equal(a, b)

    def test_train_mode_dropout_reproducible_with_seed(self):
        net = NetworkConfig([6, 5], input_dim=3, output_dim=2, dropout_rate=0.5)
        params = init_params(net, np.random.default_rng(1))
        x = np.random.default_rng(2).normal(size=(4, 7, 3))
        a, _ = forward(params, net, x, mode="train",
                       dropout_rng=np.random.default_rng(99))
        b, _ = forward(params, net, x, mode="train",
                       dropout_rng=np.random.default_rng(99))
        c, _ = forward(params, net, x, mode="train",
                       dropout_rng=np.random.default_rng(100))
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_dropout_expectation_matches_infer(self):
        # inverted dropout is unbiased: the expected masked layer output over
        # many masks equals the unmasked (inference) layer output
        net = NetworkConfig([8, 8], input_dim=2, output_dim=4, dropout_rate=0.3)
        params = init_params(net, np.random.default_rng(3))
        x = np.random.default_rng(4).normal(size=(2, 5, 2))
        _, caches = forward(params, net, x, mode="infer")
        layer_out = np.stack([c["h_prev"] for c in caches[0]["cells"][1:]])
        rng = np.random.default_rng(5)
        keep = 1.0 - net.dropout_rate
        total = np.zeros_like(layer_out)
        n = 10_000
        for _ in range(n):
            mask = (rng.random(layer_out.shape) < keep) / keep
            total += layer_out * mask
        scale = np.abs(layer_out).mean()
        rel = np.abs(total / n - layer_out) / (np.abs(layer_out) + 0.1 * scale)
        assert rel.max() < 0.02

    def test_single_layer_has_no_dropout(self):
        net = NetworkConfig([5], input_dim=2, output_dim=1, dropout_rate=0.9)
        params = init_params(net, np.random.default_rng(6))
        x = np.random.default_rng(7).normal(size=(3, 4, 2))
        infer, _ = forward(params, net, x, mode="infer")
        trained, _ = forward(params, net, x, mode="train",
                             dropout_rng=np.random.default_rng(0))
        assert np.array_equal(infer, trained)


class TestLoss:
    def test_zero_on_match(self):
        assert loss_mse(np.ones((3, 2)), np.ones((3, 2))) == 0.0

    def test_hand_value(self):
        assert loss_mse(np.array([[3.0, 4.0]]), np.zeros((1, 2))) == pytest.approx(12.5)

    def test_non_negative(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            assert loss_mse(rng.normal(size=(4, 3)), rng.normal(size=(4, 3))) >= 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            loss_mse(np.zeros((2, 2)), np.zeros((3, 2)))


def finite_difference_check(net, seed, step=1e-5):
    rng = np.random.default_rng(seed)
    params = init_params(net, rng)
    x = rng.normal(size=(3, rng.integers(1, 5), net.input_dim))
    y = rng.normal(size=(3, net.output_dim))
    _, grads = loss_and_grads(params, net, x, y, mode="infer")

    def loss_at():
        pred, _ = forward(params, net, x, mode="infer")
        return loss_mse(pred, y)

    worst = 0.0
    for key in params:
        flat = params[key].reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + step
            lp = loss_at()
            flat[idx] = orig - step
            lm = loss_at()
            flat[idx] = orig
            numeric = (lp - lm) / (2 * step)
            analytic = grads[key].reshape(-1)[idx]
            worst = max(worst, abs(analytic - numeric)
                        / max(abs(analytic), abs(numeric), 1e-6))
    return worst


class TestBackward:
    def test_zero_loss_zero_gradients(self):
        net = NetworkConfig([3], input_dim=2, output_dim=1)
        params = init_params(net, np.random.default_rng(10))
        x = np.random.default_rng(11).normal(size=(2, 3, 2))
        pred, caches = forward(params, net, x, mode="infer")
        grads = backward(params, net, caches, np.zeros_like(pred))
        assert all(np.allclose(g, 0.0) for g in grads.values())

    def test_dense_bias_gradient_is_error_sum(self):
        net = NetworkConfig([3], input_dim=2, output_dim=2)
        params = init_params(net, np.random.default_rng(12))
        x = np.random.default_rng(13).normal(size=(4, 3, 2))
        pred, caches = forward(params, net, x, mode="infer")
        d_out = np.random.default_rng(14).normal(size=pred.shape)
        grads = backward(params, net, caches, d_out)
        assert np.allclose(grads["dense.b"], d_out.sum(axis=0))

    def test_gradients_match_finite_differences_small_net(self):
        net = NetworkConfig([4], input_dim=2, output_dim=2)
        assert finite_difference_check(net, seed=43) < 1e-4

    def test_gradients_match_finite_differences_stacked(self):
        net = NetworkConfig([3, 4], input_dim=2, output_dim=1)
        assert finite_difference_check(net, seed=77) < 1e-4

    def test_missing_cache(self):
        net = NetworkConfig([3], input_dim=2, output_dim=1)
        params = init_params(net, np.random.default_rng(15))
        with pytest.raises(ValueError):
            backward(params, net, [], np.zeros((1, 1)))


class TestAdam:
    def make(self):
        params = {"w": np.array([1.0, -2.0, 3.0])}
        return params, init_adam(params)

    def test_zero_gradient_no_change(self):
        params, state = self.make()
        before = params["w"].copy()
        adam_step(params, {"w": np.zeros(3)}, state, lr=0.1)
        assert np.array_equal(params["w"], before)

    def test_first_step_is_signed_lr(self):
        params, state = self.make()
        grad = np.array([0.5, -1.5, 2.0])
        before = params["w"].copy()
        adam_step(params, {"w": grad}, state, lr=0.01)
        # at t=1 the bias-corrected update is lr * g / (|g| + eps) = lr * sign(g)
        assert np.allclose(params["w"], before - 0.01 * np.sign(grad), atol=1e-6)
        assert state.t == 1

    def test_cloned_state_gives_identical_result(self):
        params, state = self.make()
        params2 = clone_params(params)
        state2 = state.clone()
        grad = {"w": np.array([0.3, 0.1, -0.7])}
        adam_step(params, grad, state, lr=0.05)
        adam_step(params2, grad, state2, lr=0.05)
        assert np.array_equal(params["w"], params2["w"])

    def test_clip_global_norm(self):
        grads = {"a": np.array([3.0, 0.0]), "b": np.array([4.0])}
        norm = clip_global_norm(grads, max_norm=1.0)
        assert norm == pytest.approx(5.0)
        total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
        assert total == pytest.approx(1.0)

    def test_clip_leaves_small_gradients_alone(self):
        grads = {"a": np.array([0.3, 0.4])}
        clip_global_norm(grads, max_norm=5.0)
        assert np.allclose(grads["a"], [0.3, 0.4])


def sine_task(n=200, timesteps=8, seed=0):
    rng = np.random.default_rng(seed)
    starts = rng.uniform(0, 2 * math.pi, size=n)
    t = np.arange(timesteps + 1) * 0.35
    waves = np.sin(starts[:, None] + t[None, :])
    X = waves[:, :timesteps, None]
    Y = waves[:, timesteps:]
    days = np.arange(n)
    return WindowedDataset(2, X, Y, days), rng


def tiny_hp(**kw):
    """Duck-typed hyperparameters for boundary cases outside the search ranges."""
    from types import SimpleNamespace
    values = dict(epochs=5, units=8, batch_size=16, dropout=0.0,
                  learning_rate=0.005, layers=1)
    values.update(kw)
    return SimpleNamespace(**values)


class TestTrain:
    def test_zero_epochs_returns_initial_weights(self):
        data, _ = sine_task()
        net, report = train(data, data, tiny_hp(epochs=0, units=32, dropout=0.1), seed=1)
        from demandlab import seeding
        fresh = init_params(net.config, seeding.stream(1, "lstm/init"))
        assert all(np.array_equal(net.params[k], fresh[k]) for k in fresh)
        assert report.train_losses == [] and report.val_losses == []

    def test_learns_sine(self):
        data, _ = sine_task(n=300)
        train_set = WindowedDataset(2, data.X[:240], data.Y[:240], data.sample_days[:240])
        val_set = WindowedDataset(2, data.X[240:], data.Y[240:], data.sample_days[240:])
        hp = HyperParams(epochs=100, units=32, batch_size=16, dropout=0.1,
                         learning_rate=0.005, layers=1)
        network, report = train(train_set, val_set, hp, seed=3)
        pred = network.predict(train_set.X)
        ss_res = float(np.sum((train_set.Y - pred) ** 2))
        ss_tot = float(np.sum((train_set.Y - train_set.Y.mean()) ** 2))
        assert 1.0 - ss_res / ss_tot > 0.95
        # loss trend: the tail is clearly below the head
        assert np.median(report.train_losses[-10:]) < np.median(report.train_losses[:10])

    def test_seeded_training_is_bit_stable(self):
        data, _ = sine_task(n=80)
        hp = tiny_hp(epochs=5, units=32, dropout=0.1)
        _, r1 = train(data, data, hp, seed=11)
        _, r2 = train(data, data, hp, seed=11)
        assert r1.train_losses == r2.train_losses
        assert r1.val_losses == r2.val_losses

    def test_divergence_reports_epoch_and_batch(self):
        data, _ = sine_task(n=64)
        bad = data.Y.copy()
        bad[:, 0] = 1e300  # provokes a non-finite loss immediately
        broken = WindowedDataset(2, data.X, bad, data.sample_days)
        hp = tiny_hp(epochs=50, units=32, batch_size=64, dropout=0.1, learning_rate=0.01)
        with pytest.raises(TrainingDiverged) as info:
            train(broken, broken, hp, seed=5)
        assert info.value.epoch == 0
        assert "epoch 0" in str(info.value)

    def test_report_lengths_match_epochs(self):
        data, _ = sine_task(n=60)
        hp = HyperParams(epochs=50, units=32, batch_size=32, dropout=0.1,
                         learning_rate=0.001, layers=1)
        _, report = train(data, data, hp, seed=9)
        assert len(report.train_losses) == 50
        assert len(report.val_losses) == 50
        assert all(np.isfinite(v) for v in report.val_losses)


class TestModelIO:
    def test_round_trip_is_bit_exact(self, tmp_path):
        data, _ = sine_task(n=50)
        hp = tiny_hp(epochs=3, units=32, batch_size=32, dropout=0.1, layers=2)
        network, _ = train(data, data, hp, seed=21)
        path = tmp_path / "model.json"
        save_model(path, network, scaler={"mean": [0.0], "sd": [1.0]}, seed=21,
                   hyperparams=vars(hp))
        loaded, doc = load_model(path)
        x = np.random.default_rng(1).normal(size=(4, 8, 1))
        assert np.array_equal(loaded.predict(x), network.predict(x))
        assert doc["seed"] == 21
        assert doc["scaler"]["sd"] == [1.0]

    def test_shape_validation(self, tmp_path):
        net = NetworkConfig([4], input_dim=2, output_dim=1)
        network = LstmNetwork(net, init_params(net, np.random.default_rng(2)))
        path = tmp_path / "model.json"
        save_model(path, network)
        import json
        doc = json.loads(path.read_text())
        doc["params"]["dense.w"]["shape"] = [1, 5]
        path.write_text(json.dumps(doc))
        with pytest.raises(ModelFormatError, match="dense.w"):
            load_model(path)

    def test_rejects_foreign_files(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text('{"format": "something-else"}')
        with pytest.raises(ModelFormatError):
            load_model(path)
