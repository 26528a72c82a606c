import math

import numpy as np
import pandas as pd
import pytest

from nn.cells import gru_cell, lstm_cell, sigmoid
from nn.dataset import Dataset, DatasetError, load_dataset, make_windows, split_windows
from nn.grid_search import REPORT_COLUMNS, budget_subset, grid_search, search_report, search_space
from nn.model import (
    ModelConfig, RecurrentModel, Scaler, backprop, forward, init_model, parameter_shapes, predict_dbm,
    predict_recursive,
)
from nn.optimizers import AdamState, RmsPropState, make_optimizer, step_adam, step_rmsprop
from nn.persistence import ModelError, load_model, model_from_json, model_to_json, save_model
from nn.training import train
from simulation.core import rng_stream


def small_model(arch, units, lookback=4, activation="linear", seed=3):
    config = ModelConfig(arch=arch, units=units, lookback=lookback, activation=activation, dropout=0.0)
    return init_model(config, Scaler(-120.0, -40.0), np.random.default_rng(seed))


def sine_values(count=400, period=20):
    k = np.arange(count)
    return -90.0 + 10.0 * np.sin(2 * np.pi * k / period)


class TestCells:
    def test_sigmoid_is_stable(self):
        values = sigmoid(np.array([-800.0, 0.0, 800.0]))
        assert values.tolist() == [0.0, 0.5, 1.0]

    def test_gru_with_zero_weights_halves_the_state(self):
        params = {"W": np.zeros((1, 3)), "U": np.zeros((1, 3)), "b": np.zeros(3)}
        h = gru_cell(np.array([[0.3]]), np.array([[0.8]]), params)
        assert h[0, 0] == pytest.approx(0.4)

    def test_lstm_with_zero_weights(self):
        params = {"W": np.zeros((1, 4)), "U": np.zeros((1, 4)), "b": np.zeros(4)}
        h, c = lstm_cell(np.array([[0.3]]), np.array([[0.0]]), np.array([[1.0]]), params)
        assert c[0, 0] == pytest.approx(0.5)
        assert h[0, 0] == pytest.approx(0.5 * math.tanh(0.5))

    def test_shape_mismatch_is_rejected(self):
        params = {"W": np.zeros((2, 3)), "U": np.zeros((1, 3)), "b": np.zeros(3)}
        with pytest.raises(ValueError):
            gru_cell(np.array([[0.3]]), np.array([[0.8]]), params)


def reference_gru_forward(model, window):
    """Column-vector GRU stack evaluated one sample at a time."""
    seq = [np.array([value]) for value in window]
    for layer, units in enumerate(model.config.units):
        p = model.layer_params(layer)
        W, U, b = p["W"].T, p["U"].T, p["b"]
        Wz, Wr, Wh = W[:units], W[units:2 * units], W[2 * units:]
        Uz, Ur, Uh = U[:units], U[units:2 * units], U[2 * units:]
        bz, br, bh = b[:units], b[units:2 * units], b[2 * units:]
        h = np.zeros(units)
        outputs = []
        for x in seq:
            z = 1.0 / (1.0 + np.exp(-(Wz @ x + Uz @ h + bz)))
            r = 1.0 / (1.0 + np.exp(-(Wr @ x + Ur @ h + br)))
            candidate = np.tanh(Wh @ x + Uh @ (r * h) + bh)
            h = (1.0 - z) * h + z * candidate
            outputs.append(h)
        seq = outputs
    return float(seq[-1] @ model.params["dense.W"][:, 0] + model.params["dense.b"][0])


def reference_lstm_forward(model, window):
    seq = [np.array([value]) for value in window]
    for layer, units in enumerate(model.config.units):
        p = model.layer_params(layer)
        W, U, b = p["W"].T, p["U"].T, p["b"]
        h = np.zeros(units)
        c = np.zeros(units)
        outputs = []
        for x in seq:
            a = W @ x + U @ h + b
            i, f, g, o = (a[k * units:(k + 1) * units] for k in range(4))
            i, f, o = (1.0 / (1.0 + np.exp(-v)) for v in (i, f, o))
            c = f * c + i * np.tanh(g)
            h = o * np.tanh(c)
            outputs.append(h)
        seq = outputs
    return float(seq[-1] @ model.params["dense.W"][:, 0] + model.params["dense.b"][0])


class TestForward:
    @pytest.mark.parametrize("arch, units, reference", [
        ("gru", [5, 3], reference_gru_forward),
        ("lstm", [4, 3], reference_lstm_forward),
    ])
    def test_matches_reference(self, arch, units, reference):
        model = small_model(arch, units, lookback=6)
        windows = np.random.default_rng(1).uniform(0, 1, (8, 6))
        batch = forward(model, windows)
        for window, value in zip(windows, batch):
            assert value == pytest.approx(reference(model, window), abs=1e-12)
        assert forward(model, windows[0]) == pytest.approx(batch[0], abs=1e-12)

    def test_relu_head_is_non_negative(self):
        model = small_model("gru", [4], activation="relu")
        model.params["dense.b"] = np.array([-10.0])
        assert forward(model, [0.5, 0.5, 0.5, 0.5]) == 0.0

    def test_lookback_mismatch(self):
        with pytest.raises(ValueError):
            forward(small_model("gru", [4]), [0.1, 0.2, 0.3])

    def test_parameter_names_and_shapes(self):
        names = [name for name, _ in parameter_shapes(ModelConfig(arch="lstm"))]
        assert names == ["rnn0.W", "rnn0.U", "rnn0.b", "rnn1.W", "rnn1.U", "rnn1.b", "dense.W", "dense.b"]
        shapes = dict(parameter_shapes(ModelConfig(arch="gru")))
        assert shapes["rnn0.W"] == (1, 384)
        assert shapes["rnn0.U"] == (128, 384)
        assert shapes["dense.W"] == (128, 1)


class TestConfig:
    def test_architecture_defaults(self):
        lstm = ModelConfig(arch="lstm")
        assert (lstm.units, lstm.dropout, lstm.optimizer) == ([64, 32], 0.2, "rmsprop")
        gru = ModelConfig(arch="gru")
        assert (gru.units, gru.dropout, gru.optimizer) == ([128], 0.0, "adam")
        assert (gru.lookback, gru.learning_rate, gru.batch_size, gru.epochs) == (15, 1e-4, 16, 200)

    def test_invalid_units(self):
        with pytest.raises(ValueError):
            ModelConfig(arch="gru", units=[0])

    def test_scaler(self):
        scaler = Scaler.fit([-100.0, -50.0, -75.0])
        assert scaler.transform([-100.0, -75.0, -50.0]).tolist() == [0.0, 0.5, 1.0]
        assert scaler.inverse(0.5) == -75.0
        assert Scaler.fit([-80.0, -80.0]) == Scaler(-80.0, -79.0)
        with pytest.raises(ValueError):
            Scaler(1.0, 1.0)


class TestGradients:
    @pytest.mark.parametrize("arch, units", [("gru", [4]), ("lstm", [4, 3]), ("gru", [4, 3]), ("lstm", [4])])
    @pytest.mark.parametrize("draw", range(20))
    def test_backprop_matches_finite_differences(self, arch, units, draw):
        model = small_model(arch, units, seed=100 + draw)
        rng = np.random.default_rng(draw)
        for name, value in model.params.items():
            if name.endswith(".b"):
                model.params[name] = rng.uniform(-0.5, 0.5, value.shape)
        x = rng.uniform(0, 1, (5, 4))
        y = rng.uniform(0, 1, 5)
        _, grads = backprop(model, x, y)
        eps = 1e-6
        for name, value in model.params.items():
            numeric = np.zeros_like(value)
            for index in np.ndindex(value.shape):
                original = value[index]
                value[index] = original + eps
                plus, _ = backprop(model, x, y)
                value[index] = original - eps
                minus, _ = backprop(model, x, y)
                value[index] = original
                numeric[index] = (plus - minus) / (2 * eps)
            np.testing.assert_allclose(grads[name], numeric, rtol=1e-4, atol=1e-8, err_msg=name)

    def test_loss_is_batch_mse(self):
        model = small_model("gru", [4])
        x = np.random.default_rng(2).uniform(0, 1, (6, 4))
        y = np.zeros(6)
        loss, _ = backprop(model, x, y)
        assert loss == pytest.approx(float(np.mean(forward(model, x) ** 2)))


class TestOptimizers:
    def test_adam_first_step(self):
        params = step_adam({"w": np.array([0.0])}, {"w": np.array([1.0])}, AdamState(), lr=0.001)
        assert params["w"][0] == pytest.approx(-0.001, abs=1e-9)

    def test_rmsprop_first_step(self):
        params = step_rmsprop({"w": np.array([0.0])}, {"w": np.array([1.0])}, RmsPropState(), lr=0.001)
        assert params["w"][0] == pytest.approx(-0.001 / math.sqrt(0.1), abs=1e-9)
        assert params["w"][0] == pytest.approx(-0.0031623, abs=1e-7)

    def test_adam_keeps_bias_correction_over_steps(self):
        optimizer = make_optimizer("adam", 0.01)
        params = {"w": np.array([1.0])}
        for _ in range(3):
            params = optimizer.step(params, {"w": np.array([2.0])})
        # a constant gradient moves by lr per step
        assert params["w"][0] == pytest.approx(1.0 - 0.03, abs=1e-8)
        assert optimizer.state.t == 3

    def test_unknown_optimizer(self):
        with pytest.raises(ValueError):
            make_optimizer("sgd", 0.1)


class TestRecursivePrediction:
    def identity_model(self):
        config = ModelConfig(arch="gru", units=[1], lookback=3, activation="linear")
        params = {
            "rnn0.W": np.array([[0.0, 0.0, 1e-3]]),
            "rnn0.U": np.zeros((1, 3)),
            "rnn0.b": np.array([50.0, 0.0, 0.0]),
            "dense.W": np.array([[1e3]]),
            "dense.b": np.array([0.0]),
        }
        return RecurrentModel(config, Scaler(-100.0, -50.0), params)

    def test_identity_like_model_repeats_last_value(self):
        model = self.identity_model()
        predictions = predict_recursive(model, [-95.0, -90.0, -80.0, -70.0], 5)
        assert len(predictions) == 5
        assert predictions == pytest.approx([-70.0] * 5, abs=1e-3)
        assert predict_dbm(model, [-90.0, -80.0, -70.0]) == pytest.approx(-70.0, abs=1e-3)

    def test_zero_horizon(self):
        assert predict_recursive(self.identity_model(), [-90.0, -80.0, -70.0], 0) == []

    def test_short_history(self):
        with pytest.raises(ValueError):
            predict_recursive(self.identity_model(), [-90.0, -80.0], 3)


class TestDataset:
    def test_windows(self):
        x, y = make_windows(np.arange(6.0), 3)
        assert x.tolist() == [[0, 1, 2], [1, 2, 3], [2, 3, 4]]
        assert y.tolist() == [3, 4, 5]
        x, y = make_windows(np.arange(3.0), 3)
        assert x.shape == (0, 3) and y.shape == (0,)

    def test_split_is_chronological_per_series(self):
        dataset = Dataset({(1, 1): np.arange(13.0), (1, 2): np.arange(100.0, 113.0)})
        xt, yt, xv, yv = split_windows(dataset, 3, lambda v: v)
        # 10 windows per series: 8 train, 2 validation
        assert yt.tolist() == [3, 4, 5, 6, 7, 8, 9, 10, 103, 104, 105, 106, 107, 108, 109, 110]
        assert yv.tolist() == [11, 12, 111, 112]
        assert xv[0].tolist() == [8, 9, 10]

    def test_too_few_samples(self):
        with pytest.raises(DatasetError):
            split_windows(Dataset.from_values(np.arange(3.0)), 3, lambda v: v)
        with pytest.raises(DatasetError):
            split_windows(Dataset.from_values(np.arange(4.0)), 3, lambda v: v)

    def test_frame_is_grouped_and_sorted(self):
        frame = pd.DataFrame({
            "t_ms": [2000, 1000, 1000, 2000],
            "ue_id": [1, 1, 1, 1],
            "cell_id": [2, 2, 1, 1],
            "rsrp_dbm": [-82.0, -81.0, -71.0, -72.0],
        })
        dataset = Dataset.from_frame(frame)
        assert dataset.series[(1, 2)].tolist() == [-81.0, -82.0]
        assert dataset.values().tolist() == [-71.0, -72.0, -81.0, -82.0]
        assert dataset.samples == 4

    def test_load_errors(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        with pytest.raises(DatasetError):
            load_dataset(empty)
        columns = tmp_path / "columns.csv"
        columns.write_text("t_ms,rsrp_dbm\n1000,-80\n")
        with pytest.raises(DatasetError):
            load_dataset(columns)
        text = tmp_path / "text.csv"
        text.write_text("t_ms,ue_id,cell_id,rsrp_dbm\n1000,1,1,strong\n")
        with pytest.raises(DatasetError):
            load_dataset(text)
        with pytest.raises(DatasetError):
            load_dataset(tmp_path / "missing.csv")


class TestPersistence:
    def test_reload_reproduces_predictions(self, tmp_path):
        model = small_model("lstm", [4, 3], lookback=5)
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)
        windows = np.random.default_rng(4).uniform(0, 1, (10, 5))
        np.testing.assert_allclose(forward(loaded, windows), forward(model, windows), rtol=0, atol=1e-12)
        assert loaded.config == model.config
        assert loaded.scaler == model.scaler
        assert model_to_json(loaded) == model_to_json(model)

    def test_bad_documents(self, tmp_path):
        text = model_to_json(small_model("gru", [4]))
        with pytest.raises(ModelError):
            model_from_json(text.replace("rsrp-recurrent-model", "something-else"))
        with pytest.raises(ModelError):
            model_from_json(text.replace('"version":1', '"version":2'))
        with pytest.raises(ModelError):
            model_from_json(text.replace('"shape":[4,1]', '"shape":[2,2]'))
        with pytest.raises(ModelError):
            model_from_json("{not json")
        with pytest.raises(ModelError):
            load_model(tmp_path / "absent.json")


class TestTraining:
    CONFIG = dict(arch="gru", units=[4], lookback=5, activation="linear", learning_rate=0.01,
                  batch_size=16, epochs=4, patience=2)

    def test_report_invariants(self):
        dataset = Dataset.from_values(sine_values(120))
        model, report = train(ModelConfig(**self.CONFIG), dataset)
        assert 1 <= report.epochs_run <= 4
        assert 1 <= report.best_epoch <= report.epochs_run
        assert report.best_val_mse == min(report.val_mse)
        assert set(report.to_dict()) >= {"best_epoch", "val_mse", "train_mse"}
        assert "wall_time_s" not in report.to_dict()
        assert model.scaler == Scaler.fit(dataset.values())

    def test_training_is_deterministic(self):
        dataset = Dataset.from_values(sine_values(120))
        first, _ = train(ModelConfig(**self.CONFIG), dataset)
        second, _ = train(ModelConfig(**self.CONFIG), dataset)
        for name in first.params:
            assert np.array_equal(first.params[name], second.params[name])

    def test_zero_learning_rate_keeps_initial_weights(self):
        config = ModelConfig(**{**self.CONFIG, "learning_rate": 0.0})
        dataset = Dataset.from_values(sine_values(120))
        model, _ = train(config, dataset)
        initial = init_model(config, model.scaler, rng_stream("init:gru", config.seed))
        for name in model.params:
            assert np.array_equal(model.params[name], initial.params[name])

    def test_relu_head_starts_with_gradient(self):
        config = ModelConfig(arch="gru", lookback=15, activation="relu")
        model = init_model(config, Scaler(-100.0, -80.0), rng_stream("init:gru", 0))
        assert model.params["dense.b"].tolist() == [0.5]
        dataset = Dataset.from_values(sine_values(200, period=50))
        x, y, _, _ = split_windows(dataset, 15, model.scaler.transform)
        _, grads = backprop(model, x[:16], y[:16])
        assert np.any(grads["dense.W"] != 0.0)
        assert np.any(grads["rnn0.W"] != 0.0)

    @pytest.mark.slow
    @pytest.mark.parametrize("arch", ["gru", "lstm"])
    def test_learns_a_sinusoid(self, arch):
        # selected hyperparameters: batch 16, lr 1e-4, lookback 15, ReLU, Adam for GRU, RMSProp for LSTM
        config = ModelConfig(arch=arch, lookback=15, batch_size=16, learning_rate=1e-4, activation="relu", epochs=200)
        dataset = Dataset.from_values(sine_values(2000, period=50))
        model, report = train(config, dataset)
        assert report.best_val_mae < 0.05
        history = sine_values(2000, period=50)[-15:]
        prediction = predict_recursive(model, history, 1)[0]
        assert prediction == pytest.approx(sine_values(2001, period=50)[-1], abs=2.0)


class TestGridSearch:
    def test_full_space_has_96_configurations(self):
        configs = search_space("gru")
        assert len(configs) == 96
        assert len({(c.lookback, c.optimizer, c.activation, c.batch_size, c.learning_rate) for c in configs}) == 96

    def test_budget_subset_is_seeded_and_ordered(self):
        configs = search_space("lstm")
        subset = budget_subset(configs, 5, seed=1)
        assert len(subset) == 5
        assert subset == budget_subset(configs, 5, seed=1)
        positions = [configs.index(config) for config in subset]
        assert positions == sorted(positions)
        assert budget_subset(configs, None) == configs

    def test_results_are_ranked(self):
        space = {"lookback": [4], "optimizer": ["adam"], "activation": ["linear"], "batch_size": [16],
                 "learning_rate": [0.01, 0.0001]}
        configs = [config.model_copy(update={"units": [4], "patience": 2}) for config in search_space("gru", 2, 0, space)]
        results = grid_search(configs, Dataset.from_values(sine_values(80)))
        assert len(results) == 2
        assert results[0].val_mse <= results[1].val_mse
        report = search_report(results)
        assert list(report.columns) == REPORT_COLUMNS
        assert report["rank"].tolist() == [1, 2]

    def test_empty_space(self):
        with pytest.raises(ValueError):
            grid_search([], Dataset.from_values(sine_values(80)))
