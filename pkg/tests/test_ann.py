import numpy as np
import pytest

from phmkit.ann import (
    ModelParams,
    TrainConfig,
    forward,
    init_network,
    load_model,
    loss_and_grads,
    parameter_count,
    predict,
    save_model,
    train,
)
from phmkit.errors import NumericError
from phmkit.loss import composite_loss
from phmkit.metrics import auroc
from phmkit.types import FailureFlags, LabelVector


def make_labels(rng, n, separable_from=None):
    """Random labels; if ``separable_from`` is given, class bits are a
    deterministic function of the input matrix so the problem is learnable."""
    labels = []
    for i in range(n):
        if separable_from is not None:
            x = separable_from[i]
            bits = [1 if x[j % x.shape[0]] > 0 else 0 for j in range(6)]
        else:
            bits = rng.integers(0, 2, size=6).tolist()
        labels.append(
            LabelVector(
                hs=int(bits[0]),
                ef=FailureFlags(*[int(b) for b in bits[1:]]),
                rul=int(rng.integers(0, 60)),
            )
        )
    return labels


class TestInitNetwork:
    def test_parameter_count_129(self):
        assert init_network(129, 0).n_parameters == 10631
        assert parameter_count(129) == 10631

    def test_parameter_count_1(self):
        assert init_network(1, 0).n_parameters == 2439

    @pytest.mark.parametrize("p", [1, 10, 129])
    def test_count_formula(self, p):
        expected = p * 64 + 64 + 64 * 32 + 32 + 32 * 7 + 7
        assert init_network(p, 3).n_parameters == expected

    def test_deterministic_in_seed(self):
        a = init_network(12, 7)
        b = init_network(12, 7)
        assert all(
            np.array_equal(x, y) for x, y in zip(a.tensors(), b.tensors())
        )
        c = init_network(12, 8)
        assert not np.array_equal(a.W1, c.W1)

    def test_glorot_bounds_and_zero_biases(self):
        params = init_network(100, 0)
        bound = np.sqrt(6.0 / (100 + 64))
        assert np.abs(params.W1).max() <= bound
        assert np.all(params.b1 == 0) and np.all(params.b3 == 0)


class TestForward:
    def zero_params(self, p=5):
        return ModelParams(
            W1=np.zeros((64, p)), b1=np.zeros(64),
            W2=np.zeros((32, 64)), b2=np.zeros(32),
            W3=np.zeros((7, 32)), b3=np.zeros(7),
        )

    def test_zero_network_composite(self):
        batch = forward(self.zero_params(), np.ones((3, 5)), "composite")
        assert np.all(batch.class_probs == 0.5)
        assert np.all(batch.rul_pred == 0.0)

    def test_hand_computed_tiny_network(self):
        # Explicit matrix arithmetic for a single input.
        p = 2
        params = init_network(p, seed=1)
        x = np.array([[0.3, -0.7]])
        z1 = x @ params.W1.T + params.b1
        h1 = np.maximum(z1, 0)
        z2 = h1 @ params.W2.T + params.b2
        h2 = np.maximum(z2, 0)
        z = h2 @ params.W3.T + params.b3
        expected_probs = 1.0 / (1.0 + np.exp(-z[:, :6]))
        batch = forward(params, x, "composite")
        assert np.allclose(batch.class_probs, expected_probs, rtol=1e-12)
        assert batch.rul_pred[0] == pytest.approx(z[0, 6], rel=1e-12)

    def test_relu_blocks_negative_preactivations(self):
        params = self.zero_params(p=1)
        tweaked = ModelParams(
            W1=np.full((64, 1), -1.0), b1=params.b1,
            W2=np.ones((32, 64)), b2=params.b2,
            W3=np.ones((7, 32)), b3=params.b3,
        )
        batch = forward(tweaked, np.array([[2.0]]), "composite")
        # First layer output is relu(-2) = 0 everywhere, so heads sit at bias.
        assert np.all(batch.class_probs == 0.5)
        assert batch.rul_pred[0] == 0.0

    def test_mse_mode_identity_heads(self):
        params = self.zero_params()
        batch = forward(params, np.ones((2, 5)), "mse")
        assert np.all(batch.class_probs == 0.0)


class TestGradients:
    def test_network_gradients_match_finite_differences(self):
        rng = np.random.default_rng(0)
        p = 4
        config = TrainConfig(epochs=1, seed=0)
        step = 1e-5
        for trial in range(5):
            params = init_network(p, seed=trial)
            X = rng.normal(size=(5, p))
            labels = make_labels(rng, 5)
            # Keep |delta| away from the kink: shift true RULs off predictions.
            base = forward(params, X, "composite")
            labels = [
                LabelVector(
                    hs=lab.hs, ef=lab.ef,
                    rul=max(0, int(round(base.rul_pred[i] + (3 + i)))),
                )
                for i, lab in enumerate(labels)
            ]
            _, grads = loss_and_grads(params, X, labels, config)

            tensors = list(params.tensors())
            for k in range(6):
                flat = tensors[k].ravel()
                for probe in rng.choice(flat.size, size=min(4, flat.size), replace=False):
                    def loss_at(value):
                        modified = [t.copy() for t in tensors]
                        modified[k].ravel()[probe] = value
                        mp = ModelParams(*modified)
                        batch = forward(mp, X, "composite")
                        return composite_loss(labels, batch, config.loss_config())

                    original = flat[probe]
                    fd = (loss_at(original + step) - loss_at(original - step)) / (2 * step)
                    analytic = grads[k].ravel()[probe]
                    assert analytic == pytest.approx(fd, rel=2e-4, abs=1e-8)


class TestTrain:
    def test_loss_decreases(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(40, 6))
        labels = make_labels(rng, 40, separable_from=X)
        _, history = train(X, labels, TrainConfig(epochs=50, seed=0))
        assert history[-1] < history[0]

    def test_deterministic_history(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(30, 5))
        labels = make_labels(rng, 30, separable_from=X)
        _, h1 = train(X, labels, TrainConfig(epochs=25, seed=9))
        _, h2 = train(X, labels, TrainConfig(epochs=25, seed=9))
        assert np.array_equal(h1, h2)

    def test_separable_fixture_reaches_perfect_auroc(self):
        """200-sample linearly separable set: BCE < 0.05, train AUROC = 1."""
        rng = np.random.default_rng(3)
        X = rng.normal(size=(200, 8))
        labels = make_labels(rng, 200, separable_from=X)
        # RUL is a linear function so the regression head also converges.
        labels = [
            LabelVector(hs=lab.hs, ef=lab.ef, rul=int(10 + round(4 * X[i, :3].sum() ** 2)))
            for i, lab in enumerate(labels)
        ]
        config = TrainConfig(epochs=800, seed=0)
        params, _ = train(X, labels, config)
        batch = predict(params, X, config)
        y = np.array([[lab.hs, *lab.ef.as_tuple()] for lab in labels], dtype=float)
        from phmkit.loss import bce

        assert bce(y, batch.class_probs) < 0.05
        for j in range(6):
            assert auroc(y[:, j], batch.class_probs[:, j]) == 1.0

    def test_mse_mode_trains(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(30, 5))
        labels = make_labels(rng, 30, separable_from=X)
        _, history = train(X, labels, TrainConfig(epochs=40, loss="mse", seed=0))
        assert history[-1] < history[0]

    def test_nonfinite_input_aborts_with_epoch(self):
        X = np.full((4, 3), 1e300)
        labels = make_labels(np.random.default_rng(0), 4)
        with np.errstate(over="ignore"), pytest.raises(NumericError, match="epoch"):
            train(X, labels, TrainConfig(epochs=5, seed=0))


class TestPredict:
    def test_rectify_clamps_negative(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(10, 4))
        labels = make_labels(rng, 10)
        config = TrainConfig(epochs=5, seed=0, rul_rectify=True)
        params, _ = train(X, labels, config)
        batch = predict(params, X, config)
        assert np.all(batch.rul_pred >= 0.0)

    def test_rectify_off_returns_raw(self):
        params = init_network(3, seed=0)
        X = np.random.default_rng(6).normal(size=(5, 3))
        config_off = TrainConfig(epochs=1, seed=0, rul_rectify=False)
        config_on = TrainConfig(epochs=1, seed=0, rul_rectify=True)
        raw = predict(params, X, config_off).rul_pred
        clamped = predict(params, X, config_on).rul_pred
        assert np.array_equal(clamped, np.maximum(raw, 0.0))

    def test_mse_scores_rescaled(self):
        params = ModelParams(
            W1=np.zeros((64, 1)), b1=np.zeros(64),
            W2=np.zeros((32, 64)), b2=np.zeros(32),
            W3=np.zeros((7, 32)), b3=np.array([87.0, 0, 0, 0, 0, 0, 42.0]),
        )
        config = TrainConfig(epochs=1, loss="mse", label_scale=100.0)
        batch = predict(params, np.zeros((1, 1)), config)
        assert batch.class_probs[0, 0] == pytest.approx(0.87, rel=1e-12)
        assert batch.rul_pred[0] == 42.0


class TestPersistence:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(20, 5))
        labels = make_labels(rng, 20)
        config = TrainConfig(epochs=10, seed=1)
        params, _ = train(X, labels, config)
        path = tmp_path / "model.json"
        save_model(params, config, "abc123", path)
        loaded, loaded_config, schema = load_model(path)
        assert schema == "abc123"
        assert loaded_config == config
        assert all(
            np.array_equal(a, b) for a, b in zip(params.tensors(), loaded.tensors())
        )
