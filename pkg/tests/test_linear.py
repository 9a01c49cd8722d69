import math

import numpy as np
import pytest

from littriage.linear import (
    DivergenceError,
    LinearHyperparams,
    LinearModel,
    forward,
    load_linear,
    loss_and_grad,
    save_linear,
    softmax,
    train_linear,
)
from littriage.records import DocClass
from littriage.textpipe import DimensionMismatchError


class TestSoftmax:
    def test_uniform(self):
        assert softmax(np.zeros(5)) == pytest.approx([0.2] * 5, abs=1e-12)

    def test_shift_invariance(self):
        z = np.array([1.3, -0.2, 4.0, 0.0, 2.2])
        assert softmax(z + 17.5) == pytest.approx(softmax(z), abs=1e-12)

    def test_hand_value(self):
        out = softmax(np.array([1.0, 0, 0, 0, 0]))
        assert out[0] == pytest.approx(math.e / (math.e + 4), abs=1e-3)
        assert out[1] == pytest.approx(1 / (math.e + 4), abs=1e-3)

    def test_sums_to_one_large_logits(self):
        out = softmax(np.array([1000.0, -1000.0, 0.0, 500.0, 999.0]))
        assert out.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.isfinite(out))


class TestForward:
    def test_zero_model_uniform(self):
        model = LinearModel.zeros(8)
        result = forward(model, np.ones(8))
        assert result.probabilities == pytest.approx([0.2] * 5, abs=1e-12)
        assert result.entropy == pytest.approx(math.log(5), abs=1e-9)

    def test_large_bias_dominates(self):
        model = LinearModel.zeros(4)
        model.bias[0] = 10.0
        result = forward(model, np.zeros(4))
        assert result.predicted == DocClass.BROAD_SYNTHESIS
        assert result.probabilities[0] > 0.999

    def test_bias_shift_invariance(self):
        rng = np.random.Generator(np.random.PCG64(0))
        model = LinearModel(weights=rng.normal(size=(5, 6)), bias=rng.normal(size=5))
        e = rng.normal(size=6)
        before = forward(model, e)
        model.bias += 3.7
        after = forward(model, e)
        assert after.probabilities == pytest.approx(before.probabilities, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            forward(LinearModel.zeros(4), np.zeros(5))


class TestLossAndGrad:
    def test_zero_model_uniform_loss(self):
        model = LinearModel.zeros(6, LinearHyperparams(l2_lambda=0.0))
        batch = [(np.ones(6), DocClass.PRIMARY_RCT), (np.zeros(6), DocClass.EXCLUDED)]
        loss, _gw, _gb = loss_and_grad(model, batch)
        assert loss == pytest.approx(math.log(5), abs=1e-12)

    def test_perfect_prediction_loss_goes_to_zero(self):
        model = LinearModel.zeros(3, LinearHyperparams(l2_lambda=0.0))
        model.bias[2] = 50.0
        loss, _gw, _gb = loss_and_grad(model, [(np.zeros(3), DocClass.PRIMARY_RCT)])
        assert loss < 1e-12

    def test_gradient_matches_finite_differences(self):
        rng = np.random.Generator(np.random.PCG64(17))
        for _ in range(10):
            d = 8
            hp = LinearHyperparams(l2_lambda=float(rng.random() * 0.01))
            model = LinearModel(
                weights=rng.normal(size=(5, d)), bias=rng.normal(size=5), hyperparams=hp
            )
            batch = [
                (rng.normal(size=d), DocClass(int(rng.integers(0, 5)))) for _ in range(4)
            ]
            sw = (rng.random(4) + 0.5).tolist()
            _loss, gw, gb = loss_and_grad(model, batch, sw)
            num_gw, num_gb = _finite_difference_grad(model, batch, sw)
            scale = max(np.abs(num_gw).max(), np.abs(num_gb).max(), 1e-8)
            assert np.abs(gw - num_gw).max() / scale < 1e-4
            assert np.abs(gb - num_gb).max() / scale < 1e-4

    def test_empty_batch_rejected(self):
        with pytest.raises(ValueError):
            loss_and_grad(LinearModel.zeros(3), [])


def _finite_difference_grad(model, batch, sample_weights, eps=1e-6):
    """Central-difference oracle over every parameter."""

    def loss_at(weights, bias):
        probe = LinearModel(weights=weights, bias=bias, hyperparams=model.hyperparams)
        return loss_and_grad(probe, batch, sample_weights)[0]

    gw = np.zeros_like(model.weights)
    for i in range(model.weights.shape[0]):
        for j in range(model.weights.shape[1]):
            up = model.weights.copy()
            dn = model.weights.copy()
            up[i, j] += eps
            dn[i, j] -= eps
            gw[i, j] = (loss_at(up, model.bias) - loss_at(dn, model.bias)) / (2 * eps)
    gb = np.zeros_like(model.bias)
    for i in range(len(model.bias)):
        up = model.bias.copy()
        dn = model.bias.copy()
        up[i] += eps
        dn[i] -= eps
        gb[i] = (loss_at(model.weights, up) - loss_at(model.weights, dn)) / (2 * eps)
    return gw, gb


def _separable_dataset(n_per_class=40, d=16, seed=2):
    rng = np.random.Generator(np.random.PCG64(seed))
    centers = rng.normal(size=(5, d))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    data = []
    for c in range(5):
        for _ in range(n_per_class):
            e = centers[c] + rng.normal(scale=0.05, size=d)
            data.append((e / np.linalg.norm(e), DocClass(c)))
    perm = rng.permutation(len(data))
    return [data[i] for i in perm]


class TestTrain:
    def test_epochs_zero_returns_zero_model(self):
        data = _separable_dataset(4)
        model = train_linear(data, LinearHyperparams(epochs=0))
        assert np.all(model.weights == 0) and np.all(model.bias == 0)

    def test_separable_data_perfect_heldout(self):
        data = _separable_dataset(40)
        train, test = data[:150], data[150:]
        model = train_linear(train, LinearHyperparams(epochs=50, seed=3))
        assert all(forward(model, e).predicted == y for e, y in test)

    def test_loss_non_increasing_full_batch(self):
        data = _separable_dataset(10)
        hp = LinearHyperparams(learning_rate=0.05, epochs=1, batch_size=len(data), seed=0)
        model = LinearModel.zeros(16, hp)
        losses = []
        for _ in range(30):
            loss, gw, gb = loss_and_grad(model, data)
            losses.append(loss)
            model.weights -= hp.learning_rate * gw
            model.bias -= hp.learning_rate * gb
        for before, after in zip(losses, losses[1:]):
            assert after <= before + 1e-6

    def test_training_determinism(self):
        data = _separable_dataset(10)
        m1 = train_linear(data, LinearHyperparams(epochs=5, seed=9))
        m2 = train_linear(data, LinearHyperparams(epochs=5, seed=9))
        loss1 = loss_and_grad(m1, data)[0]
        loss2 = loss_and_grad(m2, data)[0]
        assert abs(loss1 - loss2) <= 1e-12
        assert np.array_equal(m1.weights, m2.weights)

    def test_divergence_detection(self):
        data = [(np.full(4, 1e150), DocClass.EXCLUDED)] * 4
        with pytest.raises((DivergenceError, FloatingPointError)):
            train_linear(data, LinearHyperparams(learning_rate=1e200, epochs=5, batch_size=2))

    def test_empty_dataset(self):
        with pytest.raises(ValueError):
            train_linear([], LinearHyperparams())


def test_save_load_roundtrip(tmp_path):
    data = _separable_dataset(5)
    model = train_linear(data, LinearHyperparams(epochs=3, seed=1))
    path = tmp_path / "linear.json"
    save_linear(model, path)
    loaded = load_linear(path)
    assert np.array_equal(loaded.weights, model.weights)
    assert np.array_equal(loaded.bias, model.bias)
    assert loaded.hyperparams == model.hyperparams
