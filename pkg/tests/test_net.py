import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from survnet import net
from survnet.errors import ConfigError, NumericError, ShapeError, TrainingDiverged


def random_model(rng, dims, head):
    model = net.NetworkModel.initialize(dims, head, seed=int(rng.integers(2**31)))
    for b in model.biases:
        b[:] = rng.normal(scale=0.1, size=b.shape)
    return model


def random_targets(rng, m, k, head):
    if head == net.SOFTMAX:
        return np.eye(k)[rng.integers(0, k, size=m)]
    return rng.normal(size=(m, k))


def finite_difference(model, x, y, h=1e-5):
    grad = np.empty_like(x)
    for j in range(x.size):
        up, down = x.copy(), x.copy()
        up[j] += h
        down[j] -= h
        lu = net.loss(net.forward(model, up[None]), y[None], model.output_head)
        ld = net.loss(net.forward(model, down[None]), y[None], model.output_head)
        grad[j] = (lu - ld) / (2 * h)
    return grad


def linear_unit(beta, bias=0.0):
    W = np.asarray(beta, dtype=np.float64).reshape(-1, 1)
    return net.NetworkModel([W], [np.array([bias])], output_head=net.IDENTITY)


class TestForward:
    def test_zero_softmax_is_uniform(self):
        model = net.NetworkModel([np.zeros((3, 2))], [np.zeros(2)])
        out = net.forward(model, np.random.default_rng(0).normal(size=(5, 3)))
        np.testing.assert_array_equal(out, 0.5)

    def test_single_linear_unit(self):
        assert net.forward(linear_unit([1, 2]), [[1, 0]])[0, 0] == 1.0

    def test_dead_relu_layer_gives_bias_path(self):
        W1 = -np.ones((2, 3))
        b1 = np.zeros(3)
        W2 = np.arange(6.0).reshape(3, 2)
        b2 = np.array([0.3, -0.7])
        model = net.NetworkModel([W1, W2], [b1, b2], output_head=net.IDENTITY)
        out = net.forward(model, np.abs(np.random.default_rng(1).normal(size=(4, 2))))
        np.testing.assert_array_equal(out, np.tile(b2, (4, 1)))

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(2)
        model = random_model(rng, [10, 7, 4], net.SOFTMAX)
        out = net.forward(model, rng.normal(scale=20, size=(50, 10)))
        assert np.all(out >= 0)
        np.testing.assert_allclose(out.sum(axis=1), 1.0, rtol=0, atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            net.forward(linear_unit([1, 2]), np.zeros((3, 5)))

    def test_weight_chain_checked(self):
        with pytest.raises(ShapeError):
            net.NetworkModel([np.zeros((3, 4)), np.zeros((5, 2))], [np.zeros(4), np.zeros(2)])

    def test_initialize_shapes_and_bounds(self):
        model = net.NetworkModel.initialize([784, 40, 20, 2], seed=3)
        assert model.layer_dims == [784, 40, 20, 2]
        for W, b in zip(model.weights, model.biases):
            limit = math.sqrt(6 / sum(W.shape))
            assert np.abs(W).max() <= limit
            assert not b.any()


class TestLoss:
    def test_perfect_prediction(self):
        assert net.loss(np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]]), net.SOFTMAX) <= 1e-12

    def test_uniform_prediction(self):
        value = net.loss(np.array([[0.5, 0.5]]), np.array([[1.0, 0.0]]), net.SOFTMAX)
        assert value == pytest.approx(math.log(2), abs=1e-15)

    def test_half_squared_error(self):
        assert net.loss(np.array([[1.0]]), np.array([[3.0]]), net.IDENTITY) == 2.0

    def test_confident_mistake_is_clamped(self):
        value = net.loss(np.array([[0.0, 1.0]]), np.array([[1.0, 0.0]]), net.SOFTMAX)
        assert value == pytest.approx(-math.log(net.LOG_CLAMP))

    def test_non_finite_rejected(self):
        with pytest.raises(NumericError):
            net.loss(np.array([[np.nan]]), np.array([[0.0]]), net.IDENTITY)

    @given(st.integers(0, 10**6))
    @settings(max_examples=30, deadline=None)
    def test_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        for head in net.HEADS:
            model = random_model(rng, [4, 5, 3], head)
            X = rng.normal(size=(6, 4))
            Y = random_targets(rng, 6, 3, head)
            assert net.loss(net.forward(model, X), Y, head) >= 0


class TestInputGradients:
    def test_linear_closed_form(self):
        g = net.input_gradients(linear_unit([2, -1]), [[1, 1]], [[3]])
        np.testing.assert_array_equal(g, [[-4.0, 2.0]])

    def test_duplicated_sample(self):
        rng = np.random.default_rng(4)
        model = random_model(rng, [6, 5, 3], net.SOFTMAX)
        x = rng.normal(size=(1, 6))
        y = np.eye(3)[[1]]
        g = net.input_gradients(model, np.vstack([x, x]), np.vstack([y, y]))
        np.testing.assert_array_equal(g[0], g[1])

    def test_mnist_sized_model_matches_finite_difference(self):
        rng = np.random.default_rng(5)
        model = random_model(rng, [784, 40, 20, 2], net.SOFTMAX)
        x = rng.uniform(size=784)
        y = np.array([0.0, 1.0])
        g = net.input_gradients(model, x[None], y[None])[0]
        fd = finite_difference(model, x, y)
        scale = np.abs(g).max()
        np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-5 * scale)

    def test_per_sample_not_batch_mean(self):
        rng = np.random.default_rng(6)
        model = random_model(rng, [3, 4, 1], net.IDENTITY)
        X = rng.normal(size=(5, 3))
        Y = rng.normal(size=(5, 1))
        batch = net.input_gradients(model, X, Y)
        for i in range(5):
            np.testing.assert_allclose(batch[i], net.input_gradients(model, X[i:i + 1], Y[i:i + 1])[0],
                                       rtol=1e-12, atol=1e-15)

    def test_targets_shape_checked(self):
        with pytest.raises(ShapeError):
            net.input_gradients(linear_unit([1, 1]), [[1, 1]], [[1, 2]])

    def test_column_permutation_equivariance(self):
        rng = np.random.default_rng(7)
        model = random_model(rng, [6, 5, 3], net.SOFTMAX)
        X = rng.normal(size=(8, 6))
        Y = random_targets(rng, 8, 3, net.SOFTMAX)
        perm = rng.permutation(6)
        permuted = model.copy()
        permuted.weights[0] = model.weights[0][perm]
        out_a, out_b = net.forward(model, X), net.forward(permuted, X[:, perm])
        # permuting W's rows reorders the matmul summation: equal up to rounding
        np.testing.assert_allclose(out_a, out_b, rtol=1e-13, atol=1e-15)
        assert net.loss(out_a, Y, model.output_head) == pytest.approx(
            net.loss(out_b, Y, model.output_head), rel=1e-13)
        ga = net.input_gradients(model, X, Y)
        gb = net.input_gradients(permuted, X[:, perm], Y)
        np.testing.assert_allclose(ga[:, perm], gb, rtol=1e-12, atol=1e-15)


def toy_classification(seed=0, n=200):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    y = (X[:, 0] + X[:, 1] > 0).astype(int)
    return X, np.eye(2)[y]


class TestTrain:
    def test_separable_toy_learns(self):
        X, Y = toy_classification()
        model = net.NetworkModel.initialize([2, 8, 2], seed=0)
        trained, hist = net.train(model, X[:140], Y[:140], X[140:], Y[140:],
                                  net.TrainConfig(batch_size=20, max_epochs=100))
        final = net.loss(net.forward(trained, X[:140]), Y[:140], net.SOFTMAX)
        assert final < math.log(2)
        assert final < 0.3

    def test_noise_regression_reaches_half_variance(self):
        # targets independent of inputs: the best predictor is the mean,
        # whose half squared error equals half the variance of y
        rng = np.random.default_rng(1)
        X = rng.normal(size=(3000, 3))
        y = 5 + 2 * rng.normal(size=(3000, 1))
        model = net.NetworkModel.initialize([3, 8, 1], net.IDENTITY, seed=1)
        trained, hist = net.train(model, X[:2000], y[:2000], X[2000:], y[2000:],
                                  net.TrainConfig(learning_rate=0.01, min_delta=0.0))
        target = 0.5 * y[2000:].var()
        assert abs(hist.val_loss[hist.best_epoch] - target) / target < 0.10

    def test_deterministic(self):
        X, Y = toy_classification(3)
        model = net.NetworkModel.initialize([2, 5, 2], seed=9)
        cfg = net.TrainConfig(batch_size=16, max_epochs=15, shuffle_seed=11)
        a, ha = net.train(model, X[:150], Y[:150], X[150:], Y[150:], cfg)
        b, hb = net.train(model, X[:150], Y[:150], X[150:], Y[150:], cfg)
        assert ha.val_loss == hb.val_loss and ha.train_loss == hb.train_loss
        for Wa, Wb in zip(a.weights + a.biases, b.weights + b.biases):
            np.testing.assert_array_equal(Wa, Wb)

    def test_input_model_untouched(self):
        X, Y = toy_classification(4)
        model = net.NetworkModel.initialize([2, 5, 2], seed=2)
        before = model.copy()
        net.train(model, X[:150], Y[:150], X[150:], Y[150:], net.TrainConfig(max_epochs=3, patience=3))
        for a, b in zip(model.weights, before.weights):
            np.testing.assert_array_equal(a, b)

    def test_returns_best_validation_snapshot(self):
        X, Y = toy_classification(5, n=120)
        model = net.NetworkModel.initialize([2, 30, 2], seed=5)
        # tiny training set and a large step: validation loss oscillates
        trained, hist = net.train(model, X[:20], Y[:20], X[20:], Y[20:],
                                  net.TrainConfig(batch_size=5, learning_rate=0.5,
                                                  max_epochs=60, patience=60))
        best = int(np.argmin(hist.val_loss))
        assert hist.best_epoch == best
        got = net.loss(net.forward(trained, X[20:]), Y[20:], net.SOFTMAX)
        assert got == pytest.approx(min(hist.val_loss), rel=1e-12)

    def test_patience_stops_early(self):
        X, Y = toy_classification(6)
        model = net.NetworkModel.initialize([2, 5, 2], seed=6)
        _, hist = net.train(model, X[:150], Y[:150], X[150:], Y[150:],
                            net.TrainConfig(batch_size=10, max_epochs=200, patience=2, min_delta=0.5))
        assert hist.epochs < 200

    def test_divergence_names_epoch(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(100, 3))
        y = 1e6 * rng.normal(size=(100, 1))
        model = net.NetworkModel.initialize([3, 4, 1], net.IDENTITY, seed=0)
        with pytest.raises(TrainingDiverged) as info:
            net.train(model, X[:80], y[:80], X[80:], y[80:],
                      net.TrainConfig(batch_size=10, learning_rate=10.0, max_epochs=50))
        assert info.value.epoch >= 1
        assert "epoch" in str(info.value)

    def test_empty_split_rejected(self):
        model = net.NetworkModel.initialize([2, 2], seed=0)
        with pytest.raises(ConfigError):
            net.train(model, np.zeros((10, 2)), np.eye(2)[[0] * 10], np.zeros((0, 2)),
                      np.zeros((0, 2)), net.TrainConfig(batch_size=5))

    @pytest.mark.parametrize("kwargs", [{"batch_size": 0}, {"learning_rate": 0.0},
                                        {"patience": 10, "max_epochs": 5}])
    def test_bad_config(self, kwargs):
        with pytest.raises(ConfigError):
            net.TrainConfig(**kwargs)


class TestDropInputColumns:
    def test_keep_all_is_identity(self):
        model = net.NetworkModel.initialize([5, 4, 2], seed=0)
        same = net.drop_input_columns(model, range(5))
        for a, b in zip(model.weights + model.biases, same.weights + same.biases):
            np.testing.assert_array_equal(a, b)

    def test_keep_first(self):
        model = net.NetworkModel.initialize([3, 4, 2], seed=1)
        reduced = net.drop_input_columns(model, [0])
        assert reduced.weights[0].shape == (1, 4)
        np.testing.assert_array_equal(reduced.weights[0][0], model.weights[0][0])
        np.testing.assert_array_equal(reduced.weights[1], model.weights[1])

    @given(st.integers(0, 10**6))
    @settings(max_examples=40, deadline=None)
    def test_equals_zeroed_inputs(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 9))
        model = random_model(rng, [d, 5, 3], net.SOFTMAX)
        model.biases[0][:] = 0.0
        keep = np.sort(rng.choice(d, size=int(rng.integers(1, d + 1)), replace=False))
        X = rng.normal(size=(7, d))
        zeroed = np.zeros_like(X)
        zeroed[:, keep] = X[:, keep]
        reduced = net.drop_input_columns(model, keep)
        np.testing.assert_allclose(net.forward(reduced, X[:, keep]),
                                   net.forward(model, zeroed), rtol=1e-12, atol=1e-15)

    @pytest.mark.parametrize("keep", [[], [1, 0], [0, 0], [5]])
    def test_invalid_keep(self, keep):
        model = net.NetworkModel.initialize([3, 2], seed=0)
        with pytest.raises(ConfigError):
            net.drop_input_columns(model, keep)
