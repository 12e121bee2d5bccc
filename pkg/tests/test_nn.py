import numpy as np
import pytest

from chaosvae.errors import InputError, NonFiniteInput, ShapeMismatch, StaleCache
from chaosvae.nn import (ACTIVATIONS, Adam, DenseLayer, MLP, SGD, activation_name,
                         grad_check, load_stacks, make_optimizer, save_stacks)


def loop_forward(layer, x):
    """Straight-line reimplementation of one dense layer."""
    out = np.zeros((x.shape[0], layer.out_dim))
    f = ACTIVATIONS[layer.activation][0]
    for r in range(x.shape[0]):
        for j in range(layer.out_dim):
            acc = layer.biases[j]
            for i in range(layer.in_dim):
                acc += layer.weights[j, i] * x[r, i]
            out[r, j] = f(np.array(acc))
    return out


def sum_sq_loss(net, batch):
    out = net.forward(batch)
    grads, _ = net.backward(out)
    return 0.5 * np.sum(out ** 2), grads


def random_stack(rng, widths, activation):
    net = MLP.build(widths, activation, "identity", rng)
    for layer in net.layers:
        layer.biases = rng.normal(0.0, 0.1, layer.out_dim)
    return net


class TestForward:
    def test_identity_layer(self):
        layer = DenseLayer(3, 3, "identity")
        layer.weights = np.eye(3)
        x = np.array([[0.1, -2.0, 3.5]])
        np.testing.assert_array_equal(MLP([layer]).forward(x), x)

    def test_relu_sign_case(self):
        layer = DenseLayer(2, 1, "relu")
        layer.weights = np.array([[1.0, -1.0]])
        assert MLP([layer]).forward(np.array([[2.0, 3.0]]))[0, 0] == 0.0

    @pytest.mark.parametrize("act", ["relu", "tanh", "leaky_relu", "identity"])
    def test_matches_loops(self, act):
        rng = np.random.default_rng(1)
        layer = DenseLayer(4, 3, act, rng)
        layer.biases = rng.normal(size=3)
        x = rng.normal(size=(5, 4))
        np.testing.assert_allclose(layer.forward(x), loop_forward(layer, x), rtol=1e-13)

    def test_leaky_slope(self):
        f = ACTIVATIONS["leaky_relu"][0]
        np.testing.assert_allclose(f(np.array([-2.0, 3.0])), [-0.02, 3.0])

    def test_shape_errors(self):
        net = MLP.build([3, 2], "relu", rng=np.random.default_rng(0))
        with pytest.raises(ShapeMismatch):
            net.forward(np.zeros((2, 4)))
        with pytest.raises(ShapeMismatch):
            net.forward(np.zeros(3))

    def test_non_finite(self):
        net = MLP.build([2, 2], "relu", rng=np.random.default_rng(0))
        with pytest.raises(NonFiniteInput):
            net.forward(np.array([[np.nan, 0.0]]))

    def test_glorot_bounds(self):
        layer = DenseLayer(30, 20, "tanh", np.random.default_rng(0))
        limit = np.sqrt(6.0 / 50.0)
        assert np.abs(layer.weights).max() <= limit
        assert np.all(layer.biases == 0.0)

    def test_activation_aliases(self):
        assert activation_name("leakyRelu") == "leaky_relu"
        assert activation_name("TANH") == "tanh"
        with pytest.raises(InputError):
            activation_name("softmax")


class TestBackward:
    def test_linear_scalar(self):
        layer = DenseLayer(3, 1, "identity")
        layer.weights = np.array([[0.5, -1.0, 2.0]])
        x = np.array([[1.0, 2.0, 3.0]])
        layer.forward(x)
        gw, gb, gx = layer.backward(np.ones((1, 1)))
        np.testing.assert_array_equal(gw, x)
        np.testing.assert_array_equal(gb, [1.0])
        np.testing.assert_array_equal(gx, layer.weights)

    def test_tanh_slope_at_zero(self):
        assert ACTIVATIONS["tanh"][1](np.array(0.0)) == 1.0

    def test_stale_cache(self):
        layer = DenseLayer(2, 2, "relu", np.random.default_rng(0))
        layer.forward(np.ones((1, 2)))
        layer.backward(np.ones((1, 2)))
        with pytest.raises(StaleCache):
            layer.backward(np.ones((1, 2)))

    def test_dead_relu_gives_zero_grads(self):
        layer = DenseLayer(2, 2, "relu")
        layer.weights = -np.ones((2, 2))
        layer.forward(np.ones((3, 2)))
        gw, gb, gx = layer.backward(np.ones((3, 2)))
        assert not gw.any() and not gb.any() and not gx.any()

    @pytest.mark.parametrize("act", ["relu", "tanh", "leaky_relu"])
    def test_finite_difference(self, act):
        rng = np.random.default_rng(5)
        net = random_stack(rng, [4, 6, 5, 3], act)
        batch = rng.normal(size=(7, 4))
        assert grad_check(net, sum_sq_loss, batch) < 1e-7

    @pytest.mark.parametrize("seed", range(20))
    def test_random_depths(self, seed):
        rng = np.random.default_rng(100 + seed)
        depth = 2 + seed % 6
        widths = [int(w) for w in rng.integers(1, 33, depth + 1)]
        widths[0] = min(widths[0], 8)
        act = ("relu", "tanh", "leaky_relu")[seed % 3]
        net = random_stack(rng, widths, act)
        assert grad_check(net, sum_sq_loss, rng.normal(size=(2, widths[0]))) < 1e-5

    def test_dead_unit_numeric_zero(self):
        rng = np.random.default_rng(7)
        net = random_stack(rng, [3, 4, 2], "relu")
        net.layers[0].biases[1] = -100.0
        batch = rng.uniform(size=(5, 3))
        _, grads = sum_sq_loss(net, batch)
        assert not grads[0][1].any()
        h = 1e-5
        w = net.layers[0].weights
        for i in range(3):
            w[1, i] += h
            up = sum_sq_loss(net, batch)[0]
            w[1, i] -= 2 * h
            down = sum_sq_loss(net, batch)[0]
            w[1, i] += h
            assert up == down

    def test_input_gradient(self):
        rng = np.random.default_rng(2)
        net = random_stack(rng, [3, 4, 2], "tanh")
        x = rng.normal(size=(1, 3))
        out = net.forward(x)
        _, gx = net.backward(out)
        h = 1e-6
        for i in range(3):
            d = np.zeros_like(x)
            d[0, i] = h
            up = 0.5 * np.sum(net.forward(x + d) ** 2)
            down = 0.5 * np.sum(net.forward(x - d) ** 2)
            assert gx[0, i] == pytest.approx((up - down) / (2 * h), rel=1e-6)

    def test_zero_layer_grad_check(self):
        net = MLP([])
        assert grad_check(net, lambda n, b: (float(np.sum(b)), []), np.ones((2, 2))) == 0.0

    def test_grad_check_restores_params(self):
        rng = np.random.default_rng(9)
        net = random_stack(rng, [3, 3, 2], "relu")
        before = [p.copy() for p in net.parameters()]
        grad_check(net, sum_sq_loss, rng.normal(size=(4, 3)))
        for a, b in zip(before, net.parameters()):
            assert b.dtype == np.float64
            np.testing.assert_array_equal(a, b)


class TestOptimizers:
    def test_sgd_plain_step(self):
        p = np.array([1.0])
        SGD(0.1).step([p], [np.array([2.0])])
        assert p[0] == pytest.approx(0.8, abs=1e-15)

    def test_sgd_momentum_accumulates(self):
        p = np.array([0.0])
        opt = SGD(0.1, momentum=0.5)
        opt.step([p], [np.array([1.0])])
        opt.step([p], [np.array([1.0])])
        # v1 = -0.1, v2 = 0.5 * -0.1 - 0.1 = -0.15
        assert p[0] == pytest.approx(-0.25)

    def test_sgd_zero_gradient_decays_velocity(self):
        p = np.array([1.0])
        opt = SGD(0.1, momentum=0.5)
        opt.step([p], [np.array([1.0])])
        opt.step([p], [np.array([0.0])])
        assert opt.velocity[0][0] == pytest.approx(-0.05)
        assert p[0] == pytest.approx(1.0 - 0.1 - 0.05)
        q = np.array([2.0])
        SGD(0.1, momentum=0.5).step([q], [np.array([0.0])])
        assert q[0] == 2.0

    @pytest.mark.parametrize("g", [1.0, -3.0, 1e-3, 250.0])
    def test_adam_first_step(self, g):
        lr = 0.001
        p = np.array([0.5])
        Adam(lr).step([p], [np.array([g])])
        delta = abs(p[0] - 0.5)
        assert 0.9 * lr < delta <= lr
        assert np.sign(0.5 - p[0]) == np.sign(g)

    @pytest.mark.parametrize("kind", ["sgd", "adam"])
    def test_zero_lr_is_neutral(self, kind):
        rng = np.random.default_rng(0)
        params = [rng.normal(size=(3, 2)), rng.normal(size=3)]
        before = [p.copy() for p in params]
        opt = make_optimizer(kind, 0.0, 0.9)
        for _ in range(3):
            opt.step(params, [rng.normal(size=p.shape) for p in params])
        for a, b in zip(before, params):
            np.testing.assert_array_equal(a, b)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            SGD(0.1).step([np.zeros(2)], [np.zeros(3)])

    def test_unknown_optimizer(self):
        with pytest.raises(InputError):
            make_optimizer("rmsprop", 0.1)

    def test_toy_regression_learns(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(-1, 1, size=(64, 2))
        y = np.sin(x[:, :1]) + x[:, 1:] ** 2
        net = MLP.build([2, 16, 1], "tanh", rng=rng)
        opt = Adam(0.01)
        losses = []
        for _ in range(300):
            out = net.forward(x)
            losses.append(np.mean((out - y) ** 2))
            grads, _ = net.backward(2.0 * (out - y) / y.size)
            opt.step(net.parameters(), grads)
        assert losses[-1] < 0.1 * losses[0]


    def test_toy_linear_regression_sgd(self):
        rng = np.random.default_rng(8)
        x = rng.uniform(-1, 1, size=(100, 3))
        y = x @ np.array([[1.5], [-2.0], [0.5]]) + 0.3
        net = MLP.build([3, 1], "identity", rng=rng)
        opt = SGD(0.1, momentum=0.005)
        first = None
        for _ in range(200):
            out = net.forward(x)
            current = np.mean((out - y) ** 2)
            first = current if first is None else first
            grads, _ = net.backward(2.0 * (out - y) / y.size)
            opt.step(net.parameters(), grads)
        assert current < 0.1 * first


class TestPersistence:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(4)
        enc = random_stack(rng, [5, 4, 4], "leaky_relu")
        dec = random_stack(rng, [2, 3, 5], "tanh")
        path = tmp_path / "m.npz"
        save_stacks(path, {"enc": enc, "dec": dec}, {"note": "x"})
        stacks, meta = load_stacks(path)
        assert meta == {"note": "x"}
        x = rng.normal(size=(6, 5))
        assert stacks["enc"].forward(x).tobytes() == enc.forward(x).tobytes()
        assert stacks["dec"].spec() == dec.spec()

    def test_version_checked(self, tmp_path):
        import json
        path = tmp_path / "m.npz"
        save_stacks(path, {"a": MLP.build([2, 2], "relu", rng=np.random.default_rng(0))})
        with np.load(path) as data:
            arrays = dict(data)
        header = json.loads(bytes(arrays["__header__"]).decode())
        header["format_version"] = 99
        arrays["__header__"] = np.frombuffer(json.dumps(header).encode(), dtype=np.uint8)
        np.savez(path, **arrays)
        with pytest.raises(InputError):
            load_stacks(path)

    def test_build_deterministic(self):
        a = MLP.build([4, 3, 2], "relu", rng=np.random.default_rng(11))
        b = MLP.build([4, 3, 2], "relu", rng=np.random.default_rng(11))
        for p, q in zip(a.parameters(), b.parameters()):
            np.testing.assert_array_equal(p, q)
        assert a.n_parameters() == 4 * 3 + 3 + 3 * 2 + 2
