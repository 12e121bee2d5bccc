"""Dense layers, backpropagation and optimizers in float64 numpy.

Only what the encoder/decoder MLPs need: fully connected layers with an
elementwise activation, reverse-mode gradients through a fixed stack,
SGD with momentum and Adam, a central-difference gradient checker, and a
small ``.npz`` container for persisting layer stacks.
"""

import json

import numpy as np

from .errors import InputError, NonFiniteInput, ShapeMismatch, StaleCache

LEAKY_SLOPE = 0.01
FORMAT_VERSION = 1
_HEADER_KEY = "__header__"


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_grad(z):
    return (z > 0.0).astype(z.dtype)


def _leaky(z):
    return np.where(z > 0.0, z, LEAKY_SLOPE * z)


def _leaky_grad(z):
    return np.where(z > 0.0, 1.0, LEAKY_SLOPE)


def _tanh_grad(z):
    return 1.0 - np.tanh(z) ** 2


ACTIVATIONS = {
    "relu": (_relu, _relu_grad),
    "tanh": (np.tanh, _tanh_grad),
    "leaky_relu": (_leaky, _leaky_grad),
    "identity": (lambda z: z, np.ones_like),
}

_ALIASES = {"leakyrelu": "leaky_relu", "leaky": "leaky_relu", "linear": "identity"}


def activation_name(tag):
    name = str(tag).strip().lower()
    name = _ALIASES.get(name.replace("_", ""), name)
    if name not in ACTIVATIONS:
        raise InputError(f"unknown activation {tag!r}")
    return name


class DenseLayer:
    """``y = act(x @ W.T + b)`` with ``W`` of shape (out_dim, in_dim)."""

    def __init__(self, in_dim, out_dim, activation="identity", rng=None):
        self.activation = activation_name(activation)
        rng = np.random.default_rng() if rng is None else rng
        limit = np.sqrt(6.0 / (in_dim + out_dim))
        self.weights = rng.uniform(-limit, limit, size=(out_dim, in_dim))
        self.biases = np.zeros(out_dim)
        self._cache = None

    @property
    def in_dim(self):
        return self.weights.shape[1]

    @property
    def out_dim(self):
        return self.weights.shape[0]

    def forward(self, x):
        z = x @ self.weights.T + self.biases
        self._cache = (x, z)
        return ACTIVATIONS[self.activation][0](z)

    def backward(self, grad_out):
        """Return ``(grad_W, grad_b, grad_input)`` and drop the cache."""
        if self._cache is None:
            raise StaleCache("backward called without a preceding forward")
        x, z = self._cache
        self._cache = None
        dz = grad_out * ACTIVATIONS[self.activation][1](z)
        return dz.T @ x, dz.sum(axis=0), dz @ self.weights

    def __repr__(self):
        return f"DenseLayer({self.in_dim}->{self.out_dim}, {self.activation})"


class MLP:
    """A stack of dense layers.  Parameters are ordered W0, b0, W1, b1, ..."""

    def __init__(self, layers=()):
        self.layers = list(layers)

    @classmethod
    def build(cls, widths, activation, output_activation="identity", rng=None):
        """Stack with ``len(widths) - 1`` layers; the last uses ``output_activation``."""
        rng = np.random.default_rng() if rng is None else rng
        layers = []
        for i, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
            act = output_activation if i == len(widths) - 2 else activation
            layers.append(DenseLayer(a, b, act, rng))
        return cls(layers)

    @property
    def in_dim(self):
        return self.layers[0].in_dim if self.layers else None

    @property
    def out_dim(self):
        return self.layers[-1].out_dim if self.layers else None

    def parameters(self):
        params = []
        for layer in self.layers:
            params += [layer.weights, layer.biases]
        return params

    def n_parameters(self):
        return sum(p.size for p in self.parameters())

    def forward(self, x):
        x = np.asarray(x)
        if x.ndim != 2:
            raise ShapeMismatch(f"expected a 2-d batch, got shape {x.shape}")
        if self.layers and x.shape[1] != self.in_dim:
            raise ShapeMismatch(
                f"input width {x.shape[1]} != first layer in_dim {self.in_dim}"
            )
        if not np.all(np.isfinite(x)):
            raise NonFiniteInput("input batch contains NaN or Inf")
        for layer in self.layers:
            x = layer.forward(x)
        return x

    __call__ = forward

    def backward(self, grad_out):
        """Reverse-mode pass.

        Returns ``(grads, grad_input)`` where ``grads`` aligns with
        :meth:`parameters`.  Parameters are not touched.
        """
        grads = []
        g = grad_out
        for layer in reversed(self.layers):
            gw, gb, g = layer.backward(g)
            grads += [gb, gw]
        grads.reverse()
        return grads, g

    def spec(self):
        return [{"in": l.in_dim, "out": l.out_dim, "activation": l.activation}
                for l in self.layers]

    def __repr__(self):
        return f"MLP({self.layers!r})"


class SGD:
    """``v <- momentum * v - lr * g;  p <- p + v``."""

    kind = "sgd"

    def __init__(self, learning_rate, momentum=0.0):
        if learning_rate < 0:
            raise InputError("learning_rate must be non-negative")
        self.learning_rate = float(learning_rate)
        self.momentum = float(momentum)
        self.velocity = None

    def step(self, params, grads):
        _check_shapes(params, grads)
        if self.velocity is None:
            self.velocity = [np.zeros_like(p) for p in params]
        _check_shapes(params, self.velocity)
        for p, g, v in zip(params, grads, self.velocity):
            v *= self.momentum
            v -= self.learning_rate * g
            p += v


class Adam:
    """Bias-corrected Adam with betas (0.9, 0.999) and eps 1e-8."""

    kind = "adam"

    def __init__(self, learning_rate, beta1=0.9, beta2=0.999, eps=1e-8):
        if learning_rate < 0:
            raise InputError("learning_rate must be non-negative")
        self.learning_rate = float(learning_rate)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = self.v = None

    def step(self, params, grads):
        _check_shapes(params, grads)
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        _check_shapes(params, self.m)
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.learning_rate * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _check_shapes(params, others):
    if len(params) != len(others) or any(
        p.shape != o.shape for p, o in zip(params, others)
    ):
        raise ShapeMismatch("parameter and gradient/state shapes differ")


def make_optimizer(kind, learning_rate, momentum=0.0):
    kind = str(kind).lower()
    if kind == "adam":
        return Adam(learning_rate)
    if kind in ("sgd", "sgd_momentum"):
        return SGD(learning_rate, momentum)
    raise InputError(f"unknown optimizer {kind!r}")


def grad_check(net, loss_fn, batch, h=1e-5, precision=np.longdouble):
    """Max relative error between analytic and central-difference gradients.

    ``net`` exposes ``layers`` (dense layers holding ``weights`` and
    ``biases``) and ``parameters()``.  ``loss_fn(net, batch)`` returns
    ``(loss, grads)`` with ``grads`` aligned to ``net.parameters()``.

    Analytic gradients are taken at the float64 parameters.  The numeric
    side perturbs each entry by +-h with the parameters temporarily promoted
    to ``precision`` (extended by default), so round-off in the difference
    quotient stays well below the gradients being checked.  The error of one
    entry is ``|a - n| / max(|a|, |n|, 1e-8)``.
    """
    _, analytic = loss_fn(net, batch)
    analytic = [np.array(g, dtype=np.float64, copy=True) for g in analytic]
    saved = [(layer.weights, layer.biases) for layer in net.layers]
    for layer in net.layers:
        layer.weights = layer.weights.astype(precision)
        layer.biases = layer.biases.astype(precision)
    step = precision(h)
    worst = 0.0
    try:
        for p, g in zip(net.parameters(), analytic):
            flat = p.reshape(-1)
            gflat = g.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + step
                up = loss_fn(net, batch)[0]
                flat[i] = orig - step
                down = loss_fn(net, batch)[0]
                flat[i] = orig
                num = float((up - down) / (2 * step))
                err = abs(gflat[i] - num) / max(abs(gflat[i]), abs(num), 1e-8)
                worst = max(worst, err)
    finally:
        for layer, (w, b) in zip(net.layers, saved):
            layer.weights, layer.biases = w, b
    return worst


def save_stacks(path, stacks, header=None):
    """Write named MLPs plus a JSON header into an ``.npz`` container.

    The header records ``format_version``, every stack's layer shapes and
    activation tags, and any caller metadata under ``"meta"``.  Arrays are
    stored as ``<stack>/<layer>/W`` and ``<stack>/<layer>/b``.
    """
    meta = {
        "format_version": FORMAT_VERSION,
        "stacks": {name: mlp.spec() for name, mlp in stacks.items()},
        "meta": header or {},
    }
    arrays = {_HEADER_KEY: np.frombuffer(
        json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)}
    for name, mlp in stacks.items():
        for i, layer in enumerate(mlp.layers):
            arrays[f"{name}/{i}/W"] = layer.weights
            arrays[f"{name}/{i}/b"] = layer.biases
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_stacks(path):
    """Inverse of :func:`save_stacks`; returns ``(stacks, meta)``."""
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(bytes(data[_HEADER_KEY]).decode())
        if header.get("format_version") != FORMAT_VERSION:
            raise InputError(
                f"unsupported container version {header.get('format_version')!r}"
            )
        stacks = {}
        for name, spec in header["stacks"].items():
            layers = []
            for i, ls in enumerate(spec):
                layer = DenseLayer(ls["in"], ls["out"], ls["activation"],
                                   np.random.default_rng(0))
                layer.weights = np.array(data[f"{name}/{i}/W"])
                layer.biases = np.array(data[f"{name}/{i}/b"])
                layers.append(layer)
            stacks[name] = MLP(layers)
    return stacks, header["meta"]
