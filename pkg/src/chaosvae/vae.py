"""Variational autoencoder with a pluggable latent noise source.

The encoder maps a row to ``(mu, log_var)``; the latent code is
``Z = mu + exp(log_var / 2) * eps`` where ``eps`` comes either from a
standard normal generator (the baseline VAE) or from the logistic map
(the chaotic VAE).  Everything else, including the KL term against a
standard normal prior, is shared between the two.
"""

from dataclasses import asdict, dataclass, field
import math

import numpy as np

from .chaos import (DEFAULT_BURN_IN, DEFAULT_LAMBDA, ChaoticGenerator,
                    NoiseTransform, draw_seed, sample_noise)
from .errors import InputError, NonFiniteLoss, ShapeMismatch
from .nn import MLP, activation_name, load_stacks, make_optimizer, save_stacks

LOG_VAR_CLAMP = 10.0

PRESET_GRID = {
    "learning_rate": [0.001, 0.0005],
    "momentum": [0.005, 0.007, 0.009],
    "epochs": [50, 75, 100, 250, 150],
    "activation": ["relu", "tanh", "leaky_relu"],
    "optimizer": ["adam", "sgd"],
    "total_layers": [5, 7],
}


class GaussianNoise:
    kind = "gaussian"

    def __init__(self, rng):
        self.rng = rng

    def sample(self, shape):
        return self.rng.standard_normal(shape)

    def config(self):
        return {"kind": self.kind}


class ChaoticNoise:
    kind = "chaotic"

    def __init__(self, generator, transform=NoiseTransform.RAW):
        self.generator = generator
        self.transform = NoiseTransform(transform)

    def sample(self, shape):
        return sample_noise(self.generator, self.transform, shape)

    def config(self):
        g = self.generator
        return {"kind": self.kind, "seed": g.seed, "lambda": g.lam,
                "burn_in": g.burn_in, "transform": self.transform.value}


@dataclass
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 0.001
    momentum: float = 0.009
    activation: str = "relu"
    optimizer: str = "adam"
    total_layers: int = 5
    batch_size: int = 64
    latent_dim: int = 2
    noise: str = "gaussian"
    init_seed: int = 0
    chaos_seed: float = None
    chaos_lambda: float = DEFAULT_LAMBDA
    chaos_burn_in: int = DEFAULT_BURN_IN
    chaos_transform: str = "raw"

    def __post_init__(self):
        self.activation = activation_name(self.activation)
        self.optimizer = str(self.optimizer).lower()
        self.noise = {"vae": "gaussian", "cvae": "chaotic"}.get(
            str(self.noise).lower(), str(self.noise).lower())
        if self.noise not in ("gaussian", "chaotic"):
            raise InputError(f"unknown noise source {self.noise!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise InputError(f"unknown optimizer {self.optimizer!r}")
        if self.epochs < 0 or self.batch_size < 1 or self.latent_dim < 1:
            raise InputError("epochs >= 0, batch_size >= 1, latent_dim >= 1 required")
        if self.total_layers < 2:
            raise InputError("total_layers must be >= 2")
        if self.learning_rate < 0:
            raise InputError("learning_rate must be non-negative")
        NoiseTransform(self.chaos_transform)

    def to_dict(self):
        return asdict(self)


def _stream(init_seed, purpose):
    keys = {"init": 0, "shuffle": 1, "noise": 2}
    return np.random.default_rng(np.random.SeedSequence([int(init_seed), keys[purpose]]))


def layer_widths(n_features, latent_dim, total_layers):
    """Layer widths for encoder and decoder.

    The encoder gets ``ceil(total_layers / 2)`` layers (hidden layers plus the
    ``2 * latent_dim`` head) and the decoder the rest.  Hidden widths taper
    geometrically between the feature count and the latent size.
    """
    n_enc = math.ceil(total_layers / 2)
    n_dec = total_layers - n_enc

    def taper(start, stop, n):
        return [max(1, round(start * (stop / start) ** (i / n))) for i in range(1, n)]

    enc = [n_features] + taper(n_features, latent_dim, n_enc) + [2 * latent_dim]
    dec = [latent_dim] + taper(latent_dim, n_features, n_dec) + [n_features]
    return enc, dec


def make_noise(config):
    if config.noise == "gaussian":
        return GaussianNoise(_stream(config.init_seed, "noise"))
    seed = config.chaos_seed
    if seed is None:
        seed = draw_seed(_stream(config.init_seed, "noise"), config.chaos_lambda)
    gen = ChaoticGenerator(seed, config.chaos_lambda, config.chaos_burn_in)
    return ChaoticNoise(gen, config.chaos_transform)


class VaeModel:
    def __init__(self, encoder, decoder, latent_dim, noise=None):
        if encoder.out_dim != 2 * latent_dim or decoder.in_dim != latent_dim:
            raise ShapeMismatch("encoder must emit 2*latent_dim, decoder take latent_dim")
        if encoder.in_dim != decoder.out_dim:
            raise ShapeMismatch("encoder input and decoder output widths differ")
        self.encoder = encoder
        self.decoder = decoder
        self.latent_dim = latent_dim
        self.noise = noise

    @classmethod
    def build(cls, n_features, config, noise=None):
        """Fresh model with Glorot-initialised weights drawn from ``config.init_seed``."""
        enc_w, dec_w = layer_widths(n_features, config.latent_dim, config.total_layers)
        rng = _stream(config.init_seed, "init")
        encoder = MLP.build(enc_w, config.activation, "identity", rng)
        decoder = MLP.build(dec_w, config.activation, "identity", rng)
        return cls(encoder, decoder, config.latent_dim,
                   make_noise(config) if noise is None else noise)

    @property
    def n_features(self):
        return self.encoder.in_dim

    @property
    def layers(self):
        return self.encoder.layers + self.decoder.layers

    def parameters(self):
        return self.encoder.parameters() + self.decoder.parameters()

    def encode(self, batch):
        out = self.encoder.forward(batch)
        z = self.latent_dim
        self._raw_log_var = out[:, z:]
        return out[:, :z], np.clip(out[:, z:], -LOG_VAR_CLAMP, LOG_VAR_CLAMP)

    def decode(self, latent):
        return self.decoder.forward(latent)

    def loss_and_grads(self, batch, eps):
        """Forward and backward pass on one minibatch with fixed noise ``eps``.

        Returns ``((total, mse, kl), grads)`` with ``grads`` aligned to
        :meth:`parameters`.
        """
        mu, log_var = self.encode(batch)
        if eps.shape != mu.shape:
            raise ShapeMismatch(f"noise shape {eps.shape} != latent shape {mu.shape}")
        sigma = np.exp(0.5 * log_var)
        latent = mu + sigma * eps
        recon = self.decode(latent)
        parts = loss(batch, recon, mu, log_var)

        b = batch.shape[0]
        d_recon = -2.0 * (batch - recon) / batch.size
        dec_grads, d_latent = self.decoder.backward(d_recon)
        d_mu = d_latent + mu / b
        d_log_var = d_latent * eps * 0.5 * sigma - 0.5 * (1.0 - np.exp(log_var)) / b
        raw = self._raw_log_var
        d_log_var = d_log_var * ((raw >= -LOG_VAR_CLAMP) & (raw <= LOG_VAR_CLAMP))
        enc_grads, _ = self.encoder.backward(np.hstack([d_mu, d_log_var]))
        return parts, enc_grads + dec_grads

    def reconstruct(self, X):
        """Noise-free reconstruction using ``Z = mu``."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeMismatch(f"expected (m, {self.n_features}), got {X.shape}")
        mu, _ = self.encode(X)
        return self.decode(mu)


def reparameterize(mu, log_var, noise):
    mu, log_var, noise = (np.asarray(a, dtype=float) for a in (mu, log_var, noise))
    if not mu.shape == log_var.shape == noise.shape:
        raise ShapeMismatch("mu, log_var and noise must share a shape")
    return mu + np.exp(0.5 * log_var) * noise


def kl_divergence(mu, log_var):
    """Batch-mean KL(N(mu, exp(log_var)) || N(0, I))."""
    per_row = -0.5 * np.sum(1.0 + log_var - mu ** 2 - np.exp(log_var), axis=1)
    return per_row.mean()


def loss(X, X_recon, mu, log_var):
    """``(total, mse, kl)`` with mean-reduced MSE and batch-mean KL.

    Values are numpy scalars in the operands' precision.
    """
    X, X_recon = np.asarray(X), np.asarray(X_recon)
    mu, log_var = np.atleast_2d(mu), np.atleast_2d(log_var)
    if X.shape != X_recon.shape or mu.shape != log_var.shape:
        raise ShapeMismatch("loss operands have mismatched shapes")
    mse = np.mean((X - X_recon) ** 2)
    kl = kl_divergence(mu, log_var)
    return mse + kl, mse, kl


def train(model, X_train, config):
    """Minibatch training on normal-class rows.

    Returns ``(model, trace)`` where ``trace[k]`` is the row-weighted mean
    total loss of epoch ``k``.  The model is updated in place.
    """
    X = np.asarray(X_train, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ShapeMismatch(f"expected (n, {model.n_features}), got {X.shape}")
    if X.shape[0] == 0:
        raise InputError("training set is empty")
    optimizer = make_optimizer(config.optimizer, config.learning_rate, config.momentum)
    rng = _stream(config.init_seed, "shuffle")
    params = model.parameters()
    trace = []
    # divergence is caught by the finiteness checks below, not by warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, config.epochs + 1):
            trace.append(_epoch(model, X, config, optimizer, params, rng, epoch))
    return model, trace


def _epoch(model, X, config, optimizer, params, rng, epoch):
    """One shuffled pass over ``X``; returns the row-weighted mean total loss."""
    n, bs = X.shape[0], config.batch_size
    order = rng.permutation(n)
    running = 0.0
    for start in range(0, n, bs):
        batch = X[order[start:start + bs]]
        eps = model.noise.sample((batch.shape[0], model.latent_dim))
        (total, _, _), grads = model.loss_and_grads(batch, eps)
        if not math.isfinite(total):
            raise NonFiniteLoss(f"loss became {total} in epoch {epoch}", epoch)
        optimizer.step(params, grads)
        running += float(total) * batch.shape[0]
    if not all(np.all(np.isfinite(p)) for p in params):
        raise NonFiniteLoss(f"parameters became non-finite in epoch {epoch}", epoch)
    return running / n


def save_model(path, model, config=None, pipeline_id=None):
    noise = model.noise.config() if model.noise is not None else None
    header = {"latent_dim": model.latent_dim, "noise": noise,
              "pipeline_id": pipeline_id,
              "train_config": config.to_dict() if config is not None else None}
    save_stacks(path, {"encoder": model.encoder, "decoder": model.decoder}, header)


def load_model(path):
    """Load a model for scoring; returns ``(model, header)``.  No noise source is attached."""
    stacks, header = load_stacks(path)
    model = VaeModel(stacks["encoder"], stacks["decoder"], header["latent_dim"])
    return model, header
