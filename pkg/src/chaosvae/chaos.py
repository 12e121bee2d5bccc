"""Logistic-map noise source.

The map ``x -> lam * (x * (1 - x))`` is iterated in float64.  At ``lam = 4``
the orbit of almost every seed is chaotic and its long-run distribution is
the arcsine law on (0, 1) with mean 1/2 and variance 1/8, which is what the
``standardized`` transform relies on.
"""

from enum import Enum
import math

import numpy as np

from .errors import DegenerateOrbit, EmptySample, InputError, RejectedSeed, SeedExhausted

LAMBDA_MIN = 3.56
DEFAULT_LAMBDA = 4.0
DEFAULT_BURN_IN = 100
PROBE_LEN = 1000
PROBE_EPS = 1e-12
MAX_SEED_ATTEMPTS = 100
SEED_RANGE = (0.01, 0.99)

_ARCSINE_MEAN = 0.5
_ARCSINE_STD = math.sqrt(1.0 / 8.0)


def logistic_step(x, lam=DEFAULT_LAMBDA):
    """One application of the logistic map, no range checks."""
    return lam * (x * (1.0 - x))


def _check_lambda(lam):
    lam = float(lam)
    if not LAMBDA_MIN < lam <= 4.0:
        raise InputError(f"lambda must lie in ({LAMBDA_MIN}, 4], got {lam}")
    return lam


def seed_validate(seed, lam=DEFAULT_LAMBDA, probe_len=PROBE_LEN):
    """Return True if ``seed`` produces a usable chaotic orbit.

    The seed is iterated ``probe_len`` steps.  It is rejected when any iterate
    (seed included) falls outside ``(1e-12, 1 - 1e-12)`` or when two iterates
    coincide to within 1e-12, which catches fixed points such as 0.75 and
    short periodic or pre-periodic orbits such as 0.25 and 0.5.
    """
    if probe_len < 1:
        raise InputError("probe_len must be >= 1")
    lam = _check_lambda(lam)
    x = float(seed)
    orbit = np.empty(probe_len + 1)
    orbit[0] = x
    for i in range(1, probe_len + 1):
        x = lam * (x * (1.0 - x))
        orbit[i] = x
    if orbit.min() <= PROBE_EPS or orbit.max() >= 1.0 - PROBE_EPS:
        return False
    gaps = np.diff(np.sort(orbit))
    return bool(gaps.min() > PROBE_EPS)


def draw_seed(rng, lam=DEFAULT_LAMBDA, probe_len=PROBE_LEN,
              max_attempts=MAX_SEED_ATTEMPTS):
    """Sample seeds uniformly from (0.01, 0.99) until one validates."""
    for _ in range(max_attempts):
        seed = float(rng.uniform(*SEED_RANGE))
        if seed_validate(seed, lam, probe_len):
            return seed
    raise SeedExhausted(
        f"{max_attempts} consecutive seeds rejected at lambda={lam}"
    )


class NoiseTransform(str, Enum):
    """How raw iterates in (0, 1) are mapped before use as latent noise."""

    RAW = "raw"
    STANDARDIZED = "standardized"

    def apply(self, values):
        if self is NoiseTransform.RAW:
            return values
        return (values - _ARCSINE_MEAN) / _ARCSINE_STD


class ChaoticGenerator:
    """Stateful logistic-map iterator.

    Construction validates the seed (unless ``validate=False``) and then
    discards ``burn_in`` iterates.  ``state`` is the most recent iterate and
    ``steps_emitted`` counts values handed out after burn-in.
    """

    def __init__(self, seed, lam=DEFAULT_LAMBDA, burn_in=DEFAULT_BURN_IN,
                 validate=True):
        self.lam = _check_lambda(lam)
        if burn_in < 0:
            raise ValueError("burn_in must be non-negative")
        self.seed = self.state = float(seed)
        self.burn_in = int(burn_in)
        self.steps_emitted = 0
        if validate and not seed_validate(self.seed, self.lam):
            raise RejectedSeed(f"seed {self.seed!r} gives a degenerate orbit")
        if self.burn_in:
            self._iterate(self.burn_in)

    @classmethod
    def from_rng(cls, rng, lam=DEFAULT_LAMBDA, burn_in=DEFAULT_BURN_IN):
        return cls(draw_seed(rng, lam), lam=lam, burn_in=burn_in, validate=False)

    def _iterate(self, n):
        out = np.empty(n)
        lam = self.lam
        x = self.state
        for i in range(n):
            nxt = lam * (x * (1.0 - x))
            if not 0.0 < nxt < 1.0 or nxt == x:
                self.state = nxt
                raise DegenerateOrbit(
                    f"orbit collapsed at value {nxt!r} (seed {self.seed!r})"
                )
            out[i] = x = nxt
        self.state = x
        return out

    def next(self):
        value = float(self._iterate(1)[0])
        self.steps_emitted += 1
        return value

    def take(self, n):
        """The next ``n`` raw iterates as a float64 array."""
        values = self._iterate(int(n))
        self.steps_emitted += int(n)
        return values

    def sample(self, shape, transform=NoiseTransform.RAW):
        return sample_noise(self, transform, shape)

    def __repr__(self):
        return (f"ChaoticGenerator(seed={self.seed!r}, lam={self.lam!r}, "
                f"burn_in={self.burn_in}, steps_emitted={self.steps_emitted})")


def sample_noise(gen, transform, shape):
    """Fill an array of ``shape`` in row-major order with consecutive iterates."""
    shape = tuple(int(s) for s in np.atleast_1d(shape))
    size = math.prod(shape)
    if size < 1:
        raise ValueError("noise shape must contain at least one element")
    values = gen.take(size).reshape(shape)
    return NoiseTransform(transform).apply(values)


def arcsine_cdf(x):
    """CDF of the invariant density of the lam=4 map."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return 2.0 / np.pi * np.arcsin(np.sqrt(x))


def ks_statistic(samples, cdf):
    """Kolmogorov-Smirnov distance between a sample and a reference CDF.

    ``D = max(D+, D-)`` where ``D+ = max(i/n - F(x_i))`` and
    ``D- = max(F(x_i) - (i-1)/n)`` over the sorted sample.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise EmptySample("ks_statistic needs at least one sample")
    f = np.asarray(cdf(x), dtype=float)
    d_plus = np.max(np.arange(1, n + 1) / n - f)
    d_minus = np.max(f - np.arange(0, n) / n)
    return float(max(d_plus, d_minus))


_BOUNDED_FAMILIES = ("beta", "uniform")


def rank_distributions(samples, names=("beta", "exponweib", "weibull_min",
                                       "uniform", "norm"), unit_support=True):
    """Fit each named scipy.stats family and rank them by KS distance.

    Returns a list of ``(name, fitted_params, D)`` sorted by ``D``.  Families
    whose fit fails are skipped.  With ``unit_support`` the bounded families
    are fitted with location 0 and scale 1, since map iterates live in (0, 1);
    a free four-parameter beta fit tends to stall far from the optimum.
    """
    from scipy import stats

    data = np.asarray(samples, dtype=float).ravel()
    ranked = []
    for name in names:
        family = getattr(stats, name)
        try:
            if unit_support and name in _BOUNDED_FAMILIES:
                params = family.fit(data, floc=0.0, fscale=1.0)
            else:
                params = family.fit(data)
        except Exception:  # scipy raises a variety of fit failures
            continue
        frozen = family(*params)
        ranked.append((name, tuple(float(p) for p in params),
                       ks_statistic(data, frozen.cdf)))
    ranked.sort(key=lambda item: item[2])
    return ranked
