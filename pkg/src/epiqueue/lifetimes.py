"""Laws of the infectious period / service workload ``L``.

Each law knows how to draw from itself and how to evaluate its Laplace
transform ``beta(s) = E[exp(-s L)]``, which the fixed-point solver in
:mod:`epiqueue.analytic` needs. The family is closed on purpose: every
supported law has a usable ``beta``.

Kernels cannot take Python objects, so every law also exposes a numeric
encoding ``(code, a, b)`` consumed by :func:`epiqueue.kernels.draw_lifetime`.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

EXPONENTIAL, DETERMINISTIC, GAMMA, UNIFORM, LOGNORMAL = range(5)


class LifetimeSpec:
    """Base class for the supported lifetime laws."""

    kind = ""

    def sample(self, rng):
        raise NotImplementedError

    def sample_many(self, rng, n):
        raise NotImplementedError

    def mgf(self, s):
        raise NotImplementedError

    @property
    def mean(self):
        raise NotImplementedError

    @property
    def code(self):
        """``(kind_code, a, b)`` triple understood by the simulation kernels."""
        raise NotImplementedError

    @property
    def is_positive(self):
        """True when ``P(L > 0) = 1``."""
        return True

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(LifetimeSpec):
    rate: float
    kind = "exponential"

    def __post_init__(self):
        _check_positive("rate", self.rate)

    def sample(self, rng):
        return rng.exponential(1.0 / self.rate)

    def sample_many(self, rng, n):
        return rng.exponential(1.0 / self.rate, size=n)

    def mgf(self, s):
        return self.rate / (self.rate + s)

    @property
    def mean(self):
        return 1.0 / self.rate

    @property
    def code(self):
        return EXPONENTIAL, float(self.rate), 0.0

    def to_dict(self):
        return {"kind": self.kind, "rate": self.rate}


@dataclass(frozen=True)
class Deterministic(LifetimeSpec):
    """Point mass at ``value``.

    ``value = 0`` is accepted so a zero latent period can be expressed; such a
    law is rejected wherever a strictly positive lifetime is required.
    """

    value: float
    kind = "deterministic"

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ValueError(f"value must be finite and >= 0, got {self.value!r}")

    def sample(self, rng):
        return self.value

    def sample_many(self, rng, n):
        return np.full(n, float(self.value))

    def mgf(self, s):
        return math.exp(-s * self.value)

    @property
    def mean(self):
        return self.value

    @property
    def code(self):
        return DETERMINISTIC, float(self.value), 0.0

    @property
    def is_positive(self):
        return self.value > 0

    def to_dict(self):
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class Gamma(LifetimeSpec):
    shape: float
    scale: float
    kind = "gamma"

    def __post_init__(self):
        _check_positive("shape", self.shape)
        _check_positive("scale", self.scale)

    def sample(self, rng):
        return rng.gamma(self.shape, self.scale)

    def sample_many(self, rng, n):
        return rng.gamma(self.shape, self.scale, size=n)

    def mgf(self, s):
        return math.exp(-self.shape * math.log1p(s * self.scale))

    @property
    def mean(self):
        return self.shape * self.scale

    @property
    def code(self):
        return GAMMA, float(self.shape), float(self.scale)

    def to_dict(self):
        return {"kind": self.kind, "shape": self.shape, "scale": self.scale}


@dataclass(frozen=True)
class Uniform(LifetimeSpec):
    low: float
    high: float
    kind = "uniform"

    def __post_init__(self):
        if not (math.isfinite(self.low) and math.isfinite(self.high)):
            raise ValueError("uniform bounds must be finite")
        if not 0 <= self.low < self.high:
            raise ValueError(f"need 0 <= low < high, got ({self.low!r}, {self.high!r})")

    def sample(self, rng):
        return rng.uniform(self.low, self.high)

    def sample_many(self, rng, n):
        return rng.uniform(self.low, self.high, size=n)

    def mgf(self, s):
        if s == 0:
            return 1.0
        w = s * (self.high - self.low)
        # exp(-s a) (1 - exp(-s (b - a))) / (s (b - a)), written to survive s -> 0
        return math.exp(-s * self.low) * (-math.expm1(-w)) / w

    @property
    def mean(self):
        return 0.5 * (self.low + self.high)

    @property
    def code(self):
        return UNIFORM, float(self.low), float(self.high)

    def to_dict(self):
        return {"kind": self.kind, "low": self.low, "high": self.high}


@dataclass(frozen=True)
class LogNormal(LifetimeSpec):
    """``L = exp(log_mean + log_sd * Z)`` with ``Z`` standard normal."""

    log_mean: float
    log_sd: float
    kind = "lognormal"

    def __post_init__(self):
        if not math.isfinite(self.log_mean):
            raise ValueError("log_mean must be finite")
        _check_positive("log_sd", self.log_sd)

    def sample(self, rng):
        return rng.lognormal(self.log_mean, self.log_sd)

    def sample_many(self, rng, n):
        return rng.lognormal(self.log_mean, self.log_sd, size=n)

    def mgf(self, s):
        if s == 0:
            return 1.0
        # integrate over the standard-normal variable; the integrand is smooth
        # and vanishes super-exponentially on the right
        m, sd = self.log_mean, self.log_sd

        def integrand(z):
            e = m + sd * z
            if e > 700.0:
                return 0.0
            return math.exp(-0.5 * z * z - s * math.exp(e))

        # the standard-normal weight is below 1e-340 outside [-40, 40];
        # split at s L = 1 so quad sees the cutoff edge
        z0 = min(max((-math.log(s) - m) / sd, -40.0), 40.0)
        left, _ = integrate.quad(integrand, -40.0, z0, epsabs=1e-13, epsrel=1e-13, limit=200)
        right, _ = integrate.quad(integrand, z0, 40.0, epsabs=1e-13, epsrel=1e-13, limit=200)
        return (left + right) / math.sqrt(2.0 * math.pi)

    @property
    def mean(self):
        return math.exp(self.log_mean + 0.5 * self.log_sd**2)

    @property
    def code(self):
        return LOGNORMAL, float(self.log_mean), float(self.log_sd)

    def to_dict(self):
        return {"kind": self.kind, "log_mean": self.log_mean, "log_sd": self.log_sd}


def _check_positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be finite and > 0, got {value!r}")


_KINDS = {
    "exponential": (Exponential, ("rate",)),
    "deterministic": (Deterministic, ("value",)),
    "gamma": (Gamma, ("shape", "scale")),
    "uniform": (Uniform, ("low", "high")),
    "lognormal": (LogNormal, ("log_mean", "log_sd")),
}


def from_dict(obj):
    """Build a law from its tagged-object form, e.g. ``{"kind": "gamma", "shape": 2, "scale": 0.5}``."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError("lifetime must be an object with a 'kind' field")
    kind = obj["kind"]
    if kind not in _KINDS:
        raise ValueError(f"unknown lifetime kind {kind!r}; expected one of {sorted(_KINDS)}")
    cls, names = _KINDS[kind]
    extra = set(obj) - set(names) - {"kind"}
    if extra:
        raise ValueError(f"unexpected fields for {kind}: {sorted(extra)}")
    missing = [n for n in names if n not in obj]
    if missing:
        raise ValueError(f"missing fields for {kind}: {missing}")
    values = []
    for n in names:
        v = obj[n]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValueError(f"{kind}.{n} must be a number, got {v!r}")
        values.append(float(v))
    return cls(*values)


def sample(spec, rng):
    """One draw from ``spec`` using ``rng``."""
    return spec.sample(rng)


def mgf(spec, s):
    """``E[exp(-s L)]`` for ``s >= 0``."""
    if s < 0:
        raise ValueError("mgf is only defined here for s >= 0")
    return spec.mgf(s)


def mgf_empirical(spec, s, n, rng):
    """Monte Carlo estimate of ``E[exp(-s L)]`` from ``n`` draws."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return float(np.mean(np.exp(-s * spec.sample_many(rng, n))))
