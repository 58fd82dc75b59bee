"""Closed forms and numerical solutions for the count at first detection.

The central quantities are

* ``pi``: the probability that the branching process dies out before its first
  detection (equivalently, the M/G/1-PS queue started by one customer empties
  before the first catastrophe), the unique root in ``[0, 1]`` of
  ``x = beta(delta + lambda * (1 - x))``;
* ``p = delta / (delta + (1 - pi) * lambda)``, the parameter of the geometric
  law of the count at first detection, given that a detection happens.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .lifetimes import LifetimeSpec


class NonConvergence(ArithmeticError):
    """Raised when the fixed point cannot be located to tolerance."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class ModelParams:
    """Contact rate, detection rate and lifetime law.

    ``lam = 0`` is accepted and describes a lone individual that never
    reproduces; it is only meaningful for degenerate test cases.
    """

    lam: float
    delta: float
    lifetime: LifetimeSpec

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam!r}")
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise ValueError(f"delta must be finite and > 0, got {self.delta!r}")
        if not isinstance(self.lifetime, LifetimeSpec):
            raise TypeError("lifetime must be a LifetimeSpec")
        if not self.lifetime.is_positive:
            raise ValueError("lifetime must be almost surely positive")

    def to_dict(self):
        return {"lambda": self.lam, "delta": self.delta, "lifetime": self.lifetime.to_dict()}


@dataclass(frozen=True)
class AnalyticSolution:
    pi: float
    p: float
    iterations: int
    residual: float
    method: str = "fixed-point"

    @property
    def detection_probability(self):
        return 1.0 - self.pi

    @property
    def mean_at_detection(self):
        return 1.0 / self.p

    def to_dict(self):
        return {
            "pi": self.pi,
            "p": self.p,
            "residual": self.residual,
            "iterations": self.iterations,
            "method": self.method,
            "mean_at_detection": self.mean_at_detection,
            "detection_probability": self.detection_probability,
        }


@dataclass(frozen=True, eq=False)
class PMF:
    """Probability mass function on ``support_start, support_start + 1, ...``.

    ``probs`` is materialised until the remaining mass drops below ``1e-12``
    (or ``MAX_TERMS`` terms); whatever is left is kept in ``tail_mass`` and
    belongs to values beyond the last stored one.
    """

    support_start: int
    probs: np.ndarray
    tail_mass: float = 0.0

    MAX_TERMS = 10**6
    TAIL_CUTOFF = 1e-12

    def __len__(self):
        return len(self.probs)

    @property
    def support_end(self):
        """Last value with stored mass."""
        return self.support_start + len(self.probs) - 1

    def prob(self, k):
        i = k - self.support_start
        if 0 <= i < len(self.probs):
            return float(self.probs[i])
        return 0.0

    def sf(self, k):
        """``P(X >= k)``."""
        i = max(k - self.support_start, 0)
        if i >= len(self.probs):
            return self.tail_mass if k == self.support_end + 1 else 0.0
        return float(self.probs[i:].sum() + self.tail_mass)

    def mean(self):
        ks = np.arange(self.support_start, self.support_end + 1)
        return float(ks @ self.probs)

    def total(self):
        return float(self.probs.sum() + self.tail_mass)


def solve_pi(params, tol=1e-12, max_iter=100_000, residual_tol=1e-10):
    """Locate the smallest root of ``x = beta(delta + lambda (1 - x))``.

    Fixed-point iteration from ``x = 0`` increases monotonically to the root.
    If it stalls or the residual is too large, bisection on
    ``g(x) = beta(delta + lambda (1 - x)) - x`` over ``[0, 1]`` takes over;
    ``g(0) > 0 > g(1)`` always brackets the root.
    """
    beta = params.lifetime.mgf
    lam, delta = params.lam, params.delta

    def f(x):
        return beta(delta + lam * (1.0 - x))

    x = 0.0
    iterations = 0
    converged = False
    while iterations < max_iter:
        nxt = f(x)
        iterations += 1
        if abs(nxt - x) <= tol:
            x = nxt
            converged = True
            break
        x = nxt
    residual = abs(f(x) - x)
    method = "fixed-point"
    if not converged or residual > residual_tol:
        g = lambda y: f(y) - y  # noqa: E731
        x, info = optimize.bisect(g, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                                  maxiter=200, full_output=True, disp=False)
        iterations += info.iterations
        residual = abs(g(x))
        method = "bisection"
        if not info.converged or residual > residual_tol:
            raise NonConvergence(f"fixed point not found to {residual_tol:g} (residual {residual:.3g})",
                                 residual)
    return AnalyticSolution(pi=x, p=_p_from_pi(lam, delta, x), iterations=iterations,
                            residual=residual, method=method)


def _p_from_pi(lam, delta, pi):
    return delta / (delta + (1.0 - pi) * lam)


def detection_size_param(params):
    """Geometric parameter ``p`` of the count at first detection."""
    return solve_pi(params).p


def geometric_pmf(p, support_start=1):
    """Geometric law with mass ``p (1 - p)^(k - support_start)``."""
    if not 0 < p <= 1:
        raise ValueError(f"p must be in (0, 1], got {p!r}")
    if support_start not in (0, 1):
        raise ValueError("support_start must be 0 or 1")
    q = 1.0 - p
    if q == 0.0:
        return PMF(support_start, np.array([1.0]))
    # smallest n with q^n < cutoff
    n = int(math.ceil(math.log(PMF.TAIL_CUTOFF) / math.log(q))) if q > 0 else 1
    n = min(max(n, 1), PMF.MAX_TERMS)
    k = np.arange(n)
    probs = p * np.exp(k * math.log(q))
    return PMF(support_start, probs, tail_mass=q**n)


def _markov_root(lam, delta, mu):
    for name, v in (("lambda", lam), ("delta", delta), ("mu", mu)):
        if not v > 0:
            raise ValueError(f"{name} must be > 0, got {v!r}")
    a = mu + delta + lam
    # (a - sqrt(a^2 - 4 lam mu)) / 2, rationalised to avoid cancellation
    return 2.0 * lam * mu / (a + math.sqrt(a * a - 4.0 * lam * mu))


def markov_pi(lam, delta, mu):
    """Closed form of ``pi`` for exponential lifetimes with rate ``mu``."""
    return _markov_root(lam, delta, mu) / lam


def markov_p(lam, delta, mu):
    """Closed form of ``p`` for exponential lifetimes with rate ``mu``."""
    return 1.0 - _markov_root(lam, delta, mu) / mu


def total_infected_param(lam, delta):
    """``delta / (lambda + delta)``, the parameter claimed for the total number born by detection."""
    if lam < 0 or not delta > 0:
        raise ValueError("need lambda >= 0 and delta > 0")
    return delta / (lam + delta)


def extinction_at(lam2, mu, tau):
    """``q0(tau)``: probability a linear birth-death process from one individual is empty at ``tau``."""
    if not (lam2 > 0 and mu > 0):
        raise ValueError("lambda2 and mu must be > 0")
    if tau < 0:
        raise ValueError("tau must be >= 0")
    r = lam2 - mu
    if r == 0.0:
        return lam2 * tau / (1.0 + lam2 * tau)
    big_r = lam2 / mu
    em1 = math.expm1(r * tau)
    # (e^{r tau} - 1) / (R e^{r tau} - 1) with R e^{r tau} - 1 = R (e^{r tau} - 1) + (R - 1)
    return em1 / (big_r * em1 + r / mu)


def _geometric_tail_terms(ratio):
    if ratio <= 0.0:
        return 1
    n = int(math.ceil(math.log(PMF.TAIL_CUTOFF) / math.log(ratio)))
    return min(max(n, 1), PMF.MAX_TERMS)


def _zero_plus_geometric(zero_mass, first, ratio):
    # mass zero_mass at 0, then first * ratio^(i-1) for i >= 1
    n = _geometric_tail_terms(ratio)
    probs = np.empty(n + 1)
    probs[0] = zero_mass
    probs[1:] = first * ratio ** np.arange(n)
    tail = first * ratio**n / (1.0 - ratio) if ratio < 1 else 0.0
    return PMF(0, probs, tail_mass=tail)


def birth_death_pmf(lam2, mu, tau):
    """Population at time ``tau`` of a linear birth-death process started from one individual."""
    q0 = extinction_at(lam2, mu, tau)
    ratio = lam2 / mu * q0
    return _zero_plus_geometric(q0, (1.0 - q0) * (1.0 - ratio), ratio)


def post_detection_pmf(p1, lam2, mu, tau):
    """Number infectious ``tau`` after first detection.

    The count at detection is geometric(``p1``) on ``{1, 2, ...}``; afterwards
    every infective independently founds a birth-death(``lam2``, ``mu``) line.
    """
    if not 0 < p1 <= 1:
        raise ValueError(f"p1 must be in (0, 1], got {p1!r}")
    q0 = extinction_at(lam2, mu, tau)
    denom = 1.0 - (1.0 - p1) * q0
    zero = q0 * p1 / denom
    a = (1.0 - lam2 / mu * q0) * p1 / denom
    return _zero_plus_geometric(zero, (1.0 - zero) * a, 1.0 - a)
