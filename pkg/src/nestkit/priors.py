"""Maps from the unit hypercube to parameter space (inverse-transform method).

Priors must be proper: each coordinate is produced by a monotone map of one
uniform variate.  Improper priors are not detected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import erfc

__all__ = ["DomainError", "ndtri", "norm_cdf", "transform_uniform",
           "transform_gaussian", "Uniform", "Gaussian", "Custom", "PriorTransform"]


class DomainError(ValueError):
    """An argument lies outside the domain of a transform."""


# Acklam's rational approximation to the normal quantile (|rel err| < 1.2e-9)
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549671010135365e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _poly(coef, x):
    out = np.zeros_like(x)
    for c in coef:
        out = out * x + c
    return out


def norm_cdf(x):
    """Standard normal CDF via erfc (accurate in the lower tail)."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


def ndtri(p):
    """Inverse of the standard normal CDF for p in (0, 1).

    Rational approximation followed by one Halley step against the erfc-based
    CDF.  The upper half is computed by symmetry from ``1 - p`` so the tails
    keep full relative accuracy.
    """
    p = np.asarray(p, dtype=float)
    q = np.where(p > 0.5, 1.0 - p, p)  # q in (0, 0.5]
    x = np.empty_like(q)
    tail = q < _P_LOW
    if np.any(tail):
        t = np.sqrt(-2.0 * np.log(q[tail]))
        x[tail] = _poly(_C, t) / (_poly(_D, t) * t + 1.0)
    mid = ~tail
    if np.any(mid):
        r = q[mid] - 0.5
        s = r * r
        x[mid] = _poly(_A, s) * r / (_poly(_B, s) * s + 1.0)
    # Halley refinement on the lower-tail value (x <= 0)
    e = norm_cdf(x) - q
    u = e * math.sqrt(2.0 * math.pi) * np.exp(0.5 * x * x)
    x = x - u / (1.0 + 0.5 * x * u)
    x = np.where(p > 0.5, -x, x)
    return x if x.ndim else float(x)


def transform_uniform(u, a: float, b: float):
    """Map u in [0, 1] to ``a + u (b - a)``."""
    if not a < b:
        raise DomainError(f"uniform bounds need a < b, got a={a}, b={b}")
    u = np.asarray(u, dtype=float)
    if np.any((u < 0.0) | (u > 1.0)) or np.any(np.isnan(u)):
        raise DomainError("uniform transform needs 0 <= u <= 1")
    out = a + u * (b - a)
    return out if out.ndim else float(out)


def transform_gaussian(u, mu: float, sigma: float):
    """Map u in (0, 1) to ``mu + sigma * Phi^-1(u)``.

    The endpoints are rejected rather than clamped: they map to infinite tails.
    """
    if not sigma > 0:
        raise DomainError(f"gaussian transform needs sigma > 0, got {sigma}")
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0.0) | (u >= 1.0)) or np.any(np.isnan(u)):
        raise DomainError("gaussian transform needs 0 < u < 1")
    out = mu + sigma * np.asarray(ndtri(u))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Uniform:
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise DomainError(f"uniform bounds need a < b, got a={self.a}, b={self.b}")

    def __call__(self, u):
        return self.a + u * (self.b - self.a)

    def cdf(self, x):
        return (np.asarray(x, dtype=float) - self.a) / (self.b - self.a)

    @property
    def log_density(self) -> float:
        return -math.log(self.b - self.a)


@dataclass(frozen=True)
class Gaussian:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"gaussian transform needs sigma > 0, got {self.sigma}")

    def __call__(self, u):
        return self.mu + self.sigma * np.asarray(ndtri(u))

    def cdf(self, x):
        return norm_cdf((np.asarray(x, dtype=float) - self.mu) / self.sigma)


@dataclass(frozen=True)
class Custom:
    """A user-supplied monotone map of one uniform variate."""

    fn: Callable
    cdf: Callable | None = None

    def __call__(self, u):
        return np.vectorize(self.fn, otypes=[float])(u)


class PriorTransform:
    """Product prior assembled from per-dimension transforms.

    Accepts a single point of shape ``(d,)`` or a batch ``(m, d)``.
    """

    def __init__(self, dims: Sequence):
        self.dims = list(dims)
        if not self.dims:
            raise DomainError("prior needs at least one dimension")
        self._all_uniform = all(isinstance(t, Uniform) for t in self.dims)
        if self._all_uniform:
            self._lo = np.array([t.a for t in self.dims])
            self._width = np.array([t.b - t.a for t in self.dims])

    @classmethod
    def uniform(cls, a: float, b: float, d: int) -> "PriorTransform":
        return cls([Uniform(a, b)] * d)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self._all_uniform:
            return self._lo + u * self._width
        out = np.empty_like(u)
        for j, t in enumerate(self.dims):
            out[..., j] = t(u[..., j])
        return out

    def describe(self) -> str:
        return ",".join(repr(t) for t in self.dims)
