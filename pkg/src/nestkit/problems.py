"""Benchmark likelihoods with analytic or quadrature oracles.

Constants for the 2-D suite (fixed here, not taken from any external source):

=============  ===================  ====================================================
problem        prior                log-likelihood
=============  ===================  ====================================================
eggbox         U(0, 10 pi)^2        (2 + cos(x/2) cos(y/2))^5
rosenbrock     U(-5, 5)^2           -[(1 - x)^2 + 100 (y - x^2)^2]
shells         U(-6, 6)^2           log sum_k N1(|theta - c_k| - r; 0, w^2),
                                    c = (+-3.5, 0), r = 2, w = 0.1
=============  ===================  ====================================================

Their oracle log Z comes from a 4096 x 4096 trapezoid grid, checked against a
2048 x 2048 grid (relative change in Z below 1e-4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

from .core import LOG_ZERO, log_sum
from .priors import DomainError, PriorTransform

__all__ = ["Problem", "Oracle", "truncated_gaussian", "cone_volume_problem",
           "plateau_problem", "harmonic_energy", "eggbox", "rosenbrock",
           "gaussian_shells", "standard_suite", "quadrature_log_z", "make_problem",
           "log_unit_ball_volume"]


@dataclass
class Oracle:
    """Known answers for a problem; any field may be missing."""

    log_z: float | None = None
    h: float | None = None
    log_x: Callable | None = None
    log_z_beta: Callable | None = None
    notes: dict = field(default_factory=dict)


class Problem:
    """A prior transform plus a deterministic log-likelihood.

    Parameters
    ----------
    name : str
    prior : PriorTransform
    log_like : callable
        ``theta (d,) -> float``.
    log_like_batch : callable, optional
        ``theta (m, d) -> (m,)``; defaults to looping ``log_like``.
    params : dict
        Construction parameters, used for fingerprints and manifests.
    oracle : Oracle or callable returning one
        Callables are evaluated lazily (quadrature oracles are expensive).
    """

    def __init__(self, name, prior, log_like, log_like_batch=None, params=None,
                 oracle=None):
        self.name = name
        self.prior = prior
        self.log_like = log_like
        self._batch = log_like_batch
        self.params = dict(params or {})
        self._oracle = oracle

    @property
    def ndim(self) -> int:
        return self.prior.ndim

    @cached_property
    def oracle(self) -> Oracle:
        o = self._oracle
        if callable(o):
            o = o()
        return o if o is not None else Oracle()

    @property
    def fingerprint(self) -> str:
        items = ",".join(f"{k}={self.params[k]!r}" for k in sorted(self.params))
        return f"{self.name}({items})"

    def log_like_batch(self, theta) -> np.ndarray:
        theta = np.atleast_2d(theta)
        if self._batch is not None:
            return np.asarray(self._batch(theta), dtype=float)
        return np.array([float(self.log_like(t)) for t in theta])

    def loglike_u(self, u) -> float:
        """Log-likelihood of a unit-cube point; ``-inf`` outside the cube."""
        for c in u:
            if c < 0.0 or c > 1.0:
                return LOG_ZERO
        return float(self.log_like(self.prior(u)))

    def loglike_u_batch(self, u) -> np.ndarray:
        u = np.atleast_2d(u)
        out = np.full(len(u), LOG_ZERO)
        ok = np.all((u >= 0.0) & (u <= 1.0), axis=1)
        if np.any(ok):
            out[ok] = self.log_like_batch(self.prior(u[ok]))
        return out

    def __repr__(self):
        return f"Problem({self.fingerprint})"


def log_unit_ball_volume(d: int) -> float:
    return 0.5 * d * math.log(math.pi) - gammaln(0.5 * d + 1.0)


# -----------------------------------------------------------------------------
# Analytic problems

def _neg_sq(theta):
    return -float(np.dot(theta, theta))


def _neg_sq_batch(theta):
    return -np.einsum("ij,ij->i", theta, theta)


def truncated_gaussian(a: float = 5.0, d: int = 2) -> Problem:
    """Gaussian likelihood ``exp(-|theta|^2)`` under a uniform prior on [-a, a]^d.

    The oracle neglects the truncation of the Gaussian tails, which is
    harmless for a of about 3 or more.
    """
    if a < 1 or d < 1:
        raise DomainError("truncated_gaussian needs a >= 1 and d >= 1")
    log_z = 0.5 * d * math.log(math.pi) - d * math.log(2 * a)
    h = -0.5 * d - 0.5 * d * math.log(math.pi) + d * math.log(2 * a)
    lvb = log_unit_ball_volume(d)

    def log_x(lam):
        lam = np.asarray(lam, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = lvb + 0.5 * d * np.log(-lam) - d * math.log(2 * a)
        out = np.where(-lam > a * a, np.nan, out)
        return np.where(lam >= 0, LOG_ZERO, out)

    return Problem("truncated_gaussian", PriorTransform.uniform(-a, a, d), _neg_sq,
                   _neg_sq_batch, {"a": a, "d": d}, Oracle(log_z, h, log_x))


def cone_volume_problem(d: int = 2) -> Problem:
    """``log L = -r^2`` on [-1, 1]^d, with the enclosed prior volume known in closed form.

    For ``r <= 1`` the contour is a ball entirely inside the prior, so
    ``X(lambda) = V_d (-lambda)^(d/2) / 2^d``.
    """
    if d < 1:
        raise DomainError("cone_volume_problem needs d >= 1")
    lvb = log_unit_ball_volume(d)
    z1 = math.sqrt(math.pi) * math.erf(1.0) / 2.0
    ex2 = 0.5 - math.exp(-1.0) / (math.sqrt(math.pi) * math.erf(1.0))
    log_z = d * math.log(z1)
    h = d * (-ex2 - math.log(z1))

    def log_x(lam):
        lam = np.asarray(lam, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = lvb + 0.5 * d * np.log(-lam) - d * math.log(2.0)
        out = np.where(-lam > 1.0, np.nan, out)
        return np.where(lam >= 0, LOG_ZERO, out)

    return Problem("cone", PriorTransform.uniform(-1.0, 1.0, d), _neg_sq, _neg_sq_batch,
                   {"d": d}, Oracle(log_z, h, log_x))


def plateau_problem(levels: Sequence[tuple[float, float]]) -> Problem:
    """Piecewise-constant 1-D likelihood on U(0, 1).

    ``levels`` lists ``(log_like, prior_fraction)`` pairs; the unit interval is
    cut into consecutive pieces of those fractions.
    """
    levels = [(float(l), float(f)) for l, f in levels]
    if not levels:
        raise DomainError("plateau_problem needs at least one level")
    ll = np.array([l for l, _ in levels])
    fr = np.array([f for _, f in levels])
    if np.any(fr <= 0) or abs(fr.sum() - 1.0) > 1e-12:
        raise DomainError("plateau fractions must be positive and sum to 1")
    if np.any(np.diff(ll) <= 0):
        raise DomainError("plateau log-likelihoods must be strictly increasing")
    edges = np.concatenate([[0.0], np.cumsum(fr)])
    edges[-1] = 1.0
    inner = edges[1:-1]
    log_z = log_sum(ll + np.log(fr))
    p = np.exp(ll + np.log(fr) - log_z)
    h = float(np.sum(p * (ll - log_z)))
    lvals = ll.tolist()

    def log_like(theta):
        return lvals[int(np.searchsorted(inner, theta[0], side="right"))]

    def batch(theta):
        return ll[np.searchsorted(inner, theta[:, 0], side="right")]

    def log_x(lam):
        lam = np.asarray(lam, dtype=float)
        above = (ll[None, :] > lam.reshape(-1, 1)) * fr[None, :]
        with np.errstate(divide="ignore"):
            return np.log(above.sum(axis=1)).reshape(lam.shape)

    return Problem("plateau", PriorTransform.uniform(0.0, 1.0, 1), log_like, batch,
                   {"levels": tuple(levels)}, Oracle(float(log_z), h, log_x))


def harmonic_energy(a: float = 5.0, d: int = 2) -> Problem:
    """Harmonic energy ``E = |theta|^2 / 2`` on [-a, a]^d with ``log L = -E``.

    ``oracle.log_z_beta`` is the exact partition function of the box; it
    tends to ``(2 pi / beta)^(d/2) / (2a)^d`` once ``beta a^2 >> 1`` and to 1
    as beta goes to 0.
    """
    if a <= 0 or d < 1:
        raise DomainError("harmonic_energy needs a > 0 and d >= 1")

    def energy_like(theta):
        return -0.5 * float(np.dot(theta, theta))

    def batch(theta):
        return -0.5 * np.einsum("ij,ij->i", theta, theta)

    def log_z_beta(beta):
        beta = float(beta)
        if beta < 0:
            raise DomainError("beta must be non-negative")
        if beta == 0:
            return 0.0
        one = math.sqrt(2 * math.pi / beta) * math.erf(a * math.sqrt(beta / 2)) / (2 * a)
        return d * math.log(one)

    def mean_energy(beta):
        # d/2beta minus the box correction, per dimension
        s = a * math.sqrt(beta / 2)
        corr = a * math.exp(-s * s) / (math.sqrt(2 * math.pi / beta) * math.erf(s))
        return d * (0.5 / beta - 0.5 * corr)

    return Problem("harmonic", PriorTransform.uniform(-a, a, d), energy_like, batch,
                   {"a": a, "d": d},
                   Oracle(log_z_beta(1.0), None, None, log_z_beta,
                          {"mean_energy": mean_energy}))


# -----------------------------------------------------------------------------
# Quadrature-backed 2-D suite

def quadrature_log_z(log_like_batch, lo, hi, n: int, chunk: int = 256) -> float:
    """log of the prior-averaged likelihood on an ``n x n`` trapezoid grid."""
    x = np.linspace(lo[0], hi[0], n)
    y = np.linspace(lo[1], hi[1], n)
    wx = np.full(n, 1.0)
    wx[[0, -1]] = 0.5
    log_wy = np.log(wx) + math.log((hi[1] - lo[1]) / (n - 1))
    parts = []
    for s in range(0, n, chunk):
        xs = x[s:s + chunk]
        gx, gy = np.meshgrid(xs, y, indexing="ij")
        ll = log_like_batch(np.column_stack([gx.ravel(), gy.ravel()])).reshape(gx.shape)
        lw = (np.log(wx[s:s + chunk]) + math.log((hi[0] - lo[0]) / (n - 1)))[:, None] \
            + log_wy[None, :]
        parts.append(log_sum(ll + lw))
    area = (hi[0] - lo[0]) * (hi[1] - lo[1])
    return log_sum(parts) - math.log(area)


def _quadrature_oracle(batch, lo, hi, n=4096, n_check=2048, log_x=None):
    def build():
        fine = quadrature_log_z(batch, lo, hi, n)
        coarse = quadrature_log_z(batch, lo, hi, n_check)
        rel = abs(math.expm1(fine - coarse))
        if rel >= 1e-4:
            raise RuntimeError(f"quadrature not converged: relative change {rel:.2e}")
        return Oracle(fine, log_x=log_x,
                      notes={"grid": n, "check_grid": n_check,
                             "relative_change": rel, "log_z_check": coarse})
    return build


def eggbox() -> Problem:
    def batch(t):
        return (2.0 + np.cos(0.5 * t[:, 0]) * np.cos(0.5 * t[:, 1])) ** 5

    def ll(t):
        return (2.0 + math.cos(0.5 * t[0]) * math.cos(0.5 * t[1])) ** 5

    lo, hi = (0.0, 0.0), (10 * math.pi, 10 * math.pi)
    return Problem("eggbox", PriorTransform.uniform(0.0, 10 * math.pi, 2), ll, batch,
                   {}, _quadrature_oracle(batch, lo, hi))


def rosenbrock() -> Problem:
    def batch(t):
        x, y = t[:, 0], t[:, 1]
        return -((1.0 - x) ** 2 + 100.0 * (y - x * x) ** 2)

    def ll(t):
        x, y = t[0], t[1]
        return -((1.0 - x) ** 2 + 100.0 * (y - x * x) ** 2)

    return Problem("rosenbrock", PriorTransform.uniform(-5.0, 5.0, 2), ll, batch, {},
                   _quadrature_oracle(batch, (-5.0, -5.0), (5.0, 5.0)))


def gaussian_shells(radius: float = 2.0, width: float = 0.1,
                    centers=((-3.5, 0.0), (3.5, 0.0))) -> Problem:
    c = np.array(centers, dtype=float)
    norm = -0.5 * math.log(2 * math.pi * width * width)

    def batch(t):
        r = np.sqrt(((t[:, None, :] - c[None, :, :]) ** 2).sum(axis=2))
        terms = norm - (r - radius) ** 2 / (2 * width * width)
        return log_sum(terms, axis=1)

    def ll(t):
        out = LOG_ZERO
        for ck in c:
            r = math.hypot(t[0] - ck[0], t[1] - ck[1])
            term = norm - (r - radius) ** 2 / (2 * width * width)
            if term > out:
                out, term = term, out
            if term != LOG_ZERO:
                out = out + math.log1p(math.exp(term - out))
        return out

    # an isolated contour is an annulus of half-width delta, area 4 pi r delta,
    # valid while it stays inside the box and clear of the other shells
    edge = float(np.min(6.0 - np.abs(c)))
    gap = float(np.min([np.hypot(*(a - b)) for i, a in enumerate(c) for b in c[i + 1:]],
                       initial=np.inf))

    def log_x(lam):
        lam = np.asarray(lam, dtype=float)
        with np.errstate(invalid="ignore"):
            delta = width * np.sqrt(2.0 * (norm - lam))
            out = np.log(len(c) * 4.0 * math.pi * radius * delta / 144.0)
            near = gap - 2.0 * (radius + delta)
            other = norm - near ** 2 / (2 * width * width)
            ok = (delta <= radius) & (radius + delta <= edge) & (near > 0) & (other < lam - 35)
        out = np.where(ok, out, np.nan)
        return np.where(lam >= norm, LOG_ZERO, out)

    params = {"radius": radius, "width": width, "centers": tuple(map(tuple, c.tolist()))}
    return Problem("shells", PriorTransform.uniform(-6.0, 6.0, 2), ll, batch, params,
                   _quadrature_oracle(batch, (-6.0, -6.0), (6.0, 6.0), log_x=log_x))


def standard_suite() -> list[Problem]:
    return [eggbox(), rosenbrock(), gaussian_shells()]


_REGISTRY = {
    "truncated_gaussian": truncated_gaussian,
    "gaussian": truncated_gaussian,
    "cone": cone_volume_problem,
    "plateau": plateau_problem,
    "harmonic": harmonic_energy,
    "eggbox": eggbox,
    "rosenbrock": rosenbrock,
    "shells": gaussian_shells,
}


def make_problem(name: str, **params) -> Problem:
    """Build a named problem; used by the command line front-end."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise DomainError(f"unknown problem {name!r}; choose from {sorted(_REGISTRY)}")
    if name == "plateau" and "levels" in params:
        params["levels"] = [tuple(x) for x in params["levels"]]
    return factory(**params)
