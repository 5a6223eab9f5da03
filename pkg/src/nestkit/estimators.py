"""Evidence, posterior weights, error bars and thermodynamics computed from a trace.

Everything here is a pure function of a :class:`~nestkit.core.RunTrace` and a
:class:`VolumeAssignment`.

Quadrature convention
---------------------
Dead point ``i`` sits at volume ``X_i`` with ``X_0 = 1``.  Its trapezium weight
is ``(X_{i-1} - X_{i+1}) / 2``; the first point additionally receives
``(X_0 - X_1) / 2`` (the likelihood is extended flat up to ``X = 1``).  When the
run was closed by killing the live points the last weight is
``(X_{N-1} + X_N) / 2`` (flat down to ``X = 0``), so the weights sum to exactly
one.  When final live points are kept instead, the last dead weight is
``(X_{N-1} - X_N) / 2`` and each of the ``m`` final points carries ``X_N / m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .core import LOG_ZERO, RngStream, RunTrace, TraceError, log_sum
from .priors import DomainError

__all__ = ["VolumeAssignment", "EvidenceReport", "assign_volumes", "log_point_weights",
           "log_evidence", "posterior_weights", "kl_divergence", "evidence_error",
           "simulate_evidence", "effective_sample_size", "posterior_expectation",
           "threads", "bootstrap_posterior_error", "thermo_evidence",
           "mean_energy_and_heat_capacity", "reweight", "reweight_log_weights",
           "evidence_report", "UndefinedPosterior"]

METHODS = ("mean_log", "mean", "walter", "simulated")


class UndefinedPosterior(ValueError):
    """Every likelihood (or reweighted density) is zero."""


@dataclass
class VolumeAssignment:
    """Log prior volumes of the dead points, plus the shared volume of the final live points."""

    log_x: np.ndarray
    method: str
    seed: int | None = None
    log_x_final: float = LOG_ZERO
    n_final: int = 0


@dataclass
class EvidenceReport:
    log_z: float
    sigma_log_z: float
    h: float
    ess: float
    n_like_calls: int
    problem_fingerprint: str = ""


def _tie_groups(ll: np.ndarray) -> int:
    if len(ll) < 2:
        return 1
    same = ll[1:] == ll[:-1]
    if not same.any():
        return 1
    # longest run of equal consecutive values
    edges = np.flatnonzero(np.diff(np.concatenate([[0], same.astype(int), [0]])))
    return int(np.max(edges[1::2] - edges[::2])) + 1


def assign_volumes(trace: RunTrace, method: str = "mean_log", seed=None) -> VolumeAssignment:
    """Attach log-volumes to the dead points.

    Each death with ``n`` live points shrinks the volume by a factor ``t``:

    * ``mean_log``: ``log t = E[log Beta(n, 1)] = -1/n``;
    * ``mean``: ``t = n / (n + 1)``;
    * ``walter``: ``t = 1 - 1/n``;
    * ``simulated``: ``t ~ Beta(n, 1)``, drawn with ``seed``.

    A tie group of ``q`` deaths carries live counts ``n, n-1, ..., n-q+1``, and
    the product of the corresponding ``Beta(n-j, 1)`` factors is exactly
    ``Beta(n+1-q, q)``, so ``mean_log`` and ``simulated`` handle plateaus
    directly.  ``mean`` and ``walter`` are defined for single deaths only.
    """
    n = trace.n_active.astype(float)
    if np.any(n < 1):
        raise TraceError("n_active must be >= 1")
    if method == "mean_log":
        log_t = -1.0 / n
    elif method in ("mean", "walter"):
        if _tie_groups(trace.log_like) > 1:
            raise ValueError(f"volume method {method!r} is defined only for single "
                             "deaths; this trace has tied contours")
        log_t = np.log(n / (n + 1.0)) if method == "mean" else np.log1p(-1.0 / n)
    elif method == "simulated":
        if seed is None:
            raise ValueError("simulated volumes need a seed")
        gen = _gen(seed)
        log_t = np.log1p(-gen.random(len(n))) / n
    else:
        raise ValueError(f"unknown volume method {method!r}; choose from {METHODS}")
    log_x = np.cumsum(log_t)
    lxf = float(log_x[-1]) if len(log_x) else 0.0
    return VolumeAssignment(log_x, method, seed if method == "simulated" else None,
                            lxf if trace.n_final else LOG_ZERO, trace.n_final)


def _gen(seed):
    if isinstance(seed, RngStream):
        return seed.generator()
    if isinstance(seed, np.random.Generator):
        return seed
    return RngStream(int(seed), (7,)).generator()


def log_point_weights(trace: RunTrace, volumes: VolumeAssignment) -> np.ndarray:
    """Log of ``w_i L_i`` for every dead point, then every final live point."""
    lw = log_volume_weights(trace, volumes)
    ll = trace.all_log_like()
    with np.errstate(invalid="ignore"):
        out = lw + ll
    return np.where(np.isneginf(ll) | np.isneginf(lw), LOG_ZERO, out)


def log_volume_weights(trace: RunTrace, volumes: VolumeAssignment) -> np.ndarray:
    lx = np.asarray(volumes.log_x, dtype=float)
    if len(lx) != len(trace):
        raise ValueError("volume assignment does not match the trace")
    closed = trace.n_final == 0
    w = kernels.log_trapezium_weights(lx, closed) if len(lx) else np.empty(0)
    if trace.n_final:
        lxf = float(lx[-1]) if len(lx) else 0.0
        w = np.concatenate([w, np.full(trace.n_final, lxf - math.log(trace.n_final))])
    return w


def log_evidence(trace: RunTrace, volumes: VolumeAssignment) -> float:
    """``log sum_i w_i L_i`` over dead and final points."""
    return log_sum(log_point_weights(trace, volumes))


def _normalize(lw):
    lz = log_sum(lw)
    if lz == LOG_ZERO:
        raise UndefinedPosterior("all weights are zero")
    return np.exp(lw - lz), lz


def posterior_weights(trace: RunTrace, volumes: VolumeAssignment) -> np.ndarray:
    """Normalized posterior weights ``p_i = w_i L_i / Z``."""
    p, _ = _normalize(log_point_weights(trace, volumes))
    return p


def kl_divergence(trace: RunTrace, volumes: VolumeAssignment) -> float:
    """Prior-to-posterior information ``H = sum_i p_i log(p_i / w_i)`` in nats."""
    lpw = log_point_weights(trace, volumes)
    p, lz = _normalize(lpw)
    ll = trace.all_log_like()
    m = p > 0
    return float(max(0.0, np.sum(p[m] * (ll[m] - lz))))


def evidence_error(h: float, nlive: int) -> float:
    """Cheap error bar ``sqrt(H / nlive)``; :func:`simulate_evidence` is the reference."""
    if h < 0 or nlive < 1:
        raise ValueError("need H >= 0 and nlive >= 1")
    return math.sqrt(h / nlive)


def simulate_evidence(trace: RunTrace, nsamples: int = 1000, seed=0,
                      chunk: int = 64) -> np.ndarray:
    """log Z under ``nsamples`` independent simulated volume assignments."""
    if nsamples < 2:
        raise ValueError("nsamples must be >= 2")
    n = trace.n_active.astype(float)
    ll = trace.all_log_like()
    root = seed if isinstance(seed, RngStream) else RngStream(int(seed), (7,))
    out = np.empty(nsamples)
    closed = trace.n_final == 0
    nf = trace.n_final
    for s in range(0, nsamples, chunk):
        k = min(chunk, nsamples - s)
        gen = root.child(s // chunk).generator()
        log_x = np.cumsum(np.log1p(-gen.random((k, len(n)))) / n, axis=1)
        for r in range(k):
            w = kernels.log_trapezium_weights(log_x[r], closed)
            if nf:
                w = np.concatenate([w, np.full(nf, log_x[r, -1] - math.log(nf))])
            with np.errstate(invalid="ignore"):
                a = w + ll
            out[s + r] = log_sum(np.where(np.isneginf(ll), LOG_ZERO, a))
    return out


def effective_sample_size(weights) -> float:
    p = np.asarray(weights, dtype=float)
    s = p.sum()
    return float(s * s / np.sum(p * p))


def posterior_expectation(trace: RunTrace, volumes: VolumeAssignment,
                          f: Callable) -> float:
    """``sum_i p_i f(theta_i)``; ``f`` maps an ``(N, d)`` array to ``(N,)`` values."""
    p = posterior_weights(trace, volumes)
    vals = np.asarray(f(trace.all_theta()), dtype=float)
    return float(np.sum(p * vals))


def threads(trace: RunTrace) -> list[np.ndarray]:
    """Split a static trace into single-live-point threads by birth lineage.

    A thread starts with a prior draw and follows each particle to the
    particle born at its death contour.  Returns index arrays into the dead
    points, one per thread.
    """
    if trace.n_final:
        raise ValueError("thread decomposition needs a trace closed by killing the live points")
    ll = trace.log_like
    birth = trace.birth_log_like
    roots = np.flatnonzero(np.isneginf(birth))
    # child born at contour ll[i]: the (unique, for static runs) particle with that birth
    children = {}
    for j in np.flatnonzero(~np.isneginf(birth)):
        children.setdefault(float(birth[j]), []).append(int(j))
    out = []
    used = set()
    for r in roots:
        chain = [int(r)]
        while True:
            kids = children.get(float(ll[chain[-1]]))
            kid = None
            if kids:
                for k in kids:
                    if k not in used:
                        kid = k
                        break
            if kid is None:
                break
            used.add(kid)
            chain.append(kid)
        out.append(np.array(chain, dtype=np.int64))
    return out


def bootstrap_posterior_error(trace: RunTrace, f: Callable, nresamples: int = 100,
                              seed=0) -> float:
    """Std of ``<f>`` across thread-bootstrap resamples of a static run.

    Threads are drawn with replacement, recombined (live counts recomputed
    from the pooled births and deaths) and ``<f>`` is re-estimated with
    mean-log volumes.
    """
    if trace.dynamic:
        raise ValueError("thread bootstrap is defined for static (constant nlive) runs only")
    if nresamples < 10:
        raise ValueError("nresamples must be >= 10")
    ths = threads(trace)
    vals_all = np.asarray(f(trace.theta), dtype=float)
    gen = _gen(seed)
    k = len(ths)
    out = np.empty(nresamples)
    for b in range(nresamples):
        pick = gen.integers(k, size=k)
        idx = np.concatenate([ths[i] for i in pick])
        order = np.lexsort((idx, trace.log_like[idx]))
        idx = idx[order]
        ll = trace.log_like[idx]
        ends = np.sort(trace.log_like[[ths[i][-1] for i in pick]])
        nact = _thread_counts(ll, ends)
        lx = np.cumsum(-1.0 / nact)
        lw = kernels.log_trapezium_weights(lx, True) + ll
        p, _ = _normalize(np.where(np.isneginf(ll), LOG_ZERO, lw))
        out[b] = np.sum(p * vals_all[idx])
    return float(np.std(out, ddof=1))


def _thread_counts(ll, ends):
    # a thread is alive from the prior up to its last death, so the live count
    # at contour ll is the number of threads ending at or above it; equal
    # contours count down one death at a time
    out = (len(ends) - np.searchsorted(ends, ll, side="left")).astype(np.int64)
    for i in range(1, len(ll)):
        if ll[i] == ll[i - 1]:
            out[i] = out[i - 1] - 1
    return np.maximum(out, 1)


def thermo_evidence(trace: RunTrace, volumes: VolumeAssignment, beta: float) -> float:
    """``log Z(beta) = log sum_i w_i L_i^beta`` from a single run.

    At ``beta = 1`` this is :func:`log_evidence` (same code path).
    """
    if beta < 0:
        raise DomainError("beta must be non-negative")
    lw = log_volume_weights(trace, volumes)
    ll = trace.all_log_like()
    if beta == 1:
        return log_evidence(trace, volumes)
    with np.errstate(invalid="ignore"):
        a = lw + beta * ll
    if beta == 0:
        a = lw
    return log_sum(np.where(np.isneginf(lw), LOG_ZERO, a))


def mean_energy_and_heat_capacity(trace: RunTrace, volumes: VolumeAssignment, beta_grid):
    """Mean energy and heat capacity on a temperature grid (``log L = -E``).

    ``C_V = d<E>/dT`` with ``T = 1/beta`` by finite differences (second-order
    at the grid ends).

    Returns
    -------
    list of (beta, mean_energy, heat_capacity)
    """
    beta = np.asarray(beta_grid, dtype=float)
    if beta.ndim != 1 or len(beta) < 3:
        raise ValueError("need at least 3 temperatures to difference")
    if np.any(beta <= 0) or np.any(np.diff(beta) <= 0):
        raise ValueError("beta grid must be positive and increasing")
    lw = log_volume_weights(trace, volumes)
    energy = -trace.all_log_like()
    e_mean = np.empty(len(beta))
    for k, b in enumerate(beta):
        a = lw - b * energy
        p, _ = _normalize(np.where(np.isinf(energy), LOG_ZERO, a))
        e_mean[k] = np.sum(p * np.where(p > 0, energy, 0.0))
    temp = 1.0 / beta
    cv = np.gradient(e_mean, temp, edge_order=2)
    return [(float(b), float(e), float(c)) for b, e, c in zip(beta, e_mean, cv)]


def reweight_log_weights(log_p, log_ratio, scale: float = 1.0):
    """Reweight normalized log posterior weights by per-point log density ratios.

    Returns ``(log_p_new, log_shift)`` where ``log_shift`` is
    ``log sum_i p_i r_i``, the change in log Z.  Ratios that are constant
    across the points (to ``1e-12 * scale``) leave the weights untouched bit
    for bit.
    """
    log_p = np.asarray(log_p, dtype=float)
    r = np.asarray(log_ratio, dtype=float) * np.ones_like(log_p)
    support = ~np.isneginf(log_p)
    if not np.any(support & ~np.isneginf(r)):
        raise UndefinedPosterior("new density vanishes at every weighted point")
    rs = r[support]
    tol = 1e-12 * max(1.0, float(np.max(np.abs(rs))) if np.all(np.isfinite(rs)) else 1.0,
                      scale)
    if np.all(np.isfinite(rs)) and rs.max() - rs.min() <= tol:
        return log_p.copy(), float(np.mean(rs))
    with np.errstate(invalid="ignore"):
        a = np.where(support, log_p + r, LOG_ZERO)
    shift = log_sum(a)
    return a - shift, shift


def reweight(trace: RunTrace, volumes: VolumeAssignment, new_log_like=None,
             new_log_prior_ratio=None):
    """Importance-reweight a run to a new likelihood and/or prior.

    Parameters
    ----------
    new_log_like : callable, optional
        ``theta (N, d) -> log L'(theta)``; default keeps the old likelihood.
    new_log_prior_ratio : callable, optional
        ``theta (N, d) -> log(pi'(theta) / pi(theta))``; default 0.

    Returns
    -------
    weights : ndarray
        New normalized posterior weights.
    log_z : float
        New log evidence.
    ess : float
        Effective sample size of the new weights.
    """
    lpw = log_point_weights(trace, volumes)
    _, lz = _normalize(lpw)
    log_p = lpw - lz
    theta = trace.all_theta()
    r = np.zeros(len(log_p))
    if new_log_like is not None:
        with np.errstate(invalid="ignore"):
            r = np.asarray(new_log_like(theta), dtype=float) - trace.all_log_like()
        r = np.where(np.isnan(r), LOG_ZERO, r)
    if new_log_prior_ratio is not None:
        r = r + np.asarray(new_log_prior_ratio(theta), dtype=float)
    ll = trace.all_log_like()
    finite = ll[np.isfinite(ll)]
    scale = float(np.max(np.abs(finite))) if finite.size else 1.0
    new_lp, shift = reweight_log_weights(log_p, r, scale)
    w = np.exp(new_lp)
    return w, lz + shift, effective_sample_size(w)


def evidence_report(trace: RunTrace, nsamples: int = 1000, seed: int = 0,
                    method: str = "mean_log") -> EvidenceReport:
    """log Z, simulated sigma, H, ESS and call count of a run."""
    vol = assign_volumes(trace, method)
    lz = log_evidence(trace, vol)
    h = kl_divergence(trace, vol)
    sigma = float(np.std(simulate_evidence(trace, nsamples, seed), ddof=1))
    ess = effective_sample_size(posterior_weights(trace, vol))
    return EvidenceReport(lz, sigma, h, ess, trace.n_like_calls, trace.problem_fingerprint)
