"""Log-space numerics, reproducible random streams and the run-trace data model.

Every likelihood, evidence and weight in the package is carried as its natural
logarithm (a plain ``float``); ``-inf`` stands for log(0).

A run is stored as a :class:`RunTrace`: the dead points in death order together
with their birth contours.  Per-contour live-point counts and insertion indexes
are derived from the birth/death pairs by :func:`replay`, so static, dynamic
and merged runs share one representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import kernels

__all__ = [
    "LOG_ZERO", "log_add", "log_sum", "log_sub", "RngStream", "Particle",
    "DeadPoint", "RunTrace", "active_count", "replay", "check_trace",
    "TraceError",
]

LOG_ZERO = -math.inf


class TraceError(ValueError):
    """Raised when a run trace violates one of its invariants."""


# -----------------------------------------------------------------------------
# Log-space arithmetic

def log_add(a: float, b: float) -> float:
    """Return log(exp(a) + exp(b)) without leaving log space."""
    if a < b:
        a, b = b, a
    if b == LOG_ZERO:
        return a
    return a + math.log1p(math.exp(b - a))


def log_sub(a: float, b: float) -> float:
    """Return log(exp(a) - exp(b)); requires a >= b."""
    if b > a:
        raise ValueError("log_sub requires a >= b")
    if b == LOG_ZERO:
        return a
    if a == b:
        return LOG_ZERO
    return a + math.log(-math.expm1(b - a))


def log_sum(values, axis=None):
    """Stable log-sum-exp that maps an all-``-inf`` input to ``-inf``."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return LOG_ZERO
    m = np.max(v, axis=axis, keepdims=True)
    finite = np.isfinite(m)
    shift = np.where(finite, m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(v - shift), axis=axis, keepdims=True)) + shift
    out = np.where(finite, out, m)
    if axis is None:
        return float(out.reshape(()))
    return np.squeeze(out, axis=axis)


# -----------------------------------------------------------------------------
# Random streams

@dataclass(frozen=True)
class RngStream:
    """A counter-addressed random stream.

    The same ``(seed, stream_id)`` always produces the same draws, whatever
    order streams are created in, which is what makes runs independent of
    worker count.
    """

    seed: int
    stream_id: tuple = ()

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed) & 0xFFFFFFFFFFFFFFFF,
                                    spawn_key=tuple(int(i) for i in self.stream_id))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *ids) -> "RngStream":
        return RngStream(self.seed, tuple(self.stream_id) + tuple(ids))


# -----------------------------------------------------------------------------
# Particles and traces

@dataclass
class Particle:
    """A point in parameter space with its likelihood and birth contour."""

    u: np.ndarray
    theta: np.ndarray
    log_like: float
    birth_log_like: float = LOG_ZERO


@dataclass
class DeadPoint:
    particle: Particle
    order: int
    n_active: int
    insertion_index: int


@dataclass
class RunTrace:
    """Columnar record of a nested sampling run.

    Dead points are stored in death order: ``log_like`` is non-decreasing and
    ties are broken by position.  Final live points (only present when a run
    was closed with a remainder estimate) are kept separately.

    Attributes
    ----------
    log_like, birth_log_like : ndarray, shape (N,)
        Death and birth contours of the dead points.
    n_active : ndarray of int, shape (N,)
        Number of live points at each death, counting ties in death order.
    insertion_index : ndarray of int, shape (N,)
        Rank of each particle among the surviving live points when it was
        inserted; -1 for draws from the unconstrained prior.
    theta, u : ndarray, shape (N, d)
        Physical and unit-hypercube coordinates.  ``u`` is not serialized and
        may be ``None`` for traces read from disk.
    final_* :
        The same columns for live points left at termination.
    """

    log_like: np.ndarray
    birth_log_like: np.ndarray
    n_active: np.ndarray
    insertion_index: np.ndarray
    theta: np.ndarray
    u: np.ndarray | None = None
    final_log_like: np.ndarray = field(default_factory=lambda: np.empty(0))
    final_birth_log_like: np.ndarray = field(default_factory=lambda: np.empty(0))
    final_insertion_index: np.ndarray = field(
        default_factory=lambda: np.empty(0, dtype=np.int64))
    final_theta: np.ndarray | None = None
    final_u: np.ndarray | None = None
    config_fingerprint: str = ""
    problem_fingerprint: str = ""
    nlive: int = 0
    dynamic: bool = False
    n_like_calls: int = 0
    truncated: bool = False
    stop_reason: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.log_like = np.asarray(self.log_like, dtype=float)
        self.birth_log_like = np.asarray(self.birth_log_like, dtype=float)
        self.n_active = np.asarray(self.n_active, dtype=np.int64)
        self.insertion_index = np.asarray(self.insertion_index, dtype=np.int64)
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta.ndim != 2:
            self.theta = self.theta.reshape(len(self.log_like), -1)
        d = self.theta.shape[1]
        self.final_log_like = np.asarray(self.final_log_like, dtype=float)
        self.final_birth_log_like = np.asarray(self.final_birth_log_like, dtype=float)
        self.final_insertion_index = np.asarray(self.final_insertion_index, dtype=np.int64)
        if self.final_theta is None:
            self.final_theta = np.empty((0, d))
        self.final_theta = np.asarray(self.final_theta, dtype=float).reshape(
            len(self.final_log_like), d)

    # -- basic shape --------------------------------------------------------
    def __len__(self) -> int:
        return len(self.log_like)

    @property
    def ndim(self) -> int:
        return self.theta.shape[1]

    @property
    def n_final(self) -> int:
        return len(self.final_log_like)

    @property
    def dead(self) -> Iterator[DeadPoint]:
        for i in range(len(self)):
            u = None if self.u is None else self.u[i]
            p = Particle(u, self.theta[i], float(self.log_like[i]),
                         float(self.birth_log_like[i]))
            yield DeadPoint(p, i, int(self.n_active[i]), int(self.insertion_index[i]))

    @property
    def final_live(self) -> list[Particle]:
        out = []
        for i in range(self.n_final):
            u = None if self.final_u is None else self.final_u[i]
            out.append(Particle(u, self.final_theta[i], float(self.final_log_like[i]),
                                float(self.final_birth_log_like[i])))
        return out

    def all_log_like(self) -> np.ndarray:
        return np.concatenate([self.log_like, self.final_log_like])

    def all_birth(self) -> np.ndarray:
        return np.concatenate([self.birth_log_like, self.final_birth_log_like])

    def all_theta(self) -> np.ndarray:
        return np.concatenate([self.theta, self.final_theta])

    def max_like_particle(self) -> Particle:
        """The highest-likelihood particle seen in the run."""
        ll = self.all_log_like()
        i = int(np.argmax(ll))
        return Particle(None, self.all_theta()[i], float(ll[i]), float(self.all_birth()[i]))

    def copy(self, **changes) -> "RunTrace":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw["meta"] = dict(self.meta)
        kw.update(changes)
        return RunTrace(**kw)


def active_count(trace: RunTrace, contour: float) -> int:
    """Number of stored particles with ``birth < contour <= log_like``."""
    if len(trace) == 0 and trace.n_final == 0:
        raise TraceError("empty trace")
    ll = trace.all_log_like()
    b = trace.all_birth()
    return int(np.count_nonzero((b < contour) & (contour <= ll)))


def replay(trace: RunTrace):
    """Recompute per-death live counts and insertion ranks from birth/death pairs.

    Returns
    -------
    n_active : ndarray of int, shape (N,)
    insertion_index : ndarray of int, shape (N + n_final,)
        -1 for particles born from the unconstrained prior.
    insertion_base : ndarray of int, shape (N + n_final,)
        Number of possible ranks (survivors + 1) for each insertion.
    """
    return kernels.replay(trace.log_like, trace.birth_log_like,
                          trace.final_log_like, trace.final_birth_log_like)


def check_trace(trace: RunTrace, strict_active: bool = True) -> list[str]:
    """Return a list of invariant violations (empty when the trace is valid)."""
    problems = []
    ll = trace.log_like
    if len(ll) and np.any(np.diff(ll) < 0):
        problems.append("death contours are not monotone")
    if np.any(trace.n_active < 1):
        problems.append("n_active < 1")
    if trace.n_final and len(ll) and np.min(trace.final_log_like) <= ll[-1]:
        problems.append("final live point at or below the last death contour")
    births = trace.all_birth()
    finite = births[np.isfinite(births)]
    if finite.size:
        known = np.isin(finite, ll)
        if not np.all(known):
            problems.append(f"{np.count_nonzero(~known)} births at unknown contours")
    bad_birth = np.flatnonzero(~(trace.birth_log_like < ll))
    if bad_birth.size:
        problems.append(f"dead point {int(bad_birth[0])} born at or above its death contour")
    if trace.n_final and np.any(~(trace.final_birth_log_like < trace.final_log_like)):
        problems.append("final live point born at or above its own likelihood")
    if trace.u is not None and trace.u.size:
        if np.any((trace.u < 0) | (trace.u > 1)):
            problems.append("unit-hypercube coordinate outside [0, 1]")
    if strict_active and len(ll):
        n_act, _, _ = replay(trace)
        bad = np.flatnonzero(n_act != trace.n_active)
        if bad.size:
            problems.append(f"recorded n_active disagrees with birth/death replay at "
                            f"{bad.size} dead points (first {int(bad[0])})")
    return problems


def fingerprint(items: Sequence[tuple]) -> str:
    return ";".join(f"{k}={v}" for k, v in items)
