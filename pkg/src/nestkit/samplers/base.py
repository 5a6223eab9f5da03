"""Configuration, statistics and small helpers shared by every sampler."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from ..core import LOG_ZERO, Particle, RngStream

KINDS = ("rejection", "ellipsoid", "multi_ellipsoid", "random_walk", "slice")
STEP_KINDS = ("random_walk", "slice")


class SamplerExhausted(RuntimeError):
    """The likelihood-call budget ran out before a valid point was found."""

    def __init__(self, threshold, calls):
        super().__init__(f"no point with log L > {threshold!r} after {calls} likelihood calls")
        self.threshold = threshold
        self.calls = calls


class NumericalContourError(RuntimeError):
    """Slice shrinkage failed to find the contour (it is numerically empty)."""


def default_steps(d: int, a: int = 5, b: float = 1.0) -> int:
    """Step-sampler chain length ``a * d**b``."""
    return max(1, int(round(a * d ** b)))


@dataclass
class SamplerConfig:
    """Tuning knobs for the constrained-prior samplers.

    ``steps=None`` means ``default_steps(d)``; ``step_scale=None`` means 1.0
    for slice sampling (bracket = 3 principal standard deviations) and 0.1
    (absolute, unit-cube units) for the random walk.  ``tune`` is one of
    ``"continuous"``, ``"freeze"`` (stop adapting after ``freeze_after``
    iterations) or ``"off"``.  ``candidate_block=0`` sizes region-sampler
    proposal blocks from the running efficiency.
    """

    kind: str = "slice"
    enlargement: float = 1.1
    steps: int | None = None
    target_accept: float = 0.5
    step_scale: float | None = None
    max_clusters: int = 8
    call_budget: int = 10_000_000
    tune: str = "continuous"
    freeze_after: int = 1000
    candidate_block: int = 0
    max_shrink: int = 100_000
    refresh_every: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sampler kind {self.kind!r}; choose from {KINDS}")
        if self.enlargement < 1:
            raise ValueError("enlargement must be >= 1")
        if self.steps is not None and self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not 0 < self.target_accept < 1:
            raise ValueError("target_accept must lie in (0, 1)")
        if self.step_scale is not None and not self.step_scale > 0:
            raise ValueError("step_scale must be positive")
        if self.max_clusters < 1:
            raise ValueError("max_clusters must be >= 1")
        if self.tune not in ("continuous", "freeze", "off"):
            raise ValueError(f"unknown tune mode {self.tune!r}")
        if self.call_budget < 1 or self.candidate_block < 0:
            raise ValueError("call_budget must be >= 1 and candidate_block >= 0")

    def n_steps(self, d: int) -> int:
        return self.steps if self.steps is not None else default_steps(d)

    def scale(self) -> float:
        if self.step_scale is not None:
            return self.step_scale
        return 0.1 if self.kind == "random_walk" else 1.0

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class SamplerStats:
    proposals: int = 0
    accepts: int = 0
    likelihood_calls: int = 0
    jitter_events: int = 0
    stale_walks: int = 0

    def __iadd__(self, other: "SamplerStats"):
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))
        return self

    @property
    def accept_rate(self) -> float:
        return self.accepts / self.proposals if self.proposals else math.nan


def tune_step_scale(stats: SamplerStats, current: float, target: float = 0.5,
                    damping: float = 10.0) -> float:
    """Multiplicative step-scale update ``exp((rate - target) / damping)``."""
    if stats.proposals <= 0:
        raise ValueError("tune_step_scale needs at least one proposal")
    return current * math.exp((stats.accepts / stats.proposals - target) / damping)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def live_arrays(live):
    """Accept a list of Particles or a ``(u, log_like)`` pair."""
    if isinstance(live, tuple):
        u, ll = live
        return np.asarray(u, dtype=float), np.asarray(ll, dtype=float)
    u = np.array([p.u for p in live], dtype=float)
    ll = np.array([p.log_like for p in live], dtype=float)
    return u, ll


def make_particle(problem, u, log_like, threshold) -> Particle:
    return Particle(np.asarray(u, dtype=float), np.asarray(problem.prior(u), dtype=float),
                    float(log_like), float(threshold))


def principal_axes(u: np.ndarray):
    """Eigen-directions and standard deviations of a point cloud.

    Falls back to the coordinate axes when there are too few points.
    """
    n, d = u.shape
    if n < d + 1:
        sd = np.std(u, axis=0) if n > 1 else np.full(d, 0.1)
        return np.eye(d), np.where(sd > 0, sd, 1e-3)
    cov = np.atleast_2d(np.cov(u, rowvar=False))
    evals, evecs = np.linalg.eigh(cov)
    sd = np.sqrt(np.clip(evals, 0.0, None))
    floor = 1e-12 + 1e-9 * sd.max()
    return np.ascontiguousarray(evecs.T), np.maximum(sd, floor)


__all__ = ["KINDS", "STEP_KINDS", "SamplerExhausted", "NumericalContourError",
           "default_steps", "SamplerConfig", "SamplerStats", "tune_step_scale",
           "as_generator", "live_arrays", "make_particle", "principal_axes", "LOG_ZERO"]
