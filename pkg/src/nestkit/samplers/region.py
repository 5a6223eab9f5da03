"""Region samplers: rejection from the cube, one ellipsoid, or a union of ellipsoids."""

from __future__ import annotations

import math

import numpy as np

from .base import (SamplerConfig, SamplerExhausted, SamplerStats, as_generator,
                   live_arrays, make_particle)
from .ellipsoid import EllipsoidUnion, fit_ellipsoid, kmeans_bic

__all__ = ["RegionSampler", "sample_rejection", "sample_ellipsoid",
           "sample_multi_ellipsoid"]

_MAX_BLOCK = 64


class RegionSampler:
    """Draws candidate blocks from a bounding region and keeps those above the threshold.

    The bound is rebuilt by :meth:`refresh`.  When the bounding ellipsoids
    are larger than the unit cube the cube itself is used.
    """

    def __init__(self, cfg: SamplerConfig, ndim: int):
        self.cfg = cfg
        self.ndim = ndim
        self.union = None
        self.n_clusters = 1
        self._eff = 1.0
        self._jitter = 0

    @property
    def is_step(self) -> bool:
        return False

    def refresh(self, live_u, live_ll, gen):
        self._jitter = 0
        if self.cfg.kind == "rejection":
            return
        live_u = np.asarray(live_u, dtype=float)
        n, d = live_u.shape
        if n < d + 1:
            self.union = None
            return
        single = fit_ellipsoid(live_u, self.cfg.enlargement)
        ells = [single]
        if self.cfg.kind == "multi_ellipsoid" and self.cfg.max_clusters > 1:
            labels, k = kmeans_bic(live_u, self.cfg.max_clusters, gen)
            if k > 1:
                parts = [fit_ellipsoid(live_u[labels == j], self.cfg.enlargement)
                         for j in range(k)]
                total = np.logaddexp.reduce([e.log_volume for e in parts])
                # a split only helps if it bounds a smaller volume
                if total < single.log_volume:
                    ells = parts
        self._jitter = sum(e.jittered for e in ells)
        self.n_clusters = len(ells)
        union = EllipsoidUnion(ells)
        self.union = union if union.log_volume < 0.0 else None

    def block_size(self) -> int:
        if self.cfg.candidate_block:
            return self.cfg.candidate_block
        return int(min(_MAX_BLOCK, max(1, math.ceil(1.0 / max(self._eff, 1e-12)))))

    def propose(self, gen, m: int):
        if self.union is None:
            return gen.random((m, self.ndim)), m
        pts, n_prop = self.union.sample(gen, m)
        inside = np.all((pts >= 0.0) & (pts <= 1.0), axis=1)
        return pts[inside], n_prop

    def draw(self, problem, live_u, live_ll, threshold, gen, evaluate):
        """Return ``(valid, stats)`` where ``valid`` lists ``(u, log_like)`` above threshold."""
        stats = SamplerStats(jitter_events=self._jitter)
        self._jitter = 0
        while True:
            cand, n_prop = self.propose(gen, self.block_size())
            stats.proposals += n_prop
            if len(cand):
                ll = evaluate(cand)
                stats.likelihood_calls += len(cand)
                ok = np.flatnonzero(ll > threshold)
                if ok.size:
                    stats.accepts += ok.size
                    self._eff = 0.9 * self._eff + 0.1 * (ok.size / n_prop)
                    return [(cand[i], float(ll[i])) for i in ok], stats
            self._eff = 0.9 * self._eff + 0.1 * (0.5 / n_prop)
            if stats.likelihood_calls >= self.cfg.call_budget or \
                    stats.proposals >= 10 * self.cfg.call_budget:
                raise SamplerExhausted(threshold, stats.likelihood_calls)

    def after_iteration(self, stats, iteration):
        pass


def _single_draw(problem, live, threshold, cfg, rng):
    gen = as_generator(rng)
    sampler = RegionSampler(cfg, problem.ndim)
    if live is not None and cfg.kind != "rejection":
        u, ll = live_arrays(live)
        sampler.refresh(u, ll, gen)
    valid, stats = sampler.draw(problem, None, None, threshold, gen,
                                problem.loglike_u_batch)
    u, ll = valid[0]
    return make_particle(problem, u, ll, threshold), stats


def sample_rejection(problem, threshold, rng, call_budget: int = 10_000_000):
    """Uniform draws from the whole cube until one beats ``threshold``.

    Exact iid sampling from the constrained prior; efficiency equals the
    enclosed prior volume.
    """
    cfg = SamplerConfig(kind="rejection", call_budget=call_budget, candidate_block=1)
    return _single_draw(problem, None, threshold, cfg, rng)


def sample_ellipsoid(live, threshold, cfg: SamplerConfig, rng, problem):
    cfg = SamplerConfig(**{**cfg.as_dict(), "kind": "ellipsoid"})
    return _single_draw(problem, live, threshold, cfg, rng)


def sample_multi_ellipsoid(live, threshold, cfg: SamplerConfig, rng, problem):
    """Cluster the live points, bound each cluster, draw uniformly from the union."""
    cfg = SamplerConfig(**{**cfg.as_dict(), "kind": "multi_ellipsoid"})
    return _single_draw(problem, live, threshold, cfg, rng)
