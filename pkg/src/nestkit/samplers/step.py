"""Step samplers: short constrained chains started from a random live point."""

from __future__ import annotations

import numpy as np

from .. import kernels
from .base import (NumericalContourError, SamplerConfig, SamplerStats, as_generator,
                   live_arrays, make_particle, principal_axes, tune_step_scale)

__all__ = ["StepSampler", "sample_random_walk", "sample_slice"]


class StepSampler:
    """Random-walk or slice chains of ``cfg.steps`` moves.

    The chain starts from a live point chosen uniformly at random; the dead
    point is never used as a start because it lies on the contour.
    """

    def __init__(self, cfg: SamplerConfig, ndim: int):
        self.cfg = cfg
        self.ndim = ndim
        self.n_steps = cfg.n_steps(ndim)
        self.scale = cfg.scale()
        self.axes = np.eye(ndim)
        self.widths = np.full(ndim, 3.0 * 0.3 * self.scale)

    @property
    def is_step(self) -> bool:
        return True

    def refresh(self, live_u, live_ll, gen):
        if self.cfg.kind == "slice":
            axes, sd = principal_axes(np.asarray(live_u, dtype=float))
            self.axes = axes
            self.widths = 3.0 * sd

    def draw(self, problem, live_u, live_ll, threshold, gen, evaluate=None):
        i = int(gen.integers(len(live_u)))
        u0 = live_u[i]
        stats = SamplerStats()
        if self.cfg.kind == "slice":
            u, ll, ncall, nshrink = kernels.slice_walk(
                u0, self.axes, self.widths * self.scale, float(threshold),
                problem.loglike_u, gen, self.n_steps, self.cfg.max_shrink)
            if nshrink < 0:
                raise NumericalContourError(
                    f"slice shrinkage exceeded {self.cfg.max_shrink} steps at "
                    f"log L > {threshold!r}")
            stats.proposals = ncall
            stats.accepts = self.n_steps
            stats.likelihood_calls = ncall
        else:
            u, ll, nacc, ncall = kernels.random_walk(
                u0, float(live_ll[i]), self.scale, float(threshold), problem.loglike_u,
                gen, self.n_steps)
            stats.proposals = ncall
            stats.accepts = nacc
            stats.likelihood_calls = ncall
            if nacc == 0:
                stats.stale_walks = 1
        return [(u, float(ll))], stats

    def after_iteration(self, stats: SamplerStats, iteration: int):
        if self.cfg.kind != "random_walk" or stats.proposals == 0:
            return
        if self.cfg.tune == "off":
            return
        if self.cfg.tune == "freeze" and iteration >= self.cfg.freeze_after:
            return
        self.scale = min(tune_step_scale(stats, self.scale, self.cfg.target_accept), 1.0)


def _single_draw(kind, live, threshold, cfg, rng, problem, scale):
    gen = as_generator(rng)
    cfg = SamplerConfig(**{**cfg.as_dict(), "kind": kind})
    s = StepSampler(cfg, problem.ndim)
    if scale is not None:
        s.scale = scale
    u, ll = live_arrays(live)
    s.refresh(u, ll, gen)
    valid, stats = s.draw(problem, u, ll, threshold, gen)
    return make_particle(problem, valid[0][0], valid[0][1], threshold), stats


def sample_random_walk(live, threshold, cfg: SamplerConfig, rng, problem, scale=None):
    """Reflected Gaussian walk of ``cfg.steps`` moves inside the contour.

    A walk with no accepted move returns its start point and counts one
    stale walk in the stats.
    """
    return _single_draw("random_walk", live, threshold, cfg, rng, problem, scale)


def sample_slice(live, threshold, cfg: SamplerConfig, rng, problem):
    """Slice moves along randomly chosen principal axes of the live points."""
    return _single_draw("slice", live, threshold, cfg, rng, problem, None)
