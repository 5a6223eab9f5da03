"""Strategies for drawing from the prior restricted to ``L > threshold``."""

from .base import (KINDS, NumericalContourError, SamplerConfig, SamplerExhausted,
                   SamplerStats, default_steps, principal_axes, tune_step_scale)
from .ellipsoid import Ellipsoid, EllipsoidUnion, fit_ellipsoid, kmeans_bic
from .region import (RegionSampler, sample_ellipsoid, sample_multi_ellipsoid,
                     sample_rejection)
from .step import StepSampler, sample_random_walk, sample_slice


def make_sampler(cfg: SamplerConfig, ndim: int):
    if cfg.kind in ("random_walk", "slice"):
        return StepSampler(cfg, ndim)
    return RegionSampler(cfg, ndim)


__all__ = ["KINDS", "SamplerConfig", "SamplerStats", "SamplerExhausted",
           "NumericalContourError", "default_steps", "tune_step_scale", "principal_axes",
           "Ellipsoid", "EllipsoidUnion", "fit_ellipsoid", "kmeans_bic", "RegionSampler",
           "StepSampler", "make_sampler", "sample_rejection", "sample_ellipsoid",
           "sample_multi_ellipsoid", "sample_random_walk", "sample_slice"]
