"""Bounding ellipsoids and k-means/BIC decomposition of a live-point cloud."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.vq import kmeans2
from scipy.special import gammaln

__all__ = ["Ellipsoid", "fit_ellipsoid", "EllipsoidUnion", "kmeans_bic",
           "sample_unit_ball"]


def _log_ball(d: int) -> float:
    return 0.5 * d * math.log(math.pi) - gammaln(0.5 * d + 1.0)


def sample_unit_ball(gen: np.random.Generator, m: int, d: int) -> np.ndarray:
    z = gen.standard_normal((m, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = gen.random(m) ** (1.0 / d)
    return z * r[:, None]


@dataclass
class Ellipsoid:
    """``{x : (x - center)^T shape^-1 (x - center) <= 1}``.

    ``jittered`` records that the covariance had to be regularized.
    """

    center: np.ndarray
    shape: np.ndarray
    enlargement: float = 1.0
    jittered: bool = False
    _chol: np.ndarray = field(init=False, repr=False)
    _inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.shape = np.asarray(self.shape, dtype=float)
        self.shape = 0.5 * (self.shape + self.shape.T)
        self._chol = np.linalg.cholesky(self.shape)
        self._inv = np.linalg.inv(self.shape)

    @property
    def ndim(self) -> int:
        return len(self.center)

    @property
    def log_volume(self) -> float:
        logdet = 2.0 * np.sum(np.log(np.diag(self._chol)))
        return _log_ball(self.ndim) + 0.5 * logdet

    def mahalanobis(self, x) -> np.ndarray:
        dx = np.atleast_2d(x) - self.center
        return np.einsum("ij,jk,ik->i", dx, self._inv, dx)

    def contains(self, x):
        out = self.mahalanobis(x) <= 1.0
        return out if np.ndim(x) > 1 else bool(out[0])

    def sample(self, gen: np.random.Generator, m: int) -> np.ndarray:
        y = sample_unit_ball(gen, m, self.ndim)
        return self.center + y @ self._chol.T


def fit_ellipsoid(points, enlargement: float = 1.0) -> Ellipsoid:
    """Smallest scaling of the sample-covariance ellipsoid that holds every point.

    The result is then inflated by ``enlargement`` in volume.  A singular
    covariance gets ``1e-12 * trace`` (or 1e-12 if the trace vanishes) added to
    its diagonal and the ellipsoid is flagged as jittered.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = x.shape
    if enlargement < 1:
        raise ValueError("enlargement must be >= 1")
    center = x.mean(axis=0)
    cov = np.atleast_2d(np.cov(x, rowvar=False)) if n > 1 else np.zeros((d, d))
    jittered = False
    try:
        np.linalg.cholesky(cov)
        if np.linalg.cond(cov) > 1e14:
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        tr = float(np.trace(cov))
        cov = cov + np.eye(d) * (1e-12 * tr if tr > 0 else 1e-12)
        jittered = True
    dx = x - center
    inv = np.linalg.inv(cov)
    m = np.einsum("ij,jk,ik->i", dx, inv, dx)
    scale = float(m.max()) * (1.0 + 1e-9) if n > 1 else 1.0
    if scale <= 0:
        scale = 1.0
    shape = cov * scale * enlargement ** (2.0 / d)
    e = Ellipsoid(center, shape, enlargement, jittered)
    # a near-singular inverse can leave points a rounding error outside
    for _ in range(8):
        worst = float(e.mahalanobis(x).max())
        if worst <= 1.0:
            break
        e = Ellipsoid(center, e.shape * worst * (1.0 + 1e-9), enlargement, jittered)
    return e


class EllipsoidUnion:
    """Uniform sampling over a union of ellipsoids.

    An ellipsoid is picked with probability proportional to its volume and a
    point drawn inside it is kept with probability 1 / (number of ellipsoids
    containing it), which flattens the density over overlaps.
    """

    def __init__(self, ellipsoids):
        self.ellipsoids = list(ellipsoids)
        lv = np.array([e.log_volume for e in self.ellipsoids])
        self.log_volume = float(lv.max() + np.log(np.sum(np.exp(lv - lv.max()))))
        self.prob = np.exp(lv - self.log_volume)
        self.prob /= self.prob.sum()

    def __len__(self):
        return len(self.ellipsoids)

    def count_inside(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        return sum(e.contains(x).astype(int) for e in self.ellipsoids)

    def sample(self, gen: np.random.Generator, m: int):
        """Return ``(points, n_proposed)``; overlap thinning may drop some."""
        k = len(self.ellipsoids)
        d = self.ellipsoids[0].ndim
        if k == 1:
            return self.ellipsoids[0].sample(gen, m), m
        which = gen.choice(k, size=m, p=self.prob)
        y = sample_unit_ball(gen, m, d)
        out = np.empty((m, d))
        for j, e in enumerate(self.ellipsoids):
            sel = which == j
            out[sel] = e.center + y[sel] @ e._chol.T
        keep = gen.random(m) * self.count_inside(out) < 1.0
        return out[keep], m


def _gauss_loglike(x: np.ndarray) -> float:
    # maximized Gaussian log-likelihood of one cluster
    n, d = x.shape
    cov = np.atleast_2d(np.cov(x, rowvar=False, bias=True))
    cov = cov + np.eye(d) * 1e-12 * max(np.trace(cov), 1e-300)
    sign, logdet = np.linalg.slogdet(cov)
    return -0.5 * n * (d * math.log(2 * math.pi) + logdet + d)


def kmeans_bic(points, max_clusters: int, gen: np.random.Generator, restarts: int = 10):
    """Choose a k-means partition by BIC of a hard-assignment Gaussian mixture.

    Each k uses the best of ``restarts`` k-means++ runs (lowest inertia).
    Partitions leaving a cluster with fewer than ``d + 1`` points are not
    considered.  Every k up to ``max_clusters`` is scored: BIC is not
    unimodal in k for grid-like mode layouts, so stopping early can miss the
    split altogether.

    Returns
    -------
    labels : ndarray of int
    k : int
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = x.shape
    best_labels = np.zeros(n, dtype=int)
    n_par = d + d * (d + 1) // 2
    best_bic = -2 * _gauss_loglike(x) + n_par * math.log(n)
    best_k = 1
    for k in range(2, max_clusters + 1):
        if n < k * (d + 1):
            break
        fit = None
        for _ in range(restarts):
            with warnings.catch_warnings():
                # empty clusters are rejected below
                warnings.simplefilter("ignore")
                cent, lab = kmeans2(x, k, minit="++", seed=gen)
            counts = np.bincount(lab, minlength=k)
            if counts.min() < d + 1:
                continue
            inertia = float(np.sum((x - cent[lab]) ** 2))
            if fit is None or inertia < fit[0]:
                fit = (inertia, lab)
        if fit is None:
            continue
        lab = fit[1]
        ll = 0.0
        for j in range(k):
            xj = x[lab == j]
            ll += _gauss_loglike(xj) + len(xj) * math.log(len(xj) / n)
        bic = -2 * ll + (k * n_par + k - 1) * math.log(n)
        if bic < best_bic:
            best_bic, best_labels, best_k = bic, lab, k
    return best_labels, best_k
