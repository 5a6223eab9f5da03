"""Run-health checks: insertion-index uniformity, analytic volumes, run-to-run agreement."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import chi2

from . import kernels
from .core import LOG_ZERO, RunTrace, TraceError

__all__ = ["DiagnosticReport", "insertion_test", "insertion_test_indexes",
           "volume_check", "two_run_consistency", "N_BINS", "FAIL_P", "WARN_P",
           "LowPowerWarning"]

N_BINS = 32
FAIL_P = 1e-3
WARN_P = 0.05
ENVELOPE_SIGMAS = 5.0
ENVELOPE_COVERAGE = 0.99


class LowPowerWarning(UserWarning):
    pass


@dataclass
class DiagnosticReport:
    insertion_p_value_global: float = math.nan
    insertion_p_values_rolling: list = field(default_factory=list)
    rolling_p_bonferroni: float = math.nan
    n_indexes: int = 0
    volume_deviations: list | None = None
    volume_fraction_inside: float | None = None
    verdict: str = "pass"
    thresholds: dict = field(default_factory=lambda: {"fail_p": FAIL_P, "warn_p": WARN_P})
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)


def _bin_probs(base: int) -> np.ndarray:
    # P(index k in bin b) for k uniform on {0..base-1}, bins of [0, 1) on k / base
    b = np.arange(N_BINS + 1)
    edges = np.ceil(b * base / N_BINS).astype(np.int64)
    return np.diff(edges) / base


def _chi2_p(idx: np.ndarray, base: np.ndarray) -> float:
    if len(idx) == 0:
        return math.nan
    observed = np.bincount(np.minimum(idx * N_BINS // base, N_BINS - 1), minlength=N_BINS)
    expected = np.zeros(N_BINS)
    for m, c in zip(*np.unique(base, return_counts=True)):
        expected += c * _bin_probs(int(m))
    used = expected > 0
    dof = int(used.sum()) - 1
    if dof < 1:
        return 1.0
    stat = float(np.sum((observed[used] - expected[used]) ** 2 / expected[used]))
    return float(chi2.sf(stat, dof))


def _verdict(p_values) -> str:
    ps = [p for p in p_values if not math.isnan(p)]
    if any(p < FAIL_P for p in ps):
        return "fail"
    if any(p < WARN_P for p in ps):
        return "warn"
    return "pass"


def insertion_test_indexes(indexes, bases, nlive: int) -> DiagnosticReport:
    """Chi-squared uniformity test of insertion ranks.

    ``indexes[i]`` is uniform on ``{0, ..., bases[i] - 1}`` under correct
    sampling.  Each index is normalized by its own base, pooled into
    ``N_BINS`` bins whose expected counts are exact for the mix of bases, and
    tested globally and in consecutive blocks of ``nlive`` indexes
    (Bonferroni-corrected minimum).
    """
    idx = np.asarray(indexes, dtype=np.int64)
    base = np.asarray(bases, dtype=np.int64)
    keep = (idx >= 0) & (base >= 1)
    idx, base = idx[keep], base[keep]
    if np.any(idx >= base):
        raise TraceError("insertion index outside its range")
    rep = DiagnosticReport(n_indexes=int(len(idx)))
    rep.insertion_p_value_global = _chi2_p(idx, base)
    nb = len(idx) // nlive if nlive > 0 else 0
    rep.insertion_p_values_rolling = [_chi2_p(idx[k * nlive:(k + 1) * nlive],
                                              base[k * nlive:(k + 1) * nlive])
                                      for k in range(nb)]
    if nb:
        rep.rolling_p_bonferroni = min(1.0, nb * min(rep.insertion_p_values_rolling))
    if len(idx) < 10 * nlive:
        msg = f"only {len(idx)} insertion indexes (< 10 * nlive): the test has low power"
        rep.notes.append(msg)
        warnings.warn(msg, LowPowerWarning)
    rep.verdict = _verdict([rep.insertion_p_value_global, rep.rolling_p_bonferroni])
    return rep


def insertion_test(trace: RunTrace, nlive: int | None = None) -> DiagnosticReport:
    """Insertion-index test of a run.

    The recorded indexes are taken in birth order.  Each index's range
    (survivors + 1 at its birth) is recovered from the birth/death pairs, so
    dynamic and merged runs are normalized index by index.
    """
    if len(trace) == 0 and trace.n_final == 0:
        raise TraceError("empty trace")
    _, _, base = kernels.replay(trace.log_like, trace.birth_log_like,
                                trace.final_log_like, trace.final_birth_log_like)
    idx = np.concatenate([trace.insertion_index, trace.final_insertion_index])
    base = np.maximum(base, np.where(idx >= 0, idx + 1, 1))
    # blocks follow insertion time, i.e. birth contour order
    order = np.argsort(trace.all_birth(), kind="stable")
    nlive = nlive or trace.nlive or int(np.max(trace.n_active, initial=1))
    return insertion_test_indexes(idx[order], base[order], nlive)


def volume_check(trace: RunTrace, volumes, problem) -> DiagnosticReport:
    """Compare estimated log-volumes with the problem's analytic ``X(lambda)``.

    The envelope at death ``k`` is ``5 * sqrt(sum_{j<=k} 1/n_j^2)``, the
    standard deviation of the accumulated log-compression (``5 sqrt(k)/nlive``
    for a static run).  The check fails if fewer than 99% of the comparable
    points lie inside.  Row 0 is the prior itself (``X_0 = 1``).
    """
    log_x_fn = problem.oracle.log_x
    if log_x_fn is None:
        raise ValueError(f"problem {problem.name} has no X(lambda) oracle")
    est = np.asarray(volumes.log_x, dtype=float)
    true = np.asarray(log_x_fn(trace.log_like), dtype=float)
    env = ENVELOPE_SIGMAS * np.sqrt(np.cumsum(1.0 / trace.n_active.astype(float) ** 2))
    ok = np.isfinite(true)
    dev = est - true
    rows = [(LOG_ZERO, 0.0, 0.0)]
    rows += [(float(l), float(e), float(t)) for l, e, t in
             zip(trace.log_like[ok], est[ok], true[ok])]
    inside = np.abs(dev[ok]) <= env[ok]
    frac = float(inside.mean()) if inside.size else 1.0
    rep = DiagnosticReport(volume_deviations=rows, volume_fraction_inside=frac)
    rep.thresholds = {"sigmas": ENVELOPE_SIGMAS, "coverage": ENVELOPE_COVERAGE}
    rep.verdict = "pass" if frac >= ENVELOPE_COVERAGE else "fail"
    return rep


def two_run_consistency(report_a, report_b) -> float:
    """``|log Z_a - log Z_b| / sqrt(sigma_a^2 + sigma_b^2)``; above 3 is inconsistent."""
    fa = getattr(report_a, "problem_fingerprint", "")
    fb = getattr(report_b, "problem_fingerprint", "")
    if fa and fb and fa != fb:
        raise ValueError(f"reports are for different problems: {fa} vs {fb}")
    diff = abs(report_a.log_z - report_b.log_z)
    if diff == 0:
        return 0.0
    return diff / math.hypot(report_a.sigma_log_z, report_b.sigma_log_z)
