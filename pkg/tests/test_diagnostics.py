import json
import math
from contextlib import nullcontext

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import kstest

from nestkit import RunConfig, SamplerConfig, merge, run
from nestkit.core import LOG_ZERO, TraceError
from nestkit.diagnostics import (LowPowerWarning, insertion_test, insertion_test_indexes,
                                 two_run_consistency, volume_check)
from nestkit.estimators import EvidenceReport, assign_volumes
from nestkit.problems import cone_volume_problem, gaussian_shells

from conftest import toy_config


# -- insertion-index test ----------------------------------------------------

def test_all_zero_indexes_fail():
    rep = insertion_test_indexes(np.zeros(10_000, int), np.full(10_000, 1000), 1000)
    assert rep.insertion_p_value_global < 1e-10
    assert rep.verdict == "fail"


def test_uniform_indexes_have_uniform_p_values():
    gen = np.random.default_rng(11)
    ps = []
    for _ in range(50):
        idx = gen.integers(0, 100, 5000)
        ps.append(insertion_test_indexes(idx, np.full(5000, 100), 100).insertion_p_value_global)
    assert kstest(ps, "uniform").pvalue > 1e-3


def test_mixed_bases_are_normalized():
    # ranges vary as in dynamic or merged runs; uniform within each range
    gen = np.random.default_rng(12)
    base = gen.integers(50, 300, 20_000)
    idx = (gen.random(20_000) * base).astype(int)
    rep = insertion_test_indexes(idx, base, 200)
    assert rep.insertion_p_value_global > 1e-3
    # the same indexes read against one common base look skewed
    skew = insertion_test_indexes(np.minimum(idx, 49), np.full(20_000, 300), 200)
    assert skew.insertion_p_value_global < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 400), st.integers(2, 64), st.integers(0, 2**32 - 1))
def test_p_values_in_unit_interval(n, base, seed):
    gen = np.random.default_rng(seed)
    idx = gen.integers(0, base, n)
    with pytest.warns(LowPowerWarning) if n < 10 * 8 else nullcontext():
        rep = insertion_test_indexes(idx, np.full(n, base), 8)
    for p in [rep.insertion_p_value_global, *rep.insertion_p_values_rolling]:
        assert 0.0 <= p <= 1.0
    assert rep.verdict in ("pass", "warn", "fail")


def test_rolling_blocks_and_bonferroni():
    gen = np.random.default_rng(13)
    idx = gen.integers(0, 100, 1000)
    idx[500:600] = 0  # one bad block
    rep = insertion_test_indexes(idx, np.full(1000, 100), 100)
    assert len(rep.insertion_p_values_rolling) == 10
    assert rep.rolling_p_bonferroni == pytest.approx(
        min(1.0, 10 * min(rep.insertion_p_values_rolling)))
    assert rep.insertion_p_values_rolling[5] < 1e-10
    assert rep.verdict == "fail"


def test_low_power_warning():
    with pytest.warns(LowPowerWarning):
        rep = insertion_test_indexes(np.arange(50) % 10, np.full(50, 10), 10)
    assert rep.notes


def test_index_out_of_range():
    with pytest.raises(TraceError):
        insertion_test_indexes([5], [5], 1)


def test_rejection_run_not_extreme(toy):
    t = run(toy, toy_config(seed=5, nlive=200, kind="rejection"))
    rep = insertion_test(t)
    assert rep.insertion_p_value_global > 1e-3
    assert rep.n_indexes == len(t) + t.n_final - 200


def test_slice_run_not_extreme(toy_run):
    assert insertion_test(toy_run).insertion_p_value_global > 1e-3


def test_merged_run(toy):
    a = run(toy, toy_config(seed=21, nlive=100, kind="rejection"))
    b = run(toy, toy_config(seed=22, nlive=150, kind="rejection"))
    rep = insertion_test(merge([a, b]), nlive=250)
    assert rep.insertion_p_value_global > 1e-3


def test_empty_trace_raises():
    from nestkit import RunTrace
    empty = RunTrace(np.empty(0), np.empty(0), np.empty(0, int), np.empty(0, int),
                     np.empty((0, 1)))
    with pytest.raises(TraceError):
        insertion_test(empty)


def test_report_serializes():
    rep = insertion_test_indexes(np.arange(1000) % 10, np.full(1000, 10), 10)
    d = json.loads(json.dumps(rep.as_dict()))
    assert d["thresholds"] == {"fail_p": 1e-3, "warn_p": 0.05}


# -- analytic volumes --------------------------------------------------------

def test_volume_check_cone():
    p = cone_volume_problem(2)
    t = run(p, RunConfig(nlive=500, sampler=SamplerConfig(kind="rejection"), seed=4))
    rep = volume_check(t, assign_volumes(t), p)
    assert rep.volume_fraction_inside >= 0.99
    assert rep.verdict == "pass"
    assert rep.volume_deviations[0] == (LOG_ZERO, 0.0, 0.0)
    lam, est, true = map(np.array, zip(*rep.volume_deviations[1:]))
    assert np.all(np.diff(true) <= 1e-12)


def test_volume_check_flags_tight_ellipsoid():
    # a tight bound around a few points clips the low-likelihood rim, so new
    # points are too good and the volume estimate lags behind the truth
    p = cone_volume_problem(5)

    def fails(kind):
        out = 0
        for seed in range(10):
            t = run(p, RunConfig(nlive=10, sampler=SamplerConfig(kind=kind, enlargement=1.0),
                                 seed=seed))
            out += volume_check(t, assign_volumes(t), p).verdict == "fail"
        return out

    assert fails("ellipsoid") >= 5
    assert fails("rejection") <= 1


def test_shells_volume_oracle():
    # annulus formula against hit-or-miss counts (4e6 draws, seed 5):
    # lambda=-5 -> -2.08380, 0 -> -2.84593, 1 -> -3.48869
    p = gaussian_shells()
    got = p.oracle.log_x(np.array([-5.0, 0.0, 1.0]))
    assert np.allclose(got, [-2.08380, -2.84593, -3.48869], atol=0.01)
    # far from the peak the contours touch the box and no formula is given
    assert np.isnan(p.oracle.log_x(np.array([-30.0])))[0]


def test_volume_check_needs_oracle(toy_run):
    from nestkit.problems import rosenbrock
    with pytest.raises(ValueError):
        volume_check(toy_run, assign_volumes(toy_run), rosenbrock())


# -- two-run consistency -----------------------------------------------------

def report(lz, sigma, fp="abc"):
    return EvidenceReport(lz, sigma, 1.0, 100.0, 1000, fp)


def test_two_run_consistency_values():
    assert two_run_consistency(report(-3.46, 0.05), report(-3.46, 0.05)) == 0.0
    assert two_run_consistency(report(-3.46, 0.05), report(-3.51, 0.05)) == pytest.approx(
        0.05 / math.sqrt(0.005), rel=1e-9)
    assert two_run_consistency(report(-3.46, 0.05), report(-3.51, 0.05)) == pytest.approx(
        0.707, abs=1e-3)
    far = two_run_consistency(report(-3.0, 0.05), report(-3.51, 0.05))
    assert far == pytest.approx(7.2, abs=0.05)
    assert far > 3


def test_two_run_consistency_fingerprint_mismatch():
    with pytest.raises(ValueError):
        two_run_consistency(report(-3.0, 0.05, "a"), report(-3.0, 0.05, "b"))


def test_two_independent_runs_consistent(toy):
    from nestkit.estimators import evidence_report
    a = evidence_report(run(toy, toy_config(seed=31, nlive=200)), seed=1)
    b = evidence_report(run(toy, toy_config(seed=32, nlive=200)), seed=2)
    assert a.problem_fingerprint == b.problem_fingerprint != ""
    assert two_run_consistency(a, b) < 3
