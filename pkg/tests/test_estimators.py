import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import normaltest

from nestkit import RunConfig, SamplerConfig, run
from nestkit.core import LOG_ZERO, RunTrace, log_sum
from nestkit.kernels import log_trapezium_weights
from nestkit.estimators import (UndefinedPosterior, VolumeAssignment, assign_volumes,
                                bootstrap_posterior_error, effective_sample_size,
                                evidence_error, evidence_report, kl_divergence,
                                log_evidence, log_point_weights, mean_energy_and_heat_capacity,
                                posterior_expectation, posterior_weights, reweight,
                                reweight_log_weights, simulate_evidence, thermo_evidence,
                                threads)
from nestkit.problems import Problem, harmonic_energy, standard_suite, truncated_gaussian

from conftest import toy_config


def synthetic(n_active, log_like=None, d=1, final=()):
    n_active = np.asarray(n_active)
    m = len(n_active)
    ll = np.arange(m, dtype=float) if log_like is None else np.asarray(log_like, float)
    kw = {}
    if len(final):
        kw = dict(final_log_like=np.asarray(final, float),
                  final_birth_log_like=np.full(len(final), LOG_ZERO),
                  final_insertion_index=np.full(len(final), -1),
                  final_theta=np.zeros((len(final), d)))
    return RunTrace(ll, np.full(m, LOG_ZERO), n_active, np.full(m, -1), np.zeros((m, d)), **kw)


@pytest.fixture(scope="module")
def harmonic_run():
    p = harmonic_energy(5.0, 2)
    return p, run(p, RunConfig(nlive=1000, sampler=SamplerConfig(steps=5), seed=8))


# -- volumes -----------------------------------------------------------------

def test_mean_log_volumes(toy_run):
    vol = assign_volumes(toy_run, "mean_log")
    k = np.arange(1, 501)
    assert np.allclose(vol.log_x[:500], -k / 1000, rtol=0, atol=1e-12)


def test_mean_volume_n1():
    vol = assign_volumes(synthetic([1]), "mean")
    assert math.exp(vol.log_x[0]) == pytest.approx(0.5, abs=1e-15)
    vol = assign_volumes(synthetic([4, 4]), "walter")
    assert np.exp(vol.log_x) == pytest.approx([0.75, 0.5625])


def test_mean_and_walter_reject_ties():
    t = synthetic([3, 2, 1], log_like=[0.0, 0.0, 1.0])
    assign_volumes(t, "mean_log")
    for m in ("mean", "walter"):
        with pytest.raises(ValueError):
            assign_volumes(t, m)


def test_simulated_factor_moments():
    n = 1000
    t = synthetic(np.full(100_000, n))
    vol = assign_volumes(t, "simulated", seed=3)
    log_t = np.diff(np.concatenate([[0.0], vol.log_x]))
    f = np.exp(log_t)
    # Beta(n, 1): mean n/(n+1), var n/((n+1)^2 (n+2))
    se = math.sqrt(n / ((n + 1) ** 2 * (n + 2)) / len(f))
    assert abs(f.mean() - n / (n + 1)) < 3 * se
    assert abs(log_t.mean() + 1 / n) < 4 * (1 / n) / math.sqrt(len(f))


def test_simulated_needs_seed():
    with pytest.raises(ValueError):
        assign_volumes(synthetic([3, 2, 1]), "simulated")


def test_simulated_mean_converges_to_mean_volumes():
    t = synthetic(np.concatenate([np.full(300, 100), np.arange(100, 0, -1)]))
    xs = np.mean([np.exp(assign_volumes(t, "simulated", seed=s).log_x) for s in range(10_000)],
                 axis=0)
    want = np.exp(assign_volumes(t, "mean").log_x)
    assert np.max(np.abs(xs[:300] / want[:300] - 1)) < 0.01


# -- evidence ----------------------------------------------------------------

@pytest.mark.parametrize("method", ["mean_log", "simulated"])
def test_constant_likelihood_telescopes(method):
    c = 2.5
    t = synthetic(np.arange(40, 0, -1), log_like=np.full(40, math.log(c)))
    vol = assign_volumes(t, method, seed=1 if method == "simulated" else None)
    assert log_evidence(t, vol) == pytest.approx(math.log(c), abs=1e-14)


def test_two_point_hand_example():
    t = synthetic([1, 1], log_like=np.log([1.0, 2.0]))
    vol = VolumeAssignment(np.log([0.5, 0.25]), "given")
    # plain trapezium (1 - .25)/2 * 1 + (.5 - 0)/2 * 2 = 0.875, plus the flat head
    # (1 - .5)/2 * 1 = 0.25 and the flat tail .25/2 * 2 = 0.25
    assert math.exp(log_evidence(t, vol)) == pytest.approx(1.375, rel=1e-15)


def test_no_terminal_increment_when_final_likelihood_zero():
    dead = synthetic([5, 5, 5], log_like=[-1.0, -0.5, 0.0],
                     final=[LOG_ZERO] * 5)
    vol = assign_volumes(dead)
    lw = log_point_weights(dead, vol)
    assert np.all(np.isneginf(lw[3:]))
    assert log_evidence(dead, vol) == log_sum(lw[:3])


def test_worked_example_evidence(toy_run):
    vol = assign_volumes(toy_run)
    lz = log_evidence(toy_run, vol)
    assert abs(lz + 3.46) < 0.15
    h = kl_divergence(toy_run, vol)
    assert abs(h - 2.46) < 0.2


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-50, 5), min_size=2, max_size=80), st.integers(0, 79))
def test_partial_sums_never_increase_when_truncated(lls, k):
    ll = np.sort(np.array(lls))
    t = synthetic(np.full(len(ll), 10), log_like=ll)
    lw = log_point_weights(t, assign_volumes(t))
    k = min(k, len(ll) - 1)
    assert log_sum(lw[:len(ll) - k]) <= log_sum(lw) + 1e-15


def test_estimators_are_pure(small_run):
    v1, v2 = assign_volumes(small_run), assign_volumes(small_run)
    assert log_evidence(small_run, v1) == log_evidence(small_run, v2)
    assert np.array_equal(posterior_weights(small_run, v1), posterior_weights(small_run, v2))
    a = simulate_evidence(small_run, 50, seed=4)
    assert np.array_equal(a, simulate_evidence(small_run, 50, seed=4))


# -- posterior weights and information ---------------------------------------

def test_constant_likelihood_posterior_is_weights():
    t = synthetic(np.arange(20, 0, -1), log_like=np.zeros(20))
    vol = assign_volumes(t)
    p = posterior_weights(t, vol)
    assert np.allclose(p, np.exp(log_trapezium_weights(vol.log_x, True)), rtol=1e-12)
    assert kl_divergence(t, vol) == 0.0


def test_dominant_point():
    t = synthetic(np.full(10, 10), log_like=np.concatenate([np.zeros(9), [800.0]]))
    p = posterior_weights(t, assign_volumes(t))
    assert p[-1] == pytest.approx(1.0, abs=1e-12)


def test_all_zero_likelihood():
    t = synthetic(np.full(3, 3), log_like=np.full(3, LOG_ZERO))
    with pytest.raises(UndefinedPosterior):
        posterior_weights(t, assign_volumes(t))


def test_weights_normalized_on_suite():
    for p in standard_suite():
        t = run(p, RunConfig(nlive=100, sampler=SamplerConfig(kind="slice", steps=5), seed=1))
        assert posterior_weights(t, assign_volumes(t)).sum() == pytest.approx(1.0, abs=1e-12)


def test_kl_1d_truncated_gaussian():
    p = truncated_gaussian(5.0, 1)
    t = run(p, RunConfig(nlive=500, sampler=SamplerConfig(kind="rejection"), seed=2))
    # quadrature oracle 1.230220150110061
    assert kl_divergence(t, assign_volumes(t)) == pytest.approx(1.230220150110061, abs=0.15)


def test_evidence_error():
    assert evidence_error(2.494708533750648, 1000) == pytest.approx(0.04994705730822035,
                                                                    rel=1e-12)
    assert evidence_error(0.0, 10) == 0.0
    assert evidence_error(4.0, 400) == pytest.approx(0.1)


# -- simulated error bars ----------------------------------------------------

def test_simulated_sigma(toy_run):
    draws = simulate_evidence(toy_run, 1000, seed=71)
    h = kl_divergence(toy_run, assign_volumes(toy_run))
    sd = draws.std(ddof=1)
    assert sd == pytest.approx(0.052, abs=0.015)
    assert sd == pytest.approx(math.sqrt(h / 1000), rel=0.3)
    assert normaltest(draws).pvalue > 1e-3


def test_simulate_two_samples(small_run):
    d = simulate_evidence(small_run, 2, seed=0)
    assert d.shape == (2,) and np.all(np.isfinite(d))
    with pytest.raises(ValueError):
        simulate_evidence(small_run, 1)


def test_evidence_report(toy_run):
    r = evidence_report(toy_run, 200, seed=1)
    assert r.n_like_calls == toy_run.n_like_calls
    assert 0 < r.sigma_log_z < 0.1
    assert r.ess > 1000


# -- ESS, expectations and bootstrap -----------------------------------------

def test_effective_sample_size():
    assert effective_sample_size(np.full(37, 1 / 37)) == pytest.approx(37)
    assert effective_sample_size([1.0]) == 1.0
    assert effective_sample_size([0.5, 0.5, 0, 0, 0]) == pytest.approx(2.0)


def test_posterior_expectations(toy_run):
    vol = assign_volumes(toy_run)
    assert posterior_expectation(toy_run, vol, lambda th: np.ones(len(th))) == \
        pytest.approx(1.0, abs=1e-12)
    x1 = lambda th: th[:, 0]
    r2 = lambda th: (th**2).sum(axis=1)
    m1 = posterior_expectation(toy_run, vol, x1)
    assert abs(m1) < 3 * bootstrap_posterior_error(toy_run, x1, 100, seed=1)
    m2 = posterior_expectation(toy_run, vol, r2)
    # E[x^2] = 1/2 per dimension for exp(-x^2)
    assert abs(m2 - 1.0) < 4 * bootstrap_posterior_error(toy_run, r2, 100, seed=2)


def test_bootstrap_constant_function(small_run):
    assert bootstrap_posterior_error(small_run, lambda th: np.ones(len(th)), 20) == \
        pytest.approx(0.0, abs=1e-12)


def test_threads_partition_static_run(small_run):
    ths = threads(small_run)
    assert len(ths) == 100
    idx = np.sort(np.concatenate(ths))
    assert np.array_equal(idx, np.arange(len(small_run)))


@pytest.mark.slow
def test_bootstrap_coverage(toy):
    covered = 0
    for seed in range(40):
        t = run(toy, toy_config(seed=500 + seed, nlive=200))
        f = lambda th: th[:, 0]
        m = posterior_expectation(t, assign_volumes(t), f)
        covered += abs(m) < 3 * bootstrap_posterior_error(t, f, 100, seed=seed)
    assert covered >= 38


# -- thermodynamics ----------------------------------------------------------

def test_thermo_identities(toy_run):
    vol = assign_volumes(toy_run)
    assert thermo_evidence(toy_run, vol, 1.0) == log_evidence(toy_run, vol)
    assert thermo_evidence(toy_run, vol, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_thermo_harmonic(harmonic_run):
    p, t = harmonic_run
    vol = assign_volumes(t)
    for beta in (1.0, 2.0, 4.0):
        est = thermo_evidence(t, vol, beta)
        sims = [thermo_evidence(t, assign_volumes(t, "simulated", seed=s), beta)
                for s in range(200)]
        want = math.log(2 * math.pi / beta / 100)
        assert abs(est - want) < 3 * np.std(sims, ddof=1)


def test_equipartition(harmonic_run):
    p, t = harmonic_run
    table = mean_energy_and_heat_capacity(t, assign_volumes(t), np.linspace(1.0, 4.0, 7))
    for beta, e, cv in table:
        assert e == pytest.approx(1.0 / beta, rel=0.1)
        assert cv == pytest.approx(1.0, abs=0.1)


def test_constant_energy():
    t = synthetic(np.arange(10, 0, -1), log_like=np.full(10, -2.0))
    table = mean_energy_and_heat_capacity(t, assign_volumes(t), [0.5, 1.0, 2.0])
    for _, e, cv in table:
        assert e == pytest.approx(2.0, abs=1e-12)
        assert cv == pytest.approx(0.0, abs=1e-9)


# -- reweighting -------------------------------------------------------------

def test_reweight_identities(toy_run):
    vol = assign_volumes(toy_run)
    p0 = posterior_weights(toy_run, vol)
    lz0 = log_evidence(toy_run, vol)
    w, lz, ess = reweight(toy_run, vol)
    assert np.array_equal(w, p0) and lz == lz0
    w, lz, _ = reweight(toy_run, vol, lambda th: -(th**2).sum(axis=1))
    assert np.array_equal(w, p0)
    assert lz == pytest.approx(lz0, abs=1e-10)
    c = 7.3
    w, lz, _ = reweight(toy_run, vol, lambda th: -(th**2).sum(axis=1) + math.log(c))
    assert np.array_equal(w, p0)
    assert lz - lz0 == pytest.approx(math.log(c), abs=1e-10)


@given(st.lists(st.floats(-20, 0), min_size=2, max_size=40), st.integers(0, 2**32 - 1))
def test_reweight_inverse_round_trip(logw, seed):
    lp = np.asarray(logw) - log_sum(np.asarray(logw))
    r = np.random.default_rng(seed).normal(size=len(lp))
    fwd, s1 = reweight_log_weights(lp, r)
    back, s2 = reweight_log_weights(fwd, -r)
    assert np.allclose(np.exp(back), np.exp(lp), rtol=0, atol=1e-10)
    assert s1 + s2 == pytest.approx(0.0, abs=1e-10)


def test_reweight_to_wider_likelihood(toy, toy_run):
    def wide(th):
        return -(th**2).sum(axis=-1) / 4.0
    vol = assign_volumes(toy_run)
    _, lz_rw, _ = reweight(toy_run, vol, wide)
    direct = Problem("wide_gaussian", toy.prior, lambda th: float(wide(th)), wide)
    t = run(direct, toy_config(seed=5))
    vd = assign_volumes(t)
    sigma = float(np.std(simulate_evidence(t, 300, seed=1), ddof=1))
    assert abs(lz_rw - log_evidence(t, vd)) < 3 * sigma
