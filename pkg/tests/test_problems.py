import math

import numpy as np
import pytest

from nestkit import RunConfig, SamplerConfig, run
from nestkit.estimators import assign_volumes, posterior_weights
from nestkit.priors import DomainError
from nestkit.problems import (cone_volume_problem, eggbox, gaussian_shells, harmonic_energy,
                              make_problem, plateau_problem, quadrature_log_z, rosenbrock,
                              standard_suite, truncated_gaussian)

PLATEAU = [(math.log(1), 0.9), (math.log(2), 0.09), (math.log(3), 0.01)]

# Simpson's rule on an odd grid (4097 points for the eggbox, 8193 otherwise),
# an independent check on the trapezoid oracles.
SIMPSON = {"eggbox": 235.85594033225414, "rosenbrock": -5.804132363794471,
           "shells": -1.7456418845218158}


@pytest.fixture(scope="module")
def suite():
    return {p.name: p for p in standard_suite()}


def hit_or_miss(problem, n=10**7, chunk=10**6, seed=0):
    """log Z and its standard error from prior draws."""
    gen = np.random.default_rng(seed)
    chunks = []
    for _ in range(n // chunk):
        chunks.append(problem.loglike_u_batch(gen.random((chunk, problem.ndim))))
    ll = np.concatenate(chunks)
    m = ll.max()
    w = np.exp(ll - m)
    mean = w.mean()
    se = w.std() / math.sqrt(n)
    return math.log(mean) + m, se / mean


def test_truncated_gaussian_values(toy):
    assert toy.log_like(np.zeros(2)) == 0.0
    assert toy.log_like(np.array([1.0, 1.0])) == -2.0
    assert toy.oracle.log_z == pytest.approx(-3.46, abs=0.005)
    assert toy.oracle.h == pytest.approx(2.46, abs=0.005)


def test_truncated_gaussian_1d_h():
    # closed form -1/2 - log(pi)/2 + log 10; quadrature gives 1.230220150110061
    p = truncated_gaussian(5.0, 1)
    assert p.oracle.h == pytest.approx(1.230220150110061, abs=1e-9)


def test_cone_volume_values():
    p = cone_volume_problem(2)
    lam = -(0.5**2)
    # hit-or-miss with 1e7 points gave 0.1963956 +- 0.000126
    assert math.exp(p.oracle.log_x(lam)) == pytest.approx(0.1963956, abs=4 * 0.000126)
    assert math.exp(p.oracle.log_x(lam)) == pytest.approx(math.pi * 0.25 / 4, rel=1e-14)
    assert math.exp(p.oracle.log_x(-1.0)) == pytest.approx(math.pi / 4, rel=1e-14)
    for d in (1, 2, 5):
        q = cone_volume_problem(d)
        assert math.exp(q.oracle.log_x(-1e-12)) < 1e-5
        assert q.oracle.log_x(0.0) == -math.inf


@pytest.mark.parametrize("d", [1, 2, 3, 6])
def test_log_x_monotone_bounded(d):
    for p in (cone_volume_problem(d), truncated_gaussian(5.0, d)):
        lam = np.linspace(-30, 0, 400)
        lx = p.oracle.log_x(lam)
        ok = np.isfinite(lx) | np.isneginf(lx)
        lx = lx[ok]
        assert np.all(np.diff(lx) <= 0)
        assert np.all(lx <= 0)


def test_plateau_values():
    p = plateau_problem(PLATEAU)
    assert p.oracle.log_z == pytest.approx(math.log(1.11), abs=1e-15)
    assert p.oracle.log_z == pytest.approx(0.10436, abs=1e-5)
    single = plateau_problem([(math.log(7.0), 1.0)])
    assert single.oracle.log_z == pytest.approx(math.log(7.0), abs=1e-15)
    lx = p.oracle.log_x(np.array([-1.0, 0.0, 0.5 * math.log(2), math.log(2), 5.0]))
    assert np.allclose(np.exp(lx), [1.0, 0.1, 0.1, 0.01, 0.0])


@pytest.mark.parametrize("levels", [
    [(0.0, 0.5), (0.0, 0.5)],
    [(1.0, 0.5), (0.0, 0.5)],
    [(0.0, 0.5), (1.0, 0.4)],
    [],
])
def test_plateau_rejects(levels):
    with pytest.raises(DomainError):
        plateau_problem(levels)


def test_harmonic_values():
    p = harmonic_energy(5.0, 2)
    assert p.log_like(np.zeros(2)) == 0.0
    # scipy dblquad of exp(-beta r^2 / 2) over the box, divided by 100
    for beta, z in [(1, 0.06283178102841873), (2, 0.03141592653580133),
                    (4, 0.01570796326794897)]:
        assert math.exp(p.oracle.log_z_beta(beta)) == pytest.approx(z, rel=1e-9)
        assert math.exp(p.oracle.log_z_beta(beta)) == pytest.approx(2 * math.pi / beta / 100,
                                                                     rel=1e-5)
    assert p.oracle.log_z_beta(0.0) == 0.0
    assert abs(p.oracle.log_z_beta(1e-8)) < 1e-6


def test_suite_oracles(suite):
    for name, val in SIMPSON.items():
        assert suite[name].oracle.log_z == pytest.approx(val, abs=1e-6), name


@pytest.mark.slow
@pytest.mark.parametrize("factory", [
    lambda: truncated_gaussian(5.0, 2), lambda: cone_volume_problem(2),
    lambda: cone_volume_problem(3), lambda: plateau_problem(PLATEAU),
    lambda: harmonic_energy(5.0, 2), eggbox, rosenbrock, gaussian_shells,
], ids=["gauss", "cone2", "cone3", "plateau", "harmonic", "eggbox", "rosenbrock", "shells"])
def test_oracle_vs_hit_or_miss(factory):
    p = factory()
    lz, rel_se = hit_or_miss(p)
    assert abs(lz - p.oracle.log_z) < 4 * rel_se + 1e-12, (lz, p.oracle.log_z, rel_se)


def test_shells_modes_split_evenly(suite):
    p = suite["shells"]
    # by quadrature: the left half is half the prior area and carries half the mass
    left = quadrature_log_z(p.log_like_batch, (-6.0, -6.0), (0.0, 6.0), 2049)
    assert 0.5 * math.exp(left - p.oracle.log_z) == pytest.approx(0.5, abs=1e-6)
    cfg = RunConfig(nlive=400, sampler=SamplerConfig(kind="multi_ellipsoid"), seed=5)
    t = run(p, cfg)
    w = posterior_weights(t, assign_volumes(t))
    frac = w[t.all_theta()[:, 0] < 0].sum()
    assert frac == pytest.approx(0.5, abs=0.1)


def test_scalar_and_batch_agree(suite):
    gen = np.random.default_rng(1)
    for p in list(suite.values()) + [harmonic_energy(), cone_volume_problem(3),
                                     plateau_problem(PLATEAU)]:
        u = gen.random((50, p.ndim))
        theta = p.prior(u)
        scalar = np.array([p.log_like(t) for t in theta])
        assert np.allclose(scalar, p.log_like_batch(theta), rtol=1e-12, atol=1e-12), p.name


def test_loglike_u_outside_cube(toy):
    assert toy.loglike_u(np.array([1.2, 0.5])) == -math.inf


def test_make_problem():
    assert make_problem("gaussian", a=5, d=3).ndim == 3
    assert make_problem("plateau", levels=[[0.0, 0.5], [1.0, 0.5]]).name == "plateau"
    with pytest.raises(DomainError):
        make_problem("nope")


def test_fingerprint_distinguishes_parameters():
    assert truncated_gaussian(5, 2).fingerprint != truncated_gaussian(5, 3).fingerprint
    assert truncated_gaussian(5, 2).fingerprint == truncated_gaussian(5, 2).fingerprint
