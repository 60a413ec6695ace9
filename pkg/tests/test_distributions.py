import math

import numpy as np
import pytest
from scipy import stats

import oracles
from bcdcp import rng
from bcdcp.distributions import (CopulaSpec, ExponentialLaw, FrechetLaw, JointShockLaw, LoggammaLaw, ParetoLaw,
                                 ZeroLaw, cross_moment, cross_moment_mc, joint_laplace)
from bcdcp.errors import DomainError

G = LoggammaLaw(1.0, 2.75, 3.0)
H = FrechetLaw(2.0, 3.0)
J = ParetoLaw(3.0, 4.0, 6.0)
K = ParetoLaw(4.0, 4.0, 6.0)
E01 = ExponentialLaw(0.1)


def test_exponential_laplace_values():
    assert E01.laplace_transform(0.0) == 1.0
    assert E01.laplace_transform(0.1) == pytest.approx(0.5, rel=1e-15)


def test_loggamma_laplace_matches_high_precision_oracle():
    for eps in (0.01, 0.3, 1.0, 4.0):
        assert G.laplace_transform(eps) == pytest.approx(oracles.loggamma_laplace_mp(1, 2.75, 3, eps), abs=1e-12)


@pytest.mark.parametrize("law", [G, H, J, K, FrechetLaw(0.5, 15.0), LoggammaLaw(1.0, 11.0, 3.0)])
def test_laplace_matches_independent_quadrature(law):
    for eps in (0.05, 0.5, 2.0):
        assert law.laplace_transform(eps) == pytest.approx(oracles.laplace_by_quad(law.pdf, eps), abs=1e-10)


@pytest.mark.parametrize("law", [G, H, J, K, E01])
def test_laplace_complement_is_one_minus_transform(law):
    for eps in (1e-3, 0.1, 1.0):
        assert law.laplace_complement(eps) == pytest.approx(1 - law.laplace_transform(eps), abs=1e-10)
    # relative accuracy where the difference form cancels
    eps = 1e-9
    assert law.laplace_complement(eps) / eps == pytest.approx(law.mean(), rel=1e-6)


def test_published_law_means():
    assert f"{G.mean():.4f}" == "2.8805"
    assert G.mean() == pytest.approx((11 / 7) ** 3 - 1, rel=1e-14)
    assert f"{H.mean():.4f}" == "2.7082"
    assert J.mean() == pytest.approx(12.0)
    assert K.mean() == pytest.approx(8.0)
    assert J.second_moment() == pytest.approx(336.0)


@pytest.mark.parametrize("law", [G, H, J, K, E01])
def test_moments_agree_with_direct_formulas(law):
    m1, m2 = oracles.law_moments(law)
    assert law.mean() == pytest.approx(m1, rel=1e-13)
    assert law.second_moment() == pytest.approx(m2, rel=1e-13)


def test_moment_existence_flags():
    assert not FrechetLaw(2.0, 1.5).has_second_moment()
    assert FrechetLaw(2.0, 1.5).has_mean()
    assert not ParetoLaw(1.0, 4.0, 6.0).has_mean()
    with pytest.raises(DomainError):
        FrechetLaw(2.0, 1.5).second_moment()


def test_exponential_inverse_transform():
    assert E01.sample(rng.FixedStream([math.exp(-1.0)])) == pytest.approx(10.0, rel=1e-14)


@pytest.mark.parametrize("law", [E01, H, J, K])
def test_sampler_kolmogorov_smirnov(law):
    x = law.sample_many(11, 100_000)
    res = stats.kstest(x, law.cdf)
    # 1% critical value of the one-sample KS statistic
    assert res.statistic < 1.63 / math.sqrt(len(x))


def test_loggamma_sampler_moments():
    x = LoggammaLaw(1.0, 11.0, 3.0).sample_many(12, 100_000)
    law = LoggammaLaw(1.0, 11.0, 3.0)
    m, se = x.mean(), x.std(ddof=1) / math.sqrt(len(x))
    assert abs(m - law.mean()) < 3 * se
    x2 = x * x
    assert abs(x2.mean() - law.second_moment()) < 3 * x2.std(ddof=1) / math.sqrt(len(x))


def test_published_law_sample_means_million():
    for law, seed in ((G, 21), (J, 22)):
        x = law.sample_many(seed, 1_000_000)
        se = x.std(ddof=1) / math.sqrt(len(x))
        assert abs(x.mean() - law.mean()) < 3 * se


def test_zero_law():
    z = ZeroLaw()
    assert z.mean() == 0 and z.laplace_transform(3.0) == 1.0 and z.laplace_complement(3.0) == 0.0
    assert np.all(z.sample_many(1, 10) == 0)


def test_fgm_cross_moment_closed_form_and_affine():
    vals = [cross_moment(CopulaSpec("fgm", th), E01, E01) for th in (-1.0, 0.0, 1.0)]
    assert vals[1] == pytest.approx(100.0, rel=1e-14)
    assert vals[2] == pytest.approx(125.0, rel=1e-14)
    assert vals[2] - vals[1] == pytest.approx(vals[1] - vals[0], rel=1e-13)
    assert vals[2] - vals[1] == pytest.approx(0.25 / (0.1 * 0.1), rel=1e-13)
    # quadrature route on FGM reproduces the closed form
    assert cross_moment(CopulaSpec("fgm", 0.7), E01, E01, method="quadrature") == pytest.approx(
        cross_moment(CopulaSpec("fgm", 0.7), E01, E01), rel=1e-9)


@pytest.mark.parametrize("theta", [-0.99, -0.5, 0.0, 0.5, 0.99])
def test_gaussian_cross_moment_against_gauss_hermite(theta):
    got = cross_moment(CopulaSpec("gaussian", theta), E01, ExponentialLaw(0.2))
    assert got == pytest.approx(oracles.gaussian_cross_moment_gh(0.1, 0.2, theta), rel=1e-7)


@pytest.mark.parametrize("theta", [-0.99, 0.0, 0.5, 0.99])
def test_student_t_cross_moment_against_oracle(theta):
    got = cross_moment(CopulaSpec("student_t", theta, 5.0), E01, E01)
    assert got == pytest.approx(oracles.student_t_cross_moment(0.1, 0.1, theta, 5.0, normal_nodes=160), rel=1e-5)


@pytest.mark.parametrize("theta", [1.001, 2.0, 5.0, 10.0, 100.0])
def test_gumbel_cross_moment_against_oracle(theta):
    got = cross_moment(CopulaSpec("gumbel", theta), E01, E01)
    assert got == pytest.approx(oracles.gumbel_cross_moment(0.1, 0.1, theta), rel=1e-5)


def test_cross_moment_sampling_estimates():
    law = JointShockLaw(E01, E01, CopulaSpec("fgm", 1.0))
    x = law.sample_many(5, 1_000_000)
    p = x[:, 0] * x[:, 1]
    assert abs(p.mean() - 125.0) < 3 * p.std(ddof=1) / 1000.0
    g = JointShockLaw(E01, E01, CopulaSpec("gumbel", 1.001)).sample_many(6, 1_000_000)
    p = g[:, 0] * g[:, 1]
    assert abs(p.mean() - cross_moment(CopulaSpec("gumbel", 1.001), E01, E01)) < 3 * p.std(ddof=1) / 1000.0
    est, se = cross_moment_mc(CopulaSpec("gaussian", 0.5), E01, E01, paths=200_000, seed=3)
    assert abs(est - cross_moment(CopulaSpec("gaussian", 0.5), E01, E01)) < 3 * se


def test_fgm_independence_sample_correlation():
    u = 1.0 - np.exp(-0.1 * JointShockLaw(E01, E01, CopulaSpec("fgm", 0.0)).sample_many(8, 100_000))
    r = np.corrcoef(u[:, 0], u[:, 1])[0, 1]
    assert abs(r) < 3 / math.sqrt(len(u))


@pytest.mark.parametrize("spec", [CopulaSpec("fgm", -0.8), CopulaSpec("gaussian", 0.9), CopulaSpec("student_t", -0.5),
                                  CopulaSpec("gumbel", 4.0)])
def test_copula_sampler_uniform_marginals(spec):
    x = JointShockLaw(E01, ExponentialLaw(0.3), spec).sample_many(9, 50_000)
    u1 = -np.expm1(-0.1 * x[:, 0])
    u2 = -np.expm1(-0.3 * x[:, 1])
    crit = 1.63 / math.sqrt(len(x))
    assert stats.kstest(u1, "uniform").statistic < crit
    assert stats.kstest(u2, "uniform").statistic < crit


@pytest.mark.parametrize("spec", [CopulaSpec("fgm", 0.6), CopulaSpec("gaussian", -0.4), CopulaSpec("gumbel", 2.5)])
def test_copula_cdf_boundary_and_empirical(spec):
    u = np.linspace(0.05, 0.95, 7)
    assert np.allclose(spec.cdf(u, np.ones_like(u)), u, atol=1e-12)
    x = JointShockLaw(E01, E01, spec).sample_many(10, 100_000)
    uu = -np.expm1(-0.1 * x)
    for a, b in ((0.3, 0.6), (0.7, 0.2), (0.5, 0.5)):
        emp = np.mean((uu[:, 0] <= a) & (uu[:, 1] <= b))
        assert abs(emp - float(spec.cdf(a, b))) < 4 * math.sqrt(0.25 / len(uu))


@pytest.mark.parametrize("theta", [-1.0, 0.0, 0.4, 1.0])
def test_fgm_joint_laplace_against_closed_form(theta):
    law = JointShockLaw(E01, ExponentialLaw(0.25), CopulaSpec("fgm", theta))
    for eps, kap in ((0.0, 0.3), (0.2, 0.0), (0.05, 0.7), (1.0, 1.0)):
        ref = oracles.fgm_joint_laplace(0.1, 0.25, theta, eps, kap)
        assert joint_laplace(law, eps, kap) == pytest.approx(ref, rel=1e-13)
        assert joint_laplace(law, eps, kap, method="quadrature") == pytest.approx(ref, rel=1e-9)


def test_copula_parameter_domain():
    with pytest.raises(DomainError):
        CopulaSpec("gumbel", 0.5)
    with pytest.raises(DomainError):
        CopulaSpec("fgm", 1.5)
    with pytest.raises(DomainError):
        CopulaSpec("clayton", 1.0)
