import math
from dataclasses import replace

import mpmath
import pytest

import oracles
from bcdcp import moments
from bcdcp.distributions import CopulaSpec, ExponentialLaw, LoggammaLaw
from bcdcp.errors import DomainError

KEYS = {
    "E_lambda1": lambda m, t: moments.mean_intensity(m, 1, t),
    "E_lambda2": lambda m, t: moments.mean_intensity(m, 2, t),
    "E_lambda1_sq": lambda m, t: moments.second_moment_intensity(m, 1, t),
    "E_lambda2_sq": lambda m, t: moments.second_moment_intensity(m, 2, t),
    "E_lambda1_lambda2": lambda m, t: moments.joint_mean_intensity(m, t),
    "E_L1": lambda m, t: moments.mean_loss(m, 1, t),
    "E_L2": lambda m, t: moments.mean_loss(m, 2, t),
}

STATIONARY_KEYS = {
    "E_lambda1": lambda m, t: moments.mean_intensity(m, 1, stationary=True),
    "E_lambda2": lambda m, t: moments.mean_intensity(m, 2, stationary=True),
    "E_lambda1_sq": lambda m, t: moments.second_moment_intensity(m, 1, stationary=True),
    "E_lambda2_sq": lambda m, t: moments.second_moment_intensity(m, 2, stationary=True),
    "E_lambda1_lambda2": lambda m, t: moments.joint_mean_intensity(m, stationary=True),
    "E_L1": lambda m, t: moments.mean_loss(m, 1, t, stationary=True),
    "E_L2": lambda m, t: moments.mean_loss(m, 2, t, stationary=True),
    "E_lambda1_L2": lambda m, t: moments.cross_intensity_loss(m, (1, 2), t),
    "E_lambda2_L1": lambda m, t: moments.cross_intensity_loss(m, (2, 1), t),
    "E_lambda1_L1": lambda m, t: moments.cross_intensity_loss(m, (1, 1), t),
    "E_lambda2_L2": lambda m, t: moments.cross_intensity_loss(m, (2, 2), t),
    "E_L1_L2": lambda m, t: moments.joint_mean_losses(m, t),
    "E_L1_sq": lambda m, t: moments.second_moment_loss(m, 1, t),
    "E_L2_sq": lambda m, t: moments.second_moment_loss(m, 2, t),
}


def test_published_stationary_values(ex52):
    assert moments.mean_intensity(ex52, 1, stationary=True) == pytest.approx(250.9756, rel=1e-6)
    assert moments.mean_intensity(ex52, 2, stationary=True) == pytest.approx(102.8228, rel=1e-6)
    assert moments.mean_loss(ex52, 1, 1.0, stationary=True) == pytest.approx(3011.7073, rel=1e-7)
    assert moments.var_loss(ex52, 1, 1.0) == pytest.approx(6713295.506, rel=1e-9)
    assert moments.var_loss(ex52, 2, 1.0) == pytest.approx(197473.89, rel=1e-7)
    assert moments.cov_losses(ex52, 1.0) == pytest.approx(65497.54, rel=1e-7)
    assert moments.corr_losses(ex52, 1.0) == pytest.approx(0.0568856, rel=1e-5)


@pytest.mark.parametrize("t", [0.3, 1.0, 4.0])
def test_stationary_moments_against_ode(ex52, t):
    mu12 = ex52.shocks.cross_moment()
    ref = oracles.moment_ode(ex52, t, mu12, stationary=True)
    for key, fn in STATIONARY_KEYS.items():
        assert fn(ex52, t) == pytest.approx(ref[key], rel=1e-9), key


@pytest.mark.parametrize("delta1", [2.5, None, 3.0, 4.0])
def test_conditional_moments_against_ode(ex52, delta1):
    delta1 = ex52.line1.self_jump.mean() if delta1 is None else delta1
    model = replace(ex52, line1=replace(ex52.line1, delta=delta1, a=0.3, lam0=40.0),
                    line2=replace(ex52.line2, a=1.2, lam0=7.0))
    mu12 = model.shocks.cross_moment()
    for t in (0.5, 2.0):
        ref = oracles.moment_ode(model, t, mu12, stationary=False)
        for key, fn in KEYS.items():
            assert fn(model, t) == pytest.approx(ref[key], rel=1e-9), (key, t)


def test_stationary_intensity_fixed_point(ex52, fig1):
    for model in (ex52, fig1):
        ref = oracles.stationary_intensity_moments(model, model.shocks.cross_moment())
        for key, want in zip(oracles.ODE_KEYS[:5], ref):
            assert STATIONARY_KEYS[key](model, 1.0) == pytest.approx(want, rel=1e-12), key


def test_conditional_reaches_stationary(ex52):
    stat = moments.mean_intensity(ex52, 1, stationary=True)
    assert moments.mean_intensity(ex52, 1, 400.0) == pytest.approx(stat, rel=1e-12)
    assert moments.second_moment_intensity(ex52, 2, 200.0) == pytest.approx(
        moments.second_moment_intensity(ex52, 2, stationary=True), rel=1e-12)
    assert moments.joint_mean_intensity(ex52, 400.0) == pytest.approx(
        moments.joint_mean_intensity(ex52, stationary=True), rel=1e-10)


def test_conditional_at_stationary_start_is_flat(ex52):
    stat = moments.mean_intensity(ex52, 1, stationary=True)
    for t in (0.1, 1.0, 7.0):
        assert moments.mean_intensity(ex52, 1, t, lam0=stat) == pytest.approx(stat, rel=1e-13)
        assert moments.mean_loss(ex52, 1, t, lam0=stat) == pytest.approx(
            moments.mean_loss(ex52, 1, t, stationary=True), rel=1e-12)


def test_moments_at_time_zero(ex52):
    assert moments.mean_loss(ex52, 1, 0.0) == 0
    assert moments.var_loss(ex52, 2, 0.0) == 0
    assert moments.mean_intensity(ex52, 2, 0.0) == ex52.line2.lam0


def test_loss_moments_grow_with_horizon(ex52):
    ts = [0.25, 0.5, 1.0, 2.0]
    for fn in (lambda t: moments.mean_loss(ex52, 1, t, stationary=True),
               lambda t: moments.var_loss(ex52, 2, t),
               lambda t: moments.cov_losses(ex52, t)):
        vals = [fn(t) for t in ts]
        assert all(b > a for a, b in zip(vals, vals[1:]))


def test_covariance_vanishes_without_shocks(ex52):
    quiet = replace(ex52, shocks=replace(ex52.shocks, rho=0.0), line1=replace(ex52.line1, a=1.0),
                    line2=replace(ex52.line2, a=1.0))
    assert moments.cov_losses(quiet, 1.0) == pytest.approx(0.0, abs=1e-6)


def test_fgm_covariance_affine_in_theta(ex52_builder):
    c = [moments.cov_losses(ex52_builder("fgm", th), 1.0) for th in (-1.0, 0.0, 1.0)]
    assert c[2] - c[1] == pytest.approx(c[1] - c[0], rel=1e-10)
    assert c[0] < c[1] < c[2]


def test_self_excitation_raises_moments(ex52):
    sn = ex52.shot_noise()
    assert moments.mean_loss(ex52, 1, 1.0, stationary=True) > moments.mean_loss(sn, 1, 1.0, stationary=True)
    assert moments.var_loss(ex52, 1, 1.0) > moments.var_loss(sn, 1, 1.0)
    assert moments.mean_loss(sn, 1, 1.0, stationary=True) == pytest.approx(120.0, rel=1e-14)
    assert moments.var_loss(sn, 1, 1.0) == pytest.approx(9919.32, abs=0.01)


def test_stationary_requires_stationarity(ex52):
    bad = replace(ex52, line2=replace(ex52.line2, delta=1.0))
    with pytest.raises(DomainError, match="line 2"):
        moments.var_loss(bad, 2, 1.0)
    with pytest.raises(DomainError):
        moments.cov_losses(bad, 1.0)
    # line 1 alone is still fine
    assert moments.var_loss(bad, 1, 1.0) > 0


def test_missing_moment_is_domain_error(ex52):
    heavy = replace(ex52, line1=replace(ex52.line1, delta=30.0, self_jump=LoggammaLaw(1.0, 1.5, 3.0)))
    with pytest.raises(DomainError, match="second moment"):
        moments.var_loss(heavy, 1, 1.0)


def test_negative_horizon_rejected(ex52):
    with pytest.raises(DomainError):
        moments.mean_loss(ex52, 1, -1.0)


def test_decay_helpers_continuous_at_zero_rate():
    for t in (0.1, 1.0, 10.0):
        assert moments.decay_integral(1e-9, t) == pytest.approx(t, rel=1e-8)
        assert moments.decay_double_integral(0.0, t) == pytest.approx(t * t / 2, rel=1e-15)
        for r in (1e-5, 3e-3, -2e-3):
            with mpmath.workdps(40):
                rr, tt = mpmath.mpf(r), mpmath.mpf(t)
                exact = float((tt + mpmath.expm1(-rr * tt) / rr) / rr)
            assert moments.decay_double_integral(r, t) == pytest.approx(exact, rel=1e-6)


def test_report_rows(ex52):
    rep = moments.moment_report(ex52, 1.0)
    rows = dict(rep.rows())
    assert rows["mode"] == "stationary" and rows["cov_loss"] == pytest.approx(65497.54, rel=1e-7)
    cond = moments.moment_report(ex52, 1.0, stationary=False)
    assert math.isnan(dict(cond.rows())["var_loss_1"])


def test_exponential_marks_simple_case():
    # pure shot noise with exponential marks: E lambda = rho / (rate delta) + a
    from bcdcp.distributions import ZeroLaw
    from bcdcp.model import BcdcpModel, JointShockSpec, LineParams
    line = LineParams(a=0.5, delta=2.0, lam0=1.0, self_jump=ZeroLaw(), severity=ExponentialLaw(1.0))
    m = BcdcpModel(line, line, JointShockSpec(4.0, ExponentialLaw(0.5), ExponentialLaw(0.5), CopulaSpec("fgm", 0.0)))
    assert moments.mean_intensity(m, 1, stationary=True) == pytest.approx(0.5 + 4.0 * 2.0 / 2.0)
