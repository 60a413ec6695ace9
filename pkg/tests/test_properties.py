"""Property-based checks of the model invariants."""

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from bcdcp import config, moments, pricing, transforms
from bcdcp.distributions import CopulaSpec, ExponentialLaw, FrechetLaw, LoggammaLaw, ParetoLaw, cross_moment
from bcdcp.model import BcdcpModel, JointShockSpec, LineParams, decay, validate

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])

pos = st.floats(0.2, 5.0)

# laws with a finite third moment, so one-sided differences converge at second order
light_laws = st.one_of(
    st.builds(ExponentialLaw, pos),
    st.builds(LoggammaLaw, pos, st.floats(3.5, 12.0), st.floats(0.5, 4.0)),
    st.builds(FrechetLaw, pos, st.floats(3.5, 15.0)),
    st.builds(ParetoLaw, st.floats(3.5, 8.0), pos, st.floats(0.5, 6.0)),
)
copulas = st.one_of(
    st.builds(CopulaSpec, st.just("fgm"), st.floats(-1.0, 1.0)),
    st.builds(CopulaSpec, st.just("gaussian"), st.floats(-0.95, 0.95)),
    st.builds(CopulaSpec, st.just("student_t"), st.floats(-0.95, 0.95), st.floats(3.0, 10.0)),
    st.builds(CopulaSpec, st.just("gumbel"), st.floats(1.0, 8.0)),
)


@st.composite
def stationary_models(draw, copula=copulas):
    lines = []
    for _ in range(2):
        jump = draw(light_laws)
        delta = jump.mean() + draw(st.floats(0.05, 3.0))
        lines.append(LineParams(draw(st.floats(0.05, 2.0)), delta, draw(st.floats(0.1, 20.0)), jump,
                                draw(light_laws)))
    shocks = JointShockSpec(draw(st.floats(0.0, 5.0)), ExponentialLaw(draw(pos)), ExponentialLaw(draw(pos)),
                            draw(copula), cross_nodes=64)
    return BcdcpModel(lines[0], lines[1], shocks)


@SETTINGS
@given(light_laws)
def test_laplace_transform_shape(law):
    eps = [0.0, 0.1, 0.4, 1.0, 2.5]
    vals = [law.laplace_transform(e) for e in eps]
    assert vals[0] == 1.0
    assert all(0.0 <= v <= 1.0 for v in vals)
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    mid = [law.laplace_transform(e) for e in (0.2, 0.3, 0.4)]
    assert mid[0] + mid[2] - 2 * mid[1] >= -1e-10


@SETTINGS
@given(light_laws)
def test_laplace_derivative_at_zero_is_mean(law):
    h = 1e-5
    # 1 - ghat has the same derivative and no cancellation
    c1, c2 = law.laplace_complement(h), law.laplace_complement(2 * h)
    deriv = (4 * c1 - c2) / (2 * h)
    assert deriv == pytest.approx(law.mean(), rel=1e-3)


@SETTINGS
@given(pos, pos, st.floats(-1.0, 1.0))
def test_fgm_cross_moment_affine(r1, r2, theta):
    m1, m2 = ExponentialLaw(r1), ExponentialLaw(r2)
    lo = cross_moment(CopulaSpec("fgm", -1.0), m1, m2)
    hi = cross_moment(CopulaSpec("fgm", 1.0), m1, m2)
    mid = cross_moment(CopulaSpec("fgm", theta), m1, m2)
    assert mid == pytest.approx(lo + (theta + 1.0) / 2.0 * (hi - lo), rel=1e-12)
    assert cross_moment(CopulaSpec("fgm", 0.0), m1, m2) == pytest.approx(1 / (r1 * r2), rel=1e-14)


@SETTINGS
@given(copulas, st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_copula_frechet_bounds_and_margins(spec, u, v):
    c = float(spec.cdf(u, v))
    assert max(u + v - 1.0, 0.0) - 1e-9 <= c <= min(u, v) + 1e-9
    assert float(spec.cdf(u, 1.0)) == pytest.approx(u, abs=1e-9)
    assert float(spec.cdf(1.0, v)) == pytest.approx(v, abs=1e-9)


@SETTINGS
@given(st.floats(0.0, 3.0), pos, st.floats(0.0, 500.0), st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_decay_semigroup(a, delta, lam, s, t):
    line = LineParams(a, delta, 1.0, ExponentialLaw(1.0), ExponentialLaw(1.0))
    assert decay(line, decay(line, lam, s), t) == pytest.approx(decay(line, lam, s + t), rel=1e-12, abs=1e-12)
    lo, hi = sorted((lam, a))
    assert lo - 1e-12 <= decay(line, lam, t) <= hi + 1e-12


@SETTINGS
@given(stationary_models())
def test_validate_pure_and_idempotent(model):
    snapshot = repr(model)
    assert validate(model).rows() == validate(model).rows()
    assert repr(model) == snapshot
    assert validate(model).ok


@SETTINGS
@given(stationary_models(), st.floats(0.1, 5.0))
def test_second_order_moments_consistent(model, t):
    for d in (1, 2):
        assert moments.var_loss(model, d, t) > 0
        m = moments.mean_intensity(model, d, stationary=True)
        assert moments.second_moment_intensity(model, d, stationary=True) >= m * m * (1 - 1e-12)
    assert -1.0 <= moments.corr_losses(model, t) <= 1.0


@SETTINGS
@given(stationary_models(), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_premium_monotone_in_loading(model, phi1, phi2):
    lo, hi = sorted((phi1, phi2))
    p_lo = pricing.premium_bivariate(model, 1.0, lo)
    p_hi = pricing.premium_bivariate(model, 1.0, hi)
    assert p_lo.premium <= p_hi.premium + 1e-9 * abs(p_hi.premium)
    assert p_lo.premium >= p_lo.sum_mean


@SETTINGS
@given(stationary_models(copula=st.builds(CopulaSpec, st.just("fgm"), st.floats(-1.0, 1.0))))
def test_self_excitation_never_lowers_premium(model):
    assert pricing.premium_bivariate(model).premium >= pricing.premium_bivariate(model.shot_noise()).premium


@SETTINGS
@given(stationary_models(), st.floats(0.1, 4.0), st.floats(0.0, 50.0), st.floats(0.0, 50.0))
def test_mean_loss_affine_in_start(model, t, x, y):
    f = lambda lam0: moments.mean_loss(model, 1, t, lam0=lam0)
    mid = f(0.5 * (x + y))
    assert mid == pytest.approx(0.5 * (f(x) + f(y)), rel=1e-10, abs=1e-10)


@SETTINGS
@given(stationary_models())
def test_config_round_trip(model):
    # the quadrature node count lives in the numeric section of a config
    model = replace(model, shocks=replace(model.shocks, cross_nodes=config.NumericSettings().cross_nodes))
    cfg = config.RunConfig(model=model, horizon=1.0, loading=1.0)
    assert config.loads(config.dumps(cfg)) == cfg


@settings(max_examples=8, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 0.2), st.floats(0.0, 1.0), st.floats(0.3, 3.0))
def test_transform_bounded_and_monotone_in_horizon_free_args(theta, nu, ups, horizon):
    line = LineParams(0.3, 2.0, 1.0, ExponentialLaw(2.0), ExponentialLaw(0.5))
    model = BcdcpModel(line, replace(line, lam0=2.0),
                       JointShockSpec(1.0, ExponentialLaw(1.0), ExponentialLaw(2.0), CopulaSpec("fgm", 0.3)))
    q = transforms.TransformQuery(theta=theta, nu=nu, upsilon=ups, horizon=horizon)
    v = transforms.evaluate(q, model).value
    assert 0.0 < v <= 1.0 + 1e-12
    tighter = transforms.evaluate(replace(q, nu=nu + 0.05), model).value
    assert tighter <= v + 1e-12
