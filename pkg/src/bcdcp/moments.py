"""Closed-form first and second moments of intensities and aggregate losses.

Conditional quantities start from the configured initial intensities; the
stationary ones assume the intensities were drawn from their stationary law
at time zero and that both loss processes start at zero.  Joint and second
moments of the losses exist only in stationary form and refuse to run outside
the stationary regime.

Exponential differences are evaluated through ``expm1``-based helpers so that
the formulas stay accurate as a net decay rate approaches zero.
"""

import math
from dataclasses import dataclass, fields

from .errors import DomainError

_SERIES_CUTOFF = 1e-4


def decay_integral(rate, t):
    """(1 - e^{-rate t}) / rate, with the limit t at rate = 0."""
    x = rate * t
    if abs(x) < _SERIES_CUTOFF:
        return t * (1.0 - x / 2.0 + x * x / 6.0 - x ** 3 / 24.0)
    return -math.expm1(-x) / rate


def decay_double_integral(rate, t):
    """(t - decay_integral(rate, t)) / rate, with the limit t^2/2 at rate = 0."""
    x = rate * t
    if abs(x) < 1e-2:
        # x^k / (k+2)! series up to x^6
        s, term = 0.0, 0.5
        for k in range(7):
            s += term
            term *= -x / (k + 3)
        return t * t * s
    return (t - decay_integral(rate, t)) / rate


@dataclass(frozen=True)
class LineConstants:
    """Scalar inputs of one line gathered from its laws."""

    drift: float            # mean inflow rate of intensity: mean shock mark * rho + a * delta
    net_decay: float        # delta minus mean self-excited jump
    self_mean: float
    self_second: float
    shock_mean: float
    shock_second: float
    severity_mean: float
    severity_second: float

    @property
    def stationary_mean(self):
        return self.drift / self.net_decay


def _need(ok, what):
    if not ok:
        raise DomainError(f"{what} does not exist for the configured law")


def line_constants(model, d, second_order=False):
    ln = model.line(d)
    shock = model.shocks.marginal(d)
    rho = model.shocks.rho
    _need(ln.self_jump.has_mean(), f"mean of the line-{d} self-jump law")
    self_second = math.nan
    sev_mean = sev_second = math.nan
    if ln.severity.has_mean():
        sev_mean = ln.severity.mean()
    if second_order:
        _need(ln.self_jump.has_second_moment(), f"second moment of the line-{d} self-jump law")
        self_second = ln.self_jump.second_moment()
        if ln.severity.has_second_moment():
            sev_second = ln.severity.second_moment()
    return LineConstants(
        drift=shock.mean() * rho + ln.a * ln.delta,
        net_decay=ln.delta - ln.self_jump.mean(),
        self_mean=ln.self_jump.mean(),
        self_second=self_second,
        shock_mean=shock.mean(),
        shock_second=shock.second_moment(),
        severity_mean=sev_mean,
        severity_second=sev_second,
    )


def _severity_mean(k, d):
    _need(not math.isnan(k.severity_mean), f"mean of the line-{d} severity law")
    return k.severity_mean


def _severity_second(k, d):
    _need(not math.isnan(k.severity_second), f"second moment of the line-{d} severity law")
    return k.severity_second


def _check_time(t):
    if not t >= 0:
        raise DomainError(f"horizon must be nonnegative, got {t}")


def _cross(model, mu12):
    return model.shocks.cross_moment() if mu12 is None else mu12


# ---------------------------------------------------------------- intensities

def mean_intensity(model, line, t=0.0, lam0=None, stationary=False):
    """E lambda_t for one line, conditional on ``lam0`` or under the stationary law."""
    k = line_constants(model, line)
    if stationary:
        model.require_stationary((line,))
        return k.drift / k.net_decay
    _check_time(t)
    lam0 = model.line(line).lam0 if lam0 is None else lam0
    if k.net_decay == 0:
        return lam0 + k.drift * t
    return lam0 * math.exp(-k.net_decay * t) + k.drift * decay_integral(k.net_decay, t)


def stationary_joint_intensity(model, mu12=None):
    """E lambda1 lambda2 under the stationary law."""
    model.require_stationary()
    k1, k2 = line_constants(model, 1), line_constants(model, 2)
    rho = model.shocks.rho
    total = k1.net_decay + k2.net_decay
    return (k2.drift * k1.stationary_mean + k1.drift * k2.stationary_mean
            + _cross(model, mu12) * rho) / total


def joint_mean_intensity(model, t=0.0, lam0=None, stationary=False, mu12=None):
    """E lambda1_t lambda2_t, conditional on the initial pair or stationary."""
    if stationary:
        return stationary_joint_intensity(model, mu12)
    _check_time(t)
    k1, k2 = line_constants(model, 1), line_constants(model, 2)
    l1, l2 = (model.line1.lam0, model.line2.lam0) if lam0 is None else lam0
    shock_term = _cross(model, mu12) * model.shocks.rho
    r1, r2 = k1.net_decay, k2.net_decay
    c1, c2 = k1.drift, k2.drift
    return (l1 * l2 * math.exp(-(r1 + r2) * t)
            + c2 * (l1 * math.exp(-r1 * t) * decay_integral(r2, t) + c1 * _mean_convolution(r1, r2, t))
            + c1 * (l2 * math.exp(-r2 * t) * decay_integral(r1, t) + c2 * _mean_convolution(r2, r1, t))
            + shock_term * decay_integral(r1 + r2, t))


def _mean_convolution(own, other, t):
    """Integral over [0, t] of e^{-(own + other)(t - s)} decay_integral(own, s) ds.

    The closed form divides by ``own``; below |own t| = 1e-8 its cancellation
    error would exceed the first-order error of the ``own = 0`` value, which is
    used instead.
    """
    if abs(own * t) < 1e-8:
        return decay_double_integral(other, t)
    total = own + other
    return (decay_integral(total, t) - math.exp(-own * t) * decay_integral(other, t)) / own


def stationary_second_intensity(model, line):
    model.require_stationary((line,))
    k = line_constants(model, line, second_order=True)
    r = k.net_decay
    return ((2.0 * k.drift + k.self_second) * k.drift / (2.0 * r * r)
            + k.shock_second * model.shocks.rho / (2.0 * r))


def second_moment_intensity(model, line, t=0.0, lam0=None, stationary=False):
    """E lambda_t^2 for one line."""
    if stationary:
        return stationary_second_intensity(model, line)
    _check_time(t)
    k = line_constants(model, line, second_order=True)
    lam0 = model.line(line).lam0 if lam0 is None else lam0
    rho = model.shocks.rho
    c, r = k.drift, k.net_decay
    inflow = 2.0 * c + k.self_second
    if r == 0:
        return lam0 * lam0 + inflow * (lam0 * t + 0.5 * c * t * t) + k.shock_second * rho * t
    # the 1/r^2 pieces combine into (1 - e^{-rt})^2 / (2 r^2)
    e1 = math.exp(-r * t)
    g1 = decay_integral(r, t)
    return (lam0 * lam0 * e1 * e1
            + inflow * lam0 * e1 * g1
            + 0.5 * inflow * c * g1 * g1
            + k.shock_second * rho * decay_integral(2.0 * r, t))


# --------------------------------------------------------------------- losses

def mean_loss(model, line, t, lam0=None, stationary=False, initial_loss=0.0):
    """E L_t for one line."""
    _check_time(t)
    k = line_constants(model, line)
    mu_sev = _severity_mean(k, line)
    if stationary:
        model.require_stationary((line,))
        return initial_loss + mu_sev * k.stationary_mean * t
    lam0 = model.line(line).lam0 if lam0 is None else lam0
    c, r = k.drift, k.net_decay
    if r == 0:
        return initial_loss + mu_sev * (lam0 * t + 0.5 * c * t * t)
    return initial_loss + mu_sev * (lam0 * decay_integral(r, t) + c * decay_double_integral(r, t))


PAIRINGS = ((1, 2), (2, 1), (1, 1), (2, 2))


def cross_intensity_loss(model, pairing, t, mu12=None):
    """Stationary E lambda^(i)_t L^(j)_t for ``pairing = (i, j)``."""
    _check_time(t)
    i, j = pairing
    if (i, j) not in PAIRINGS:
        raise ValueError(f"pairing must be one of {PAIRINGS}, got {pairing}")
    model.require_stationary()
    if i != j:
        ki, kj = line_constants(model, i), line_constants(model, j)
        mu_sev = _severity_mean(kj, j)
        joint = stationary_joint_intensity(model, mu12)
        product = ki.drift * kj.drift / (kj.net_decay * ki.net_decay)
        return (mu_sev * product * t
                + mu_sev * decay_integral(ki.net_decay, t) * (joint - product))
    k = line_constants(model, i, second_order=True)
    mu_sev = _severity_mean(k, i)
    c, r = k.drift, k.net_decay
    m = c / r
    g1 = decay_integral(r, t)
    return (c * mu_sev * m * decay_double_integral(r, t)
            + mu_sev * g1 * stationary_second_intensity(model, i)
            + k.self_mean * mu_sev * g1 * m)


def joint_mean_losses(model, t, mu12=None):
    """Stationary E L1_t L2_t."""
    _check_time(t)
    model.require_stationary()
    k1, k2 = line_constants(model, 1), line_constants(model, 2)
    mu_j, mu_k = _severity_mean(k1, 1), _severity_mean(k2, 2)
    joint = stationary_joint_intensity(model, mu12)
    product = k1.drift * k2.drift / (k2.net_decay * k1.net_decay)
    total = 0.0
    for k in (k1, k2):
        total += mu_j * mu_k * 0.5 * product * t * t
        total += mu_j * mu_k * decay_double_integral(k.net_decay, t) * (joint - product)
    return total


def cov_losses(model, t, mu12=None):
    e1 = mean_loss(model, 1, t, stationary=True)
    e2 = mean_loss(model, 2, t, stationary=True)
    return joint_mean_losses(model, t, mu12) - e1 * e2


def second_moment_loss(model, line, t):
    """Stationary E (L_t)^2 for one line."""
    _check_time(t)
    model.require_stationary((line,))
    k = line_constants(model, line, second_order=True)
    mu_sev, mu2_sev = _severity_mean(k, line), _severity_second(k, line)
    c, r = k.drift, k.net_decay
    m = c / r
    stat2 = stationary_second_intensity(model, line)
    g2 = decay_double_integral(r, t)
    bracket = (0.5 * c * mu_sev * (c / (r * r)) * t * t
               - c * mu_sev * m * g2 / r
               + mu_sev * stat2 * g2
               + k.self_mean * mu_sev * m * g2)
    return 2.0 * mu_sev * bracket + mu2_sev * m * t


def var_loss(model, line, t):
    """Stationary Var L_t for one line."""
    _check_time(t)
    model.require_stationary((line,))
    k = line_constants(model, line, second_order=True)
    mu_sev, mu2_sev = _severity_mean(k, line), _severity_second(k, line)
    c, r = k.drift, k.net_decay
    m = c / r
    stat2 = stationary_second_intensity(model, line)
    g2 = decay_double_integral(r, t)
    bracket = (mu_sev * stat2 * g2
               + k.self_mean * mu_sev * m * g2
               - c * mu_sev * m * g2 / r)
    return 2.0 * mu_sev * bracket + mu2_sev * m * t


def corr_losses(model, t, mu12=None):
    v1, v2 = var_loss(model, 1, t), var_loss(model, 2, t)
    if v1 <= 0 or v2 <= 0:
        raise DomainError("correlation undefined: a loss variance is zero")
    rho = cov_losses(model, t, mu12) / math.sqrt(v1 * v2)
    if not -1.0 - 1e-12 <= rho <= 1.0 + 1e-12:
        raise DomainError(f"correlation {rho} outside [-1, 1]")
    return rho


# --------------------------------------------------------------------- report

@dataclass
class MomentReport:
    horizon: float
    mode: str
    mean_intensity_1: float
    mean_intensity_2: float
    second_intensity_1: float
    second_intensity_2: float
    joint_intensity: float
    mean_loss_1: float
    mean_loss_2: float
    cross_moment_shocks: float
    intensity1_loss2: float = math.nan
    intensity2_loss1: float = math.nan
    intensity1_loss1: float = math.nan
    intensity2_loss2: float = math.nan
    joint_loss: float = math.nan
    second_loss_1: float = math.nan
    second_loss_2: float = math.nan
    var_loss_1: float = math.nan
    var_loss_2: float = math.nan
    cov_loss: float = math.nan
    corr_loss: float = math.nan

    def rows(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]


def moment_report(model, t, stationary=True, mu12=None):
    """Evaluate every available moment at horizon ``t``.

    In conditional mode only the intensity moments and mean losses exist;
    the remaining fields stay NaN.
    """
    mu12 = _cross(model, mu12)
    rep = MomentReport(
        horizon=t,
        mode="stationary" if stationary else "conditional",
        mean_intensity_1=mean_intensity(model, 1, t, stationary=stationary),
        mean_intensity_2=mean_intensity(model, 2, t, stationary=stationary),
        second_intensity_1=second_moment_intensity(model, 1, t, stationary=stationary),
        second_intensity_2=second_moment_intensity(model, 2, t, stationary=stationary),
        joint_intensity=joint_mean_intensity(model, t, stationary=stationary, mu12=mu12),
        mean_loss_1=mean_loss(model, 1, t, stationary=stationary),
        mean_loss_2=mean_loss(model, 2, t, stationary=stationary),
        cross_moment_shocks=mu12,
    )
    if stationary:
        rep.intensity1_loss2 = cross_intensity_loss(model, (1, 2), t, mu12)
        rep.intensity2_loss1 = cross_intensity_loss(model, (2, 1), t, mu12)
        rep.intensity1_loss1 = cross_intensity_loss(model, (1, 1), t, mu12)
        rep.intensity2_loss2 = cross_intensity_loss(model, (2, 2), t, mu12)
        rep.joint_loss = joint_mean_losses(model, t, mu12)
        rep.second_loss_1 = second_moment_loss(model, 1, t)
        rep.second_loss_2 = second_moment_loss(model, 2, t)
        rep.var_loss_1 = var_loss(model, 1, t)
        rep.var_loss_2 = var_loss(model, 2, t)
        rep.cov_loss = rep.joint_loss - rep.mean_loss_1 * rep.mean_loss_2
        if rep.var_loss_1 > 0 and rep.var_loss_2 > 0:
            rep.corr_loss = rep.cov_loss / math.sqrt(rep.var_loss_1 * rep.var_loss_2)
    return rep
