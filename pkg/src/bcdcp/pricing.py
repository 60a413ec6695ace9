"""Mean-standard-deviation premiums and the premium, covariance and correlation tables.

premium = E L1 + E L2 + loading * sqrt(Var L1 + Var L2 + 2 Cov(L1, L2))

Interest is taken as constant and no discounting is applied.
"""

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

from . import moments
from .errors import DomainError


@dataclass(frozen=True)
class PremiumQuote:
    mean1: float
    var1: float
    mean2: float
    var2: float
    cov: float
    sum_mean: float
    sum_var: float
    loading: float
    premium: float
    family: Optional[str] = None
    theta: Optional[float] = None
    cross_method: Optional[str] = None


def _check_loading(phi):
    if not 0.0 <= phi <= 1.0:
        raise DomainError(f"loading factor must lie in [0, 1], got {phi}")


def premium_univariate(model, line=1, t=1.0, phi=1.0):
    """Premium for one line on its own."""
    _check_loading(phi)
    mean = moments.mean_loss(model, line, t, stationary=True)
    var = moments.var_loss(model, line, t)
    return PremiumQuote(mean, var, 0.0, 0.0, 0.0, mean, var, phi, mean + phi * math.sqrt(var))


def premium_bivariate(model, t=1.0, phi=1.0):
    """Premium for the sum of both lines."""
    _check_loading(phi)
    mu12 = model.shocks.cross_moment()
    m1 = moments.mean_loss(model, 1, t, stationary=True)
    m2 = moments.mean_loss(model, 2, t, stationary=True)
    v1 = moments.var_loss(model, 1, t)
    v2 = moments.var_loss(model, 2, t)
    cov = moments.joint_mean_losses(model, t, mu12) - m1 * m2
    total_var = v1 + v2 + 2.0 * cov
    if total_var < 0:
        raise DomainError(f"variance of the total loss is negative ({total_var})")
    cop = model.shocks.copula
    return PremiumQuote(m1, v1, m2, v2, cov, m1 + m2, total_var, phi, m1 + m2 + phi * math.sqrt(total_var),
                        cop.family, cop.theta, model.shocks.cross_method_tag())


@dataclass
class Table:
    number: str
    title: str
    columns: tuple
    rows: list = field(default_factory=list)
    digits: object = 2  # decimals used when rounding for display, or a per-row dict

    def write_csv(self, target, rounded=False):
        with open(target, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            for row in self.rows:
                d = self.digits.get(row[0]) if isinstance(self.digits, dict) else self.digits
                w.writerow([_fmt(v, d if rounded else None, i) for i, v in enumerate(row)])

    def column(self, name):
        k = self.columns.index(name)
        return [r[k] for r in self.rows]


def _fmt(value, digits, position):
    if isinstance(value, str):
        return value
    if position == 0:
        return repr(float(value))
    if digits is None:
        return repr(float(value))
    return f"{value:.{digits}f}"


UNIVARIATE_DIGITS = {"mean": 2, "variance": 1, "premium": 2}


def univariate_table(model, line=1, t=1.0, phi=1.0, number="5.1"):
    """Mean, variance and premium of one line, with and without self excitation."""
    contagion = premium_univariate(model, line, t, phi)
    shot = premium_univariate(model.shot_noise(), line, t, phi)
    table = Table(number, "Mean-standard deviation premium, single line",
                  ("quantity", "dynamic_contagion", "shot_noise"), digits=UNIVARIATE_DIGITS)
    table.rows = [("mean", contagion.mean1, shot.mean1),
                  ("variance", contagion.var1, shot.var1),
                  ("premium", contagion.premium, shot.premium)]
    return table


def _row(model, theta, t, phi):
    cop = replace(model.shocks.copula, theta=theta)
    m = model.with_copula(cop)
    return premium_bivariate(m, t, phi), premium_bivariate(m.shot_noise(), t, phi), m


def bivariate_tables(model, thetas, numbers, t=1.0, phi=1.0, workers=1):
    """Premium, covariance and correlation over a grid of copula parameters.

    Rows come back in grid order whatever the number of workers.
    """
    if len(numbers) != 3:
        raise ValueError("need three table numbers: premium, covariance, correlation")
    family = model.shocks.copula.family

    def one(theta):
        c, s, m = _row(model, theta, t, phi)
        corr_c = c.cov / math.sqrt(c.var1 * c.var2)
        corr_s = s.cov / math.sqrt(s.var1 * s.var2)
        for r in (corr_c, corr_s):
            if not -1.0 <= r <= 1.0:
                raise DomainError(f"correlation {r} outside [-1, 1]")
        return theta, c, s, corr_c, corr_s

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, thetas))
    else:
        results = [one(th) for th in thetas]
    cols = ("theta", "dynamic_contagion", "shot_noise")
    premium = Table(numbers[0], f"Premium, {family} copula", cols, digits=2)
    cov = Table(numbers[1], f"Cov(L1, L2), {family} copula", cols, digits=2)
    corr = Table(numbers[2], f"Corr(L1, L2), {family} copula", cols, digits=5)
    for theta, c, s, rc, rs in results:
        premium.rows.append((theta, c.premium, s.premium))
        cov.rows.append((theta, c.cov, s.cov))
        corr.rows.append((theta, rc, rs))
    return [premium, cov, corr]


def table_suite(config, workers=1):
    """All tables described by a run configuration's ``tables`` block."""
    spec = config.tables
    if spec is None:
        raise DomainError("configuration has no tables block")
    if spec.kind == "univariate":
        return [univariate_table(config.model, spec.line, config.horizon, config.loading, spec.numbers[0])]
    return bivariate_tables(config.model, spec.thetas, spec.numbers, config.horizon, config.loading, workers)

