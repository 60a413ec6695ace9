import csv
import math

import pytest

from bcdcp import config, moments, pricing
from bcdcp.errors import DomainError


def test_premium_identity(ex52):
    q = pricing.premium_bivariate(ex52, 1.0, 0.6)
    assert q.premium == pytest.approx(q.sum_mean + 0.6 * math.sqrt(q.var1 + q.var2 + 2 * q.cov), rel=1e-15)
    assert q.cov == pytest.approx(moments.cov_losses(ex52, 1.0), rel=1e-12)


def test_published_univariate_premium(ex52):
    assert pricing.premium_univariate(ex52).premium == pytest.approx(5602.71, abs=0.01)
    assert pricing.premium_univariate(ex52.shot_noise()).premium == pytest.approx(219.5958, abs=1e-4)


def test_loading_bounds(ex52):
    assert pricing.premium_univariate(ex52, phi=0.0).premium == pytest.approx(
        moments.mean_loss(ex52, 1, 1.0, stationary=True))
    with pytest.raises(DomainError):
        pricing.premium_bivariate(ex52, phi=1.5)


@pytest.mark.parametrize("family,thetas", [
    ("fgm", [-1.0, -0.5, 0.0, 0.5, 1.0]),
    ("gaussian", [-0.99, -0.5, 0.0, 0.5, 0.99]),
    ("student_t", [-0.99, 0.0, 0.99]),
    ("gumbel", [1.001, 2.0, 10.0]),
])
def test_premium_increases_with_dependence(ex52_builder, family, thetas):
    prem = [pricing.premium_bivariate(ex52_builder(family, th)).premium for th in thetas]
    assert all(b > a for a, b in zip(prem, prem[1:]))


@pytest.mark.parametrize("family,theta", [("fgm", -1.0), ("gaussian", 0.5), ("gumbel", 5.0)])
def test_contagion_dominates_shot_noise(ex52_builder, family, theta):
    m = ex52_builder(family, theta)
    c, s = pricing.premium_bivariate(m), pricing.premium_bivariate(m.shot_noise())
    assert c.premium > s.premium and c.sum_mean > s.sum_mean and c.premium >= c.sum_mean


def test_gumbel_near_one_matches_independence(ex52_builder):
    near = pricing.premium_bivariate(ex52_builder("gumbel", 1.001)).premium
    ind = pricing.premium_bivariate(ex52_builder("fgm", 0.0)).premium
    assert near == pytest.approx(ind, rel=1e-4)


def test_gaussian_extremes_use_comonotone_forms(ex52_builder):
    inner = pricing.premium_bivariate(ex52_builder("gaussian", 0.999999)).premium
    edge = pricing.premium_bivariate(ex52_builder("gaussian", 1.0)).premium
    assert inner == pytest.approx(edge, rel=1e-6)


def test_table_csv_rounding(tmp_path):
    cfg = config.load_example("5.1")
    table = pricing.table_suite(cfg)[0]
    table.write_csv(tmp_path / "raw.csv")
    table.write_csv(tmp_path / "rounded.csv", rounded=True)
    rows = list(csv.reader(open(tmp_path / "rounded.csv", encoding="utf-8")))
    assert rows[0] == ["quantity", "dynamic_contagion", "shot_noise"]
    assert rows[1] == ["mean", "3011.71", "120.00"]
    assert rows[3] == ["premium", "5602.71", "219.60"]
    raw = list(csv.reader(open(tmp_path / "raw.csv", encoding="utf-8")))
    assert float(raw[2][1]) == pytest.approx(6713295.506, abs=1e-3)


def test_bivariate_tables_workers_do_not_change_rows():
    cfg = config.load_example("5.4-gumbel")
    one = pricing.bivariate_tables(cfg.model, [1.001, 5.0], ["a", "b", "c"], workers=1)
    two = pricing.bivariate_tables(cfg.model, [1.001, 5.0], ["a", "b", "c"], workers=2)
    assert [t.rows for t in one] == [t.rows for t in two]


def test_table_suite_requires_tables(ex52):
    from dataclasses import replace
    cfg = replace(config.load_example("5.1"), tables=None)
    with pytest.raises(DomainError):
        pricing.table_suite(cfg)
