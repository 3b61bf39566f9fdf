import math

import numpy as np
import pytest

from hazard_odds.baselines import BaselineDistribution, Exponential, Gompertz, PiecewiseExponential, Weibull
from hazard_odds.verify import (
    DEFAULT_BASELINES,
    QUADRATURE_GATE,
    format_table,
    p_after_by_quadrature,
    p_before_by_monte_carlo,
    p_before_by_quadrature,
    run_verification,
)

FAMILIES = [
    Exponential(1.0),
    Weibull(0.5, 1.0),
    Weibull(2.0, 1.0),
    Gompertz(0.1, 1.0),
    PiecewiseExponential((1.0, 2.0), (1.0, 2.0, 0.5)),
]
IDS = [d.spec for d in FAMILIES]
LAMBDAS = [0.5, 1.0, 2.0, 3.0, 10.0]


def test_quadrature_examples():
    assert p_after_by_quadrature(Exponential(1), 2)[0] == pytest.approx(1 / 3, abs=1e-8)
    assert p_after_by_quadrature(Weibull(2, 1), 3)[0] == pytest.approx(0.25, abs=1e-8)


def test_quadrature_inverted_orientation():
    assert p_before_by_quadrature(Exponential(1), 2)[0] == pytest.approx(2 / 3, abs=1e-6)


@pytest.mark.parametrize("dist", FAMILIES, ids=IDS)
@pytest.mark.parametrize("lam", LAMBDAS)
def test_quadrature_matches_closed_form(dist, lam):
    after, err = p_after_by_quadrature(dist, lam)
    before, _ = p_before_by_quadrature(dist, lam)
    assert abs(after - 1 / (1 + lam)) < QUADRATURE_GATE
    assert abs(before - lam / (1 + lam)) < QUADRATURE_GATE
    assert err < 1e-8
    # the two orientations are computed separately and must partition the pairs
    assert abs(after + before - 1) < 1e-9


def test_quadrature_does_not_depend_on_scale():
    # rescaling time leaves the precedence probability unchanged
    a = p_after_by_quadrature(Exponential(1), 3)[0]
    b = p_after_by_quadrature(Exponential(40), 3)[0]
    assert a == pytest.approx(b, abs=1e-10)


def test_monte_carlo_gompertz_example():
    p, half = p_before_by_monte_carlo(Gompertz(0.1, 1), 3, 100_000, seed=2)
    assert abs(p - 0.75) < 0.0055
    assert half == pytest.approx(4 * math.sqrt(p * (1 - p) / 100_000))


@pytest.mark.parametrize("n", [0, 50, 99])
def test_monte_carlo_needs_pairs(n):
    with pytest.raises(ValueError):
        p_before_by_monte_carlo(Exponential(1), 2, n, seed=0)


def test_single_cell_passes():
    (rep,) = run_verification([Exponential(1)], [2], n_pairs=100_000, seed=0)
    assert rep.passed and rep.error is None
    assert rep.analytic_p_before == pytest.approx(2 / 3, abs=1e-15)
    assert rep.quadrature_ok and rep.monte_carlo_ok


def test_grid_all_pass():
    reports = run_verification(DEFAULT_BASELINES, [0.5, 1, 2, 3], n_pairs=100_000, seed=0)
    assert len(reports) == len(DEFAULT_BASELINES) * 4
    assert all(r.passed for r in reports), format_table(reports)
    for r in reports:
        assert abs(r.analytic_p_before + r.analytic_p_after - 1) <= 1e-15


def test_small_sample_halfwidth():
    (rep,) = run_verification(["exp(rate=1)"], [2], n_pairs=100, seed=0)
    assert rep.mc_halfwidth_4sigma == pytest.approx(4 * math.sqrt(rep.mc_p_before * (1 - rep.mc_p_before) / 100))
    assert 0.15 < rep.mc_halfwidth_4sigma < 0.2


def test_cells_use_distinct_streams():
    reports = run_verification(["exp(rate=1)"], [2, 2], n_pairs=1000, seed=3)
    assert [r.stream for r in reports] == [0, 1]
    assert reports[0].mc_p_before != reports[1].mc_p_before


def test_break_ph_fails():
    (rep,) = run_verification(["exp(rate=1)"], [2], n_pairs=100_000, seed=0, break_ph=True)
    assert not rep.passed
    assert rep.quadrature_ok and not rep.monte_carlo_ok


def test_workers_do_not_change_reports():
    kw = dict(baselines=["exp(rate=1)", "weibull(shape=2,scale=1)"], lambdas=[0.5, 3], n_pairs=5000, seed=11)
    assert run_verification(**kw, workers=1) == run_verification(**kw, workers=3)


class _Broken(BaselineDistribution):
    def _cumhaz(self, t):
        return np.asarray(t, dtype=float)

    def _hazard(self, t):
        raise ArithmeticError("hazard unavailable")

    @property
    def spec(self):
        return "broken()"


def test_failing_cell_does_not_abort_grid():
    reports = run_verification([_Broken(), Exponential(1)], [2], n_pairs=1000, seed=0)
    assert len(reports) == 2
    assert not reports[0].passed and "hazard unavailable" in reports[0].error
    assert reports[1].passed


def test_report_json_keys():
    (rep,) = run_verification(["exp(rate=1)"], [1], n_pairs=1000, seed=5)
    d = rep.to_dict()
    assert d["lambda"] == 1.0 and d["pass"] is True and d["seed"] == 5
    assert "lam" not in d and "passed" not in d


def test_empty_grid_rejected():
    with pytest.raises(ValueError):
        run_verification([], [1])


def test_format_table():
    reports = run_verification(["exp(rate=1)"], [1, 2], n_pairs=1000, seed=0)
    text = format_table(reports)
    assert text.splitlines()[-1] == "2/2 cells passed"
    assert "exp(rate=1)" in text and "0.666667" in text
