import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hazard_odds.core import (
    HazardRatio,
    Observation,
    OddsRendering,
    PrecedenceProbability,
    SurvivalDataset,
    explain,
    hr_to_prob,
    prob_later,
    prob_to_hr,
    render_odds,
    render_percent,
)


@pytest.mark.parametrize("lam, p", [(2, 2 / 3), (3, 0.75), (1, 0.5)])
def test_hr_to_prob(lam, p):
    assert abs(hr_to_prob(lam).p - p) <= 1e-15


def test_hr_to_prob_renders_percentages():
    assert render_percent(hr_to_prob(2)) == "67%"
    assert render_percent(hr_to_prob(3)) == "75%"


@pytest.mark.parametrize("p, lam", [(0.75, 3.0), (0.5, 1.0), (0.9, 9.0)])
def test_prob_to_hr(p, lam):
    assert prob_to_hr(p).value == pytest.approx(lam, rel=1e-12)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_prob_to_hr_domain(p):
    with pytest.raises(ValueError):
        prob_to_hr(p)


@pytest.mark.parametrize("lam, later", [(3, 0.25), (1, 0.5), (2, 1 - 2 / 3)])
def test_prob_later(lam, later):
    assert prob_later(lam).p == pytest.approx(later, abs=1e-15)


@pytest.mark.parametrize("bad", [0, -1, float("inf"), float("nan")])
def test_hazard_ratio_invariant(bad):
    with pytest.raises(ValueError):
        HazardRatio(bad)


def test_explain_heal():
    assert explain(2, "heal") == (
        "The odds are roughly 2:1 (the probability is 67%) that you will heal "
        "before someone in the comparison group."
    )


def test_explain_even_odds():
    text = explain(1, "heal")
    assert "1:1" in text and "50%" in text


def test_explain_fractional_odds():
    # 3.5 / 4.5 = 0.7777... -> 78%
    text = explain(3.5, "resolve symptoms")
    assert "3.5:1" in text and "78%" in text
    assert "you will resolve symptoms before" in text


def test_explain_is_deterministic():
    assert explain(HazardRatio(2.0), "heal") == explain(2, "heal")


@pytest.mark.parametrize(
    "x, text",
    [(2.0, "2:1"), (2.04, "2:1"), (2.05, "2.1:1"), (2.25, "2.3:1"), (0.5, "0.5:1"), (10.0, "10:1"), (0.0, "0:1")],
)
def test_odds_rendering(x, text):
    assert str(OddsRendering(x)) == text


def test_percent_rounds_half_away_from_zero():
    assert render_percent(PrecedenceProbability(0.125)) == "13%"
    assert render_percent(PrecedenceProbability(0.375)) == "38%"


def test_odds_rendering_rejects_negative():
    with pytest.raises(ValueError):
        OddsRendering(-1.0)


def test_render_odds_uses_hr():
    assert str(render_odds(3.5)) == "3.5:1"


LOG_GRID = np.logspace(-6, 6, 241)


def test_roundtrip_log_grid():
    for lam in LOG_GRID:
        back = prob_to_hr(hr_to_prob(lam)).value
        assert abs(back - lam) <= 1e-12 * lam


@given(st.floats(min_value=1e-6, max_value=1e6))
def test_roundtrip_property(lam):
    assert prob_to_hr(hr_to_prob(lam)).value == pytest.approx(lam, rel=1e-12)


@given(st.floats(min_value=1e-6, max_value=1e6))
def test_complement_property(lam):
    assert abs(hr_to_prob(lam).p + prob_later(lam).p - 1.0) <= 1e-15


def test_complement_on_grid():
    worst = max(abs(hr_to_prob(l).p + prob_later(l).p - 1.0) for l in LOG_GRID)
    assert worst <= 2.3e-16


def test_monotone():
    p = np.array([hr_to_prob(l).p for l in LOG_GRID[:150]])  # stays below 1 in floats
    assert np.all(np.diff(p) > 0)


def test_observation_validation():
    Observation(0.0, True, 1)
    with pytest.raises(ValueError):
        Observation(-1.0, True, 0)
    with pytest.raises(ValueError):
        Observation(math.inf, True, 0)
    with pytest.raises(ValueError):
        Observation(1.0, True, 2)


def test_dataset_roundtrip_and_immutability():
    obs = [Observation(1.0, True, 0), Observation(2.5, False, 1)]
    data = SurvivalDataset.from_observations(obs)
    assert list(data) == obs
    assert data[1] == obs[1]
    assert len(data) == 2
    with pytest.raises(ValueError):
        data.time[0] = 3.0
    with pytest.raises(AttributeError):
        data.time = np.zeros(2)


@pytest.mark.parametrize(
    "time, event, arm",
    [([], [], []), ([1.0, -1.0], [1, 1], [0, 1]), ([1.0], [2], [0]), ([1.0], [1], [3]), ([np.nan], [1], [0])],
)
def test_dataset_rejects_bad_columns(time, event, arm):
    with pytest.raises(ValueError):
        SurvivalDataset(time, event, arm)


def test_events_per_arm():
    data = SurvivalDataset([1, 2, 3], [1, 0, 1], [0, 0, 1])
    assert data.events_per_arm() == (1, 1)
