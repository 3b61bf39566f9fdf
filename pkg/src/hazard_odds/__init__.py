"""Hazard ratios read as odds: under proportional hazards, ``lam`` is the odds
that a treatment subject's event precedes a control subject's."""

from .baselines import (
    BaselineDistribution,
    Exponential,
    Gompertz,
    PiecewiseExponential,
    SpecParseError,
    Weibull,
    parse_baseline,
)
from .concordance import ConcordanceResult, PairRule, between_group_concordance, harrell_c
from .core import (
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
from .estimate import CoxFit, Ties, cloglog_curves, cox_fit, kaplan_meier, partial_loglik, wald_ci
from .simulate import TrialConfig, race_pairs, simulate_trial
from .verify import VerificationReport, run_verification

__version__ = "0.1.0"
