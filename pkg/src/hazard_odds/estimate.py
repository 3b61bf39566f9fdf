"""Kaplan-Meier and single-covariate Cox estimation, written from scratch.

The Cox model here has one covariate, the treatment indicator, so
``exp(beta_hat)`` is the estimated hazard ratio of treatment over control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from statistics import NormalDist
from typing import Optional

import numpy as np

from .core import SurvivalDataset

__all__ = [
    "Ties",
    "StepSurvivalCurve",
    "CoxFit",
    "CoxFitError",
    "MonotoneLikelihoodError",
    "SeparationError",
    "ConvergenceError",
    "kaplan_meier",
    "partial_loglik",
    "cox_fit",
    "wald_ci",
    "cloglog_curves",
    "cloglog_offset",
]

SEPARATION_LIMIT = 20.0


class Ties(str, Enum):
    BRESLOW = "breslow"
    EFRON = "efron"


@dataclass(frozen=True)
class StepSurvivalCurve:
    """Right-continuous step function; equals 1 before the first jump."""

    jump_times: np.ndarray
    values: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = np.searchsorted(self.jump_times, t, side="right")
        out = np.concatenate(([1.0], self.values))[k]
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        return {
            "jump_times": self.jump_times.tolist(),
            "values": self.values.tolist(),
            "at_risk": self.at_risk.tolist(),
            "events": self.events.tolist(),
        }


def kaplan_meier(data: SurvivalDataset, arm: Optional[int] = None) -> StepSurvivalCurve:
    """Product-limit estimate of S(t), optionally for one arm only.

    Censored times shrink later risk sets but produce no jump. An event and
    a censoring at the same time: the censored subject is still at risk.
    """
    if arm is not None:
        if arm not in (0, 1):
            raise ValueError("arm must be 0, 1 or None")
        data_t = data.time[data.arm == arm]
        data_e = data.event[data.arm == arm]
    else:
        data_t, data_e = data.time, data.event
    if data_t.size == 0:
        raise ValueError("no observations in the selected arm")

    times, inverse = np.unique(data_t, return_inverse=True)
    removed = np.bincount(inverse, minlength=times.size)
    deaths = np.bincount(inverse, weights=data_e.astype(float), minlength=times.size).astype(int)
    at_risk = data_t.size - np.concatenate(([0], np.cumsum(removed)[:-1]))

    has_event = deaths > 0
    factors = 1.0 - deaths[has_event] / at_risk[has_event]
    return StepSurvivalCurve(
        jump_times=times[has_event],
        values=np.cumprod(factors),
        at_risk=at_risk[has_event],
        events=deaths[has_event],
    )


def _risk_set_terms(data: SurvivalDataset, beta: float, ties: Ties):
    """Per-event-term sums needed by the partial likelihood.

    Sorts once, then one descending cumulative sum gives every risk set
    ``{j : time_j >= t}``. For each distinct event time with ``d`` events the
    Efron correction subtracts ``k/d`` of the tied events' sums from the
    ``k``-th term (k = 0..d-1); Breslow uses all ``d`` terms unadjusted.
    """
    order = np.argsort(data.time, kind="stable")
    t = data.time[order]
    z = data.arm[order].astype(float)
    d = data.event[order]

    w = np.exp(beta * z)
    wz = w * z
    wzz = wz * z
    # risk-set sums at the first index of each distinct time
    r0 = np.cumsum(w[::-1])[::-1]
    r1 = np.cumsum(wz[::-1])[::-1]
    r2 = np.cumsum(wzz[::-1])[::-1]
    first = np.concatenate(([True], t[1:] != t[:-1]))
    group = np.cumsum(first) - 1
    starts = np.flatnonzero(first)

    ev_group = group[d]
    n_groups = starts.size
    n_events = np.bincount(ev_group, minlength=n_groups)
    e0 = np.bincount(ev_group, weights=w[d], minlength=n_groups)
    e1 = np.bincount(ev_group, weights=wz[d], minlength=n_groups)
    e2 = np.bincount(ev_group, weights=wzz[d], minlength=n_groups)

    # one term per event; k counts position within its tie group
    g = ev_group  # already sorted by group since t is sorted
    offsets = np.concatenate(([0], np.cumsum(n_events)))[g]
    k = np.arange(g.size) - offsets
    if ties is Ties.EFRON:
        frac = k / n_events[g]
    else:
        frac = np.zeros(g.size)
    s0 = r0[starts[g]] - frac * e0[g]
    s1 = r1[starts[g]] - frac * e1[g]
    s2 = r2[starts[g]] - frac * e2[g]
    return z[d], s0, s1, s2


def partial_loglik(data: SurvivalDataset, beta: float, ties: Ties | str = Ties.BRESLOW):
    """Log partial likelihood with its exact score and observed information.

    Returns
    -------
    value, score, information : float
        ``l(beta)``, ``dl/dbeta`` and ``-d2l/dbeta2``.
    """
    ties = Ties(ties)
    if not data.event.any():
        raise ValueError("partial likelihood needs at least one event")
    z_ev, s0, s1, s2 = _risk_set_terms(data, float(beta), ties)
    value = float(beta * z_ev.sum() - np.log(s0).sum())
    mean = s1 / s0
    score = float(z_ev.sum() - mean.sum())
    information = float((s2 / s0 - mean**2).sum())
    return value, score, information


class CoxFitError(ArithmeticError):
    """Fit could not produce a finite maximum; ``trace`` holds the iterates."""

    def __init__(self, message: str, trace=()):
        super().__init__(message)
        self.trace = tuple(trace)


class MonotoneLikelihoodError(CoxFitError):
    pass


class SeparationError(CoxFitError):
    pass


class ConvergenceError(CoxFitError):
    pass


@dataclass(frozen=True)
class CoxFit:
    beta_hat: float
    se: float
    loglik_at_zero: float
    loglik_at_hat: float
    iterations: int
    converged: bool
    ties: Ties
    score_at_hat: float = 0.0
    # (beta, loglik, score) per Newton iterate
    trace: tuple = field(default=(), repr=False)

    @property
    def hr(self) -> float:
        return math.exp(self.beta_hat)

    def to_dict(self, level: float = 0.95) -> dict:
        lo, hi = wald_ci(self, level) if self.converged else (float("nan"), float("nan"))
        return {
            "beta_hat": self.beta_hat,
            "hr": self.hr,
            "se": self.se,
            "ci_low": lo,
            "ci_high": hi,
            "loglik0": self.loglik_at_zero,
            "loglik1": self.loglik_at_hat,
            "iterations": self.iterations,
            "converged": self.converged,
            "ties": self.ties.value,
        }


def cox_fit(
    data: SurvivalDataset,
    ties: Ties | str = Ties.BRESLOW,
    tol: float = 1e-10,
    max_iter: int = 50,
) -> CoxFit:
    """Newton-Raphson for the log hazard ratio, starting at 0.

    Steps are halved while they would lower the log partial likelihood.
    Stops when ``|score| < tol`` or the last step moved beta by less than
    ``tol``. Raises :class:`MonotoneLikelihoodError` when one arm has no
    events, :class:`SeparationError` when ``|beta|`` passes 20 and
    :class:`ConvergenceError` after ``max_iter`` iterations.
    """
    ties = Ties(ties)
    ev0, ev1 = data.events_per_arm()
    if ev0 == 0 or ev1 == 0:
        which = "control" if ev0 == 0 else "treatment"
        raise MonotoneLikelihoodError(
            f"monotone likelihood: no events in the {which} arm, the log hazard ratio is unbounded"
        )

    beta = 0.0
    value, score, info = partial_loglik(data, beta, ties)
    loglik0 = value
    trace = [(beta, value, score)]
    for it in range(1, max_iter + 1):
        if abs(score) < tol:
            return _finish(beta, value, score, info, loglik0, it - 1, ties, trace)
        if not info > 0:
            raise ConvergenceError(f"non-positive information {info!r} at beta={beta!r}", trace)
        step = score / info
        for _ in range(60):
            cand = beta + step
            if abs(cand) > SEPARATION_LIMIT:
                raise SeparationError(
                    f"|beta| exceeded {SEPARATION_LIMIT:g} (beta={cand:.4g}): "
                    "likelihood appears monotone, arms are (nearly) separated",
                    trace,
                )
            c_value, c_score, c_info = partial_loglik(data, cand, ties)
            # near the optimum the likelihood is flat to rounding; don't halve on noise
            if c_value >= value - 1e-12 * max(1.0, abs(value)):
                break
            step /= 2.0
        else:
            raise ConvergenceError("step halving failed to increase the likelihood", trace)
        beta, value, score, info = cand, c_value, c_score, c_info
        trace.append((beta, value, score))
        if abs(step) < tol:
            return _finish(beta, value, score, info, loglik0, it, ties, trace)
    if abs(score) < tol:
        return _finish(beta, value, score, info, loglik0, max_iter, ties, trace)
    raise ConvergenceError(f"no convergence after {max_iter} iterations (beta={beta!r}, score={score!r})", trace)


def _finish(beta, value, score, info, loglik0, iterations, ties, trace) -> CoxFit:
    if not info > 0:
        raise ConvergenceError(f"observed information {info!r} is not positive at the optimum", trace)
    return CoxFit(
        beta_hat=beta,
        se=1.0 / math.sqrt(info),
        loglik_at_zero=loglik0,
        loglik_at_hat=value,
        iterations=iterations,
        converged=True,
        ties=ties,
        score_at_hat=score,
        trace=tuple(trace),
    )


def wald_ci(fit: CoxFit, level: float = 0.95) -> tuple[float, float]:
    """Wald interval for the hazard ratio, ``exp(beta_hat -/+ z se)``."""
    if not fit.converged:
        raise ValueError("Wald interval requires a converged fit")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    z = NormalDist().inv_cdf(0.5 + level / 2.0)
    return math.exp(fit.beta_hat - z * fit.se), math.exp(fit.beta_hat + z * fit.se)


def cloglog_curves(data: SurvivalDataset) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Per-arm ``(log t, log(-log S(t)))`` at the Kaplan-Meier jump times.

    Under proportional hazards the treatment curve sits ``log(lam)`` above
    the control curve. Points where ``S`` is 0 or 1 are dropped.
    """
    out = {}
    for arm in (0, 1):
        km = kaplan_meier(data, arm)
        keep = (km.values > 0) & (km.values < 1) & (km.jump_times > 0)
        if np.count_nonzero(keep) < 2:
            raise ValueError(f"arm {arm} has fewer than two usable event times for the cloglog plot")
        out[arm] = (np.log(km.jump_times[keep]), np.log(-np.log(km.values[keep])))
    return out


def cloglog_offset(data: SurvivalDataset, band: tuple[float, float] = (0.1, 0.9)) -> float:
    """Median vertical gap (treatment minus control) between the cloglog curves.

    Compared at control event times where both Kaplan-Meier curves lie
    inside ``band``; the extremes of a KM curve rest on few events.
    """
    km0, km1 = kaplan_meier(data, 0), kaplan_meier(data, 1)
    t = km0.jump_times
    s0, s1 = km0(t), km1(t)
    lo, hi = band
    keep = (s0 > lo) & (s0 < hi) & (s1 > lo) & (s1 < hi)
    if not keep.any():
        raise ValueError("the arms' survival curves never share the comparison band")
    return float(np.median(np.log(-np.log(s1[keep])) - np.log(-np.log(s0[keep]))))
