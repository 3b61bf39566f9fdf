"""Harrell's c-statistic and the between-arm precedence concordance.

Two pair rules decide which pairs are comparable:

``PairRule.BOTH_EVENTS``
    both members had the event (neither was censored).
``PairRule.HARRELL``
    the member with the earlier time had the event.

Under either rule, pairs with equal observed times are not comparable
because neither order was observed. A comparable pair is concordant when
the subject with the higher score has the shorter time. Equal scores count
as half.

Pairs are enumerated exhaustively in row blocks, and each block reduces to
integer counts.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .core import SurvivalDataset

__all__ = ["PairRule", "ConcordanceResult", "harrell_c", "between_group_concordance"]

_BLOCK = 512


class PairRule(str, Enum):
    BOTH_EVENTS = "both-events"
    HARRELL = "harrell"


@dataclass(frozen=True)
class ConcordanceResult:
    concordant: int
    discordant: int
    tied_prediction: int
    comparable: int
    c: float
    pair_rule: PairRule

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pair_rule"] = self.pair_rule.value
        return d


def _result(conc: int, disc: int, tied: int, rule: PairRule) -> ConcordanceResult:
    comparable = conc + disc + tied
    if comparable == 0:
        raise ValueError(f"no comparable pairs under the {rule.value!r} pair rule")
    return ConcordanceResult(conc, disc, tied, comparable, (conc + 0.5 * tied) / comparable, rule)


def _count_block(ti, ei, si, tj, ej, sj, rule, mask=None):
    """Counts over the pair grid rows ``i`` x columns ``j``, restricted to ``mask``."""
    i_first = ti[:, None] < tj[None, :]
    j_first = tj[None, :] < ti[:, None]
    if mask is not None:
        i_first &= mask
        j_first &= mask
    if rule is PairRule.BOTH_EVENTS:
        both = ei[:, None] & ej[None, :]
        comp_i, comp_j = i_first & both, j_first & both
    else:
        comp_i = i_first & ei[:, None]
        comp_j = j_first & ej[None, :]
    s_gt = si[:, None] > sj[None, :]
    s_lt = si[:, None] < sj[None, :]
    s_eq = ~(s_gt | s_lt)
    conc = np.count_nonzero(comp_i & s_gt) + np.count_nonzero(comp_j & s_lt)
    disc = np.count_nonzero(comp_i & s_lt) + np.count_nonzero(comp_j & s_gt)
    tied = np.count_nonzero((comp_i | comp_j) & s_eq)
    return int(conc), int(disc), int(tied)


def harrell_c(data: SurvivalDataset, scores, pair_rule: PairRule | str = PairRule.HARRELL) -> ConcordanceResult:
    """Harrell's c over all unordered subject pairs.

    Parameters
    ----------
    data : SurvivalDataset
    scores : array_like
        One risk score per observation; higher means earlier event expected.
    pair_rule : PairRule or {"harrell", "both-events"}
    """
    rule = PairRule(pair_rule)
    s = np.asarray(scores, dtype=float).ravel()
    if s.size != len(data):
        raise ValueError("need exactly one score per observation")
    if np.any(np.isnan(s)):
        raise ValueError("scores must not be NaN")
    t, e = data.time, data.event
    n = t.size
    conc = disc = tied = 0
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        # rows i in the block against columns j > i
        upper = np.arange(start, stop)[:, None] < np.arange(start, n)[None, :]
        c, d, x = _count_block(t[start:stop], e[start:stop], s[start:stop], t[start:], e[start:], s[start:], rule, upper)
        conc, disc, tied = conc + c, disc + d, tied + x
    return _result(conc, disc, tied, rule)


def between_group_concordance(
    data: SurvivalDataset, pair_rule: PairRule | str = PairRule.BOTH_EVENTS
) -> ConcordanceResult:
    """Share of comparable (treatment, control) pairs where treatment comes first.

    Estimates P(Y < X), which under proportional hazards equals
    ``lam / (1 + lam)``. The default rule keeps only pairs where both
    subjects had the event.
    """
    rule = PairRule(pair_rule)
    treat, ctrl = data.arm == 1, data.arm == 0
    if not treat.any() or not ctrl.any():
        raise ValueError("both arms must be present")
    ty, ey = data.time[treat], data.event[treat]
    tx, ex = data.time[ctrl], data.event[ctrl]
    # arm is the score: every cross pair has distinct scores, so no ties
    one, zero = np.ones(1), np.zeros(1)
    conc = disc = 0
    for start in range(0, ty.size, _BLOCK):
        stop = min(start + _BLOCK, ty.size)
        c, d, _ = _count_block(
            ty[start:stop], ey[start:stop], np.broadcast_to(one, stop - start),
            tx, ex, np.broadcast_to(zero, tx.size), rule,
        )
        conc, disc = conc + c, disc + d
    return _result(conc, disc, 0, rule)
