"""Domain types and the exact hazard-ratio / odds / probability algebra.

Under proportional hazards a hazard ratio ``lam`` (treatment over control)
is the odds that a treatment subject's event precedes a control subject's,
so the precedence probability is ``lam / (1 + lam)`` and the probability of
the treatment event coming *later* is ``1 / (1 + lam)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

__all__ = [
    "HazardRatio",
    "PrecedenceProbability",
    "OddsRendering",
    "Observation",
    "SurvivalDataset",
    "hr_to_prob",
    "prob_to_hr",
    "prob_later",
    "render_odds",
    "render_percent",
    "explain",
]


@dataclass(frozen=True)
class HazardRatio:
    """Ratio of treatment to control hazards; positive and finite."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v) or v <= 0:
            raise ValueError(f"hazard ratio must be positive and finite, got {self.value!r}")
        object.__setattr__(self, "value", v)

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class PrecedenceProbability:
    """Probability ``p`` in (0, 1) that the treatment event comes first.

    ``complement`` carries ``1 - p`` computed independently of ``p``. When the
    probability comes from a hazard ratio both halves are exact to rounding,
    which keeps ``p / (1 - p)`` accurate even when ``p`` is within a few ulps
    of 1.
    """

    p: float
    complement: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        p = float(self.p)
        if not (0.0 < p < 1.0):
            raise ValueError(f"probability must lie in the open interval (0, 1), got {self.p!r}")
        q = 1.0 - p if self.complement is None else float(self.complement)
        if not (0.0 < q < 1.0):
            raise ValueError(f"complement must lie in (0, 1), got {q!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "complement", q)

    def __float__(self) -> float:
        return self.p


@dataclass(frozen=True)
class OddsRendering:
    """Odds written as ``numerator:1``."""

    numerator: float
    denominator: int = 1
    display_precision: int = 1

    def __post_init__(self):
        if not (self.numerator >= 0):
            raise ValueError("odds numerator must be nonnegative")
        if self.denominator != 1:
            raise ValueError("odds are always rendered against a denominator of 1")

    def __str__(self) -> str:
        return f"{_format_decimal(self.numerator, self.display_precision)}:{self.denominator}"


HRLike = Union[HazardRatio, float, int]
ProbLike = Union[PrecedenceProbability, float]


def _as_hr(hr: HRLike) -> HazardRatio:
    return hr if isinstance(hr, HazardRatio) else HazardRatio(hr)


def _as_prob(p: ProbLike) -> PrecedenceProbability:
    return p if isinstance(p, PrecedenceProbability) else PrecedenceProbability(p)


def hr_to_prob(hr: HRLike) -> PrecedenceProbability:
    """Probability that the treatment event precedes the control event."""
    lam = _as_hr(hr).value
    return PrecedenceProbability(lam / (1.0 + lam), 1.0 / (1.0 + lam))


def prob_later(hr: HRLike) -> PrecedenceProbability:
    """Probability that the treatment event occurs after the control event."""
    lam = _as_hr(hr).value
    return PrecedenceProbability(1.0 / (1.0 + lam), lam / (1.0 + lam))


def prob_to_hr(p: ProbLike) -> HazardRatio:
    """Odds ``p / (1 - p)``, i.e. the hazard ratio implied by ``p``."""
    prob = _as_prob(p)
    return HazardRatio(prob.p / prob.complement)


def _format_decimal(x: float, places: int) -> str:
    # round half away from zero, then drop a trailing ".0..."
    q = Decimal(1).scaleb(-places)
    d = Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP)
    s = format(d, "f")
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return s


def render_odds(hr: HRLike, places: int = 1) -> OddsRendering:
    return OddsRendering(_as_hr(hr).value, 1, places)


def render_percent(p: ProbLike) -> str:
    """Nearest whole percent, halves rounded away from zero (2/3 -> "67%")."""
    return _format_decimal(100.0 * _as_prob(p).p, 0) + "%"


def explain(hr: HRLike, event_name: str) -> str:
    """Plain-language statement of a hazard ratio as odds and probability.

    >>> explain(2, "heal")
    'The odds are roughly 2:1 (the probability is 67%) that you will heal before someone in the comparison group.'
    """
    hr = _as_hr(hr)
    return (
        f"The odds are roughly {render_odds(hr)} "
        f"(the probability is {render_percent(hr_to_prob(hr))}) "
        f"that you will {event_name} before someone in the comparison group."
    )


@dataclass(frozen=True)
class Observation:
    time: float
    event: bool
    arm: int

    def __post_init__(self):
        t = float(self.time)
        if not math.isfinite(t) or t < 0:
            raise ValueError(f"observation time must be finite and >= 0, got {self.time!r}")
        if self.arm not in (0, 1):
            raise ValueError(f"arm must be 0 (control) or 1 (treatment), got {self.arm!r}")
        object.__setattr__(self, "time", t)
        object.__setattr__(self, "event", bool(self.event))
        object.__setattr__(self, "arm", int(self.arm))


class SurvivalDataset:
    """An ordered, immutable sample of right-censored two-arm observations.

    Stored column-wise (``time``, ``event``, ``arm`` as read-only numpy
    arrays) so that estimators can work on large simulated trials; iterating
    yields :class:`Observation` records.
    """

    __slots__ = ("time", "event", "arm")

    def __init__(self, time: Sequence[float], event: Sequence[bool], arm: Sequence[int]):
        t = np.array(time, dtype=float).ravel()
        e = np.array(event).ravel()
        a = np.array(arm).ravel()
        if not (t.size == e.size == a.size):
            raise ValueError("time, event and arm must have equal length")
        if t.size == 0:
            raise ValueError("a survival dataset needs at least one observation")
        if not np.all(np.isfinite(t)) or np.any(t < 0):
            raise ValueError("every time must be finite and >= 0")
        if not np.all(np.isin(e, (0, 1))):
            raise ValueError("event indicators must be 0/1 or boolean")
        if not np.all(np.isin(a, (0, 1))):
            raise ValueError("arm labels must be 0 (control) or 1 (treatment)")
        e = e.astype(bool)
        a = a.astype(np.int8)
        for arr in (t, e, a):
            arr.setflags(write=False)
        object.__setattr__(self, "time", t)
        object.__setattr__(self, "event", e)
        object.__setattr__(self, "arm", a)

    def __setattr__(self, name, value):
        raise AttributeError("SurvivalDataset is immutable")

    @classmethod
    def from_observations(cls, observations: Iterable[Observation]) -> "SurvivalDataset":
        obs = list(observations)
        return cls([o.time for o in obs], [o.event for o in obs], [o.arm for o in obs])

    def __len__(self) -> int:
        return self.time.size

    def __iter__(self) -> Iterator[Observation]:
        for t, e, a in zip(self.time, self.event, self.arm):
            yield Observation(float(t), bool(e), int(a))

    def __getitem__(self, i: int) -> Observation:
        return Observation(float(self.time[i]), bool(self.event[i]), int(self.arm[i]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SurvivalDataset):
            return NotImplemented
        return (
            np.array_equal(self.time, other.time)
            and np.array_equal(self.event, other.event)
            and np.array_equal(self.arm, other.arm)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"SurvivalDataset(n={len(self)}, events={int(self.event.sum())})"

    def subset(self, mask) -> "SurvivalDataset":
        mask = np.asarray(mask, dtype=bool)
        return SurvivalDataset(self.time[mask], self.event[mask], self.arm[mask])

    def with_times(self, time) -> "SurvivalDataset":
        return SurvivalDataset(time, self.event, self.arm)

    def with_arms_swapped(self) -> "SurvivalDataset":
        return SurvivalDataset(self.time, self.event, 1 - self.arm)

    def events_per_arm(self) -> tuple[int, int]:
        return (
            int(np.count_nonzero(self.event & (self.arm == 0))),
            int(np.count_nonzero(self.event & (self.arm == 1))),
        )
