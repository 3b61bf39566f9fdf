"""Parametric control-arm event-time distributions.

Every family exposes the hazard ``h(t)``, survival ``S(t)``, density
``f(t) = h(t) S(t)`` and the inverse survival function. All methods accept
scalars or numpy arrays and return the same shape (a float for scalar input).

Distributions are also described by a short text form used on the command
line::

    exp(rate=1)
    weibull(shape=0.5,scale=2)
    gompertz(shape=0.1,rate=1)
    pwexp(breaks=1|2,rates=1|2|0.5)

Grammar: ``name "(" [key "=" value ("," key "=" value)*] ")"`` where a value
is a number or a ``|``-separated list of numbers; whitespace is ignored.
The same grammar parses censoring specs (see :mod:`hazard_odds.simulate`).
"""

from __future__ import annotations

import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

__all__ = [
    "BaselineDistribution",
    "Exponential",
    "Weibull",
    "Gompertz",
    "PiecewiseExponential",
    "SpecParseError",
    "parse_spec",
    "parse_baseline",
    "survival",
    "hazard",
    "density",
    "inverse_survival",
]

_BISECTION_MAX_ITER = 2000


def _check_times(t):
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise ValueError("time must be >= 0")
    return arr


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


class BaselineDistribution(ABC):
    """A proper event-time distribution on [0, inf).

    Subclasses supply :meth:`_cumhaz` and :meth:`_hazard`;
    survival and density follow from ``S = exp(-H)`` and ``f = h S``.
    :meth:`inverse_survival` defaults to a vectorised bisection on ``H``;
    families with a closed form override it.
    """

    @abstractmethod
    def _cumhaz(self, t: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _hazard(self, t: np.ndarray) -> np.ndarray: ...

    @property
    @abstractmethod
    def spec(self) -> str:
        """Canonical text form, parseable by :func:`parse_baseline`."""

    def cumulative_hazard(self, t):
        arr = _check_times(t)
        return _out(self._cumhaz(arr), t)

    def survival(self, t):
        arr = _check_times(t)
        return _out(np.exp(-self._cumhaz(arr)), t)

    def hazard(self, t):
        arr = _check_times(t)
        return _out(self._hazard(arr), t)

    def density(self, t):
        arr = _check_times(t)
        return _out(self._hazard(arr) * np.exp(-self._cumhaz(arr)), t)

    def inverse_survival(self, u):
        """Time ``t`` with ``S(t) = u`` for ``u`` in (0, 1]."""
        uu = np.asarray(u, dtype=float)
        if np.any(~((uu > 0) & (uu <= 1))):
            raise ValueError("inverse_survival requires 0 < u <= 1")
        return _out(self._inverse_cumhaz(-np.log(uu)), u)

    def _inverse_cumhaz(self, target: np.ndarray) -> np.ndarray:
        return _bisect_cumhaz(self._cumhaz, target)

    def __str__(self) -> str:
        return self.spec


def _bisect_cumhaz(cumhaz: Callable[[np.ndarray], np.ndarray], target: np.ndarray) -> np.ndarray:
    """Solve ``H(t) = target`` elementwise for nondecreasing ``H`` with H(0)=0."""
    target = np.asarray(target, dtype=float)
    lo = np.zeros_like(target)
    hi = np.where(target == 0, 0.0, 1.0)
    # grow the bracket until H(hi) >= target
    for _ in range(1100):
        short = (cumhaz(hi) < target) & (target > 0)
        if not short.any():
            break
        hi = np.where(short, hi * 2.0, hi)
        lo = np.where(short, hi / 2.0, lo)
    else:
        raise ArithmeticError("could not bracket the inverse survival")
    for _ in range(_BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        done = (mid <= lo) | (mid >= hi)
        if done.all():
            break
        below = cumhaz(mid) < target
        lo = np.where(below & ~done, mid, lo)
        hi = np.where(~below & ~done, mid, hi)
    return np.where(target == 0, 0.0, hi)


def _fmt(x: float) -> str:
    return repr(float(x)).removesuffix(".0") if float(x).is_integer() else repr(float(x))


@dataclass(frozen=True)
class Exponential(BaselineDistribution):
    rate: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValueError("exponential rate must be positive")

    def _cumhaz(self, t):
        return self.rate * t

    def _hazard(self, t):
        return np.full_like(t, self.rate, dtype=float)

    def _inverse_cumhaz(self, target):
        return target / self.rate

    @property
    def spec(self):
        return f"exp(rate={_fmt(self.rate)})"


@dataclass(frozen=True)
class Weibull(BaselineDistribution):
    """``S(t) = exp(-(t/scale)**shape)``; ``h(0)`` diverges when shape < 1."""

    shape: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.shape) and self.shape > 0):
            raise ValueError("weibull shape must be positive")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError("weibull scale must be positive")

    def _cumhaz(self, t):
        return (t / self.scale) ** self.shape

    def _hazard(self, t):
        if self.shape < 1 and np.any(t == 0):
            raise ValueError("weibull hazard with shape < 1 is singular at t = 0")
        return (self.shape / self.scale) * (t / self.scale) ** (self.shape - 1.0)

    def _inverse_cumhaz(self, target):
        return self.scale * target ** (1.0 / self.shape)

    @property
    def spec(self):
        return f"weibull(shape={_fmt(self.shape)},scale={_fmt(self.scale)})"


@dataclass(frozen=True)
class Gompertz(BaselineDistribution):
    """Hazard ``rate * exp(shape * t)``.

    Only ``shape >= 0`` is accepted: a negative shape leaves positive
    probability mass at infinity (``S(inf) = exp(rate/shape) > 0``).
    Inverse survival uses the generic bisection.
    """

    shape: float = 0.1
    rate: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.shape):
            raise ValueError("gompertz shape must be finite")
        if self.shape < 0:
            raise ValueError("gompertz shape < 0 gives an improper distribution (S(inf) > 0)")
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValueError("gompertz rate must be positive")

    def _cumhaz(self, t):
        if self.shape == 0:
            return self.rate * t
        with np.errstate(over="ignore"):  # H = inf is fine: S = 0
            return self.rate * np.expm1(self.shape * t) / self.shape

    def _hazard(self, t):
        with np.errstate(over="ignore"):
            return self.rate * np.exp(self.shape * t)

    @property
    def spec(self):
        return f"gompertz(shape={_fmt(self.shape)},rate={_fmt(self.rate)})"


@dataclass(frozen=True)
class PiecewiseExponential(BaselineDistribution):
    """Constant hazard ``rates[k]`` on ``[breaks[k-1], breaks[k])``.

    ``rates`` has one more entry than ``breaks``; the last rate applies
    from the final breakpoint onward. Hazard is right-continuous.
    """

    breaks: tuple[float, ...] = ()
    rates: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        b = tuple(float(x) for x in self.breaks)
        r = tuple(float(x) for x in self.rates)
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "rates", r)
        if len(r) != len(b) + 1:
            raise ValueError("piecewise exponential needs exactly one more rate than breakpoints")
        if any(not math.isfinite(x) or x < 0 for x in b):
            raise ValueError("breakpoints must be finite and nonnegative")
        if any(b2 <= b1 for b1, b2 in zip(b, b[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(not math.isfinite(x) or x <= 0 for x in r):
            raise ValueError("piecewise rates must be positive")

    @property
    def _edges(self) -> np.ndarray:
        return np.concatenate(([0.0], self.breaks))

    @property
    def _cum_at_edges(self) -> np.ndarray:
        widths = np.diff(self._edges)
        return np.concatenate(([0.0], np.cumsum(np.asarray(self.rates[:-1]) * widths)))

    def _segment(self, t):
        return np.searchsorted(np.asarray(self.breaks), t, side="right")

    def _cumhaz(self, t):
        k = self._segment(t)
        rates = np.asarray(self.rates)
        return self._cum_at_edges[k] + rates[k] * (t - self._edges[k])

    def _hazard(self, t):
        return np.asarray(self.rates)[self._segment(t)]

    def _inverse_cumhaz(self, target):
        cum = self._cum_at_edges
        k = np.searchsorted(cum, target, side="right") - 1
        rates = np.asarray(self.rates)
        return self._edges[k] + (target - cum[k]) / rates[k]

    @property
    def spec(self):
        b = "|".join(_fmt(x) for x in self.breaks)
        r = "|".join(_fmt(x) for x in self.rates)
        return f"pwexp(breaks={b},rates={r})" if self.breaks else f"pwexp(rates={r})"


# module-level functional API


def survival(dist: BaselineDistribution, t):
    return dist.survival(t)


def hazard(dist: BaselineDistribution, t):
    return dist.hazard(t)


def density(dist: BaselineDistribution, t):
    return dist.density(t)


def inverse_survival(dist: BaselineDistribution, u):
    return dist.inverse_survival(u)


# text specs


class SpecParseError(ValueError):
    """Malformed distribution spec; ``position`` is the 0-based offending column."""

    def __init__(self, message: str, text: str, position: int):
        self.text = text
        self.position = position
        pointer = " " * position + "^"
        super().__init__(f"{message} at position {position}\n  {text}\n  {pointer}")


_TOKEN = re.compile(
    r"\s*(?:(?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[()=,|]))"
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise SpecParseError(f"unexpected character {text[start]!r}", text, start)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def parse_spec(text: str) -> tuple[str, dict[str, float | tuple[float, ...]], dict[str, int]]:
    """Parse ``name(key=value,...)`` into (name, params, param positions).

    A bare ``name`` with no parentheses is allowed and yields no params.
    """
    toks = _tokenize(text)
    i = 0

    def expect(kind, value=None):
        nonlocal i
        k, v, p = toks[i]
        if k != kind or (value is not None and v != value):
            want = repr(value) if value is not None else kind
            got = "end of input" if k == "end" else repr(v)
            raise SpecParseError(f"expected {want}, found {got}", text, p)
        i += 1
        return v, p

    name, _ = expect("name")
    params: dict[str, float | tuple[float, ...]] = {}
    positions: dict[str, int] = {}
    if toks[i][0] == "end":
        return name.lower(), params, positions
    expect("op", "(")
    if toks[i][1] != ")":
        while True:
            key, kpos = expect("name")
            if key in params:
                raise SpecParseError(f"duplicate parameter {key!r}", text, kpos)
            expect("op", "=")
            values = [float(expect("num")[0])]
            while toks[i][1] == "|":
                i += 1
                values.append(float(expect("num")[0]))
            params[key] = values[0] if len(values) == 1 else tuple(values)
            positions[key] = kpos
            if toks[i][1] == ",":
                i += 1
                continue
            break
    expect("op", ")")
    expect("end")
    return name.lower(), params, positions


def _as_tuple(v) -> tuple[float, ...]:
    return v if isinstance(v, tuple) else (v,)


_FAMILIES: Mapping[str, tuple[type, dict[str, bool]]] = {
    # name -> (class, {param: is_list})
    "exp": (Exponential, {"rate": False}),
    "exponential": (Exponential, {"rate": False}),
    "weibull": (Weibull, {"shape": False, "scale": False}),
    "gompertz": (Gompertz, {"shape": False, "rate": False}),
    "pwexp": (PiecewiseExponential, {"breaks": True, "rates": True}),
}


def build_from_spec(text: str, families: Mapping[str, tuple[type, dict[str, bool]]], what: str):
    name, params, positions = parse_spec(text)
    if name not in families:
        known = ", ".join(sorted(families))
        raise SpecParseError(f"unknown {what} {name!r} (known: {known})", text, len(text) - len(text.lstrip()))
    cls, allowed = families[name]
    kwargs = {}
    for key, value in params.items():
        if key not in allowed:
            raise SpecParseError(f"unknown parameter {key!r} for {name}", text, positions[key])
        if allowed[key]:
            kwargs[key] = _as_tuple(value)
        elif isinstance(value, tuple):
            raise SpecParseError(f"parameter {key!r} takes a single number", text, positions[key])
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise SpecParseError(str(exc), text, len(text) - len(text.lstrip())) from exc


def parse_baseline(text: str) -> BaselineDistribution:
    """Build a distribution from its text form, e.g. ``weibull(shape=0.5,scale=2)``."""
    return build_from_spec(text, _FAMILIES, "baseline family")
