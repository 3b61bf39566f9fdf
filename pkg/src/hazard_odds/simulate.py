"""Exact two-arm proportional-hazards trial simulation.

Event times come from inverse-transform sampling. A control time is
``S^{-1}(u)``; a treatment time solves ``S(t)**lam = u``, i.e.
``S^{-1}(u**(1/lam))``, so both arms go through the same inverse-survival
code.

Random numbers
--------------
Every draw comes from a Philox4x64 counter-based generator keyed by
``numpy.random.SeedSequence(seed, spawn_key=(stream, chunk))``. Work is cut
into fixed chunks of :data:`CHUNK_SIZE` draws, each with its own key, so the
output depends only on ``(seed, stream)`` and never on how many workers
processed the chunks.

Conventions
-----------
* Administrative censoring: an event exactly at the cutoff counts as
  censored.
* Random censoring: the event is observed when ``event_time <= censor_time``.
* :func:`race_pairs` counts a pair only when the treatment time is strictly
  smaller; exact ties (probability zero) count as "not before".
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .baselines import BaselineDistribution, build_from_spec
from .core import HazardRatio, SurvivalDataset

__all__ = [
    "CHUNK_SIZE",
    "NoCensoring",
    "AdministrativeCensoring",
    "RandomExponentialCensoring",
    "CensoringSpec",
    "parse_censoring",
    "TrialConfig",
    "rng_stream",
    "open_uniform",
    "sample_control",
    "sample_treatment",
    "sample_treatment_delayed",
    "simulate_trial",
    "race_pairs",
    "write_dataset_csv",
    "read_dataset_csv",
    "dataset_to_csv",
    "CSV_HEADER",
]

CHUNK_SIZE = 1 << 16

# stream indices used by simulate_trial / race_pairs
STREAM_CONTROL = 0
STREAM_TREATMENT = 1
STREAM_CENSOR = 2


@dataclass(frozen=True)
class NoCensoring:
    @property
    def spec(self) -> str:
        return "none"


@dataclass(frozen=True)
class AdministrativeCensoring:
    cutoff: float

    def __post_init__(self):
        if not (math.isfinite(self.cutoff) and self.cutoff > 0):
            raise ValueError("administrative cutoff must be positive")

    @property
    def spec(self) -> str:
        return f"admin(cutoff={self.cutoff!r})"


@dataclass(frozen=True)
class RandomExponentialCensoring:
    rate: float

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValueError("censoring rate must be positive")

    @property
    def spec(self) -> str:
        return f"exp(rate={self.rate!r})"


CensoringSpec = Union[NoCensoring, AdministrativeCensoring, RandomExponentialCensoring]

_CENSOR_KINDS = {
    "none": (NoCensoring, {}),
    "admin": (AdministrativeCensoring, {"cutoff": False}),
    "exp": (RandomExponentialCensoring, {"rate": False}),
}


def parse_censoring(text: str) -> CensoringSpec:
    """``none``, ``admin(cutoff=5)`` or ``exp(rate=0.3)``."""
    return build_from_spec(text, _CENSOR_KINDS, "censoring kind")


@dataclass(frozen=True)
class TrialConfig:
    n_control: int
    n_treatment: int
    lam: HazardRatio
    baseline: BaselineDistribution
    censoring: CensoringSpec = NoCensoring()
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.lam, HazardRatio):
            object.__setattr__(self, "lam", HazardRatio(self.lam))
        for name in ("n_control", "n_treatment"):
            n = getattr(self, name)
            if int(n) != n or n < 1:
                raise ValueError(f"{name} must be a positive integer")
        _check_seed(self.seed)


def _check_seed(seed: int) -> None:
    if int(seed) != seed or not (0 <= seed < 2**64):
        raise ValueError("seed must be an unsigned 64-bit integer")


def rng_stream(seed: int, stream: int, chunk: int = 0) -> np.random.Generator:
    """Independent generator for one ``(seed, stream, chunk)`` key."""
    _check_seed(seed)
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(chunk)))
    return np.random.Generator(np.random.Philox(ss))


def open_uniform(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform draws strictly inside (0, 1): ``(k + 1/2) / 2**53``."""
    k = rng.integers(0, 1 << 53, size=size, dtype=np.uint64)
    return (k.astype(np.float64) + 0.5) * 2.0**-53


def _chunked_uniforms(seed: int, stream: int, n: int, workers: int = 1) -> np.ndarray:
    """``n`` open uniforms for ``(seed, stream)``, identical for any ``workers``."""
    sizes = [min(CHUNK_SIZE, n - start) for start in range(0, n, CHUNK_SIZE)]

    def draw(i):
        return open_uniform(rng_stream(seed, stream, i), sizes[i])

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(draw, range(len(sizes))))
    else:
        parts = [draw(i) for i in range(len(sizes))]
    return np.concatenate(parts) if parts else np.empty(0)


def _check_u(u):
    uu = np.asarray(u, dtype=float)
    if np.any(~((uu > 0) & (uu < 1))):
        raise ValueError("uniform draw must lie in (0, 1)")
    return uu


def sample_control(dist: BaselineDistribution, u):
    """Control event time with survival ``S``."""
    _check_u(u)
    return dist.inverse_survival(u)


def sample_treatment(dist: BaselineDistribution, lam, u):
    """Treatment event time with survival ``S(t)**lam``."""
    lam = float(HazardRatio(float(lam)))
    uu = _check_u(u)
    v = uu ** (1.0 / lam)
    return dist.inverse_survival(v if np.ndim(u) else float(v))


def sample_treatment_delayed(dist: BaselineDistribution, lam, u):
    """Non-proportional-hazards treatment time: ``lam`` acts only after the control median.

    Survival is ``S(t)`` before the median ``m`` and ``S(m) * (S(t)/S(m))**lam``
    after it. Used to demonstrate that the precedence identity fails
    without proportional hazards.
    """
    lam = float(HazardRatio(float(lam)))
    uu = _check_u(u)
    v = np.where(uu > 0.5, uu, 0.5 * (2.0 * np.minimum(uu, 0.5)) ** (1.0 / lam))
    return dist.inverse_survival(v if np.ndim(u) else float(v))


def _censor(times: np.ndarray, censoring: CensoringSpec, seed: int, workers: int):
    if isinstance(censoring, NoCensoring):
        return times, np.ones(times.size, dtype=bool)
    if isinstance(censoring, AdministrativeCensoring):
        event = times < censoring.cutoff
        return np.where(event, times, censoring.cutoff), event
    if isinstance(censoring, RandomExponentialCensoring):
        c = -np.log(_chunked_uniforms(seed, STREAM_CENSOR, times.size, workers)) / censoring.rate
        event = times <= c
        return np.where(event, times, c), event
    raise TypeError(f"unknown censoring spec {censoring!r}")


def simulate_trial(config: TrialConfig, workers: int = 1) -> SurvivalDataset:
    """Draw a two-arm trial: control rows first, then treatment rows."""
    dist = config.baseline
    u_c = _chunked_uniforms(config.seed, STREAM_CONTROL, config.n_control, workers)
    u_t = _chunked_uniforms(config.seed, STREAM_TREATMENT, config.n_treatment, workers)
    t = np.concatenate([sample_control(dist, u_c), sample_treatment(dist, config.lam, u_t)])
    observed, event = _censor(t, config.censoring, config.seed, workers)
    arm = np.concatenate([np.zeros(config.n_control, np.int8), np.ones(config.n_treatment, np.int8)])
    return SurvivalDataset(observed, event, arm)


def race_pairs(
    dist: BaselineDistribution,
    lam,
    n_pairs: int,
    seed: int,
    stream: int = 0,
    workers: int = 1,
    treatment_sampler: Optional[Callable] = None,
) -> int:
    """Number of independent (treatment, control) pairs where treatment is first.

    ``stream`` offsets the generator keys so that several races under one
    seed (e.g. cells of a verification grid) use disjoint streams.
    """
    if int(n_pairs) != n_pairs or n_pairs < 1:
        raise ValueError("n_pairs must be a positive integer")
    sampler = treatment_sampler or sample_treatment
    n_chunks = -(-n_pairs // CHUNK_SIZE)

    def count(i):
        size = min(CHUNK_SIZE, n_pairs - i * CHUNK_SIZE)
        base = 2 * int(stream)
        x = sample_control(dist, open_uniform(rng_stream(seed, base + STREAM_CONTROL, i), size))
        y = sampler(dist, lam, open_uniform(rng_stream(seed, base + STREAM_TREATMENT, i), size))
        return int(np.count_nonzero(y < x))

    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return sum(pool.map(count, range(n_chunks)))
    return sum(count(i) for i in range(n_chunks))


# CSV ``time,event,arm``

CSV_HEADER = ("time", "event", "arm")


def dataset_to_csv(data: SurvivalDataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for t, e, a in zip(data.time, data.event, data.arm):
        w.writerow((repr(float(t)), int(e), int(a)))
    return buf.getvalue()


def write_dataset_csv(data: SurvivalDataset, path: Union[str, os.PathLike]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(dataset_to_csv(data))


def read_dataset_csv(source, *, extra_columns: tuple[str, ...] = ()):
    """Read a ``time,event,arm`` CSV (path or open file).

    Extra columns are ignored unless named in ``extra_columns``, in which
    case they are returned as float arrays alongside the dataset.
    """
    if hasattr(source, "read"):
        return _read_csv(source, extra_columns)
    with open(source, newline="") as fh:
        return _read_csv(fh, extra_columns)


def _read_csv(fh, extra_columns):
    reader = csv.reader(fh)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ValueError("empty CSV: header `time,event,arm` is required") from None
    missing = [c for c in (*CSV_HEADER, *extra_columns) if c not in header]
    if missing:
        raise ValueError(f"CSV header lacks column(s) {', '.join(missing)}")
    idx = {c: header.index(c) for c in (*CSV_HEADER, *extra_columns)}
    cols: dict[str, list] = {c: [] for c in idx}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            t = float(row[idx["time"]])
            e = row[idx["event"]].strip()
            a = row[idx["arm"]].strip()
            extra = [float(row[idx[c]]) for c in extra_columns]
        except (IndexError, ValueError):
            raise ValueError(f"line {lineno}: malformed row {row!r}") from None
        if e not in ("0", "1") or a not in ("0", "1"):
            raise ValueError(f"line {lineno}: event and arm must be 0 or 1")
        if not math.isfinite(t) or t < 0:
            raise ValueError(f"line {lineno}: time must be finite and >= 0")
        cols["time"].append(t)
        cols["event"].append(e == "1")
        cols["arm"].append(int(a))
        for c, v in zip(extra_columns, extra):
            cols[c].append(v)
    if not cols["time"]:
        raise ValueError("CSV has no data rows")
    data = SurvivalDataset(cols["time"], cols["event"], cols["arm"])
    if extra_columns:
        return data, {c: np.asarray(cols[c], dtype=float) for c in extra_columns}
    return data

