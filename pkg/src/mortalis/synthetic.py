"""Synthetic populations with known hazards, and the validation suite.

The simulator draws individual deaths: each person aged x on Jan 1 flips a
fair coin for the half of the year their birthday falls in, selecting risk
q_x or q_{x+1}, then draws a Bernoulli death. The marginal death probability
is the half-half average of adjacent probabilities, so the simulated mean is
an independent check of the expected-deaths computation that never forms
that average itself.

Draw order is fixed (ages ascending from 1, persons within age, coin before
death) and every replication has its own derived stream, so results are
bit-identical across runs, platforms and degrees of parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from typing import Sequence

import numpy as np

from .errors import MortalisError
from .hmd import MAX_AGE, N_AGES, LifeTable, LifeTableRow, PopulationPyramid
from .rng import Xoshiro256StarStar, XoshiroLanes, mix_seed
from .store import CountryDataset, MortalityObservation

_Q6 = Decimal("0.000001")  # synthetic hazards carry six decimal places


# --- scenario specification ----------------------------------------------


@dataclass(frozen=True)
class UniformPyramid:
    count: int = 20


@dataclass(frozen=True)
class GeometricPyramid:
    base: int = 60
    rate: float = 0.97


@dataclass(frozen=True)
class BulgePyramid:
    base: int = 10
    center: int = 70
    width: float = 6.0
    magnitude: int = 80


@dataclass(frozen=True)
class ConstantHazard:
    q: float = 0.02


@dataclass(frozen=True)
class GompertzHazard:
    """q_x = min(1, a * exp(b * x))."""

    a: float = 2e-4
    b: float = 0.085


@dataclass(frozen=True)
class SyntheticScenario:
    """Reproducible synthetic world: same seed, same data, bit for bit."""

    seed: int
    pyramid: UniformPyramid | GeometricPyramid | BulgePyramid
    hazard: ConstantHazard | GompertzHazard
    drift: bool = False
    births: int | None = None  # age-0 refill under drift; default keeps base count


def build_pyramid_counts(spec) -> np.ndarray:
    ages = np.arange(N_AGES)
    if isinstance(spec, UniformPyramid):
        counts = np.full(N_AGES, spec.count, dtype=np.int64)
    elif isinstance(spec, GeometricPyramid):
        counts = np.rint(spec.base * spec.rate**ages).astype(np.int64)
    elif isinstance(spec, BulgePyramid):
        bump = spec.magnitude * np.exp(-((ages - spec.center) ** 2) / (2 * spec.width**2))
        counts = np.rint(spec.base + bump).astype(np.int64)
    else:
        raise MortalisError(f"unknown pyramid spec {spec!r}")
    if counts.sum() <= 0:
        raise MortalisError("synthetic pyramid is empty")
    return counts


def build_hazard_values(spec) -> tuple[Decimal, ...]:
    if isinstance(spec, ConstantHazard):
        values = [spec.q] * N_AGES
    elif isinstance(spec, GompertzHazard):
        values = [min(1.0, spec.a * math.exp(spec.b * x)) for x in range(N_AGES)]
    else:
        raise MortalisError(f"unknown hazard spec {spec!r}")
    return tuple(Decimal(repr(v)).quantize(_Q6) for v in values)


def drift_counts(counts: np.ndarray, births: int) -> np.ndarray:
    """Age everyone by one year; births refill age 0, 110 stays open-ended."""
    out = np.empty_like(counts)
    out[0] = births
    out[1:MAX_AGE] = counts[0 : MAX_AGE - 1]
    out[MAX_AGE] = counts[MAX_AGE - 1] + counts[MAX_AGE]
    return out


# --- simulation ------------------------------------------------------------


@dataclass(frozen=True)
class SimulationResult:
    """Mean simulated annual deaths with its binomial standard error."""

    mean: float
    se: float
    counts: np.ndarray  # per-replication death counts

    def within(self, expected: float, sigmas: float = 3.0) -> bool:
        return abs(self.mean - expected) <= sigmas * self.se


def _as_counts(pyramid) -> np.ndarray:
    values = pyramid.counts if isinstance(pyramid, PopulationPyramid) else pyramid
    counts = np.asarray([int(v) for v in values], dtype=np.int64)
    for raw, cast in zip(values, counts):
        if Decimal(str(raw)) != int(cast):
            raise MortalisError(f"simulation needs integer counts, got {raw}")
        if cast < 0:
            raise MortalisError(f"negative count {raw}")
    return counts


def simulate_deaths(q: Sequence, pyramid, seed: int,
                    replications: int) -> SimulationResult:
    """Simulate annual deaths among everyone aged 1+ on Jan 1.

    ``q`` and the pyramid share an age axis indexed from 0; the closure past
    the last age is certain death. Replication r uses the stream derived
    from ``seed + r``, advanced identically whatever the lane count.
    """
    if replications < 1:
        raise MortalisError("need at least one replication")
    qf = np.asarray([float(v) for v in q], dtype=np.float64)
    counts = _as_counts(pyramid)
    if len(qf) != len(counts):
        raise MortalisError(f"hazards cover {len(qf)} ages, population {len(counts)}")
    if np.any((qf < 0) | (qf > 1)):
        raise MortalisError("hazards outside [0, 1]")

    variance = 0.0
    if replications == 1:
        # scalar fast path; lane 0 of the vectorized generator, bit-identical
        gen = Xoshiro256StarStar(seed)
        total = 0
        for age in range(1, len(qf)):
            risk_here = qf[age]
            risk_next = qf[age + 1] if age + 1 < len(qf) else 1.0
            marginal = 0.5 * (risk_here + risk_next)
            variance += int(counts[age]) * marginal * (1.0 - marginal)
            for _ in range(int(counts[age])):
                risk = risk_here if gen.next_unit() < 0.5 else risk_next
                total += gen.next_unit() < risk
        deaths = np.array([total], dtype=np.int64)
    else:
        lanes = XoshiroLanes(seed, replications)
        deaths = np.zeros(replications, dtype=np.int64)
        for age in range(1, len(qf)):
            n = int(counts[age])
            risk_here = qf[age]
            risk_next = qf[age + 1] if age + 1 < len(qf) else 1.0
            marginal = 0.5 * (risk_here + risk_next)
            variance += n * marginal * (1.0 - marginal)
            for _ in range(n):
                coin = lanes.next_unit()
                risk = np.where(coin < 0.5, risk_here, risk_next)
                deaths += lanes.next_unit() < risk
    mean = float(deaths.mean())
    se = math.sqrt(variance / replications)
    return SimulationResult(mean=mean, se=se, counts=deaths)


def binomial_sd(q: Sequence, pyramid) -> float:
    """Standard deviation of a single year's simulated death count."""
    qf = np.asarray([float(v) for v in q], dtype=np.float64)
    counts = _as_counts(pyramid)
    variance = 0.0
    for age in range(1, len(qf)):
        nxt = qf[age + 1] if age + 1 < len(qf) else 1.0
        marginal = 0.5 * (qf[age] + nxt)
        variance += int(counts[age]) * marginal * (1.0 - marginal)
    return math.sqrt(variance)


# --- scenario -> dataset -----------------------------------------------------


def generate_scenario(scenario: SyntheticScenario,
                      reference_years: int = 5,
                      target_years: int = 2,
                      first_year: int = 2015,
                      country: str = "SYN") -> CountryDataset:
    """Materialize a scenario as a CountryDataset usable by every estimator.

    Hazards are constant over time (one table serves every year); pyramids
    drift when requested; observed deaths are one simulation replication per
    year, with the year's stream seeded by ``mix_seed(seed + year_index)``.
    """
    if reference_years < 1 or target_years < 1:
        raise MortalisError("need at least one reference and one target year")
    q = build_hazard_values(scenario.hazard)
    rows = tuple(LifeTableRow(age=x, qx=q[x]) for x in range(N_AGES))
    ref_span = (first_year, first_year + reference_years - 1)
    multi = LifeTable(country=country, period_start=ref_span[0],
                      period_end=ref_span[1], rows=rows)
    yearly = {
        year: LifeTable(country=country, period_start=year, period_end=year, rows=rows)
        for year in range(ref_span[0], ref_span[1] + 1)
    }

    base = build_pyramid_counts(scenario.pyramid)
    births = scenario.births if scenario.births is not None else int(base[0])
    all_years = list(range(first_year, first_year + reference_years + target_years))
    pyramids = {}
    observations = {}
    counts = base
    for index, year in enumerate(all_years):
        if index > 0 and scenario.drift:
            counts = drift_counts(counts, births)
        pyramid = PopulationPyramid(
            country=country, year=year,
            counts=tuple(Decimal(int(c)) for c in counts),
        )
        pyramids[year] = pyramid
        draw = simulate_deaths(q, pyramid, seed=mix_seed(scenario.seed + index),
                               replications=1)
        observations[year] = MortalityObservation(
            country=country, year=year, observed_deaths=int(draw.counts[0]),
        )

    return CountryDataset(
        country=country,
        reference=ref_span,
        targets=tuple(all_years[reference_years:]),
        multi_year_table=multi,
        yearly_tables=yearly,
        pyramids=pyramids,
        observations=observations,
    )
