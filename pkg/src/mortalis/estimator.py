"""Age-adjusted expected and excess mortality.

The pipeline: correct life-table death probabilities so they can multiply
Jan-1 population counts (a person dying at age x in year t was aged x or
x-1 on Jan 1, hence the half-half average of adjacent probabilities), sum
the corrected hazards against the population pyramid to get expected
deaths, subtract from the observed toll for the excess, and recompute the
expectation under each single reference year's table for an empirical
plausible range.

All aggregates are exact decimals: sums, excesses and pooled totals satisfy
their identities bit-for-bit, and integers appear only at report time.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, localcontext
from typing import Mapping, Sequence

from .errors import (
    AxisMismatchError,
    EmptyReferenceError,
    MortalisError,
    YearCoverageError,
)
from .hmd import LifeTable, PopulationPyramid
from .store import CountryDataset, MortalityObservation

_HALF = Decimal("0.5")
_PREC = 60  # generous headroom so every sum/product below stays exact
_PCT_PREC = 28  # percentages divide at the stock decimal precision
_GRID = Decimal("1e-9")  # result-layer aggregates land on a fixed grid


def quantize_result(value: Decimal) -> Decimal:
    """Round an aggregate to nine decimal places.

    Stored results then have few enough digits that sums and differences of
    them are exact under the stock decimal context, so identities like
    "excess + expected equals observed" hold bit-for-bit for any consumer.
    """
    return value.quantize(_GRID)


def _pct_div(numerator: Decimal, denominator: Decimal) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = _PCT_PREC
        return numerator / denominator


def adjust_q(qx: Sequence[Decimal]) -> tuple[Decimal, ...]:
    """Half-half average of adjacent death probabilities, closing with 1.

    ``out[x] = (qx[x] + qx[x+1]) / 2`` with ``qx[n] := 1`` past the end:
    everyone in the open terminal interval dies by construction.
    """
    with localcontext() as ctx:
        ctx.prec = _PREC
        closed = list(qx) + [Decimal(1)]
        return tuple((closed[x] + closed[x + 1]) * _HALF for x in range(len(qx)))


@dataclass(frozen=True)
class AdjustedHazards:
    """Corrected death probabilities ready to multiply Jan-1 counts."""

    country: str
    source_period: tuple[int, int]
    qtilde: tuple[Decimal, ...]

    def __post_init__(self):
        for x, value in enumerate(self.qtilde):
            if not Decimal(0) <= value <= Decimal(1):
                raise MortalisError(f"adjusted hazard {value} at age {x} outside [0, 1]")


def adjust_hazards(table: LifeTable) -> AdjustedHazards:
    """Apply the adjacent-age correction to a life table."""
    return AdjustedHazards(
        country=table.country,
        source_period=(table.period_start, table.period_end),
        qtilde=adjust_q(table.qx_values()),
    )


def expected_from_values(qtilde: Sequence[Decimal], counts: Sequence[Decimal],
                         include_age_zero: bool = False) -> Decimal:
    """Sum hazards against population counts over ages 1..end (0.. if asked)."""
    if len(qtilde) != len(counts):
        raise AxisMismatchError(
            f"hazards cover {len(qtilde)} ages, population {len(counts)}"
        )
    start = 0 if include_age_zero else 1
    with localcontext() as ctx:
        ctx.prec = _PREC
        return sum(
            (qtilde[x] * counts[x] for x in range(start, len(counts))), Decimal(0)
        )


def expected_deaths(hazards: AdjustedHazards, pyramid: PopulationPyramid,
                    include_age_zero: bool = False) -> Decimal:
    """Expected deaths in the pyramid's year under the given hazards.

    Ages 1..110 by default; the infant term (age 0) is off by default and
    can be switched on for sensitivity analysis.
    """
    return expected_from_values(hazards.qtilde, pyramid.counts, include_age_zero)


@dataclass(frozen=True)
class MortalityBounds:
    """Single-reference-year expected estimates and their envelope."""

    per_year: dict[int, Decimal]
    lower: Decimal
    upper: Decimal


def expected_bounds(yearly_tables: Mapping[int, LifeTable],
                    pyramid: PopulationPyramid,
                    include_age_zero: bool = False) -> MortalityBounds:
    """Recompute the expectation under each single-year table; min/max bound it."""
    if not yearly_tables:
        raise EmptyReferenceError("no single-year reference tables")
    per_year = {
        year: expected_deaths(adjust_hazards(table), pyramid, include_age_zero)
        for year, table in sorted(yearly_tables.items())
    }
    values = list(per_year.values())
    return MortalityBounds(per_year=per_year, lower=min(values), upper=max(values))


@dataclass(frozen=True)
class ExpectedMortality:
    """Point estimate plus plausible range of expected deaths for one year."""

    country: str
    year: int
    expected: Decimal
    lower: Decimal
    upper: Decimal
    per_year: dict[int, Decimal]

    def __post_init__(self):
        if self.lower > self.upper:
            raise MortalisError(f"{self.country} {self.year}: lower > upper")


def expected_mortality(dataset: CountryDataset, year: int,
                       include_age_zero: bool = False) -> ExpectedMortality:
    """Full expected-mortality estimate for one year of a country dataset."""
    pyramid = dataset.pyramids[year]
    point = expected_deaths(adjust_hazards(dataset.multi_year_table), pyramid,
                            include_age_zero)
    bounds = expected_bounds(dataset.yearly_tables, pyramid, include_age_zero)
    per_year = {k: quantize_result(v) for k, v in bounds.per_year.items()}
    return ExpectedMortality(
        country=dataset.country, year=year, expected=quantize_result(point),
        lower=min(per_year.values()), upper=max(per_year.values()),
        per_year=per_year,
    )


@dataclass(frozen=True)
class ExcessResult:
    """Observed minus expected deaths over one or more pooled years.

    ``pct_range`` expresses the plausible expected-mortality envelope
    relative to the point-estimate base, so the point estimate always sits
    inside its own range.
    """

    country: str
    years: tuple[int, ...]
    expected: Decimal
    observed: Decimal
    excess: Decimal
    pct_excess: Decimal
    pct_range: tuple[Decimal, Decimal]
    expected_range: tuple[Decimal, Decimal]
    population: Decimal | None = None

    def __post_init__(self):
        if self.excess != self.observed - self.expected:
            raise MortalisError("excess must equal observed - expected exactly")
        if self.pct_range[0] > self.pct_range[1]:
            raise MortalisError("percentage range reversed")


def excess(expected: ExpectedMortality | Sequence[ExpectedMortality],
           observations: Sequence[MortalityObservation],
           population: Decimal | None = None) -> ExcessResult:
    """Pool expected and observed mortality over target years and difference them.

    The plausible range pools scenario-consistently: each reference year's
    table is applied to every target year before taking min/max, i.e. the
    band ends are "one reference year's rates throughout".
    """
    estimates = [expected] if isinstance(expected, ExpectedMortality) else list(expected)
    if not estimates:
        raise EmptyReferenceError("no expected-mortality estimates")
    estimates.sort(key=lambda e: e.year)
    years = tuple(e.year for e in estimates)
    obs_by_year = {o.year: o for o in observations}
    if sorted(obs_by_year) != sorted(years):
        raise YearCoverageError(
            f"observations cover {sorted(obs_by_year)}, targets are {sorted(years)}"
        )

    with localcontext() as ctx:
        ctx.prec = _PREC
        total_expected = quantize_result(
            sum((e.expected for e in estimates), Decimal(0)))
        total_observed = sum(
            (Decimal(obs_by_year[y].observed_deaths) for y in years), Decimal(0)
        )
        ref_years = sorted(estimates[0].per_year)
        for e in estimates:
            if sorted(e.per_year) != ref_years:
                raise YearCoverageError("estimates use different reference years")
        pooled_per_year = {
            k: quantize_result(sum((e.per_year[k] for e in estimates), Decimal(0)))
            for k in ref_years
        }
        scenario_values = list(pooled_per_year.values()) or [total_expected]
        lower, upper = min(scenario_values), max(scenario_values)
        delta = total_observed - total_expected
    if total_expected == 0:
        raise MortalisError("expected mortality is zero; percentages undefined")
    pct = _pct_div(delta, total_expected)
    pct_low = _pct_div(total_observed - upper, total_expected)
    pct_high = _pct_div(total_observed - lower, total_expected)

    return ExcessResult(
        country=estimates[0].country,
        years=years,
        expected=total_expected,
        observed=total_observed,
        excess=delta,
        pct_excess=pct,
        pct_range=(pct_low, pct_high),
        expected_range=(lower, upper),
        population=population,
    )


@dataclass(frozen=True)
class CountryRun:
    """All estimator output for one country: per-year, pooled, and back-cast."""

    country: str
    targets: tuple[int, ...]
    yearly: tuple[ExcessResult, ...]
    pooled: ExcessResult | None
    expected_by_year: dict[int, ExpectedMortality]


def run_country(dataset: CountryDataset, targets: Sequence[int] | None = None,
                include_pooled: bool = True,
                include_age_zero: bool = False) -> CountryRun:
    """Per-year excess for each target plus the pooled result.

    Also back-casts expected deaths (and their plausible ranges) for the
    reference years themselves, for plotting against observed history.
    """
    target_years = tuple(targets) if targets is not None else dataset.targets
    if not target_years:
        raise YearCoverageError("no target years requested")
    all_years = sorted(set(dataset.reference_years) | set(target_years))
    expected_by_year = {
        year: expected_mortality(dataset, year, include_age_zero)
        for year in all_years
    }
    yearly = tuple(
        excess(
            expected_by_year[year],
            [dataset.observations[year]],
            population=dataset.pyramids[year].total,
        )
        for year in target_years
    )
    pooled = None
    if include_pooled:
        pooled = excess(
            [expected_by_year[y] for y in target_years],
            [dataset.observations[y] for y in target_years],
            population=dataset.pyramids[target_years[0]].total,
        )
    return CountryRun(
        country=dataset.country,
        targets=target_years,
        yearly=yearly,
        pooled=pooled,
        expected_by_year=expected_by_year,
    )
