"""Simplified comparator estimators and the method-comparison harness.

Three baselines are computed in-repo: the raw reference-period mean, an
ordinary-least-squares linear trend on calendar year, and a coarse
stratum-rate adjustment over broad age groups. Published figures from other
studies (WMD, Economist, IHME, WHO, Levitt) are pass-through inputs, never
recomputed. All percentage figures share the fine-grained expected value as
their base so methods differ only through their excess numerators.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from decimal import Decimal, localcontext
from typing import Mapping, Sequence

from .errors import (
    DegenerateFitError,
    EmptyReferenceError,
    MortalisError,
    UnknownMethodError,
    YearCoverageError,
)
from .estimator import adjust_hazards, quantize_result, run_country
from .hmd import MAX_AGE
from .store import CountryDataset, ExternalEstimate, MortalityObservation

log = logging.getLogger(__name__)

COMPUTED_METHODS = ("fine_grained", "raw_mean", "linear_trend", "strata")
EXTERNAL_METHODS = ("wmd", "economist", "ihme", "who", "levitt")
METHOD_ORDER = COMPUTED_METHODS + EXTERNAL_METHODS

_PREC = 60

DEFAULT_STRATA = (14, 64, 74, 85, MAX_AGE)


@dataclass(frozen=True)
class StratumScheme:
    """Partition of ages 0..110 by inclusive upper bounds per stratum.

    The default five strata are 0-14, 15-64, 65-74, 75-85 and 86-110; age 85
    sits in the fourth stratum (the source description of "75-85 then >85"
    leaves 85 ambiguous, so this is configurable).
    """

    uppers: tuple[int, ...] = DEFAULT_STRATA

    def __post_init__(self):
        if not self.uppers or self.uppers[-1] != MAX_AGE:
            raise MortalisError(f"strata must end at {MAX_AGE}")
        if list(self.uppers) != sorted(set(self.uppers)):
            raise MortalisError("strata cuts must be strictly increasing")
        if self.uppers[0] < 0:
            raise MortalisError("strata cuts must be non-negative")

    def bounds(self) -> list[tuple[int, int]]:
        lows = [0] + [u + 1 for u in self.uppers[:-1]]
        return list(zip(lows, self.uppers))


@dataclass(frozen=True)
class BaselineResult:
    """One method's excess figures; percentage uses the shared base.

    ``pct_range`` is populated only for the fine-grained method, which is the
    only one with a plausible-range construction.
    """

    method: str
    country: str
    years: tuple[int, ...]
    expected: Decimal
    observed: Decimal
    excess: Decimal
    pct_excess: Decimal
    pct_range: tuple[Decimal, Decimal] | None = None

    def __post_init__(self):
        if self.excess != self.observed - self.expected:
            raise MortalisError("excess must equal observed - expected exactly")
        if self.pct_range is not None and self.pct_range[0] > self.pct_range[1]:
            raise MortalisError("percentage range reversed")


def raw_mean_expected(observations: Sequence[MortalityObservation],
                      targets: Sequence[int]) -> dict[int, Decimal]:
    """Reference-period mean of observed deaths, flat across target years."""
    if not observations:
        raise EmptyReferenceError("raw mean needs at least one reference observation")
    with localcontext() as ctx:
        ctx.prec = _PREC
        total = sum((Decimal(o.observed_deaths) for o in observations), Decimal(0))
        mean = quantize_result(total / Decimal(len(observations)))
    return {t: mean for t in targets}


def linear_trend_expected(observations: Sequence[MortalityObservation],
                          targets: Sequence[int]) -> dict[int, Decimal]:
    """OLS of deaths on calendar year, extrapolated to the target years.

    Negative fitted values are clamped to zero with a warning.
    """
    years = sorted({o.year for o in observations})
    if len(years) < 2:
        raise DegenerateFitError("linear trend needs two distinct reference years")
    with localcontext() as ctx:
        ctx.prec = _PREC
        n = Decimal(len(observations))
        xbar = sum((Decimal(o.year) for o in observations), Decimal(0)) / n
        ybar = sum((Decimal(o.observed_deaths) for o in observations), Decimal(0)) / n
        sxy = sum(
            ((Decimal(o.year) - xbar) * (Decimal(o.observed_deaths) - ybar)
             for o in observations),
            Decimal(0),
        )
        sxx = sum(((Decimal(o.year) - xbar) ** 2 for o in observations), Decimal(0))
        slope = sxy / sxx
        fitted = {}
        for t in targets:
            value = quantize_result(ybar + slope * (Decimal(t) - xbar))
            if value < 0:
                log.warning("trend fit for year %s is negative (%s); clamping to 0",
                            t, value)
                value = Decimal(0)
            fitted[t] = value
    return fitted


def strata_expected(dataset: CountryDataset,
                    scheme: StratumScheme | None = None,
                    targets: Sequence[int] | None = None,
                    include_age_zero: bool = False,
                    reference: tuple[int, int] | None = None) -> dict[int, Decimal]:
    """Coarse age adjustment: one reference death rate per age stratum.

    Stratum rates are synthesized from the corrected single-year hazards and
    reference pyramids (the artifact ingests no age-stratified death counts),
    then applied to each target year's stratum populations. With singleton
    strata this reproduces the fine-grained estimator.
    """
    scheme = scheme or StratumScheme()
    target_years = tuple(targets) if targets is not None else dataset.targets
    ref = reference or dataset.reference
    ref_years = [y for y in range(ref[0], ref[1] + 1)]
    if any(y not in dataset.yearly_tables or y not in dataset.pyramids
           for y in ref_years):
        raise YearCoverageError(
            f"reference {ref[0]}-{ref[1]} not covered by the dataset"
        )
    x_min = 0 if include_age_zero else 1

    qtilde = {y: adjust_hazards(dataset.yearly_tables[y]).qtilde for y in ref_years}
    with localcontext() as ctx:
        ctx.prec = _PREC
        rates = []
        for lo, hi in scheme.bounds():
            ages = range(max(lo, x_min), hi + 1)
            num = Decimal(0)
            den = Decimal(0)
            for y in ref_years:
                counts = dataset.pyramids[y].counts
                for x in ages:
                    num += qtilde[y][x] * counts[x]
                    den += counts[x]
            rates.append(num / den if den > 0 else Decimal(0))
        out = {}
        for t in target_years:
            counts = dataset.pyramids[t].counts
            total = Decimal(0)
            for rate, (lo, hi) in zip(rates, scheme.bounds()):
                stratum_pop = sum(
                    (counts[x] for x in range(max(lo, x_min), hi + 1)), Decimal(0)
                )
                total += rate * stratum_pop
            out[t] = quantize_result(total)
    return out


def pct_against_base(excess_value: Decimal, base: Decimal) -> Decimal:
    """Percentage excess against a shared expected-mortality base."""
    if base == 0:
        raise MortalisError("zero base; percentage undefined")
    with localcontext() as ctx:
        ctx.prec = 28  # divide at the stock decimal precision, like pct_excess
        return excess_value / base


@dataclass(frozen=True)
class ComparisonResult:
    """Per-method results for one country plus any missing external rows."""

    country: str
    years: tuple[int, ...]
    base_expected: Decimal
    results: tuple[BaselineResult, ...]
    missing_external: tuple[str, ...] = ()


def compare_methods(dataset: CountryDataset,
                    methods: Sequence[str],
                    targets: Sequence[int] | None = None,
                    external: Mapping[tuple[str, str], ExternalEstimate] | None = None,
                    method_reference: Mapping[str, tuple[int, int]] | None = None,
                    scheme: StratumScheme | None = None,
                    include_age_zero: bool = False) -> ComparisonResult:
    """Compute pooled percentage excess for each requested method.

    The fine-grained expected value is the denominator for every method;
    external estimates are passed through, and requested external methods
    with no row for this country are reported as missing, never fabricated.
    """
    target_years = tuple(targets) if targets is not None else dataset.targets
    for method in methods:
        if method not in COMPUTED_METHODS and method not in EXTERNAL_METHODS:
            raise UnknownMethodError(f"unknown method {method!r}")
    method_reference = dict(method_reference or {})

    run = run_country(dataset, targets=target_years, include_pooled=True,
                      include_age_zero=include_age_zero)
    pooled = run.pooled
    base = pooled.expected
    observed = pooled.observed

    results = []
    missing = []
    for method in sorted(set(methods), key=METHOD_ORDER.index):
        if method == "fine_grained":
            results.append(BaselineResult(
                method=method, country=dataset.country, years=target_years,
                expected=pooled.expected, observed=observed, excess=pooled.excess,
                pct_excess=pooled.pct_excess, pct_range=pooled.pct_range,
            ))
            continue
        if method in EXTERNAL_METHODS:
            estimate = (external or {}).get((method, dataset.country))
            if estimate is None:
                missing.append(method)
                continue
            delta = estimate.excess_absolute
            results.append(BaselineResult(
                method=method, country=dataset.country, years=target_years,
                expected=observed - delta, observed=observed, excess=delta,
                pct_excess=pct_against_base(delta, base),
            ))
            continue
        if method == "raw_mean":
            per_target = raw_mean_expected(
                [dataset.observations[y] for y in dataset.reference_years],
                target_years,
            )
        elif method == "linear_trend":
            per_target = linear_trend_expected(
                [dataset.observations[y] for y in dataset.reference_years],
                target_years,
            )
        else:  # strata
            per_target = strata_expected(
                dataset, scheme=scheme, targets=target_years,
                include_age_zero=include_age_zero,
                reference=method_reference.get("strata"),
            )
        expected_m = quantize_result(
            sum((per_target[t] for t in target_years), Decimal(0)))
        delta = observed - expected_m
        results.append(BaselineResult(
            method=method, country=dataset.country, years=target_years,
            expected=expected_m, observed=observed, excess=delta,
            pct_excess=pct_against_base(delta, base),
        ))
    if missing:
        log.warning("%s: no external rows for %s", dataset.country, ", ".join(missing))
    return ComparisonResult(
        country=dataset.country, years=target_years, base_expected=base,
        results=tuple(results), missing_external=tuple(missing),
    )
