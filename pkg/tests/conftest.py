"""Shared fixtures: HMD-style text builders and synthetic datasets."""

from __future__ import annotations

from decimal import Decimal

import pytest

from mortalis.hmd import MAX_AGE, N_AGES, LifeTable, LifeTableRow, PopulationPyramid
from mortalis.synthetic import (
    GeometricPyramid,
    GompertzHazard,
    SyntheticScenario,
    generate_scenario,
)


def make_life_table(q, country="SYN", start=2015, end=2015) -> LifeTable:
    """Life table from 111 qx values (strings, Decimals or floats)."""
    rows = tuple(LifeTableRow(age=x, qx=Decimal(str(q[x]))) for x in range(N_AGES))
    return LifeTable(country=country, period_start=start, period_end=end, rows=rows)


def make_pyramid(counts, country="SYN", year=2020) -> PopulationPyramid:
    return PopulationPyramid(
        country=country, year=year,
        counts=tuple(Decimal(str(c)) for c in counts),
    )


def hmd_life_table_text(country_name: str, tables: dict, aux: bool = True,
                        sep: str = "   ", line_ending: str = "\n") -> str:
    """Life-table file in the HMD layout.

    ``tables`` maps a Year token (``"2015"`` or ``"2015-2019"``) to a list of
    111 qx strings. Aux columns carry filler values (or ``.`` when ``aux`` is
    off) since only qx feeds the estimator.
    """
    lines = [
        f"{country_name}, Life tables (period 1x1), Total\tLast modified: "
        f"01 Jan 2023;  Methods Protocol: v6 (2017)",
        "",
        "  Year          Age         mx       qx       ax       lx       dx       Lx       Tx       ex",
    ]
    for year_token, q in tables.items():
        for age in range(N_AGES):
            age_token = "110+" if age == MAX_AGE else str(age)
            filler = f"0.{age:03d}00" if aux else "."
            lx = str(100000 - 100 * age) if aux else "."
            lines.append(sep.join([
                f"  {year_token}", age_token, filler, q[age],
                "0.50" if aux else ".", lx, "100" if aux else ".",
                lx, lx, "12.34" if aux else ".",
            ]))
    return line_ending.join(lines) + line_ending


def hmd_population_text(country_name: str, years: dict, sep: str = "   ",
                        line_ending: str = "\n", max_age: int = MAX_AGE) -> str:
    """Population file in the HMD layout.

    ``years`` maps a Year token (``"2020"``, ``"2000-"``, ``"2000+"``) to a
    list of totals (one per age 0..max_age). Female/Male columns carry an
    even split.
    """
    lines = [
        f"{country_name}, Population size (abridged)\tLast modified: 01 Jan 2023",
        "",
        "  Year         Age       Female       Male      Total",
    ]
    for year_token, totals in years.items():
        for age, total in enumerate(totals):
            age_token = f"{age}+" if age == max_age and age >= MAX_AGE else str(age)
            half = Decimal(str(total)) / 2
            lines.append(sep.join([
                f"  {year_token}", age_token, f"{half:.2f}", f"{half:.2f}",
                f"{Decimal(str(total)):.2f}",
            ]))
    return line_ending.join(lines) + line_ending


def make_dataset(yearly_q: dict, pyramids: dict, observations: dict,
                 multi_q=None, country="SYN", targets=None):
    """CountryDataset from raw vectors.

    ``yearly_q``: year -> 111 qx values; ``pyramids``: year -> 111 counts;
    ``observations``: year -> observed toll. The pooled table defaults to the
    per-age mean of the yearly tables.
    """
    from mortalis.store import CountryDataset, MortalityObservation, pooled_reference_table

    years = sorted(yearly_q)
    reference = (years[0], years[-1])
    yearly = {y: make_life_table(yearly_q[y], country, y, y) for y in years}
    multi = (make_life_table(multi_q, country, *reference) if multi_q is not None
             else pooled_reference_table(yearly, reference))
    target_years = tuple(targets) if targets else tuple(
        y for y in sorted(pyramids) if y not in years)
    return CountryDataset(
        country=country,
        reference=reference,
        targets=target_years,
        multi_year_table=multi,
        yearly_tables=yearly,
        pyramids={y: make_pyramid(c, country, y) for y, c in pyramids.items()},
        observations={
            y: MortalityObservation(country, y, int(v))
            for y, v in observations.items()
        },
    )


@pytest.fixture(scope="session")
def null_dataset():
    """Stationary synthetic country: no shock, no drift."""
    scenario = SyntheticScenario(
        seed=2024,
        pyramid=GeometricPyramid(base=400, rate=0.96),
        hazard=GompertzHazard(a=3e-4, b=0.085),
    )
    return generate_scenario(scenario)


@pytest.fixture(scope="session")
def ageing_dataset():
    """Drifting pyramid under time-constant hazards."""
    scenario = SyntheticScenario(
        seed=77,
        pyramid=GeometricPyramid(base=500, rate=0.97),
        hazard=GompertzHazard(a=3e-4, b=0.09),
        drift=True,
    )
    return generate_scenario(scenario)
