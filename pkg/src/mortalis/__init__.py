"""Age-adjusted expected and excess mortality from official demographic data.

The estimator corrects life-table death probabilities to match Jan-1
population accounting, multiplies them against single-year-of-age pyramids
for expected deaths, and differences observed tolls against them, with
data-driven plausible ranges from single-year reference tables. Baseline
comparators, a simulation oracle, deterministic reporting and a CLI sit on
top.
"""

from .baselines import (
    BaselineResult,
    ComparisonResult,
    StratumScheme,
    compare_methods,
    linear_trend_expected,
    raw_mean_expected,
    strata_expected,
)
from .errors import MortalisError
from .estimator import (
    AdjustedHazards,
    CountryRun,
    ExcessResult,
    ExpectedMortality,
    adjust_hazards,
    adjust_q,
    excess,
    expected_bounds,
    expected_deaths,
    expected_mortality,
    run_country,
)
from .hmd import (
    LifeTable,
    LifeTableRow,
    PopulationPyramid,
    parse_life_table,
    parse_population,
    serialize_life_tables,
    serialize_population,
)
from .report import (
    CountrySeries,
    emit_country_table,
    make_country_series,
    render_comparison_chart,
    render_country_plot,
)
from .store import (
    CountryDataset,
    DataStore,
    MortalityObservation,
    assemble_dataset,
    parse_deaths_csv,
    parse_external_csv,
)
from .synthetic import (
    BulgePyramid,
    ConstantHazard,
    GeometricPyramid,
    GompertzHazard,
    SyntheticScenario,
    UniformPyramid,
    generate_scenario,
    simulate_deaths,
)
from .validation import run_validation

__version__ = "0.1.0"

__all__ = [
    "AdjustedHazards",
    "BaselineResult",
    "BulgePyramid",
    "ComparisonResult",
    "ConstantHazard",
    "CountryDataset",
    "CountryRun",
    "CountrySeries",
    "DataStore",
    "ExcessResult",
    "ExpectedMortality",
    "GeometricPyramid",
    "GompertzHazard",
    "LifeTable",
    "LifeTableRow",
    "MortalisError",
    "MortalityObservation",
    "PopulationPyramid",
    "StratumScheme",
    "SyntheticScenario",
    "UniformPyramid",
    "adjust_hazards",
    "adjust_q",
    "assemble_dataset",
    "compare_methods",
    "emit_country_table",
    "excess",
    "expected_bounds",
    "expected_deaths",
    "expected_mortality",
    "generate_scenario",
    "linear_trend_expected",
    "make_country_series",
    "parse_deaths_csv",
    "parse_external_csv",
    "parse_life_table",
    "parse_population",
    "raw_mean_expected",
    "render_comparison_chart",
    "render_country_plot",
    "run_country",
    "run_validation",
    "serialize_life_tables",
    "serialize_population",
    "simulate_deaths",
    "strata_expected",
]
