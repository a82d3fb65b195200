"""Tables and SVG: formatting, geometry, byte determinism."""

import csv
import io
import xml.etree.ElementTree as ET
from decimal import Decimal

import pytest

from mortalis.baselines import BaselineResult
from mortalis.errors import MortalisError
from mortalis.estimator import ExcessResult
from mortalis.report import (
    CountrySeries,
    emit_comparison_table,
    emit_country_table,
    fmt_pct,
    fmt_population,
    make_country_series,
    render_comparison_chart,
    render_country_plot,
    render_excess_bar_chart,
    round_half_up,
)
from mortalis.estimator import run_country


def result_from_parts(country, expected, observed, expected_range, population=None,
                      years=(2020, 2021)):
    expected = Decimal(expected)
    observed = Decimal(observed)
    lower, upper = Decimal(expected_range[0]), Decimal(expected_range[1])
    return ExcessResult(
        country=country, years=years, expected=expected, observed=observed,
        excess=observed - expected,
        pct_excess=(observed - expected) / expected,
        pct_range=((observed - upper) / expected, (observed - lower) / expected),
        expected_range=(lower, upper),
        population=Decimal(population) if population is not None else None,
    )


GERMANY = result_from_parts("DEU", "2005161", "2009259",
                            ("1939078", "2073424"), population="83165450")
BULGARIA = result_from_parts("BGR", "222899", "273730",
                             ("216890.76", "230264.70"), population="6951471")
USA = result_from_parts("USA", "5921695", "6842426",
                        ("5829583", "6011540"), population="329791078")


class TestRounding:
    def test_half_up_ties_away_from_zero(self):
        assert round_half_up(Decimal("2.5")) == 3
        assert round_half_up(Decimal("-2.5")) == -3
        assert round_half_up(Decimal("2.4")) == 2

    def test_pct_formatting(self):
        assert fmt_pct(Decimal("0.00204")) == "+0.2%"
        assert fmt_pct(Decimal("-0.0320049")) == "-3.2%"
        assert fmt_pct(Decimal("0")) == "+0.0%"
        assert fmt_pct(Decimal("-0.0002")) == "+0.0%"  # never -0.0

    def test_population_abbreviation(self):
        assert fmt_population(Decimal("83165450")) == "83.2M"
        assert fmt_population(Decimal("364132")) == "0.4M"
        assert fmt_population(None) == ""


class TestCountryTable:
    def test_germany_row_layout(self):
        table = emit_country_table([GERMANY], "md")
        assert ("| Germany | 83.2M | 2,005,161 | 2,009,259 | 4,098 | +0.2% | "
                "(-3.2%, +3.5%) |") in table

    def test_bulgaria_row_percentages(self):
        table = emit_country_table([BULGARIA], "md")
        assert "| +22.8% | (+19.5%, +25.5%) |" in table
        assert "| 50,831 " in table

    def test_rows_sorted_alphabetically_by_name(self):
        table = emit_country_table([USA, GERMANY, BULGARIA], "md")
        rows = [line for line in table.splitlines() if line.startswith("| ")][1:]
        names = [line.split("|")[1].strip() for line in rows[0:]]
        assert names == ["Bulgaria", "Germany", "USA"]

    def test_degenerate_range_prints_equal_bounds(self):
        flat = result_from_parts("SYN", "100", "100", ("90", "90"))
        table = emit_country_table([flat], "md")
        assert "(+10.0%, +10.0%)" in table

    def test_csv_reparses_to_the_rounded_values(self):
        text = emit_country_table([GERMANY, BULGARIA, USA], "csv")
        rows = list(csv.DictReader(io.StringIO(text)))
        by_name = {r["country"]: r for r in rows}
        g = by_name["Germany"]
        assert int(g["expected"]) == round_half_up(GERMANY.expected)
        assert int(g["observed"]) == round_half_up(GERMANY.observed)
        assert int(g["excess"]) == round_half_up(GERMANY.excess)
        assert g["population_millions"] == "83.2"
        assert g["pct_excess"] == "+0.2"
        assert g["pct_range_low"] == "-3.2"
        assert g["pct_range_high"] == "+3.5"

    def test_empty_input_rejected(self):
        with pytest.raises(MortalisError):
            emit_country_table([], "md")


def constant_series(n=2, value=100):
    return CountrySeries(
        country="SYN",
        years=tuple(2015 + i for i in range(n)),
        observed=tuple(Decimal(value) for _ in range(n)),
        expected=tuple(Decimal(value) for _ in range(n)),
        band_lower=tuple(Decimal(value - 5) for _ in range(n)),
        band_upper=tuple(Decimal(value + 5) for _ in range(n)),
    )


def svg_root(text):
    return ET.fromstring(text)


def markers(root, tag, cls):
    ns = "{http://www.w3.org/2000/svg}"
    return [el for el in root.iter(f"{ns}{tag}") if el.get("class") == cls]


class TestCountryPlot:
    def test_structural_counts(self):
        svg = render_country_plot(constant_series())
        root = svg_root(svg)
        assert len(markers(root, "circle", "observed")) == 2
        assert len(markers(root, "rect", "expected")) == 2
        assert len(markers(root, "polygon", "band")) == 1

    def test_single_year_rejected(self):
        with pytest.raises(MortalisError):
            render_country_plot(constant_series(n=1))

    def test_observed_markers_against_the_band(self):
        years = (2015, 2016, 2017, 2018, 2019, 2020, 2021)
        expected = tuple(Decimal(1000 + 10 * i) for i in range(7))
        lower = tuple(v - 30 for v in expected)
        upper = tuple(v + 30 for v in expected)
        observed = list(expected)
        observed[5] = expected[5] + 10           # inside the band
        observed[6] = expected[6] * Decimal("1.2")  # +20% shock, above the band
        series = CountrySeries(country="SYN", years=years,
                               observed=tuple(observed), expected=expected,
                               band_lower=lower, band_upper=upper)
        root = svg_root(render_country_plot(series))
        band = markers(root, "polygon", "band")[0]
        points = [tuple(float(v) for v in pair.split(","))
                  for pair in band.get("points").split()]
        n = len(years)
        by_year = {c.get("data-year"): float(c.get("cy"))
                   for c in markers(root, "circle", "observed")}
        # SVG y grows downward: inside means between upper and lower vertex y
        upper_y_2020, lower_y_2020 = points[5][1], points[2 * n - 1 - 5][1]
        assert upper_y_2020 <= by_year["2020"] <= lower_y_2020
        upper_y_2021 = points[6][1]
        assert by_year["2021"] < upper_y_2021

    def test_byte_identical_across_runs(self):
        series = constant_series(n=5)
        assert render_country_plot(series) == render_country_plot(series)

    def test_fixed_canvas_and_wellformed(self):
        root = svg_root(render_country_plot(constant_series()))
        assert root.get("width") == "720"
        assert root.get("height") == "460"


# Published fine-grained percentages for 25 countries; the chart must order
# countries by this column, ascending.
FINE_PCTS = {
    "AUS": "-7.2", "AUT": "3.9", "BEL": "2.8", "CAN": "1.5", "HRV": "7.8",
    "CZE": "13.3", "DNK": "-3.1", "FIN": "-2.9", "FRA": "2.4", "DEU": "0.2",
    "HUN": "9.8", "ISL": "-5.8", "ITA": "7.2", "LTU": "9.6", "LUX": "-1.2",
    "NLD": "4.4", "NZL": "-7.2", "NOR": "-5.1", "PRT": "4.4", "KOR": "-9.1",
    "ESP": "4.0", "SWE": "-1.4", "CHE": "1.6", "GBR": "5.6", "USA": "15.6",
}


def baseline(method, country, pct):
    excess = Decimal(pct) * 10
    return BaselineResult(
        method=method, country=country, years=(2020, 2021),
        expected=Decimal(1000) - excess, observed=Decimal(1000), excess=excess,
        pct_excess=Decimal(pct) / 100,
    )


def comparison_rows():
    rows = []
    for country, pct in FINE_PCTS.items():
        rows.append(baseline("fine_grained", country, pct))
        rows.append(baseline("wmd", country, str(float(pct) + 2.0)))
    return rows


class TestComparisonChart:
    def test_ordering_matches_the_fine_grained_column(self):
        root = svg_root(render_comparison_chart(comparison_rows()))
        labels = [el.text for el in root.iter("{http://www.w3.org/2000/svg}text")
                  if el.get("class") == "country"]
        assert len(labels) == 25
        assert labels[0] == "South Korea"
        assert labels[1:3] == ["Australia", "New Zealand"]  # -7.2% tie, by name
        assert labels[-1] == "USA"

    def test_single_country_single_method(self):
        svg = render_comparison_chart([baseline("fine_grained", "DEU", "0.2")])
        root = svg_root(svg)
        dots = [el for el in root.iter() if (el.get("class") or "").startswith("dot")]
        assert len(dots) == 2  # one legend marker, one data marker

    def test_input_permutation_renders_identical_bytes(self):
        rows = comparison_rows()
        assert render_comparison_chart(rows) == render_comparison_chart(rows[::-1])

    def test_needs_fine_grained_for_ordering(self):
        with pytest.raises(MortalisError):
            render_comparison_chart([baseline("wmd", "DEU", "4.4")])

    def test_zero_line_present(self):
        root = svg_root(render_comparison_chart(comparison_rows()))
        zero = [el for el in root.iter() if el.get("class") == "zero"]
        assert len(zero) == 1


class TestComparisonTable:
    def test_markdown_has_one_column_per_method(self):
        table = emit_comparison_table(comparison_rows(), "md")
        header = table.splitlines()[0]
        assert header == "| Country | Fine-grained | WMD |"

    def test_csv_percentages(self):
        table = emit_comparison_table([baseline("fine_grained", "DEU", "0.2")], "csv")
        rows = list(csv.DictReader(io.StringIO(table)))
        assert rows[0]["fine_grained"] == "+0.2"


class TestBarChart:
    def test_bars_and_determinism(self):
        results = [GERMANY, BULGARIA, USA]
        svg = render_excess_bar_chart(results)
        root = svg_root(svg)
        bars = [el for el in root.iter() if el.get("class") == "bar"]
        assert len(bars) == 3
        assert svg == render_excess_bar_chart(results[::-1])


class TestSeries:
    def test_make_country_series_spans_reference_and_targets(self, null_dataset):
        run = run_country(null_dataset)
        series = make_country_series(null_dataset, run)
        assert series.years == tuple(sorted(
            set(null_dataset.reference_years) | set(null_dataset.targets)))
        for lo, hi in zip(series.band_lower, series.band_upper):
            assert lo <= hi

    def test_band_order_validated(self):
        with pytest.raises(MortalisError):
            CountrySeries(country="SYN", years=(2015, 2016),
                          observed=(Decimal(1), Decimal(1)),
                          expected=(Decimal(1), Decimal(1)),
                          band_lower=(Decimal(2), Decimal(2)),
                          band_upper=(Decimal(1), Decimal(1)))

    def test_expected_sits_inside_the_band_for_mean_pooled_tables(self):
        # yearly tables differ; the pooled table is their per-age mean, so
        # the point estimate must lie inside the band in every year
        from conftest import make_dataset

        years = {y: [f"{0.01 * (1 + (y - 2015) % 3):.6f}"] * 111
                 for y in range(2015, 2020)}
        pyramids = {y: [50] * 111 for y in range(2015, 2021)}
        observations = {y: 500 for y in range(2015, 2021)}
        dataset = make_dataset(years, pyramids, observations)
        series = make_country_series(dataset, run_country(dataset))
        for lo, mid, hi in zip(series.band_lower, series.expected,
                               series.band_upper):
            assert lo <= mid <= hi
