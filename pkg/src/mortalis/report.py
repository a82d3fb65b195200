"""Country tables and deterministic SVG figures.

All output is a pure function of its input: fixed canvas sizes, fixed
``%.3f`` coordinate formatting, decimal point ``.`` and thousands separator
``,`` regardless of locale, and no timestamps, so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence
from xml.sax.saxutils import escape

from .baselines import METHOD_ORDER, BaselineResult
from .countries import display_name
from .errors import MortalisError
from .estimator import CountryRun, ExcessResult
from .store import CountryDataset

_ONE = Decimal(1)
_TENTH = Decimal("0.1")

TABLE_COLUMNS = ("Country", "Pop.", "Expected", "Observed",
                 "Excess", "%Excess", "Plausible range")
CSV_COLUMNS = ("country", "population_millions", "expected", "observed",
               "excess", "pct_excess", "pct_range_low", "pct_range_high")

METHOD_LABELS = {
    "fine_grained": "Fine-grained",
    "raw_mean": "Raw mean",
    "linear_trend": "Linear trend",
    "strata": "Five strata",
    "wmd": "WMD",
    "economist": "Economist",
    "ihme": "IHME",
    "who": "WHO",
    "levitt": "Levitt",
}

METHOD_COLORS = {
    "fine_grained": "#1a1a1a",
    "raw_mean": "#cc3311",
    "linear_trend": "#ee7733",
    "strata": "#009988",
    "wmd": "#0077bb",
    "economist": "#ee3377",
    "ihme": "#33bbee",
    "who": "#bbbb33",
    "levitt": "#aa4499",
}


# --- rounding and formatting (presentation only) --------------------------


def round_half_up(value: Decimal) -> int:
    """Round to integer, ties away from zero."""
    return int(value.quantize(_ONE, rounding=ROUND_HALF_UP))


def fmt_count(value: Decimal) -> str:
    return f"{round_half_up(value):,}"


def fmt_pct(ratio: Decimal) -> str:
    """Signed percentage with one decimal, e.g. ``+0.2%``."""
    points = (ratio * 100).quantize(_TENTH, rounding=ROUND_HALF_UP)
    if points == 0:
        points = abs(points)  # never print -0.0
    return f"{points:+}%"


def fmt_pct_plain(ratio: Decimal) -> str:
    points = (ratio * 100).quantize(_TENTH, rounding=ROUND_HALF_UP)
    if points == 0:
        points = abs(points)
    return f"{points:+}"


def fmt_population(pop: Decimal | None) -> str:
    if pop is None:
        return ""
    millions = (pop / Decimal(1_000_000)).quantize(_TENTH, rounding=ROUND_HALF_UP)
    return f"{millions}M"


def _c(x: float) -> str:
    return f"{x:.3f}"


# --- tables -----------------------------------------------------------------


def emit_country_table(results: Sequence[ExcessResult], format: str = "md") -> str:
    """Country table with one row per result, alphabetical by country name."""
    if not results:
        raise MortalisError("no results to tabulate")
    if format not in ("md", "csv"):
        raise MortalisError(f"unknown table format {format!r}")
    ordered = sorted(results, key=lambda r: display_name(r.country))
    if format == "md":
        lines = ["| " + " | ".join(TABLE_COLUMNS) + " |",
                 "|" + "---|" * len(TABLE_COLUMNS)]
        for r in ordered:
            lines.append(
                "| " + " | ".join([
                    display_name(r.country),
                    fmt_population(r.population),
                    fmt_count(r.expected),
                    fmt_count(r.observed),
                    fmt_count(r.excess),
                    fmt_pct(r.pct_excess),
                    f"({fmt_pct(r.pct_range[0])}, {fmt_pct(r.pct_range[1])})",
                ]) + " |"
            )
        return "\n".join(lines) + "\n"
    lines = [",".join(CSV_COLUMNS)]
    for r in ordered:
        millions = ""
        if r.population is not None:
            millions = str((r.population / Decimal(1_000_000))
                           .quantize(_TENTH, rounding=ROUND_HALF_UP))
        lines.append(",".join([
            display_name(r.country),
            millions,
            str(round_half_up(r.expected)),
            str(round_half_up(r.observed)),
            str(round_half_up(r.excess)),
            fmt_pct_plain(r.pct_excess),
            fmt_pct_plain(r.pct_range[0]),
            fmt_pct_plain(r.pct_range[1]),
        ]))
    return "\n".join(lines) + "\n"


def emit_comparison_table(results: Sequence[BaselineResult], format: str = "md") -> str:
    """Method-by-country comparison table (percentages share the fine base)."""
    if not results:
        raise MortalisError("no results to tabulate")
    methods = sorted({r.method for r in results}, key=METHOD_ORDER.index)
    by_country: dict[str, dict[str, BaselineResult]] = {}
    for r in results:
        by_country.setdefault(r.country, {})[r.method] = r
    countries = sorted(by_country, key=display_name)
    header = ["Country"] + [METHOD_LABELS[m] for m in methods]
    if format == "md":
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        for c in countries:
            cells = [display_name(c)]
            for m in methods:
                r = by_country[c].get(m)
                cells.append(fmt_pct(r.pct_excess) if r else "")
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"
    if format != "csv":
        raise MortalisError(f"unknown table format {format!r}")
    lines = [",".join(["country"] + list(methods))]
    for c in countries:
        cells = [display_name(c)]
        for m in methods:
            r = by_country[c].get(m)
            cells.append(fmt_pct_plain(r.pct_excess) if r else "")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


# --- country time-series plot -------------------------------------------


@dataclass(frozen=True)
class CountrySeries:
    """Observed and expected mortality by calendar year, with range bands."""

    country: str
    years: tuple[int, ...]
    observed: tuple[Decimal, ...]
    expected: tuple[Decimal, ...]
    band_lower: tuple[Decimal, ...]
    band_upper: tuple[Decimal, ...]

    def __post_init__(self):
        n = len(self.years)
        for name in ("observed", "expected", "band_lower", "band_upper"):
            if len(getattr(self, name)) != n:
                raise MortalisError(f"{name} length does not match years")
        for lo, hi in zip(self.band_lower, self.band_upper):
            if lo > hi:
                raise MortalisError("band_lower above band_upper")


def make_country_series(dataset: CountryDataset, run: CountryRun) -> CountrySeries:
    """Series over reference + target years, expected back-cast included."""
    years = tuple(sorted(run.expected_by_year))
    return CountrySeries(
        country=dataset.country,
        years=years,
        observed=tuple(Decimal(dataset.observations[y].observed_deaths) for y in years),
        expected=tuple(run.expected_by_year[y].expected for y in years),
        band_lower=tuple(run.expected_by_year[y].lower for y in years),
        band_upper=tuple(run.expected_by_year[y].upper for y in years),
    )


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + max(abs(lo), 1.0)
    raw = (hi - lo) / max(target - 1, 1)
    power = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * power
        if step >= raw:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    value = first
    while value <= hi + 1e-9 * step:
        ticks.append(value)
        value += step
    return ticks


def render_country_plot(series: CountrySeries, width: int = 720,
                        height: int = 460) -> str:
    """Yearly observed (circles) vs expected (squares) with the range band."""
    if len(series.years) < 2:
        raise MortalisError("need at least two years to plot")
    left, right, top, bottom = 90.0, 30.0, 46.0, 54.0
    plot_w = width - left - right
    plot_h = height - top - bottom

    values = [float(v) for v in series.observed + series.expected
              + series.band_lower + series.band_upper]
    lo, hi = min(values), max(values)
    pad = 0.06 * (hi - lo) if hi > lo else max(abs(hi), 1.0) * 0.06
    lo, hi = lo - pad, hi + pad
    y0, y1 = float(series.years[0]), float(series.years[-1])

    def sx(year: float) -> float:
        return left + (year - y0) / (y1 - y0) * plot_w

    def sy(value: float) -> float:
        return top + (hi - value) / (hi - lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace">',
        f'<text x="{_c(width / 2)}" y="24" text-anchor="middle" font-size="15">'
        f'{escape(display_name(series.country))}: observed and expected deaths</text>',
    ]

    band = [f"{_c(sx(y))},{_c(sy(float(u)))}"
            for y, u in zip(series.years, series.band_upper)]
    band += [f"{_c(sx(y))},{_c(sy(float(b)))}"
             for y, b in zip(reversed(series.years), reversed(series.band_lower))]
    parts.append(f'<polygon class="band" points="{" ".join(band)}" '
                 f'fill="#99ccee" fill-opacity="0.45" stroke="none"/>')

    for tick in _nice_ticks(lo, hi):
        y = sy(tick)
        parts.append(f'<line x1="{_c(left)}" y1="{_c(y)}" x2="{_c(width - right)}" '
                     f'y2="{_c(y)}" stroke="#dddddd" stroke-width="1"/>')
        parts.append(f'<text x="{_c(left - 8)}" y="{_c(y + 4)}" text-anchor="end" '
                     f'font-size="11" fill="#444444">{int(round(tick)):,}</text>')

    parts.append(f'<line x1="{_c(left)}" y1="{_c(top)}" x2="{_c(left)}" '
                 f'y2="{_c(height - bottom)}" stroke="#333333" stroke-width="1"/>')
    parts.append(f'<line x1="{_c(left)}" y1="{_c(height - bottom)}" '
                 f'x2="{_c(width - right)}" y2="{_c(height - bottom)}" '
                 f'stroke="#333333" stroke-width="1"/>')

    for year in series.years:
        x = sx(year)
        parts.append(f'<text x="{_c(x)}" y="{_c(height - bottom + 18)}" '
                     f'text-anchor="middle" font-size="11" fill="#444444">{year}</text>')

    expected_line = " ".join(
        f"{_c(sx(y))},{_c(sy(float(e)))}" for y, e in zip(series.years, series.expected)
    )
    parts.append(f'<polyline points="{expected_line}" fill="none" '
                 f'stroke="#4477cc" stroke-width="1.5"/>')

    half = 5.0
    for year, value in zip(series.years, series.expected):
        x, y = sx(year), sy(float(value))
        parts.append(
            f'<rect class="expected" data-year="{year}" x="{_c(x - half)}" '
            f'y="{_c(y - half)}" width="{_c(2 * half)}" height="{_c(2 * half)}" '
            f'fill="#4477cc"/>'
        )
    for year, value in zip(series.years, series.observed):
        x, y = sx(year), sy(float(value))
        parts.append(
            f'<circle class="observed" data-year="{year}" cx="{_c(x)}" cy="{_c(y)}" '
            f'r="4.500" fill="#111111"/>'
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# --- method comparison chart ------------------------------------------------


def _marker(method: str, x: float, y: float, pct_label: str) -> str:
    color = METHOD_COLORS[method]
    title = f"<title>{escape(METHOD_LABELS[method])}: {escape(pct_label)}</title>"
    attrs = f'class="dot method-{method}"'
    if method == "fine_grained":
        return (f'<circle {attrs} cx="{_c(x)}" cy="{_c(y)}" r="4.200" '
                f'fill="{color}">{title}</circle>')
    if method in ("raw_mean", "economist"):
        return (f'<rect {attrs} x="{_c(x - 3.6)}" y="{_c(y - 3.6)}" width="7.200" '
                f'height="7.200" fill="{color}">{title}</rect>')
    if method in ("linear_trend", "ihme"):
        points = f"{_c(x)},{_c(y - 4.8)} {_c(x + 4.8)},{_c(y)} {_c(x)},{_c(y + 4.8)} {_c(x - 4.8)},{_c(y)}"
        return f'<polygon {attrs} points="{points}" fill="{color}">{title}</polygon>'
    if method in ("strata", "who"):
        points = f"{_c(x)},{_c(y - 4.8)} {_c(x + 4.4)},{_c(y + 3.6)} {_c(x - 4.4)},{_c(y + 3.6)}"
        return f'<polygon {attrs} points="{points}" fill="{color}">{title}</polygon>'
    return (f'<circle {attrs} cx="{_c(x)}" cy="{_c(y)}" r="3.800" fill="none" '
            f'stroke="{color}" stroke-width="1.800">{title}</circle>')


def render_comparison_chart(results: Sequence[BaselineResult], width: int = 960,
                            height: int = 540) -> str:
    """Dot chart of percentage excess by country and method.

    Countries run left to right in ascending order of the fine-grained
    percentage; the method and row orders are canonicalized so any input
    permutation renders identical bytes.
    """
    if not results:
        raise MortalisError("no comparison results to plot")
    by_country: dict[str, dict[str, BaselineResult]] = {}
    for r in results:
        by_country.setdefault(r.country, {})[r.method] = r
    for country, methods in by_country.items():
        if "fine_grained" not in methods:
            raise MortalisError(f"{country}: comparison chart needs the "
                                f"fine-grained percentage for ordering")
    countries = sorted(
        by_country,
        key=lambda c: (by_country[c]["fine_grained"].pct_excess, display_name(c)),
    )
    methods = sorted({r.method for r in results}, key=METHOD_ORDER.index)

    left, right, top, bottom = 70.0, 30.0, 64.0, 96.0
    plot_w = width - left - right
    plot_h = height - top - bottom
    pcts = [float(r.pct_excess) * 100 for r in results]
    lo = min(min(pcts), 0.0)
    hi = max(max(pcts), 0.0)
    pad = 0.08 * (hi - lo) if hi > lo else 1.0
    lo, hi = lo - pad, hi + pad

    def sx(index: int) -> float:
        if len(countries) == 1:
            return left + plot_w / 2
        return left + index * plot_w / (len(countries) - 1)

    def sy(pct: float) -> float:
        return top + (hi - pct) / (hi - lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace">',
        f'<text x="{_c(width / 2)}" y="24" text-anchor="middle" font-size="15">'
        f'Percentage excess mortality by method</text>',
    ]

    legend_x = left
    for m in methods:
        parts.append(_marker(m, legend_x + 5, 44.0, ""))
        parts.append(f'<text x="{_c(legend_x + 14)}" y="48" font-size="11" '
                     f'fill="#333333">{escape(METHOD_LABELS[m])}</text>')
        legend_x += 14 + 8 * len(METHOD_LABELS[m]) + 18

    for tick in _nice_ticks(lo, hi):
        y = sy(tick)
        parts.append(f'<line x1="{_c(left)}" y1="{_c(y)}" x2="{_c(width - right)}" '
                     f'y2="{_c(y)}" stroke="#eeeeee" stroke-width="1"/>')
        parts.append(f'<text x="{_c(left - 8)}" y="{_c(y + 4)}" text-anchor="end" '
                     f'font-size="11" fill="#444444">{tick:g}%</text>')

    zero_y = sy(0.0)
    parts.append(f'<line class="zero" x1="{_c(left)}" y1="{_c(zero_y)}" '
                 f'x2="{_c(width - right)}" y2="{_c(zero_y)}" stroke="#888888" '
                 f'stroke-width="1" stroke-dasharray="4 3"/>')

    for i, country in enumerate(countries):
        x = sx(i)
        parts.append(
            f'<text class="country" x="{_c(x)}" y="{_c(height - bottom + 16)}" '
            f'font-size="10" fill="#333333" text-anchor="end" '
            f'transform="rotate(-45 {_c(x)} {_c(height - bottom + 16)})">'
            f'{escape(display_name(country))}</text>'
        )
        for m in methods:
            r = by_country[country].get(m)
            if r is None:
                continue
            pct = float(r.pct_excess) * 100
            parts.append(_marker(m, x, sy(pct), fmt_pct(r.pct_excess)))

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_excess_bar_chart(results: Sequence[ExcessResult], width: int = 860,
                            height: int = 520) -> str:
    """Sorted bar chart of percentage excess (substitute for a map view)."""
    if not results:
        raise MortalisError("no results to plot")
    ordered = sorted(results, key=lambda r: (r.pct_excess, display_name(r.country)))
    pcts = [float(r.pct_excess) * 100 for r in ordered]
    lo, hi = min(min(pcts), 0.0), max(max(pcts), 0.0)
    pad = 0.08 * (hi - lo) if hi > lo else 1.0
    lo, hi = lo - pad, hi + pad
    left, right, top, bottom = 70.0, 30.0, 46.0, 96.0
    plot_w = width - left - right
    plot_h = height - top - bottom
    slot = plot_w / len(ordered)
    bar_w = slot * 0.7

    def sy(pct: float) -> float:
        return top + (hi - pct) / (hi - lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace">',
        f'<text x="{_c(width / 2)}" y="24" text-anchor="middle" font-size="15">'
        f'Percentage excess mortality</text>',
    ]
    for tick in _nice_ticks(lo, hi):
        y = sy(tick)
        parts.append(f'<line x1="{_c(left)}" y1="{_c(y)}" x2="{_c(width - right)}" '
                     f'y2="{_c(y)}" stroke="#eeeeee" stroke-width="1"/>')
        parts.append(f'<text x="{_c(left - 8)}" y="{_c(y + 4)}" text-anchor="end" '
                     f'font-size="11" fill="#444444">{tick:g}%</text>')
    zero_y = sy(0.0)
    for i, (r, pct) in enumerate(zip(ordered, pcts)):
        x = left + i * slot + (slot - bar_w) / 2
        y = sy(max(pct, 0.0))
        h = abs(sy(pct) - zero_y)
        color = "#cc3311" if pct >= 0 else "#0077bb"
        parts.append(f'<rect class="bar" x="{_c(x)}" y="{_c(y)}" '
                     f'width="{_c(bar_w)}" height="{_c(h)}" fill="{color}"/>')
        label_x = x + bar_w / 2
        parts.append(
            f'<text class="country" x="{_c(label_x)}" '
            f'y="{_c(height - bottom + 16)}" font-size="10" fill="#333333" '
            f'text-anchor="end" transform="rotate(-45 {_c(label_x)} '
            f'{_c(height - bottom + 16)})">{escape(display_name(r.country))}</text>'
        )
    parts.append(f'<line class="zero" x1="{_c(left)}" y1="{_c(zero_y)}" '
                 f'x2="{_c(width - right)}" y2="{_c(zero_y)}" stroke="#333333" '
                 f'stroke-width="1"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
