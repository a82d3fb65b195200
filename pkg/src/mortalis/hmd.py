"""Parsers for Human Mortality Database plain-text files.

Two layouts are understood, both whitespace-delimited with a free-form
metadata header followed by a column-header line:

* period life tables (``Year Age mx qx ax lx dx Lx Tx ex``), where Year is a
  single year (``2017``) or a range (``2015-2019``) and Age runs 0..109 plus
  the open interval ``110+``;
* population counts (``Year Age Female Male Total``), where Year may carry a
  ``+``/``-`` suffix marking territorial-change duplicates.

Values are kept as decimals exactly as printed (missing values ``.`` become
None), so serialize(parse(text)) re-parses to an identical value.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation

import numpy as np

from .countries import normalize_country
from .errors import (
    AgeGapError,
    MalformedHeader,
    MortalisError,
    NegativeCountError,
    PeriodParseError,
    ProbabilityRangeError,
)

log = logging.getLogger(__name__)

MAX_AGE = 110
N_AGES = MAX_AGE + 1

_LT_COLUMNS = ("Year", "Age", "mx", "qx", "ax", "lx", "dx", "Lx", "Tx", "ex")
_POP_COLUMNS = ("Year", "Age", "Female", "Male", "Total")
_AUX_FIELDS = ("mx", "ax", "lx", "dx", "Lx", "Tx", "ex")

_LT_YEAR_RE = re.compile(r"^(\d{4})(?:-(\d{4}))?$")
_POP_YEAR_RE = re.compile(r"^(\d{4})([+-])?$")
_AGE_RE = re.compile(r"^(\d+)\+?$")


@dataclass(frozen=True)
class LifeTableRow:
    """One age of a period life table; only qx feeds the estimator."""

    age: int
    qx: Decimal
    mx: Decimal | None = None
    ax: Decimal | None = None
    lx: Decimal | None = None
    dx: Decimal | None = None
    Lx: Decimal | None = None
    Tx: Decimal | None = None
    ex: Decimal | None = None

    def __post_init__(self):
        if not 0 <= self.age <= MAX_AGE:
            raise AgeGapError(f"age {self.age} outside 0..{MAX_AGE}")
        if not Decimal(0) <= self.qx <= Decimal(1):
            raise ProbabilityRangeError(f"qx={self.qx} at age {self.age} outside [0, 1]")


@dataclass(frozen=True)
class LifeTable:
    """Validated period life table: exactly one row per age 0..110."""

    country: str
    period_start: int
    period_end: int
    rows: tuple[LifeTableRow, ...]

    def __post_init__(self):
        if self.period_start > self.period_end:
            raise PeriodParseError(
                f"period {self.period_start}-{self.period_end} reversed"
            )
        ages = [row.age for row in self.rows]
        if ages != list(range(N_AGES)):
            raise AgeGapError(
                f"{self.country} {self.period_start}-{self.period_end}: "
                f"ages not contiguous 0..{MAX_AGE} (got {len(ages)} rows)"
            )

    @property
    def period_label(self) -> str:
        if self.period_start == self.period_end:
            return str(self.period_start)
        return f"{self.period_start}-{self.period_end}"

    @property
    def warnings(self) -> tuple[str, ...]:
        # Some HMD tables close the open interval below certainty; keep the
        # source value but flag it.
        notes = []
        if self.rows[MAX_AGE].qx < 1:
            notes.append(f"q_110 = {self.rows[MAX_AGE].qx} < 1 in source table")
        return tuple(notes)

    def qx_values(self) -> tuple[Decimal, ...]:
        return tuple(row.qx for row in self.rows)

    def qx_array(self) -> np.ndarray:
        return np.array([float(row.qx) for row in self.rows])


@dataclass(frozen=True)
class PopulationPyramid:
    """Population by single year of age at January 1 of ``year``."""

    country: str
    year: int
    counts: tuple[Decimal, ...]

    def __post_init__(self):
        if len(self.counts) != N_AGES:
            raise AgeGapError(
                f"{self.country} {self.year}: {len(self.counts)} ages, want {N_AGES}"
            )
        for age, count in enumerate(self.counts):
            if count < 0:
                raise NegativeCountError(
                    f"{self.country} {self.year}: count {count} at age {age}"
                )
        if sum(self.counts) <= 0:
            raise NegativeCountError(f"{self.country} {self.year}: empty population")

    @property
    def total(self) -> Decimal:
        return sum(self.counts, Decimal(0))

    def counts_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.counts])


@dataclass
class _RawRow:
    line_no: int
    tokens: list[str]


def _split_header(text: str, columns: tuple[str, ...], what: str) -> list[_RawRow]:
    """Locate the column-header line and return the data rows after it."""
    lines = text.splitlines()
    header_at = None
    for i, line in enumerate(lines):
        if line.split() == list(columns):
            header_at = i
            break
    if header_at is None:
        raise MalformedHeader(f"no {what} column header ({' '.join(columns)}) found")
    rows = []
    for i, line in enumerate(lines[header_at + 1 :], start=header_at + 2):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != len(columns):
            raise MortalisError(
                f"line {i}: expected {len(columns)} columns, got {len(tokens)}"
            )
        rows.append(_RawRow(i, tokens))
    return rows


def _parse_age(token: str, line_no: int) -> int:
    m = _AGE_RE.match(token)
    if not m:
        raise AgeGapError(f"line {line_no}: bad age token {token!r}")
    return int(m.group(1))


def _parse_decimal(token: str, line_no: int, column: str) -> Decimal | None:
    if token == ".":
        return None
    try:
        return Decimal(token)
    except InvalidOperation:
        raise MortalisError(f"line {line_no}: bad {column} value {token!r}") from None


def parse_life_table(text: str, expected_country: str) -> list[LifeTable]:
    """Parse an HMD life-table file into one LifeTable per distinct Year.

    Year groups whose qx column contains the missing marker ``.`` are dropped
    with a logged warning; auxiliary columns may be missing freely.
    """
    country = normalize_country(expected_country)
    groups: dict[tuple[int, int], list[_RawRow]] = {}
    for row in _split_header(text, _LT_COLUMNS, "life table"):
        m = _LT_YEAR_RE.match(row.tokens[0])
        if not m:
            raise PeriodParseError(f"line {row.line_no}: bad Year token {row.tokens[0]!r}")
        start = int(m.group(1))
        end = int(m.group(2)) if m.group(2) else start
        groups.setdefault((start, end), []).append(row)

    tables = []
    for (start, end), rows in groups.items():
        incomplete = [r for r in rows if r.tokens[3] == "."]
        if incomplete:
            log.warning(
                "%s %s-%s: dropping table, qx missing on %d row(s)",
                country, start, end, len(incomplete),
            )
            continue
        built = {}
        for raw in rows:
            age = _parse_age(raw.tokens[1], raw.line_no)
            if age in built:
                raise AgeGapError(f"line {raw.line_no}: duplicate age {age}")
            qx = _parse_decimal(raw.tokens[3], raw.line_no, "qx")
            aux = {
                name: _parse_decimal(raw.tokens[_LT_COLUMNS.index(name)], raw.line_no, name)
                for name in _AUX_FIELDS
            }
            built[age] = LifeTableRow(age=age, qx=qx, **aux)
        ordered = tuple(built[a] for a in sorted(built))
        table = LifeTable(country=country, period_start=start, period_end=end, rows=ordered)
        for note in table.warnings:
            log.warning("%s %s: %s", country, table.period_label, note)
        tables.append(table)
    tables.sort(key=lambda t: (t.period_start, t.period_end))
    return tables


def parse_population(text: str, expected_country: str) -> list[PopulationPyramid]:
    """Parse an HMD population file into one pyramid per retained year.

    For territorial-change duplicates (``2000-`` and ``2000+``) the ``+``
    variant wins: it is the count valid as the Jan-1 population going
    forward. Ages above 110 are folded into the open interval at 110.
    """
    country = normalize_country(expected_country)
    by_year: dict[int, dict[str, dict[int, Decimal]]] = {}
    for row in _split_header(text, _POP_COLUMNS, "population"):
        m = _POP_YEAR_RE.match(row.tokens[0])
        if not m:
            raise PeriodParseError(f"line {row.line_no}: bad Year token {row.tokens[0]!r}")
        year = int(m.group(1))
        variant = m.group(2) or ""
        age = _parse_age(row.tokens[1], row.line_no)
        # Female/Male are validated but not retained; analysis uses Total.
        _parse_decimal(row.tokens[2], row.line_no, "Female")
        _parse_decimal(row.tokens[3], row.line_no, "Male")
        total = _parse_decimal(row.tokens[4], row.line_no, "Total")
        if total is None:
            raise NegativeCountError(f"line {row.line_no}: Total is missing")
        if total < 0:
            raise NegativeCountError(f"line {row.line_no}: Total {total} negative")
        ages = by_year.setdefault(year, {}).setdefault(variant, {})
        fold = min(age, MAX_AGE)
        ages[fold] = ages.get(fold, Decimal(0)) + total

    pyramids = []
    for year in sorted(by_year):
        variants = by_year[year]
        if "+" in variants:
            ages = variants["+"]
        elif "" in variants:
            ages = variants[""]
        else:
            ages = variants["-"]
        if sorted(ages) != list(range(N_AGES)):
            missing = sorted(set(range(N_AGES)) - set(ages))
            raise AgeGapError(f"{country} {year}: missing ages {missing[:5]}...")
        counts = tuple(ages[a] for a in range(N_AGES))
        pyramids.append(PopulationPyramid(country=country, year=year, counts=counts))
    return pyramids


# --- serialization (round-trip support for the cache and tests) ----------

def _fmt(value: Decimal | None) -> str:
    return "." if value is None else str(value)


def serialize_life_tables(tables: list[LifeTable]) -> str:
    """Emit life tables in the HMD text layout; value-level round-trip safe."""
    if not tables:
        raise MortalisError("nothing to serialize")
    country = tables[0].country
    span = tables[0].period_end - tables[0].period_start + 1
    kind = f"{span}x1"
    out = [f"{country}, Life tables (period {kind}), Total\tLast modified: mortalis", ""]
    out.append("  " + "  ".join(_LT_COLUMNS))
    for table in tables:
        for row in table.rows:
            age = f"{row.age}+" if row.age == MAX_AGE else str(row.age)
            out.append(
                "  ".join(
                    [
                        table.period_label,
                        age,
                        _fmt(row.mx),
                        _fmt(row.qx),
                        _fmt(row.ax),
                        _fmt(row.lx),
                        _fmt(row.dx),
                        _fmt(row.Lx),
                        _fmt(row.Tx),
                        _fmt(row.ex),
                    ]
                )
            )
    return "\n".join(out) + "\n"


def serialize_population(pyramids: list[PopulationPyramid]) -> str:
    """Emit population counts in the HMD text layout (Total column only)."""
    if not pyramids:
        raise MortalisError("nothing to serialize")
    country = pyramids[0].country
    out = [f"{country}, Population size (1-year)\tLast modified: mortalis", ""]
    out.append("  " + "  ".join(_POP_COLUMNS))
    for pyramid in pyramids:
        for age, count in enumerate(pyramid.counts):
            label = f"{age}+" if age == MAX_AGE else str(age)
            out.append("  ".join([str(pyramid.year), label, ".", ".", str(count)]))
    return "\n".join(out) + "\n"
