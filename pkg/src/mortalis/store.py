"""Validated country datasets and the on-disk cache.

The cache is a directory of plain CSV files (one per record class) with a
provenance column carrying the source filename and a content hash, so
re-ingesting identical inputs rewrites identical bytes. Ingestion takes an
exclusive lock on the cache directory; computations read an immutable
snapshot and never touch the lock.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path

from filelock import FileLock

from .countries import normalize_country
from .errors import (
    DuplicateKeyError,
    EmptyReferenceError,
    IncompleteDatasetError,
    MissingColumnError,
    NonIntegerDeathsError,
    UnknownMethodError,
)
from .hmd import N_AGES, LifeTable, LifeTableRow, PopulationPyramid

EXTERNAL_METHODS = ("wmd", "economist", "ihme", "who", "levitt")

_DEATHS_HEADERS = ("country,year,deaths", "country,year,deaths,covid_deaths")
_EXTERNAL_HEADER = "method,country,excess_absolute"


@dataclass(frozen=True)
class MortalityObservation:
    """Observed all-cause death toll for one country-year.

    ``covid_deaths`` is pass-through reference data; it never enters any
    computation.
    """

    country: str
    year: int
    observed_deaths: int
    covid_deaths: int | None = None

    def __post_init__(self):
        if self.observed_deaths < 0:
            raise NonIntegerDeathsError(
                f"{self.country} {self.year}: negative deaths {self.observed_deaths}"
            )
        if self.covid_deaths is not None and self.covid_deaths < 0:
            raise NonIntegerDeathsError(
                f"{self.country} {self.year}: negative covid_deaths {self.covid_deaths}"
            )


@dataclass(frozen=True)
class ExternalEstimate:
    """Published excess-mortality figure from another study (pass-through)."""

    method: str
    country: str
    excess_absolute: Decimal

    def __post_init__(self):
        if self.method not in EXTERNAL_METHODS:
            raise UnknownMethodError(
                f"external method {self.method!r} not in {EXTERNAL_METHODS}"
            )


@dataclass(frozen=True)
class CountryDataset:
    """Everything the estimators need for one country.

    ``yearly_tables`` holds the K single-year reference tables;
    ``multi_year_table`` the pooled reference table (marked ``pooled_synthetic``
    when it was synthesized as the per-age mean of the yearly tables because
    no table covering the window exactly was ingested). Pyramids and
    observations cover reference plus target years.
    """

    country: str
    reference: tuple[int, int]
    targets: tuple[int, ...]
    multi_year_table: LifeTable
    yearly_tables: dict[int, LifeTable]
    pyramids: dict[int, PopulationPyramid]
    observations: dict[int, MortalityObservation]
    pooled_synthetic: bool = False

    def __post_init__(self):
        start, end = self.reference
        if sorted(self.yearly_tables) != list(range(start, end + 1)):
            raise IncompleteDatasetError(
                self.country,
                [("life_table", y) for y in range(start, end + 1)
                 if y not in self.yearly_tables],
            )

    @property
    def reference_years(self) -> tuple[int, ...]:
        return tuple(range(self.reference[0], self.reference[1] + 1))


def parse_deaths_csv(text: str) -> list[MortalityObservation]:
    """Parse the deaths CSV (header ``country,year,deaths[,covid_deaths]``)."""
    lines = text.splitlines()
    if not lines or lines[0].strip() not in _DEATHS_HEADERS:
        raise MissingColumnError(
            f"deaths CSV must start with one of {_DEATHS_HEADERS}"
        )
    has_covid = lines[0].strip() == _DEATHS_HEADERS[1]
    reader = csv.reader(io.StringIO(text))
    next(reader)
    seen: set[tuple[str, int]] = set()
    observations = []
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        expected = 4 if has_covid else 3
        if len(row) != expected:
            raise MissingColumnError(f"row {row!r}: expected {expected} fields")
        country = normalize_country(row[0])
        year = _parse_int(row[1], "year")
        deaths = _parse_int(row[2], "deaths")
        covid = None
        if has_covid and row[3].strip():
            covid = _parse_int(row[3], "covid_deaths")
        key = (country, year)
        if key in seen:
            raise DuplicateKeyError(f"duplicate observation for {country} {year}")
        seen.add(key)
        observations.append(
            MortalityObservation(country=country, year=year,
                                 observed_deaths=deaths, covid_deaths=covid)
        )
    return observations


def parse_external_csv(text: str) -> list[ExternalEstimate]:
    """Parse the external-estimates CSV (``method,country,excess_absolute``)."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != _EXTERNAL_HEADER:
        raise MissingColumnError(f"external CSV must start with {_EXTERNAL_HEADER!r}")
    reader = csv.reader(io.StringIO(text))
    next(reader)
    seen: set[tuple[str, str]] = set()
    estimates = []
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise MissingColumnError(f"row {row!r}: expected 3 fields")
        method = row[0].strip().lower()
        country = normalize_country(row[1])
        try:
            excess = Decimal(row[2].strip())
        except InvalidOperation:
            raise NonIntegerDeathsError(f"bad excess value {row[2]!r}") from None
        if (method, country) in seen:
            raise DuplicateKeyError(f"duplicate external row {method} {country}")
        seen.add((method, country))
        estimates.append(ExternalEstimate(method=method, country=country,
                                          excess_absolute=excess))
    return estimates


def _parse_int(token: str, column: str) -> int:
    token = token.strip()
    if not token.lstrip("-").isdigit():
        raise NonIntegerDeathsError(f"{column} value {token!r} is not an integer")
    return int(token)


def provenance_tag(source_name: str, content: str) -> str:
    digest = hashlib.sha256(content.encode("utf-8")).hexdigest()[:12]
    return f"{source_name}@sha256:{digest}"


@dataclass
class StoreSnapshot:
    """Immutable view of the cache for lock-free computation."""

    life_tables: dict[tuple[str, int, int], LifeTable] = field(default_factory=dict)
    pyramids: dict[tuple[str, int], PopulationPyramid] = field(default_factory=dict)
    observations: dict[tuple[str, int], MortalityObservation] = field(default_factory=dict)
    externals: dict[tuple[str, str], ExternalEstimate] = field(default_factory=dict)
    provenance: dict[tuple, str] = field(default_factory=dict)

    def countries(self) -> list[str]:
        codes = {key[0] for key in self.life_tables}
        codes |= {key[0] for key in self.pyramids}
        codes |= {key[0] for key in self.observations}
        return sorted(codes)


class DataStore:
    """CSV-file cache under a data directory; single writer, many readers."""

    def __init__(self, root: Path | str):
        self.root = Path(root)

    def _lock(self) -> FileLock:
        self.root.mkdir(parents=True, exist_ok=True)
        return FileLock(str(self.root / ".lock"))

    # -- writes (exclusive lock) ------------------------------------------

    def put_life_tables(self, tables: list[LifeTable], source: str) -> int:
        with self._lock():
            snapshot = self.load()
            for table in tables:
                key = (table.country, table.period_start, table.period_end)
                snapshot.life_tables[key] = table
                snapshot.provenance[("life_table",) + key] = source
            self._write_life_tables(snapshot)
        return len(tables)

    def put_pyramids(self, pyramids: list[PopulationPyramid], source: str) -> int:
        with self._lock():
            snapshot = self.load()
            for pyramid in pyramids:
                key = (pyramid.country, pyramid.year)
                snapshot.pyramids[key] = pyramid
                snapshot.provenance[("pyramid",) + key] = source
            self._write_pyramids(snapshot)
        return len(pyramids)

    def put_observations(self, observations: list[MortalityObservation], source: str) -> int:
        with self._lock():
            snapshot = self.load()
            for obs in observations:
                key = (obs.country, obs.year)
                snapshot.observations[key] = obs
                snapshot.provenance[("deaths",) + key] = source
            self._write_observations(snapshot)
        return len(observations)

    def put_externals(self, estimates: list[ExternalEstimate], source: str) -> int:
        with self._lock():
            snapshot = self.load()
            for est in estimates:
                key = (est.method, est.country)
                snapshot.externals[key] = est
                snapshot.provenance[("external",) + key] = source
            self._write_externals(snapshot)
        return len(estimates)

    # -- reads (lock-free) -------------------------------------------------

    def load(self) -> StoreSnapshot:
        snapshot = StoreSnapshot()
        self._read_life_tables(snapshot)
        self._read_pyramids(snapshot)
        self._read_observations(snapshot)
        self._read_externals(snapshot)
        return snapshot

    # -- file plumbing -------------------------------------------------------

    def _write_csv(self, name: str, header: list[str], rows: list[list[str]]):
        path = self.root / name
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)

    def _read_csv(self, name: str) -> list[dict[str, str]]:
        path = self.root / name
        if not path.exists():
            return []
        with path.open("r", encoding="utf-8", newline="") as fh:
            return list(csv.DictReader(fh))

    def _write_life_tables(self, snapshot: StoreSnapshot):
        header = ["country", "period_start", "period_end", "age",
                  "qx", "mx", "ax", "lx", "dx", "Lx", "Tx", "ex", "source"]
        rows = []
        for key in sorted(snapshot.life_tables):
            table = snapshot.life_tables[key]
            source = snapshot.provenance.get(("life_table",) + key, "")
            for row in table.rows:
                rows.append([
                    table.country, str(table.period_start), str(table.period_end),
                    str(row.age), str(row.qx),
                    _opt(row.mx), _opt(row.ax), _opt(row.lx), _opt(row.dx),
                    _opt(row.Lx), _opt(row.Tx), _opt(row.ex), source,
                ])
        self._write_csv("life_tables.csv", header, rows)

    def _read_life_tables(self, snapshot: StoreSnapshot):
        grouped: dict[tuple[str, int, int], dict] = {}
        for record in self._read_csv("life_tables.csv"):
            key = (record["country"], int(record["period_start"]), int(record["period_end"]))
            entry = grouped.setdefault(key, {"rows": {}, "source": record["source"]})
            age = int(record["age"])
            entry["rows"][age] = LifeTableRow(
                age=age,
                qx=Decimal(record["qx"]),
                mx=_opt_decimal(record["mx"]), ax=_opt_decimal(record["ax"]),
                lx=_opt_decimal(record["lx"]), dx=_opt_decimal(record["dx"]),
                Lx=_opt_decimal(record["Lx"]), Tx=_opt_decimal(record["Tx"]),
                ex=_opt_decimal(record["ex"]),
            )
        for key, entry in grouped.items():
            country, start, end = key
            rows = tuple(entry["rows"][a] for a in sorted(entry["rows"]))
            snapshot.life_tables[key] = LifeTable(
                country=country, period_start=start, period_end=end, rows=rows
            )
            snapshot.provenance[("life_table",) + key] = entry["source"]

    def _write_pyramids(self, snapshot: StoreSnapshot):
        header = ["country", "year", "age", "count", "source"]
        rows = []
        for key in sorted(snapshot.pyramids):
            pyramid = snapshot.pyramids[key]
            source = snapshot.provenance.get(("pyramid",) + key, "")
            for age, count in enumerate(pyramid.counts):
                rows.append([pyramid.country, str(pyramid.year), str(age),
                             str(count), source])
        self._write_csv("pyramids.csv", header, rows)

    def _read_pyramids(self, snapshot: StoreSnapshot):
        grouped: dict[tuple[str, int], dict] = {}
        for record in self._read_csv("pyramids.csv"):
            key = (record["country"], int(record["year"]))
            entry = grouped.setdefault(key, {"counts": {}, "source": record["source"]})
            entry["counts"][int(record["age"])] = Decimal(record["count"])
        for key, entry in grouped.items():
            counts = tuple(entry["counts"][a] for a in range(N_AGES))
            snapshot.pyramids[key] = PopulationPyramid(
                country=key[0], year=key[1], counts=counts
            )
            snapshot.provenance[("pyramid",) + key] = entry["source"]

    def _write_observations(self, snapshot: StoreSnapshot):
        header = ["country", "year", "deaths", "covid_deaths", "source"]
        rows = []
        for key in sorted(snapshot.observations):
            obs = snapshot.observations[key]
            source = snapshot.provenance.get(("deaths",) + key, "")
            covid = "" if obs.covid_deaths is None else str(obs.covid_deaths)
            rows.append([obs.country, str(obs.year), str(obs.observed_deaths),
                         covid, source])
        self._write_csv("deaths.csv", header, rows)

    def _read_observations(self, snapshot: StoreSnapshot):
        for record in self._read_csv("deaths.csv"):
            key = (record["country"], int(record["year"]))
            covid = int(record["covid_deaths"]) if record["covid_deaths"] else None
            snapshot.observations[key] = MortalityObservation(
                country=key[0], year=key[1],
                observed_deaths=int(record["deaths"]), covid_deaths=covid,
            )
            snapshot.provenance[("deaths",) + key] = record["source"]

    def _write_externals(self, snapshot: StoreSnapshot):
        header = ["method", "country", "excess_absolute", "source"]
        rows = []
        for key in sorted(snapshot.externals):
            est = snapshot.externals[key]
            source = snapshot.provenance.get(("external",) + key, "")
            rows.append([est.method, est.country, str(est.excess_absolute), source])
        self._write_csv("externals.csv", header, rows)

    def _read_externals(self, snapshot: StoreSnapshot):
        for record in self._read_csv("externals.csv"):
            key = (record["method"], record["country"])
            snapshot.externals[key] = ExternalEstimate(
                method=key[0], country=key[1],
                excess_absolute=Decimal(record["excess_absolute"]),
            )
            snapshot.provenance[("external",) + key] = record["source"]


def _opt(value: Decimal | None) -> str:
    return "" if value is None else str(value)


def _opt_decimal(token: str) -> Decimal | None:
    return Decimal(token) if token else None


def pooled_reference_table(yearly_tables: dict[int, LifeTable],
                           reference: tuple[int, int]) -> LifeTable:
    """Synthesize a pooled reference table as the per-age mean of yearly qx.

    Expected deaths are linear in the hazards, so this equals averaging the
    single-year expected estimates; used when no ingested table covers the
    reference window exactly (e.g. a 2017-2019 window against HMD's fixed
    5-year tables).
    """
    years = sorted(yearly_tables)
    if not years:
        raise EmptyReferenceError("no yearly tables to pool")
    k = Decimal(len(years))
    country = yearly_tables[years[0]].country
    rows = []
    for age in range(N_AGES):
        mean_qx = sum((yearly_tables[y].rows[age].qx for y in years), Decimal(0)) / k
        rows.append(LifeTableRow(age=age, qx=mean_qx))
    return LifeTable(country=country, period_start=reference[0],
                     period_end=reference[1], rows=tuple(rows))


def assemble_dataset(snapshot: StoreSnapshot, country: str,
                     reference: tuple[int, int], targets: list[int]) -> CountryDataset:
    """Build a complete CountryDataset or report exactly what is missing."""
    country = normalize_country(country)
    start, end = reference
    if start > end:
        raise EmptyReferenceError(f"reference {start}-{end} reversed")
    ref_years = list(range(start, end + 1))
    needed_years = ref_years + [y for y in targets if y not in ref_years]

    missing: list[tuple[str, object]] = []
    yearly = {}
    for year in ref_years:
        table = snapshot.life_tables.get((country, year, year))
        if table is None:
            missing.append(("life_table", year))
        else:
            yearly[year] = table
    pyramids = {}
    for year in needed_years:
        pyramid = snapshot.pyramids.get((country, year))
        if pyramid is None:
            missing.append(("pyramid", year))
        else:
            pyramids[year] = pyramid
    observations = {}
    for year in needed_years:
        obs = snapshot.observations.get((country, year))
        if obs is None:
            missing.append(("deaths", year))
        else:
            observations[year] = obs
    if missing:
        raise IncompleteDatasetError(country, missing)

    multi = snapshot.life_tables.get((country, start, end))
    synthetic = multi is None
    if synthetic:
        multi = pooled_reference_table(yearly, reference)
    return CountryDataset(
        country=country,
        reference=(start, end),
        targets=tuple(targets),
        multi_year_table=multi,
        yearly_tables=yearly,
        pyramids=pyramids,
        observations=observations,
        pooled_synthetic=synthetic,
    )
