"""Command-line front end: ingest, compute, compare, validate, report.

Exit codes: 0 success, 1 data or validation failure, 2 usage error.
Per-country work runs in a thread pool (``--jobs``); outputs are gathered
and written in canonical alphabetical order, so the emitted bytes do not
depend on scheduling.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import report as report_mod
from .baselines import (
    COMPUTED_METHODS,
    EXTERNAL_METHODS,
    StratumScheme,
    compare_methods,
)
from .countries import normalize_country
from .errors import MortalisError, UnknownMethodError, YearCoverageError
from .estimator import run_country
from .hmd import parse_life_table, parse_population
from .store import (
    DataStore,
    assemble_dataset,
    parse_deaths_csv,
    parse_external_csv,
    provenance_tag,
)
from .validation import render_report, run_validation

DEFAULT_REFERENCE = (2015, 2019)
DEFAULT_TARGETS = (2020, 2021)

METHOD_ALIASES = {
    "raw": "raw_mean",
    "trend": "linear_trend",
    "strata": "strata",
    "fine": "fine_grained",
}


@dataclass
class RunConfig:
    """Resolved configuration for compute/compare/report commands."""

    data_dir: Path
    output_dir: Path
    countries: list[str] | None  # None means every country in the cache
    reference: tuple[int, int] = DEFAULT_REFERENCE
    targets: tuple[int, ...] = DEFAULT_TARGETS
    pooling: str = "both"
    include_age_zero: bool = False
    strata: tuple[int, ...] | None = None
    jobs: int = 0
    lenient: bool = False
    methods: list[str] = field(default_factory=lambda: list(COMPUTED_METHODS))
    external: Path | None = None
    strata_reference: tuple[int, int] | None = None

    def validate(self):
        if not self.targets:
            raise YearCoverageError("no target years configured")
        if self.reference[0] > self.reference[1]:
            raise YearCoverageError("reference period reversed")
        ref_years = set(range(self.reference[0], self.reference[1] + 1))
        overlap = ref_years & set(self.targets)
        if overlap:
            raise YearCoverageError(
                f"targets must be disjoint from the reference period "
                f"(overlap: {sorted(overlap)})"
            )
        if self.pooling not in ("per-year", "pooled", "both"):
            raise YearCoverageError(f"unknown pooling mode {self.pooling!r}")


def _parse_year_range(text: str) -> tuple[int, int]:
    parts = text.split("-")
    if len(parts) == 1 and parts[0].isdigit():
        year = int(parts[0])
        return (year, year)
    if len(parts) == 2 and all(p.isdigit() for p in parts):
        return (int(parts[0]), int(parts[1]))
    raise YearCoverageError(f"bad year range {text!r} (want e.g. 2015-2019)")


def _parse_years(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(",") if p)
    except ValueError:
        raise YearCoverageError(f"bad year list {text!r}") from None


def _years_label(years) -> str:
    years = sorted(years)
    if len(years) == 1:
        return str(years[0])
    return f"{years[0]}-{years[-1]}"


def _load_config_file(path: Path) -> dict:
    with path.open("rb") as fh:
        return tomllib.load(fh)


def _resolve_config(args) -> RunConfig:
    file_cfg = _load_config_file(Path(args.config)) if getattr(args, "config", None) else {}

    def pick(flag_value, key, default):
        if flag_value is not None:
            return flag_value
        if key in file_cfg:
            return file_cfg[key]
        return default

    data_dir = pick(args.data_dir, "data_dir",
                    os.environ.get("MORTALIS_DATA_DIR", "mortalis_data"))
    output_dir = pick(getattr(args, "output_dir", None), "output_dir", "out")
    countries_raw = pick(getattr(args, "countries", None), "countries", "all")
    if isinstance(countries_raw, str):
        countries = None if countries_raw == "all" else [
            normalize_country(c) for c in countries_raw.split(",") if c
        ]
    else:
        countries = [normalize_country(c) for c in countries_raw]
    reference = pick(getattr(args, "reference", None), "reference", None)
    if reference is None:
        reference = DEFAULT_REFERENCE
    elif isinstance(reference, str):
        reference = _parse_year_range(reference)
    else:
        reference = tuple(reference)
    targets = pick(getattr(args, "targets", None), "targets", None)
    if targets is None:
        targets = DEFAULT_TARGETS
    elif isinstance(targets, str):
        targets = _parse_years(targets)
    else:
        targets = tuple(targets)
    strata = pick(getattr(args, "strata", None), "strata", None)
    if isinstance(strata, str):
        strata = tuple(int(p) for p in strata.split(",") if p)
    elif strata is not None:
        strata = tuple(strata)
    strata_reference = pick(getattr(args, "strata_reference", None),
                            "strata_reference", None)
    if isinstance(strata_reference, str):
        strata_reference = _parse_year_range(strata_reference)
    methods_raw = pick(getattr(args, "methods", None), "methods",
                       "fine,raw,trend,strata")
    if isinstance(methods_raw, str):
        methods_raw = [m for m in methods_raw.split(",") if m]
    methods = []
    for m in methods_raw:
        name = METHOD_ALIASES.get(m, m)
        if name not in COMPUTED_METHODS and name not in EXTERNAL_METHODS:
            raise UnknownMethodError(f"unknown method {m!r}")
        methods.append(name)
    external = pick(getattr(args, "external", None), "external", None)

    config = RunConfig(
        data_dir=Path(data_dir),
        output_dir=Path(output_dir),
        countries=countries,
        reference=reference,
        targets=targets,
        pooling=pick(getattr(args, "pooling", None), "pooling", "both"),
        include_age_zero=bool(pick(
            getattr(args, "include_age_zero", None) or None,
            "include_age_zero", False)),
        strata=strata,
        jobs=int(pick(getattr(args, "jobs", None), "jobs", 0) or 0),
        lenient=bool(getattr(args, "lenient", False)),
        methods=methods,
        external=Path(external) if external else None,
        strata_reference=strata_reference,
    )
    config.validate()
    return config


def _write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _run_parallel(worker, items, jobs: int):
    """Apply worker to items; returns ({item: result}, {item: error})."""
    results, errors = {}, {}
    max_workers = jobs if jobs > 0 else (os.cpu_count() or 1)
    if max_workers == 1 or len(items) <= 1:
        for item in items:
            try:
                results[item] = worker(item)
            except MortalisError as err:
                errors[item] = err
        return results, errors
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = {item: pool.submit(worker, item) for item in items}
        for item, future in futures.items():
            try:
                results[item] = future.result()
            except MortalisError as err:
                errors[item] = err
    return results, errors


# --- subcommands ---------------------------------------------------------


def cmd_ingest(args) -> int:
    store = DataStore(Path(args.data_dir or
                           os.environ.get("MORTALIS_DATA_DIR", "mortalis_data")))
    added = 0
    failures = []
    for name in args.files:
        path = Path(name)
        try:
            text = path.read_text(encoding="utf-8")
            source = provenance_tag(path.name, text)
            if args.kind == "lifetable":
                if not args.country:
                    raise MortalisError("--country is required for life tables")
                tables = parse_life_table(text, args.country)
                count = store.put_life_tables(tables, source)
                print(f"{path}: added {count} life table(s)")
            elif args.kind == "population":
                if not args.country:
                    raise MortalisError("--country is required for population files")
                pyramids = parse_population(text, args.country)
                count = store.put_pyramids(pyramids, source)
                print(f"{path}: added {count} pyramid(s)")
            elif args.kind == "deaths":
                observations = parse_deaths_csv(text)
                count = store.put_observations(observations, source)
                print(f"{path}: added {count} observation(s)")
            else:
                estimates = parse_external_csv(text)
                count = store.put_externals(estimates, source)
                print(f"{path}: added {count} external estimate(s)")
            added += count
        except (MortalisError, OSError) as err:
            failures.append((path, err))
            print(f"{path}: rejected ({type(err).__name__}: {err})", file=sys.stderr)
    print(f"ingest complete: {added} record(s) added, {len(failures)} file(s) rejected")
    if failures and not args.lenient:
        return 1
    return 0


def cmd_compute(args, write_stdout_table: bool = True) -> int:
    try:
        config = _resolve_config(args)
    except MortalisError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    store = DataStore(config.data_dir)
    snapshot = store.load()
    countries = config.countries if config.countries is not None else snapshot.countries()
    if not countries:
        print("error: no countries in the cache", file=sys.stderr)
        return 1

    def worker(country: str):
        dataset = assemble_dataset(snapshot, country, config.reference,
                                   list(config.targets))
        run = run_country(dataset, include_pooled=True,
                          include_age_zero=config.include_age_zero)
        series = report_mod.make_country_series(dataset, run)
        return run, series

    results, errors = _run_parallel(worker, sorted(countries), config.jobs)
    for country in sorted(errors):
        print(f"{country}: {errors[country]}", file=sys.stderr)
    if errors and not config.lenient:
        return 1
    if not results:
        print("error: no country produced results", file=sys.stderr)
        return 1

    label = _years_label(config.targets)
    outputs: list[tuple[Path, str]] = []
    pooled_rows = [run.pooled for run, _ in results.values()]
    if config.pooling in ("pooled", "both"):
        outputs.append((config.output_dir / f"table_{label}.md",
                        report_mod.emit_country_table(pooled_rows, "md")))
        outputs.append((config.output_dir / f"table_{label}.csv",
                        report_mod.emit_country_table(pooled_rows, "csv")))
    if config.pooling in ("per-year", "both"):
        for year in sorted(config.targets):
            rows = [next(r for r in run.yearly if r.years == (year,))
                    for run, _ in results.values()]
            outputs.append((config.output_dir / f"table_{year}.md",
                            report_mod.emit_country_table(rows, "md")))
            outputs.append((config.output_dir / f"table_{year}.csv",
                            report_mod.emit_country_table(rows, "csv")))
    for country in sorted(results):
        _, series = results[country]
        outputs.append((config.output_dir / f"{country}_{label}.svg",
                        report_mod.render_country_plot(series)))
    for path, text in outputs:
        _write_text(path, text)

    if write_stdout_table:
        if config.pooling in ("pooled", "both"):
            print(report_mod.emit_country_table(pooled_rows, "md"), end="")
        if config.pooling in ("per-year", "both"):
            for year in sorted(config.targets):
                rows = [next(r for r in run.yearly if r.years == (year,))
                        for run, _ in results.values()]
                print(f"\nYear {year}:")
                print(report_mod.emit_country_table(rows, "md"), end="")
    else:
        bar = report_mod.render_excess_bar_chart(pooled_rows)
        _write_text(config.output_dir / f"excess_bar_{label}.svg", bar)
        for path, _ in outputs:
            print(f"wrote {path}")
        print(f"wrote {config.output_dir / f'excess_bar_{label}.svg'}")
    return 0


def cmd_compare(args) -> int:
    try:
        config = _resolve_config(args)
    except MortalisError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    store = DataStore(config.data_dir)
    snapshot = store.load()
    countries = config.countries if config.countries is not None else snapshot.countries()
    if not countries:
        print("error: no countries in the cache", file=sys.stderr)
        return 1
    external = dict(snapshot.externals)
    if config.external is not None:
        try:
            text = config.external.read_text(encoding="utf-8")
            external = {(e.method, e.country): e for e in parse_external_csv(text)}
        except (MortalisError, OSError) as err:
            print(f"error: {err}", file=sys.stderr)
            return 1
    scheme = StratumScheme(uppers=config.strata) if config.strata else None
    method_reference = {}
    if config.strata_reference is not None:
        method_reference["strata"] = config.strata_reference

    def worker(country: str):
        dataset = assemble_dataset(snapshot, country, config.reference,
                                   list(config.targets))
        return compare_methods(
            dataset, config.methods, external=external, scheme=scheme,
            method_reference=method_reference,
            include_age_zero=config.include_age_zero,
        )

    comparisons, errors = _run_parallel(worker, sorted(countries), config.jobs)
    for country in sorted(errors):
        print(f"{country}: {errors[country]}", file=sys.stderr)
    if errors and not config.lenient:
        return 1
    if not comparisons:
        print("error: no country produced results", file=sys.stderr)
        return 1

    all_results = []
    for country in sorted(comparisons):
        comparison = comparisons[country]
        all_results.extend(comparison.results)
        for missing in comparison.missing_external:
            print(f"{country}: no external estimate for {missing}", file=sys.stderr)

    label = _years_label(config.targets)
    _write_text(config.output_dir / f"comparison_{label}.md",
                report_mod.emit_comparison_table(all_results, "md"))
    _write_text(config.output_dir / f"comparison_{label}.csv",
                report_mod.emit_comparison_table(all_results, "csv"))
    _write_text(config.output_dir / f"comparison_{label}.svg",
                report_mod.render_comparison_chart(all_results))
    print(report_mod.emit_comparison_table(all_results, "md"), end="")
    return 0


def cmd_validate(args) -> int:
    results = run_validation(seed=args.seed, replications=args.replications,
                             self_test_fault=args.self_test_fault)
    print(render_report(results), end="")
    return 0 if all(r.passed for r in results) else 1


def cmd_report(args) -> int:
    return cmd_compute(args, write_stdout_table=False)


# --- argument parsing -----------------------------------------------------


def _add_run_flags(sub, with_methods: bool = False):
    sub.add_argument("--config", help="TOML config file; flags override it")
    sub.add_argument("--data-dir", dest="data_dir",
                     help="cache directory (or MORTALIS_DATA_DIR)")
    sub.add_argument("--output-dir", dest="output_dir", help="report directory")
    sub.add_argument("--countries", help="comma-separated codes, or 'all'")
    sub.add_argument("--reference", help="reference period, e.g. 2015-2019")
    sub.add_argument("--targets", help="target years, e.g. 2020,2021")
    sub.add_argument("--pooling", choices=("per-year", "pooled", "both"))
    sub.add_argument("--include-age-zero", dest="include_age_zero",
                     action="store_const", const=True, default=None,
                     help="add the infant term to the expectation")
    sub.add_argument("--strata", help="stratum upper bounds, e.g. 14,64,74,85,110")
    sub.add_argument("--jobs", type=int, help="parallel country workers")
    sub.add_argument("--lenient", action="store_true",
                     help="report per-country failures but continue")
    if with_methods:
        sub.add_argument("--methods",
                         help="comma list from raw,trend,strata,fine,"
                              "wmd,economist,ihme,who,levitt")
        sub.add_argument("--external", help="external estimates CSV")
        sub.add_argument("--strata-reference", dest="strata_reference",
                         help="reference window for the strata method")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mortalis",
        description="Age-adjusted expected and excess mortality from life "
                    "tables, population pyramids and death tolls.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    ingest = commands.add_parser("ingest", help="parse and cache source files")
    ingest.add_argument("--kind", required=True,
                        choices=("lifetable", "population", "deaths", "external"))
    ingest.add_argument("--country", help="country code for HMD files")
    ingest.add_argument("--data-dir", dest="data_dir")
    ingest.add_argument("--lenient", action="store_true")
    ingest.add_argument("files", nargs="+")
    ingest.set_defaults(func=cmd_ingest)

    compute = commands.add_parser("compute", help="tables and country plots")
    _add_run_flags(compute)
    compute.set_defaults(func=cmd_compute)

    compare = commands.add_parser("compare", help="method comparison harness")
    _add_run_flags(compare, with_methods=True)
    compare.set_defaults(func=cmd_compare)

    validate = commands.add_parser("validate", help="synthetic property suite")
    validate.add_argument("--seed", type=int, default=42)
    validate.add_argument("--replications", type=int, default=2000)
    validate.add_argument("--self-test-fault", dest="self_test_fault",
                          action="store_true",
                          help="deliberately flip one invariant")
    validate.set_defaults(func=cmd_validate)

    report = commands.add_parser("report", help="write all report artifacts")
    _add_run_flags(report)
    report.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MortalisError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
