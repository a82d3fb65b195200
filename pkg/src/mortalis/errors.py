"""Exception taxonomy shared by all mortalis modules.

Every error raised on bad data or bad requests derives from MortalisError so
callers (and the CLI) can distinguish data problems (exit 1) from bugs.
"""

from __future__ import annotations


class MortalisError(Exception):
    """Base class for all mortalis data and validation errors."""


# --- text ingestion -----------------------------------------------------

class MalformedHeader(MortalisError):
    """Input file does not carry the expected column-header line."""


class AgeGapError(MortalisError):
    """Ages do not form exactly the contiguous set 0..110."""


class ProbabilityRangeError(MortalisError):
    """A death probability lies outside [0, 1]."""


class PeriodParseError(MortalisError):
    """A Year token is neither a calendar year nor a year range."""


class NegativeCountError(MortalisError):
    """A population count is negative."""


# --- deaths CSV ---------------------------------------------------------

class MissingColumnError(MortalisError):
    """Deaths CSV header does not match the documented schema."""


class NonIntegerDeathsError(MortalisError):
    """A death toll is not a non-negative integer."""


class DuplicateKeyError(MortalisError):
    """The same (country, year) appears more than once."""


# --- dataset assembly ---------------------------------------------------

class IncompleteDatasetError(MortalisError):
    """A country dataset cannot be assembled; lists exactly what is missing.

    ``missing`` holds (kind, key) pairs, e.g. ("pyramid", 2021) or
    ("life_table", "2015-2019").
    """

    def __init__(self, country: str, missing: list[tuple[str, object]]):
        self.country = country
        self.missing = list(missing)
        pieces = ", ".join(f"{kind} {key}" for kind, key in self.missing)
        super().__init__(f"{country}: missing {pieces}")


# --- estimation ---------------------------------------------------------

class AxisMismatchError(MortalisError):
    """Hazard and population vectors do not share the 0..110 age axis."""


class EmptyReferenceError(MortalisError):
    """No reference-year data was supplied."""


class YearCoverageError(MortalisError):
    """Observations or configuration do not cover the requested years."""


class DegenerateFitError(MortalisError):
    """Trend fit requested with fewer than two distinct reference years."""


class UnknownMethodError(MortalisError):
    """An unrecognized comparison method was requested."""
