"""Country codes: ISO 3166-1 alpha-3 keys with HMD aliases and display names.

The cache and all domain records are keyed by alpha-3 codes; HMD file variants
for total national populations are folded onto the plain code so that life
tables, pyramids and death tolls join on a single key.
"""

from __future__ import annotations

# HMD uses extended codes for some national-total series.
HMD_ALIASES = {
    "DEUTNP": "DEU",
    "FRATNP": "FRA",
    "FRACNP": "FRA",
    "GBR_NP": "GBR",
    "NZL_NP": "NZL",
}

DISPLAY_NAMES = {
    "AUS": "Australia",
    "AUT": "Austria",
    "BEL": "Belgium",
    "BGR": "Bulgaria",
    "CAN": "Canada",
    "CHE": "Switzerland",
    "CZE": "Czechia",
    "DEU": "Germany",
    "DNK": "Denmark",
    "ESP": "Spain",
    "FIN": "Finland",
    "FRA": "France",
    "GBR": "UK",
    "HKG": "Hong Kong",
    "HRV": "Croatia",
    "HUN": "Hungary",
    "IRL": "Ireland",
    "ISL": "Iceland",
    "ITA": "Italy",
    "JPN": "Japan",
    "KOR": "South Korea",
    "LTU": "Lithuania",
    "LUX": "Luxembourg",
    "NLD": "Netherlands",
    "NOR": "Norway",
    "NZL": "New Zealand",
    "PRT": "Portugal",
    "SWE": "Sweden",
    "TWN": "Taiwan",
    "USA": "USA",
}


def normalize_country(code: str) -> str:
    """Map a country token (alpha-3 or HMD variant) to its canonical code."""
    token = code.strip().upper()
    return HMD_ALIASES.get(token, token)


def display_name(code: str) -> str:
    """Human-readable country name; falls back to the code itself."""
    return DISPLAY_NAMES.get(normalize_country(code), normalize_country(code))
