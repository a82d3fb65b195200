"""A full estimation run on a synthetic country with known ground truth.

Builds a country whose hazards and population are chosen by us, simulates
its observed death tolls, then runs the whole estimator: per-year and
pooled excess, plausible ranges from single-year tables, a Table-1-style
table, and the observed-vs-expected plot with range bands.

Run:  python demos/02_synthetic_country_walkthrough.py
Writes demo output under demo_out/.
"""

from pathlib import Path

from mortalis import (
    GeometricPyramid,
    GompertzHazard,
    SyntheticScenario,
    emit_country_table,
    generate_scenario,
    make_country_series,
    render_country_plot,
    run_country,
)

out = Path("demo_out")
out.mkdir(exist_ok=True)

# Adult mortality roughly doubles every eight years of age; the pyramid
# thins geometrically. Observed tolls are one simulation draw per year.
scenario = SyntheticScenario(
    seed=2020,
    pyramid=GeometricPyramid(base=900, rate=0.96),
    hazard=GompertzHazard(a=3e-4, b=0.085),
)
dataset = generate_scenario(scenario)
print(f"reference years: {dataset.reference_years}")
print(f"target years:    {dataset.targets}")

run = run_country(dataset)
for result in run.yearly:
    print(f"{result.years[0]}: expected {float(result.expected):,.1f}  "
          f"observed {int(result.observed):,}  excess {float(result.excess):+,.1f}")
pooled = run.pooled
print(f"pooled excess {float(pooled.excess):+,.1f} "
      f"({float(pooled.pct_excess):+.1%}), plausible range "
      f"({float(pooled.pct_range[0]):+.1%}, {float(pooled.pct_range[1]):+.1%})")

print()
print(emit_country_table([pooled], "md"))

series = make_country_series(dataset, run)
svg = render_country_plot(series)
(out / "synthetic_country.svg").write_text(svg, encoding="utf-8")
print(f"wrote {out / 'synthetic_country.svg'}")

# The range answers "was mortality outside anything the reference period
# could produce?". Synthetic reference years share one life table, so the
# range collapses to a point and the sharper question is whether the excess
# sits within simulation noise - which, with no shock injected, it must.
from mortalis.validation import pooled_sd

noise = 3 * pooled_sd(dataset)
print(f"range collapsed to a point (identical reference tables): "
      f"{pooled.pct_range[0] == pooled.pct_range[1]}")
print(f"|pooled excess| {abs(float(pooled.excess)):.1f} within 3sd "
      f"({noise:.1f}) of zero: {abs(float(pooled.excess)) <= noise}")
