"""Self-contained property suite over synthetic data.

Backs the ``validate`` CLI subcommand: every property either holds on
generated data with known ground truth or the run fails. The report is a
pure function of (seed, replications), so repeated runs emit identical
bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal

import numpy as np

from .baselines import (
    StratumScheme,
    linear_trend_expected,
    raw_mean_expected,
    strata_expected,
)
from .estimator import (
    adjust_hazards,
    adjust_q,
    expected_bounds,
    expected_deaths,
    expected_from_values,
    run_country,
)
from .hmd import N_AGES, LifeTable, LifeTableRow, PopulationPyramid
from .rng import Xoshiro256StarStar, XoshiroLanes, mix_seed
from .synthetic import (
    GeometricPyramid,
    GompertzHazard,
    SyntheticScenario,
    binomial_sd,
    build_hazard_values,
    generate_scenario,
    simulate_deaths,
)

_REL_TOL = Decimal("1e-9")


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    detail: str


def _rel_close(a: Decimal, b: Decimal) -> bool:
    scale = max(abs(a), abs(b), Decimal(1))
    return abs(a - b) / scale <= _REL_TOL


def _table_from_q(q, country="SYN", start=2015, end=2015) -> LifeTable:
    rows = tuple(LifeTableRow(age=x, qx=Decimal(q[x])) for x in range(N_AGES))
    return LifeTable(country=country, period_start=start, period_end=end, rows=rows)


def _pyramid_from_counts(counts, country="SYN", year=2020) -> PopulationPyramid:
    return PopulationPyramid(country=country, year=year,
                             counts=tuple(Decimal(int(c)) for c in counts))


def _seeded_q(rng: Xoshiro256StarStar) -> list[str]:
    # six-decimal hazards rising with age, jittered like a real table
    out = []
    for x in range(N_AGES):
        base = min(0.98, 0.0003 * (1.06**x))
        jitter = 0.5 + rng.next_unit()
        out.append(f"{min(0.999999, base * jitter):.6f}")
    return out


def _seeded_counts(rng: Xoshiro256StarStar, scale: int = 5000) -> list[int]:
    return [int(rng.next_unit() * scale) + 1 for _ in range(N_AGES)]


def run_validation(seed: int = 42, replications: int = 2000,
                   self_test_fault: bool = False) -> list[PropertyResult]:
    """Run every property; returns one result per named property."""
    results: list[PropertyResult] = []

    def check(name: str, ok, detail: str):
        results.append(PropertyResult(name=name, passed=bool(ok), detail=detail))

    rng = Xoshiro256StarStar(mix_seed(seed))

    # portable generator: vector lanes replay the scalar streams bit-for-bit
    lanes = XoshiroLanes(seed, 4)
    vector = np.stack([lanes.next_uint64() for _ in range(8)])
    ok = True
    for lane in range(4):
        scalar = Xoshiro256StarStar(seed + lane)
        ok = ok and all(int(vector[i, lane]) == scalar.next_uint64() for i in range(8))
    check("rng-lane-consistency", ok,
          "vectorized lanes replay scalar streams bit-for-bit")

    # oracle degenerate cases; the open interval is empty so the certain
    # closure past age 110 cannot contribute deaths
    counts = _seeded_counts(rng, scale=40)
    counts[-1] = 0
    pyramid = _pyramid_from_counts(counts)
    sim = simulate_deaths(["0"] * N_AGES, pyramid, seed=seed, replications=50)
    check("oracle-zero-hazard", np.all(sim.counts == 0),
          f"zero hazards simulate zero deaths (max={sim.counts.max()})")

    sim = simulate_deaths(["1"] * N_AGES, pyramid, seed=seed, replications=50)
    everyone = sum(counts[1:])
    check("oracle-certain-death", np.all(sim.counts == everyone),
          f"certain hazards kill everyone aged 1+ ({everyone})")

    # oracle vs the summed expectation on a toy vector (hand value 55)
    q_toy = ["0"] * N_AGES
    q_toy[1], q_toy[2], q_toy[3], q_toy[4] = "0.1", "0.2", "1.0", "1.0"
    counts_toy = [0] * N_AGES
    counts_toy[1], counts_toy[2], counts_toy[3] = 100, 50, 10
    sim = simulate_deaths(q_toy, _pyramid_from_counts(counts_toy),
                          seed=seed, replications=replications)
    check("oracle-toy-expectation", abs(sim.mean - 55.0) <= 3 * sim.se,
          f"mean {sim.mean:.3f} within 3se ({3 * sim.se:.3f}) of 55")

    # linearity and scaling of the expectation
    q = _seeded_q(rng)
    qtilde = adjust_q([Decimal(v) for v in q])
    p1 = [Decimal(v) for v in _seeded_counts(rng)]
    p2 = [Decimal(v) for v in _seeded_counts(rng)]
    merged = [a + b for a, b in zip(p1, p2)]
    lhs = expected_from_values(qtilde, merged)
    rhs = expected_from_values(qtilde, p1) + expected_from_values(qtilde, p2)
    check("expectation-linearity", _rel_close(lhs, rhs), f"{lhs} == {rhs}")

    scaled = expected_from_values(qtilde, [Decimal(3) * v for v in p1])
    check("expectation-scaling",
          _rel_close(scaled, Decimal(3) * expected_from_values(qtilde, p1)),
          "tripling every count triples the expectation")

    # monotonicity in any single hazard
    bumped = list(q)
    bumped[60] = f"{min(0.999999, float(q[60]) + 0.01):.6f}"
    before = expected_from_values(qtilde, p1)
    after = expected_from_values(adjust_q([Decimal(v) for v in bumped]), p1)
    check("expectation-monotonicity", after > before,
          f"raising q_60 moves the expectation from {before} to {after}")

    # excess identities on a synthetic country
    scenario = SyntheticScenario(seed=seed, pyramid=GeometricPyramid(base=60, rate=0.97),
                                 hazard=GompertzHazard(a=3e-4, b=0.08))
    dataset = generate_scenario(scenario)
    run = run_country(dataset)
    identity = all(r.excess + r.expected == r.observed for r in run.yearly)
    identity = identity and run.pooled.excess + run.pooled.expected == run.pooled.observed
    fault_note = ""
    if self_test_fault:
        identity = not identity
        fault_note = " [self-test fault injected]"
    check("excess-identity", identity,
          "excess + expected equals observed bit-for-bit" + fault_note)

    additive = (
        run.pooled.expected == sum((r.expected for r in run.yearly), Decimal(0))
        and run.pooled.observed == sum((r.observed for r in run.yearly), Decimal(0))
        and run.pooled.excess == sum((r.excess for r in run.yearly), Decimal(0))
    )
    check("pooled-additivity", additive,
          "pooled expected/observed/excess are exact sums of yearly values")

    ordered = all(em.lower <= em.upper for em in run.expected_by_year.values())
    check("bounds-ordering", ordered, "lower bound never exceeds upper bound")

    # containment when the pooled table is an age-uniform convex combination
    year_list = list(dataset.yearly_tables)
    qa = build_hazard_values(GompertzHazard(a=2e-4, b=0.08))
    qb = build_hazard_values(GompertzHazard(a=5e-4, b=0.075))
    qc = tuple((a + b) / 2 for a, b in zip(qa, qb))
    yearly = {
        year_list[0]: _table_from_q(qa, start=year_list[0], end=year_list[0]),
        year_list[1]: _table_from_q(qb, start=year_list[1], end=year_list[1]),
    }
    pooled_table = _table_from_q(qc)
    target_pyramid = dataset.pyramids[dataset.targets[0]]
    bounds = expected_bounds(yearly, target_pyramid)
    point = expected_deaths(adjust_hazards(pooled_table), target_pyramid)
    check("bounds-containment", bounds.lower <= point <= bounds.upper,
          f"{bounds.lower} <= {point} <= {bounds.upper} for a mean-of-years table")

    # singleton strata reproduce the fine-grained estimator
    singles = StratumScheme(uppers=tuple(range(N_AGES)))
    fine = {
        t: expected_deaths(adjust_hazards(dataset.multi_year_table), dataset.pyramids[t])
        for t in dataset.targets
    }
    coarse = strata_expected(dataset, scheme=singles)
    ok = all(_rel_close(coarse[t], fine[t]) for t in dataset.targets)
    check("singleton-strata-equivalence", ok,
          "one-age strata equal the fine-grained expectation")

    # age-blind baselines: permuting the pyramid cannot move them
    ref_obs = [dataset.observations[y] for y in dataset.reference_years]
    raw = raw_mean_expected(ref_obs, dataset.targets)
    trend = linear_trend_expected(ref_obs, dataset.targets)
    shuffled = list(reversed(ref_obs))
    check("age-blind-baselines",
          raw == raw_mean_expected(shuffled, dataset.targets)
          and trend == linear_trend_expected(shuffled, dataset.targets),
          "raw mean and trend read only yearly tolls, never the age axis")

    # null scenario: no shock, no excess beyond chance
    sd = pooled_sd(dataset)
    pooled_abs = abs(float(run.pooled.excess))
    check("null-scenario-excess", pooled_abs <= 3 * sd,
          f"|pooled excess| {pooled_abs:.1f} within 3sd ({3 * sd:.1f}) of zero")

    # ageing pyramid: raw mean inflates excess, age adjustment does not
    ageing = SyntheticScenario(seed=seed + 1,
                               pyramid=GeometricPyramid(base=90, rate=0.97),
                               hazard=GompertzHazard(a=3e-4, b=0.09), drift=True)
    aged = generate_scenario(ageing)
    aged_run = run_country(aged)
    aged_sd = pooled_sd(aged)
    raw_e = raw_mean_expected(
        [aged.observations[y] for y in aged.reference_years], aged.targets
    )
    raw_excess = float(aged_run.pooled.observed) - float(sum(raw_e.values()))
    fine_ok = abs(float(aged_run.pooled.excess)) <= 3 * aged_sd
    raw_biased = raw_excess > 3 * aged_sd
    check("ageing-bias-demonstration", fine_ok and raw_biased,
          f"raw-mean excess {raw_excess:.1f} > 3sd ({3 * aged_sd:.1f}) "
          f"while fine-grained stays at {float(aged_run.pooled.excess):.1f}")

    # determinism of the whole simulation path
    again = generate_scenario(scenario)
    same = all(
        again.observations[y].observed_deaths == dataset.observations[y].observed_deaths
        for y in dataset.observations
    )
    check("simulation-determinism", same, "same seed reproduces identical tolls")

    return results


def pooled_sd(dataset) -> float:
    """Binomial SD of the pooled observed toll over the dataset's targets."""
    q = dataset.multi_year_table.qx_values()
    variance = 0.0
    for t in dataset.targets:
        variance += binomial_sd(q, dataset.pyramids[t]) ** 2
    return variance**0.5


def render_report(results: list[PropertyResult]) -> str:
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"[{status}] {r.name}: {r.detail}")
    failed = [r for r in results if not r.passed]
    lines.append(
        f"{len(results) - len(failed)}/{len(results)} properties passed"
        + (f"; first failure: {failed[0].name}" if failed else "")
    )
    return "\n".join(lines) + "\n"
