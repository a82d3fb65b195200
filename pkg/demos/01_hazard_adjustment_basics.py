"""The core arithmetic, step by step, on a three-age toy population.

Life tables count deaths of x-year-olds over a calendar year, but population
pyramids count x-year-olds at January 1. A person dying at age x during the
year was aged x or x-1 at the start of it, so before multiplying hazards
against Jan-1 counts we average adjacent probabilities:

    corrected[x] = (q[x] + q[x+1]) / 2     (with certainty past the last age)

Expected deaths are then the corrected hazards times the pyramid, summed
over ages 1 and up, and excess is simply observed minus expected.

Run:  python demos/01_hazard_adjustment_basics.py
"""

from decimal import Decimal

from mortalis import adjust_q
from mortalis.estimator import expected_from_values

# A tiny universe with three adult ages. The last age is an open interval:
# everyone who survives it dies past the table's end, hence the closure.
q = [Decimal("0.1"), Decimal("0.2"), Decimal("1.0")]
corrected = adjust_q(q)
print("raw hazards:      ", [str(v) for v in q])
print("corrected hazards:", [str(v) for v in corrected])
assert corrected == (Decimal("0.15"), Decimal("0.6"), Decimal("1.0"))

# Jan-1 population at those ages; index 0 is deliberately excluded from the
# sum (infants born during the year are not in the Jan-1 count at age 0).
population = [Decimal(100), Decimal(50), Decimal(10)]
padded_q = [Decimal(0)] + q          # slot in an age-0 entry to show the axis
padded_p = [Decimal(40)] + population

expected = expected_from_values(adjust_q(padded_q), padded_p)
print(f"expected deaths:   {expected}")
assert expected == Decimal("55"), "0.15*100 + 0.6*50 + 1.0*10"

observed = Decimal(61)
print(f"observed deaths:   {observed}")
print(f"excess:            {observed - expected}  "
      f"({(observed - expected) / expected:.1%} of expected)")
