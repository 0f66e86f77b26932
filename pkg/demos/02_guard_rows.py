"""Why a total should include a blank line below the data it sums."""

from sheetspy import run_crit
from sheetspy.resources import load_sample

# SUM(C8:C9) with the total directly below: a row inserted under C9 is not
# picked up by the range, so the new amount never reaches the total.
guardless = run_crit(load_sample("guardless"))
print("guardless:", guardless.overall)
for pos in guardless.failures:
    for reason in pos.reasons:
        print(f"  {pos.edit.label()}: {reason.kind.value}: {reason.detail}")

# Summing over the blank guard row as well makes every insertion safe.
print("guarded:  ", run_crit(load_sample("guarded")).overall)
