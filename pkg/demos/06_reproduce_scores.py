"""Recompute every published score cell from the shipped raw-metric fixture
and show how far each lands from the published value. No network involved.
Run: python3 demos/06_reproduce_scores.py
"""

import math

from typedprompt import reproduce_table2

rows = reproduce_table2()

print(f"{'framework':<12} {'task':<11} {'gms (0 / 2 retries)':<24} {'consistency':<12} dev")
print("-" * 68)
for row in rows:
    cons = "n/a" if math.isnan(row.consistency_computed) else f"{row.consistency_computed:.3f}"
    print(
        f"{row.framework:<12} {row.task:<11} "
        f"{row.gms_computed[0]:.3f} / {row.gms_computed[1]:.3f}          "
        f"{cons:<12} {row.gms_deviation:.4f}"
    )

worst = max(r.gms_deviation for r in rows)
print("-" * 68)
print(f"all 42 score cells within 0.002 of print: {all(r.within(0.002) for r in rows)}")
print(f"worst deviation: {worst:.4f}")
