"""Five objects around a turning viewer: the ones in view get the better representations."""

import math
from collections import defaultdict

from volustream.scenario import Scenario, run

sc = Scenario(tile_depth=2, duration=30, seed=0, scene={"count": 5}, objects=[], camera={"path": "pan"})
result = run(sc)
by_time = defaultdict(list)
for row in result.object_rows:
    by_time[row["t"]].append(row)

print("  t      in view (mean rung)        out of view (mean rung)")
for t in sorted(by_time)[::12]:
    rows = by_time[t]
    show = lambda vis: " ".join(
        f"{r['object']}:{r['mean_selected_rep']:.1f}" for r in rows if r["visible"] == vis and not math.isnan(r["mean_selected_rep"])
    )
    print(f"{t:5.1f}   {show(1):26s} {show(0)}")
final = by_time[max(by_time)]
print("\nshare of window tiles holding something, at the end:", {r["object"]: round(r["frac_covered"], 2) for r in final})
print("delivered utility per object:", [round(x) for x in result.summary["deliveredUtilityByObject"]])
