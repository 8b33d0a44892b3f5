"""CM pairs at level p and the repulsion experiment around them."""
from collections import Counter

from shimura_fm.cm_hecke import cm_pair_scan, repulsion_experiment
from shimura_fm.quat_algebra import standard_order

O = standard_order(6)

for p in (5, 7):
    pairs = cm_pair_scan(O, p)
    print(f"p={p}: {len(pairs)} pairs", dict(Counter(q.label for q in pairs)))
    for q in pairs[:2]:
        z = q.first.fixed_point.value
        print("   fixed point", f"{z:.4f}", "order", q.first.order, q.label)

rep = repulsion_experiment(O, 5, r=1.0, unit_height=8, reach=4.0)
print(rep.to_json())
bad = [h for h in rep.hits if h["solution_dim"] == 1 and not all(h["checks"].values())]
print("failed checks:", len(bad))
