"""Walk through the genus bookkeeping for the discriminant 6 curve.

Catalog invariants, level-p genera from the closure degree, surjectivity of
the unit group mod p, and the prime where the genus squeeze first bites.
"""
from shimura_fm import arithmetic_group as ag
from shimura_fm.genus_audit import (catalog_crosscheck, catalog_lookup, level_genus, nori_check,
                                    threshold_search)
from shimura_fm.quat_algebra import standard_order
from shimura_fm.volume_bounds import BudgetConstants

inv = catalog_lookup(6)
print("catalog:", inv.genus, inv.e2, inv.e3, "chi =", inv.euler_characteristic)
print("enumerated (e2, e3):", catalog_crosscheck(6)["enumerated"])

# genus grows like p^3 but g / p^3 drifts down toward |chi| / 4
for p in (5, 7, 11, 13):
    lg = level_genus(6, p)
    print(f"p={p:2d} deg={lg.degree:5d} components={lg.components} "
          f"g={lg.genus_per_component:4d} g/p^3={lg.genus_per_component / p**3:.4f}")

gens = ag.unit_generators(standard_order(6), 2)
for p in (5, 7, 11):
    r = nori_check(gens, p)
    print(f"mod {p}: image {r.image_order} of {r.target} ({r.target_order})")

for consts in (BudgetConstants(), BudgetConstants(2.0, 1.0, 1.0), BudgetConstants(0, 0, 0)):
    rep = threshold_search(1, 6, consts)
    print("threshold", consts, "->", rep.p_threshold)
