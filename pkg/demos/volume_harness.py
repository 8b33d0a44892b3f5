"""Run every curve of the zoo against the bounds it is meant for.

Margins are measured minus bound; negative beyond tolerance means a failure.
The normalization each bound is sharp under is found first.
"""
import numpy as np

from shimura_fm import volume_bounds as vb

for kind, extra in (("point", {}), ("diag", {}), ("conj", {"r": 0.3, "R": 0.6})):
    res = vb.resolve_normalization(kind, **extra)
    print(kind, "sharp under", [k for k, v in res.items() if v["equality"]])

zoo = vb.load_zoo()
for name, curve, center in vb.zoo_cells(zoo):
    rep = vb.verify_point_bound(curve, center, 0.5)
    print(f"point {name:20s} margin={rep.margin:+.4f} ok={rep.ok}")
for name, curve in vb.zoo_for("diag", zoo).items():
    rep = vb.verify_diagonal_bound(curve, 0.5)
    hk = vb.verify_hecke_bound(curve, 0.5, 1, [np.eye(2, dtype=complex)],
                               intersections=curve.meta.get("diag_intersections", 1))
    print(f"diag  {name:20s} margin={rep.margin:+.4f} T_1 agrees={abs(rep.measured_value - hk.measured_value) < 1e-9}")
for name, curve in vb.zoo_for("conj", zoo).items():
    rep = vb.verify_conj_ratio(curve, 0.3, 0.6)
    print(f"conj  {name:20s} ratio={rep.measured_value:.5f} bound={rep.bound_value:.5f} "
          f"ok={rep.ok} vacuous={rep.notes['vacuous']}")
