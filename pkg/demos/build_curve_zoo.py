"""Regenerate src/shimura_fm/data/curve_zoo.json and confirm it matches the shipped copy.

    python demos/build_curve_zoo.py            # compare only
    python demos/build_curve_zoo.py --write    # overwrite the data file
"""
import argparse
import json
import tempfile
from pathlib import Path

from shimura_fm.volume_bounds import curve_zoo, write_zoo

TARGET = Path(__file__).resolve().parents[1] / "src" / "shimura_fm" / "data" / "curve_zoo.json"

ap = argparse.ArgumentParser()
ap.add_argument("--write", action="store_true")
args = ap.parse_args()

for name, curve in curve_zoo():
    ch = curve.charts[0]
    print(f"{name:22s} {ch.param:10s} harnesses={curve.meta.get('harnesses')}")

with tempfile.TemporaryDirectory() as tmp:
    fresh = Path(tmp) / "zoo.json"
    write_zoo(fresh)
    same = json.loads(fresh.read_text()) == json.loads(TARGET.read_text())
print("shipped file matches builder:", same)

if args.write:
    write_zoo(TARGET)
    print("wrote", TARGET)
