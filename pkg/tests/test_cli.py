import csv
import io
import json
from pathlib import Path

import pytest

from shimura_fm.cli import dispatch

RECORD_FIELDS = {"command", "tool_version", "config_echo", "timing", "precision", "result"}


def run(*argv):
    buf = io.StringIO()
    code = dispatch(list(argv), buf)
    return code, buf.getvalue()


def records(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def test_record_layout():
    code, out = run("algebra", "info", "--alpha", "-1", "--beta", "3")
    assert code == 0
    (rec,) = records(out)
    assert set(rec) == RECORD_FIELDS
    assert rec["command"] == "algebra info"
    assert rec["result"]["discriminant"] == 6


def test_flags_before_or_after_subcommand():
    _, a = run("--csv", "group", "components", "--p", "7")
    _, b = run("group", "components", "--p", "7", "--csv")
    assert a == b
    row = next(csv.DictReader(io.StringIO(a)))
    assert row["copies"] == "1"


def test_domain_errors_exit_one():
    code, out = run("audit", "genus", "--d", "35")
    assert code == 1
    err = records(out)[0]["result"]
    assert err["error"] == "KeyError" and err["message"] == "discriminant 35 is not in catalog"
    code, _ = run("audit", "genus", "--d", "1")
    assert code == 1


def test_usage_and_config_errors_exit_two(tmp_path, capsys):
    assert run("bogus")[0] == 2
    assert run("group", "units", "--height", "x")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert run("--config", str(bad), "group", "units")[0] == 2
    assert run("--config", str(tmp_path / "missing.json"), "group", "units")[0] == 2


def test_config_file_overrides(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"heights": {"units": 3}, "seed": 7}))
    _, out = run("--config", str(cfg), "group", "units")
    rec = records(out)[0]
    assert rec["config_echo"]["heights"]["units"] == 3 and rec["config_echo"]["seed"] == 7


def strip_timing(text):
    out = []
    for rec in records(text):
        rec.pop("timing")
        out.append(rec)
    return out


@pytest.mark.parametrize("argv", [("cm", "scan", "--p", "5"), ("audit", "nori", "--p", "7"),
                                  ("hecke", "enum", "--m", "5")])
def test_deterministic_apart_from_timing(argv):
    assert strip_timing(run(*argv)[1]) == strip_timing(run(*argv)[1])


def test_volume_verify_point():
    code, out = run("volume", "verify", "--curve", "graph_neg_z", "--bound", "point",
                    "--r", "1", "--center", "0", "0", "0", "0")
    res = records(out)[0]["result"]
    assert code == 0 and res["ok"] and res["normalization"] == "curvature-2"


def test_audit_threshold_with_constants(tmp_path):
    consts = tmp_path / "c.json"
    consts.write_text(json.dumps({"c1": 0, "c2": 0, "cR": 0}))
    _, out = run("audit", "threshold", "--k", "1", "--constants", str(consts))
    assert records(out)[0]["result"]["p_threshold"] == 5


def test_golden_record_check_and_drift(tmp_path):
    root = tmp_path / "golden"
    assert run("golden", "record", "--suite", "cm_scan", "--dir", str(root))[0] == 0
    code, out = run("golden", "check", "--suite", "cm_scan", "--dir", str(root))
    assert code == 0 and records(out)[-1]["result"]["ok"]
    f = next((root / "cm_scan").glob("*.json"))
    data = json.loads(f.read_text())
    data["value"]["pairs"] += 1
    f.write_text(json.dumps(data))
    code, out = run("golden", "check", "--suite", "cm_scan", "--dir", str(root))
    res = records(out)[-1]["result"]
    assert code != 0 and not res["ok"] and res["diffs"]
    assert all(d.startswith("cm_scan/") for d in res["diffs"])


def test_shipped_goldens_pass():
    root = Path(__file__).resolve().parents[1] / "golden"
    code, out = run("golden", "check", "--suite", "level_genus", "--dir", str(root))
    assert code == 0, out


def test_selftest_quick():
    code, out = run("selftest", "--quick")
    assert code == 0, out
