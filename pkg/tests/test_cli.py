import csv
import io as _io
import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import ABSXY, X0, X1
from tamegeo.cli import run

CIRCLE = {
    "kind": "implicit_set",
    "dim": 2,
    "equalities": [["-", ["+", ["*", X0, X0], ["*", X1, X1]], 1]],
    "inequalities": [],
    "box": [[-2, 2], [-2, 2]],
}


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def call(argv):
    out, err = _io.StringIO(), _io.StringIO()
    status, _ = run(argv, stdout=out, stderr=err)
    return status, out.getvalue(), err.getvalue()


def ok(argv):
    status, out, err = call(argv)
    assert status == 0, err
    return json.loads(out)


def cloud_doc(points, res=0.01):
    pts = np.asarray(points, float)
    return {"kind": "point_cloud", "dim": pts.shape[1], "resolution": res,
            "window_radius": float(np.linalg.norm(pts, axis=1).max()) + 1, "points": pts.tolist()}


@pytest.fixture
def files(tmp_path):
    x = np.linspace(-1, 1, 201)
    return {
        "A": write(tmp_path, "A.json", cloud_doc(np.c_[x, x ** 2])),
        "B": write(tmp_path, "B.json", cloud_doc([[0.0, 0.0]])),
        "circle": write(tmp_path, "circle.json", CIRCLE),
        "absxy": write(tmp_path, "absxy.json", ABSXY),
        "F": write(tmp_path, "F.json", {"kind": "multifunction_graph", "m": 1, "n": 1, "slab": 0.01,
                                        "graph": cloud_doc(np.r_[np.c_[x, x], np.c_[x, -x]])}),
        "t2": write(tmp_path, "t2.json", {"kind": "expr", "arity": 1, "tree": ["*", X0, X0]}),
        "dir": tmp_path,
    }


def test_kuratowski_of_equal_sets_is_zero(files):
    out = ok(["kuratowski", files["A"], files["A"]])
    assert out["value"] == 0.0 and out["resolution_bound"] == pytest.approx(0.02)


def test_hausdorff_with_sampled_implicit_set(files):
    out = ok(["hausdorff", files["circle"], files["B"], "--grid-step", "0.01"])
    assert out["value"] == pytest.approx(1, abs=0.02)


def test_sample_command(files):
    out = ok(["sample", files["circle"], "--grid-step", "0.02"])
    P = np.array(out["points"])
    assert out["kind"] == "point_cloud" and np.abs(np.linalg.norm(P, axis=1) - 1).max() <= 1e-3


def test_multifunction_commands(files):
    sec = ok(["section", files["F"], "--at", "0.5"])
    assert np.abs(np.abs(np.array(sec["points"])) - 0.5).max() <= 0.02
    assert len(ok(["domain", files["F"]])["points"]) > 100
    pre = ok(["preimage", files["F"], "--mode", "point", "--at", "0.5"])
    assert np.abs(np.abs(np.array(pre["points"])) - 0.5).max() <= 0.05
    assert ok(["delta", files["F"], "--at", "0.5", "--y", "2"])["value"] == pytest.approx(1.5, abs=0.02)
    lim = ok(["klim", files["F"], "--at", "0.5", "--mode", "inf"])
    assert lim["truncated"] is False and len(lim["points"]) == 2


def test_cone_and_conic_commands(files, tmp_path):
    csv_path = str(tmp_path / "drift.csv")
    x = np.arange(-0.1, 0.1 + 1e-9, 1e-4)
    par = write(tmp_path, "par.json", cloud_doc(np.c_[x, x * x], 1e-4))
    out = ok(["cone", par, "--at", "0,0", "--csv", csv_path])
    assert out["status"] == "ok" and len(out["directions"]) == 2
    rows = list(csv.reader(open(csv_path)))
    assert rows[0] == ["k", "t", "count", "drift", "resolution_limited", "window_limited"]
    assert len(rows) == 1 + len(out["steps"])
    fit = ok(["conic-exponent", par, "--radii", "0.09,0.07,0.05,0.04,0.03,0.02"])
    assert fit["exponent"] == pytest.approx(2, abs=0.15)


def test_nearest_command(files):
    out = ok(["nearest", files["B"], "--xs", "1,1;0,2"])
    assert out["kind"] == "multifunction_graph" and len(out["graph"]["points"]) == 2


def test_subgradient_command(files):
    out = ok(["subgradient", files["absxy"], "--at", "0,3"])
    assert sorted(map(tuple, out["vertices"])) == [(-3.0, 0.0), (3.0, 0.0)]
    assert out["h"] == pytest.approx(0, abs=1e-12)
    crit = ok(["critical-set", files["absxy"], "--window", "0.2", "--grid-step", "0.05"])
    assert all(p[0] == 0 for p in crit["points"])


def test_subgradient_exponent_command(files, tmp_path):
    csv_path = str(tmp_path / "env.csv")
    out = ok(["exponent", "--mode", "subgrad", files["absxy"], "--window", "1", "--grid-step", "0.005", "--csv", csv_path])
    assert out["exponent"] == pytest.approx(0.5, abs=0.05)
    rows = list(csv.reader(open(csv_path)))
    assert rows[0] == ["log_u", "log_v", "bin", "is_min"]
    assert sum(int(r[3]) for r in rows[1:]) == out["bins"]


def test_other_exponent_modes(files):
    assert ok(["exponent", "--mode", "onedim", files["t2"], "--t-window", "0.001,0.1"])["exponent"] == pytest.approx(0.5, abs=0.03)
    assert ok(["exponent", "--mode", "loj", files["t2"], "--at", "0", "--window", "0.1", "--grid-step", "1e-4"])["exponent"] == pytest.approx(2, abs=0.1)
    prof = ok(["phi-profile", files["absxy"], "--ball-radius", "0.5", "--t-grid", "0.01,0.02,0.04"])
    assert prof["monotone"] is True


def test_output_is_byte_identical(files):
    argv = ["subgradient", files["absxy"], "--at", "0.001,0.5", "--seed", "7"]
    assert call(argv)[1] == call(argv)[1]
    argv = ["sample", files["circle"], "--grid-step", "0.05"]
    assert call(argv)[1] == call(argv)[1]


def test_missing_file_names_the_path(files):
    status, out, err = call(["kuratowski", files["A"], "/nonexistent/X.json"])
    assert status == 2 and out == "" and "/nonexistent/X.json" in err


def test_malformed_json_reports_position(files):
    bad = write(files["dir"], "bad.json", '{"kind": "point_cloud",\n  "dim": 2,, }')
    status, out, err = call(["hausdorff", bad, files["A"]])
    assert status == 2 and out == ""
    assert "bad.json" in err and "line 2" in err


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["sample"],
    ["sample", "x.json", "--grid-step", "-1"],
    ["exponent", "--mode", "loj"],
])
def test_usage_errors_exit_2(argv, files):
    status, out, _ = call(argv)
    assert status == 2 and out == ""


def test_input_validation_errors_exit_2(files):
    status, out, err = call(["sample", files["circle"]])
    assert status == 2 and out == "" and "grid" in err
    status, out, _ = call(["section", files["F"], "--at", "0.5,1"])
    assert status == 2 and out == ""
    status, _, err = call(["subgradient", files["A"], "--at", "0,0"])
    assert status == 2 and "piecewise" in err.lower()


def test_numerical_failures_exit_3(files, tmp_path):
    const = write(tmp_path, "c.json", {"kind": "expr", "arity": 1, "tree": ["const", 1.0]})
    status, out, err = call(["exponent", "--mode", "loj", const, "--at", "0", "--window", "0.1", "--grid-step", "1e-3"])
    assert status == 3 and out == "" and "constant" in err
    line = write(tmp_path, "lin.json", cloud_doc(np.c_[np.linspace(-0.1, 0.1, 2001), np.zeros(2001)], 1e-4))
    status, out, _ = call(["exponent", "--mode", "sep", line, line, "--at", "0,0"])
    assert status == 3 and out == ""


def test_console_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "tamegeo", "kuratowski", files["A"], files["B"]],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["value"] > 0
    proc = subprocess.run([sys.executable, "-m", "tamegeo", "kuratowski", files["A"], "missing.json"],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and proc.stdout == "" and "missing.json" in proc.stderr
