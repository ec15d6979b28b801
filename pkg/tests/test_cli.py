import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from quasidual import io
from quasidual.cli import run
from quasidual.grid import from_csv

SPECS = Path(__file__).resolve().parent.parent / "specs"


def call(tmp_path, *args):
    return run(list(args) + ["--out", str(tmp_path)])


def report(tmp_path):
    return json.loads((tmp_path / "report.json").read_text())


def test_verify_transform(tmp_path, capsys):
    assert call(tmp_path, "verify-transform", "--samples", "10000", "--seed", "42") == 0
    rep = report(tmp_path)
    assert rep["n_passed"] == 12
    assert "12/12" in capsys.readouterr().out


def test_check_compat_divergent(tmp_path):
    assert call(tmp_path, "check-compat", "--spec", str(SPECS / "incompatible.spec")) == 3
    assert report(tmp_path)["classification"] == "divergent"


def test_check_compat_convergent_with_override(tmp_path):
    code = call(tmp_path, "check-compat", "--spec", str(SPECS / "incompatible.spec"),
                "--set", "h.sigma=1.5", "--levels", "3")
    assert code == 0
    rep = report(tmp_path)
    assert rep["classification"] == "convergent"
    assert len(rep["integrals"]) == 3


def test_solve_manufactured(tmp_path):
    assert call(tmp_path, "solve", "--spec", str(SPECS / "manufactured.spec"),
                "--set", "n=255") == 0
    assert report(tmp_path)["converged"] is True
    v = from_csv((tmp_path / "solution_v.csv").read_text())
    u = from_csv((tmp_path / "solution_u.csv").read_text())
    assert v.mesh.n_per_axis == 255 and np.all(u.values < v.values)


def test_solve_incompatible_exit_3(tmp_path):
    assert call(tmp_path, "solve", "--spec", str(SPECS / "incompatible.spec")) == 3
    assert report(tmp_path)["error"] == "NoCompatibility"


def test_solve_nonconvergence_exit_4(tmp_path):
    code = call(tmp_path, "solve", "--spec", str(SPECS / "power_gamma3.spec"),
                "--set", "n=255", "--max-iters", "1")
    assert code == 4
    assert report(tmp_path)["status"] == "max_iters"


def test_fiber_scan(tmp_path):
    assert call(tmp_path, "fiber-scan", "--spec", str(SPECS / "sweep.spec"),
                "--set", "n=255") == 0
    assert (tmp_path / "fiber.csv").read_text().startswith("t,phi,phi_prime\n")
    assert report(tmp_path)["profile"]["shape"] == "SingleMin"


def test_sweep(tmp_path):
    code = call(tmp_path, "sweep-lambda", "--spec", str(SPECS / "sweep.spec"),
                "--set", "n=255", "--lambdas", "0,0.01,1")
    assert code == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "lambda,energy,h1_dist,min_gap" and len(lines) == 4


def test_uniqueness(tmp_path):
    code = call(tmp_path, "uniqueness", "--spec", str(SPECS / "sweep.spec"),
                "--set", "n=255", "--starts", "2")
    assert code == 0
    assert report(tmp_path)["uniqueness_pass"] is True


@pytest.mark.parametrize("override,hyp", [("gamma=0.5", "gamma"), ("colour=red", "key"),
                                          ("p=2", "p")])
def test_invalid_spec_exit_2(tmp_path, capsys, override, hyp):
    code = call(tmp_path, "solve", "--spec", str(SPECS / "sweep.spec"), "--set", override)
    assert code == 2
    assert hyp in capsys.readouterr().err


def test_missing_spec_exit_2(tmp_path):
    assert call(tmp_path, "solve") == 2
    assert call(tmp_path, "solve", "--spec", str(tmp_path / "nope.spec")) == 2


def test_out_dir_created(tmp_path):
    out = tmp_path / "a" / "b"
    assert run(["verify-transform", "--samples", "1000", "--out", str(out)]) == 0
    assert (out / "report.json").exists()


@pytest.mark.parametrize("args", [
    ["solve", "--spec", str(SPECS / "manufactured.spec"), "--set", "n=127"],
    ["sweep-lambda", "--spec", str(SPECS / "sweep.spec"), "--set", "n=127",
     "--lambdas", "0,0.1,1"],
    ["uniqueness", "--spec", str(SPECS / "sweep.spec"), "--set", "n=127", "--starts", "2",
     "--seed", "9"],
    ["verify-transform", "--samples", "2000", "--seed", "5"],
])
def test_artifacts_byte_identical(tmp_path, args):
    first, second = tmp_path / "one", tmp_path / "two"
    assert run(args + ["--out", str(first)]) == run(args + ["--out", str(second)])
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "quasidual", "verify-transform", "--samples",
                           "1000", "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.count("\n") == 1


def test_dumps_format():
    text = io.dumps({"a": 0.1, "b": [1, 2.5], "c": math.nan, "d": np.float32(1.5),
                     "e": np.bool_(True), "f": None, "g": {}})
    obj = json.loads(text)
    assert text.count("0.10000000000000001") == 1
    assert obj["c"] is None and obj["e"] is True and obj["g"] == {}
    with pytest.raises(TypeError):
        io.dumps({"x": object()})
