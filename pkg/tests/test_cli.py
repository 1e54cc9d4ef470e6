import json
import subprocess
import sys

import numpy as np
import pytest

from solitonlab import cli

CYLINDER = {
    "params": {"lambda": 0.5, "m": 1, "q": 1, "k": 2.0},
    "initial": {"formulation": "T", "start": 0.0, "end": 2.0,
                "state": {"H": 1.0, "dH": 0.0, "F": 2 ** 0.5, "dF": 0.0, "f": 0.0, "df": 0.3}},
    "events": [{"name": "df1", "component": "df", "trigger": "exceeds", "threshold": 1.0,
                "action": "record"}],
}
ABOVE = {"params": {"lambda": 0.0, "m": 1, "q": 0, "k": 0.0},
         "initial": {"formulation": "SPECIAL", "state": {"x2": 2.0, "y1": 1.0, "y2": 1.0}}}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def run(tmp_path, *args):
    return cli.main(list(args) + ["--out", str(tmp_path / "out")])


def read_csv(path):
    header = path.read_text().splitlines()[0].split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def test_verify_passes(capsys):
    assert cli.main(["verify"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_verify_tight_tolerance_reports_names(capsys):
    assert cli.main(["verify", "--tol", "1e-16"]) == 1
    out = capsys.readouterr().out
    assert "FAIL" in out and "oracle_residual[new_family]" in out.splitlines()[-1]


def test_malformed_config(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "params": {\n    "m": ,\n  }\n}')
    assert run(tmp_path, "integrate", "--config", str(p)) == 2
    assert "line 3" in capsys.readouterr().err


@pytest.mark.parametrize("cfg,field", [
    ({"params": {"q": 3}}, "params.q"),
    ({"params": {"m": 1.5}}, "params.m"),
    ({"bogus": {}}, "bogus"),
    ({"integrator": {"rtol": "x"}}, "integrator.rtol"),
    ({"initial": {"formulation": "Q"}}, "initial.formulation"),
    ({"events": [{"component": "zz"}]}, "events[0].component"),
])
def test_config_field_errors(tmp_path, capsys, cfg, field):
    assert run(tmp_path, "integrate", "--config", write(tmp_path, cfg)) == 2
    assert field in capsys.readouterr().err


def test_verify_bad_config_exit_2(tmp_path):
    assert cli.main(["verify", "--config", write(tmp_path, {"nope": 1})]) == 2


def test_integrate_t_outputs(tmp_path):
    assert run(tmp_path, "integrate", "--config", write(tmp_path, CYLINDER)) == 0
    header, data = read_csv(tmp_path / "out" / "run.csv")
    assert header == ["t", "H", "dH", "F", "dF", "f", "df", "trL", "S", "C", "C1"]
    first = (tmp_path / "out" / "run.csv").read_text().splitlines()[1].split(",")[1]
    assert len(first.split("e")[0].replace(".", "").lstrip("-")) == 17
    summary = json.loads((tmp_path / "out" / "run_summary.json").read_text())
    assert summary["termination"]["kind"] == "horizon"
    assert summary["events"][0]["name"] == "df1"
    assert summary["drift"]["C"] <= 1e-6 * (1 + abs(summary["drift"]["C_initial"]))
    # df = 0.3 + t/2 crosses 1 at t = 1.4
    assert summary["events"][0]["time"] == pytest.approx(1.4, abs=1e-9)


def test_csv_rows_satisfy_trace_inequality(tmp_path):
    assert run(tmp_path, "shoot") == 0
    _, data = read_csv(tmp_path / "out" / "run.csv")
    H, dH, F, dF, trL = data[:, 1], data[:, 2], data[:, 3], data[:, 4], data[:, 7]
    trL2 = (dH / H) ** 2 + 2 * (dF / F) ** 2
    assert np.all(trL2 * 3 >= trL ** 2 * (1 - 1e-12))


def test_integrate_is_byte_deterministic(tmp_path):
    cfg = write(tmp_path, CYLINDER)
    assert cli.main(["integrate", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["integrate", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "run.csv").read_bytes() == (tmp_path / "b" / "run.csv").read_bytes()


def test_integrate_s_and_special(tmp_path):
    s_cfg = {"params": {"lambda": 0.0, "m": 1, "q": 0, "k": 0.0},
             "initial": {"formulation": "S", "end": 1.0,
                         "state": {"alpha": 4.0, "dalpha": 0.0, "beta": 1.0, "dbeta": 0.0,
                                   "phi": 0.0, "dphi": 0.3}},
             "output": {"prefix": "s"}}
    assert run(tmp_path, "integrate", "--config", write(tmp_path, s_cfg)) == 0
    header, _ = read_csv(tmp_path / "out" / "s.csv")
    assert header == ["s", "alpha", "dalpha", "beta", "dbeta", "phi", "dphi"]
    sp = dict(ABOVE, initial={**ABOVE["initial"], "end": 0.1}, output={"prefix": "x"})
    assert run(tmp_path, "integrate", "--config", write(tmp_path, sp)) == 0
    header, data = read_csv(tmp_path / "out" / "x.csv")
    assert header == ["s", "x2", "y1", "y2", "ratio"]
    np.testing.assert_allclose(data[:, 4], data[:, 3] / data[:, 2])


def test_rtol_flag_overrides(tmp_path):
    cfg = write(tmp_path, {"shooting": {"horizon": 5.0}})
    cli.main(["integrate", "--config", cfg, "--out", str(tmp_path / "a"), "--rtol", "1e-6", "--atol", "1e-8"])
    cli.main(["integrate", "--config", cfg, "--out", str(tmp_path / "b")])
    _, a = read_csv(tmp_path / "a" / "run.csv")
    _, b = read_csv(tmp_path / "b" / "run.csv")
    assert len(a) < len(b)


def test_shoot_report(tmp_path):
    cfg = {"shooting": {"f2": -0.5, "horizon": 20.0}}
    assert run(tmp_path, "shoot", "--config", write(tmp_path, cfg), "--seedless") == 0
    rep = json.loads((tmp_path / "out" / "run_report.json").read_text())
    q = rep["qualitative"]
    assert q["H_increasing"] and q["F_extremum_count_le_1"] and q["trL_in_bound"] and q["S_decreasing"]
    assert q["F_growth"] > 1


def test_blowup_report(tmp_path):
    assert run(tmp_path, "blowup", "--config", write(tmp_path, ABOVE)) == 0
    rep = json.loads((tmp_path / "out" / "run_report.json").read_text())
    assert rep["bound"] == 0.5 and rep["time_le_bound"] is True
    assert rep["singular_time"] == pytest.approx(0.1438410362, abs=1e-9)
    lo, hi = rep["bracket"]
    assert lo <= rep["singular_time"] <= hi
    assert rep["closed_form_error"]["y1"] < 1e-6


def test_blowup_hypothesis_violation(tmp_path, capsys):
    cfg = {**ABOVE, "params": {"k": -1.0}}
    assert run(tmp_path, "blowup", "--config", write(tmp_path, cfg)) == 2
    err = capsys.readouterr().err
    assert "HYPOTHESIS_VIOLATED" in err and "k in {0, 1}" in err


def test_blowup_needs_special(tmp_path):
    assert run(tmp_path, "blowup", "--config", write(tmp_path, CYLINDER)) == 2


def test_transform(tmp_path):
    assert run(tmp_path, "transform", "--config", write(tmp_path, CYLINDER)) == 0
    out = tmp_path / "out"
    assert read_csv(out / "run_s.csv")[0][0] == "s"
    assert read_csv(out / "run_t.csv")[0][0] == "t"
    assert json.loads((out / "run_summary.json").read_text())["roundtrip_error"] <= 1e-8


@pytest.mark.parametrize("workers", ["1", "2"])
def test_sweep(tmp_path, workers):
    cfg = {"sweep": {"command": "shoot", "grid": {"shooting.F0": [0.5, 1.0], "params.k": [1.0, 2.0]}},
           "shooting": {"horizon": 5.0}}
    assert run(tmp_path, "sweep", "--config", write(tmp_path, cfg), "--workers", workers) == 0
    index = json.loads((tmp_path / "out" / "index.json").read_text())
    assert index["keys"] == ["params.k", "shooting.F0"]
    values = [tuple(p["values"].values()) for p in index["points"]]
    assert values == [(1.0, 0.5), (1.0, 1.0), (2.0, 0.5), (2.0, 1.0)]
    for p in index["points"]:
        assert (tmp_path / "out" / p["dir"] / "run_report.json").exists()


def test_sweep_serial_and_parallel_identical(tmp_path):
    cfg = write(tmp_path, {"sweep": {"command": "integrate", "grid": {"params.k": [1.0, 2.0, 3.0]}},
                           "shooting": {"horizon": 3.0}})
    cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "a"), "--workers", "1"])
    cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "b"), "--workers", "3"])
    for i in range(3):
        rel = f"point_{i:04d}/run.csv"
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
    assert (tmp_path / "a" / "index.json").read_bytes() == (tmp_path / "b" / "index.json").read_bytes()


def test_sweep_bad_grid(tmp_path):
    cfg = {"sweep": {"command": "shoot", "grid": {"nope.x": [1]}}}
    assert run(tmp_path, "sweep", "--config", write(tmp_path, cfg)) == 2


def test_help_lists_defaults():
    out = subprocess.run([sys.executable, "-m", "solitonlab", "integrate", "--help"],
                         capture_output=True, text=True, check=True).stdout
    for section in ("params", "initial", "shooting", "integrator", "events", "output"):
        assert section in out
    assert "--seedless" in out
