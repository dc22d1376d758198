import json
import math
import subprocess
import sys

import numpy as np
import pytest

from phiproj import cli, io


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(str(v) if isinstance(v, str) else repr(float(v)) for v in r) + "\n")
    return str(path)


def _write_json(path, obj):
    path.write_text(json.dumps(obj), encoding="utf-8")
    return str(path)


def _run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def grid_data(tmp_path):
    n = 201
    x = (np.arange(n) + 0.5) / n
    return _write_csv(tmp_path / "data.csv", ["x"], [[v] for v in x])


def test_project_kl_m(tmp_path, grid_data, capsys):
    cfg = _write_json(tmp_path / "cfg.json", {"divergence": {"gamma": 0.0}, "targets": {"x": 0.25}})
    code, out, _ = _run(["project", grid_data, "--config", cfg], capsys)
    assert code == 0
    rep = json.loads(out)
    assert set(cli.REPORT_KEYS) <= set(rep)
    assert rep["status"] == "converged"
    assert abs(rep["gap"]) < 1e-10
    q = np.array(rep["q_star"])
    assert q.size == 201 and np.all(q > 0)
    assert rep["diagnostics"]["cq_status"] == "holds"


def test_project_chi2_full_line_closed_form(tmp_path, grid_data, capsys):
    cfg = _write_json(tmp_path / "cfg.json",
                      {"divergence": {"gamma": 2.0, "nonnegative": False}, "targets": [0.25]})
    code, out, _ = _run(["project", grid_data, "--config", cfg], capsys)
    assert code == 0
    lam = json.loads(out)["lambda"]
    assert lam[1] == pytest.approx(-3.0, abs=1e-3)


def test_report_round_trips_at_full_precision(tmp_path, grid_data, capsys):
    cfg_obj = {"divergence": {"gamma": 1.0}, "targets": [0.3]}
    cfg = _write_json(tmp_path / "cfg.json", cfg_obj)
    out_path = tmp_path / "rep.json"
    assert cli.main(["project", grid_data, "--config", cfg, "--out", str(out_path)]) == 0
    rep = json.loads(out_path.read_text())
    # recompute in process and compare the parsed numbers
    table = io.read_table(grid_data)
    conf = io.parse_config(cfg_obj)
    direct, _ = cli.solve_report(cli._problem_from_table(table, conf, conf.family()), conf)
    assert rep["gap"] == pytest.approx(direct["gap"], abs=1e-12)
    assert rep["dual_value"] == direct["dual_value"]  # 17 digits round-trip exactly
    assert rep["q_star"] == [float(v) for v in direct["q_star"]]


def test_dumps_17_digits_and_nulls():
    text = io.dumps({"a": 0.1, "b": math.inf, "c": [1 / 3]}, indent=None)
    assert "0.10000000000000001" in text
    d = json.loads(text)
    assert d["b"] is None and d["c"][0] == 1 / 3


def test_project_with_oracle(tmp_path, capsys):
    data = _write_csv(tmp_path / "d.csv", ["x"], [[0.0], [1.0], [2.0]])
    cfg = _write_json(tmp_path / "cfg.json", {"divergence": {"gamma": 0.5}, "targets": [1.3],
                                              "oracle": True, "oracle_resolution": 201})
    code, out, _ = _run(["project", data, "--config", cfg], capsys)
    rep = json.loads(out)
    assert code == 0
    assert rep["oracle"]["value"] == pytest.approx(rep["primal_value"], abs=1e-8)


def test_project_unreachable_target_exit_2(tmp_path, capsys):
    data = _write_csv(tmp_path / "d.csv", ["x"], [[0.0], [1.0], [2.0]])
    cfg = _write_json(tmp_path / "cfg.json", {"divergence": {"gamma": 0.0}, "targets": [5.0]})
    code, out, _ = _run(["project", data, "--config", cfg], capsys)
    assert code == 2
    rep = json.loads(out)
    assert rep["status"] != "converged" and rep["q_star"] is None


def test_project_singleton_edge_exit_3(tmp_path, capsys):
    data = _write_csv(tmp_path / "d.csv", ["x"], [[0.0], [1.0]])
    cfg = _write_json(tmp_path / "cfg.json", {"divergence": {"gamma": 0.0}, "targets": [1.0]})
    code, out, _ = _run(["project", data, "--config", cfg], capsys)
    assert code == 3
    assert json.loads(out)["diagnostics"]["cq_status"] == "fails_provably"


def test_rank_deficient_reports_kernel(tmp_path, capsys):
    data = _write_csv(tmp_path / "d.csv", ["x", "y"], [[0.0, 1.0], [1.0, 3.0], [2.0, 5.0]])
    code, _, err = _run(["diagnose", data], capsys)
    assert code == 1
    kernel = json.loads(err)["kernel"]
    assert len(kernel) == 3 and max(abs(v) for v in kernel) > 0


@pytest.mark.parametrize("content, needle", [
    ("x\n1.0\nabc\n", "line 3, field 'x'"),
    ("x,y\n1.0\n", "line 2: expected 2 fields"),
    ("", "empty file"),
    ("x,x\n1,2\n", "duplicate column"),
    ("x\n", "no data rows"),
])
def test_malformed_csv(tmp_path, capsys, content, needle):
    p = tmp_path / "bad.csv"
    p.write_text(content, encoding="utf-8")
    code, _, err = _run(["diagnose", str(p)], capsys)
    assert code == 1 and needle in err


@pytest.mark.parametrize("cfg, needle", [
    ({"divergence": {"gamma": 0.5}, "bogus": 1}, "unknown keys"),
    ({"tol": -1}, "tol must be positive"),
    ({"targets": {"nope": 1.0}}, "unknown columns"),
    ({"divergence": {"gamma": 1.0, "nonnegative": False}}, "error"),
])
def test_bad_config(tmp_path, grid_data, capsys, cfg, needle):
    c = _write_json(tmp_path / "cfg.json", cfg)
    code, _, err = _run(["project", grid_data, "--config", c], capsys)
    assert code == 1 and needle in err


def test_weights_column_and_renormalize(tmp_path, capsys):
    data = _write_csv(tmp_path / "d.csv", ["id", "weight", "x"],
                      [["a", 2.0, 0.0], ["b", 1.0, 1.0], ["c", 1.0, 2.0]])
    cfg = _write_json(tmp_path / "cfg.json", {"targets": [1.0]})
    code, _, err = _run(["project", data, "--config", cfg], capsys)
    assert code == 1 and "mass" in err
    code, out, _ = _run(["project", data, "--config", cfg, "--renormalize"], capsys)
    assert code == 0


def test_el_weights(tmp_path, capsys):
    rng = np.random.default_rng(41)
    x = rng.normal(2.0, 1.0, size=40)
    sample = _write_csv(tmp_path / "s.csv", ["x"], [[v] for v in x])
    code, out, _ = _run(["el", sample, "--target", "x=2.2"], capsys)
    assert code == 0
    rep = json.loads(out)
    w = np.array(rep["weights"])
    assert np.all(w > 0) and w.sum() == pytest.approx(1.0, abs=1e-12)
    assert w @ x == pytest.approx(2.2, abs=1e-10)
    # the EL weights are 1 / (n (1 + t (x - mu)))
    t = -rep["lambda"][1]
    np.testing.assert_allclose(w, 1.0 / (40 * (1.0 + t * (x - 2.2))), rtol=1e-8)
    assert rep["neg2_log_el_ratio"] == pytest.approx(-2 * np.sum(np.log(40 * w)), rel=1e-10)


def test_el_at_sample_mean_gives_uniform(tmp_path, capsys):
    x = np.array([0.0, 1.0, 3.0, 4.0])
    sample = _write_csv(tmp_path / "s.csv", ["x"], [[v] for v in x])
    code, out, _ = _run(["el", sample, "--target", "2.0"], capsys)
    assert code == 0
    np.testing.assert_allclose(json.loads(out)["weights"], 0.25, atol=1e-14)


def test_el_outside_hull(tmp_path, capsys):
    sample = _write_csv(tmp_path / "s.csv", ["x"], [[0.0], [1.0], [2.0]])
    code, out, _ = _run(["el", sample, "--target", "5"], capsys)
    assert code == 2 and json.loads(out)["weights"] is None
    code, _, err = _run(["el", sample], capsys)
    assert code == 1


def test_divergence_command(tmp_path, capsys):
    P = _write_csv(tmp_path / "p.csv", ["id", "weight"], [["a", 1.0]])
    Q = _write_csv(tmp_path / "q.csv", ["id", "weight"], [["a", 0.5], ["b", 0.5]])
    code, out, _ = _run(["divergence", P, Q, "--gamma", "0"], capsys)
    assert code == 0 and json.loads(out)["value"] is None  # +inf written as null
    assert json.loads(out)["finite"] is False
    code, out, _ = _run(["divergence", P, Q, "--gamma", "0", "--extended"], capsys)
    assert json.loads(out)["value"] == pytest.approx(math.log(2.0), abs=1e-15)


def test_conjugate_command(capsys):
    code, out, _ = _run(["conjugate", "--gamma", "0", "--points=-1,0,0.5,1,2"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "x,phi,phi_prime,conj,conj_prime"
    row = dict(zip(lines[0].split(","), lines[2].split(",")))
    assert row["x"] == "0" and row["conj"] == "0" and row["conj_prime"] == "1"
    # t = 1 is the right end of the conjugate domain of KL_m
    row = dict(zip(lines[0].split(","), lines[4].split(",")))
    assert row["conj"] == "inf" and row["conj_prime"] == ""
    code, out, _ = _run(["conjugate", "--gamma", "1", "--tmin", "-1", "--tmax", "1", "--num", "4"], capsys)
    assert len(out.strip().splitlines()) == 1 + 5  # zero inserted


def test_conjugate_rejects_full_line_for_other_gamma(capsys):
    code, _, err = _run(["conjugate", "--gamma", "0.5", "--full-line"], capsys)
    assert code == 1


def test_batch(tmp_path, grid_data, capsys):
    ok = _write_json(tmp_path / "ok.json", {"targets": [0.3]})
    bad = _write_json(tmp_path / "bad.json", {"divergence": {"gamma": 0.0}, "targets": [5.0]})
    manifest = _write_json(tmp_path / "m.json", [
        {"data": grid_data, "config": ok, "out": str(tmp_path / "r1.json")},
        {"data": grid_data, "config": bad, "out": str(tmp_path / "r2.json")},
    ])
    assert cli.main(["batch", manifest, "--jobs", "2"]) == 2
    assert json.loads((tmp_path / "r1.json").read_text())["status"] == "converged"
    assert json.loads((tmp_path / "r2.json").read_text())["status"] != "converged"
    bad_manifest = _write_json(tmp_path / "bm.json", {"data": 1})
    assert cli.main(["batch", bad_manifest]) == 1


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "phiproj", "conjugate", "--points", "0"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and res.stdout.startswith("x,phi")
