import csv
import io
import json

import pytest

from jacobi_ldp import cli, ldp


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_rate_json(capsys):
    code, out, _ = run(capsys, "rate", "--b", "-3", "--x", "-1.2")
    assert code == 0
    row = json.loads(out)
    assert row["value"] == ldp.rate_J(-1.2, -3).value and row["branch"] == "linear_tail"


def test_rate_grid_csv(capsys):
    code, out, _ = run(capsys, "rate", "--nu", "2", "--x-grid", "0.5:3:6", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 6
    assert float(rows[-1]["value"]) == ldp.rate_I(3.0, 2.0).value


def test_domain(capsys):
    code, out, _ = run(capsys, "domain", "--b", "-3", "--x", "-2")
    d = json.loads(out)
    assert code == 0 and d["case"] == "i" and d["threshold"] == -1.5 and "phi_m" in d
    code, out, _ = run(capsys, "domain", "--b", "-3", "--x", "-1.2")
    assert json.loads(out)["case"] == "ii" and "phi_m" not in json.loads(out)


def test_density_routes(capsys):
    code, out, _ = run(capsys, "density", "--alpha", "0.5", "--beta", "0.8", "--t", "1", "--grid", "2")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 4
    assert all(float(r["abs_diff"]) < 1e-6 for r in rows)
    code, out, _ = run(capsys, "density", "--b", "-2", "--c", "0.1", "--t", "0.5", "--x", "0.1", "--y", "0.2",
                       "--format", "json")
    assert code == 0 and len(json.loads(out)) == 1


@pytest.mark.parametrize("argv", [
    ["density", "--alpha", "0.5", "--beta", "0.8"],                       # missing --t
    ["density", "--alpha", "0.5", "--t", "1"],                            # half a pair
    ["density", "--alpha", "0.5", "--beta", "0.8", "--p", "-3", "--q", "0", "--t", "1"],
    ["rate", "--b", "-3"],
    ["rate", "--b", "-3", "--x-grid", "1:2"],
    ["verify", "--only", "nonexistent"],
    ["simulate", "--b", "-2", "--t", "1", "--dt", "0.01", "--seed", "1", "--n-paths", "2"],
])
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(argv)
    assert exc.value.code == 2


def test_domain_error_exit_2(capsys):
    code, _, err = run(capsys, "density", "--alpha", "-1.5", "--beta", "0.8", "--t", "1")
    assert code == 2 and "error" in err
    code, _, _ = run(capsys, "simulate", "--b", "-0.5", "--t", "1", "--dt", "0.01", "--seed", "1")
    assert code == 2


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--only", "theta,recurrence", "--only", "poisson")
    assert code == 0 and out.count("PASS") == 3
    code, out, _ = run(capsys, "verify", "--only", "eigen", "--tol", "1e-15", "--format", "json")
    assert code == 1 and json.loads(out)[0]["name"] == "eigen"


def test_simulate_estimate_round_trip(tmp_path, capsys):
    outs = []
    for name in ("a", "b"):
        p = tmp_path / f"{name}.csv"
        code, _, _ = run(capsys, "simulate", "--b", "-2", "--t", "2", "--dt", "0.001", "--seed", "9", "--out", str(p))
        assert code == 0
        outs.append((p.read_bytes(), p.with_suffix(".json").read_bytes()))
    assert outs[0] == outs[1]
    code, out, _ = run(capsys, "estimate", "--input", str(tmp_path / "a.csv"))
    est = json.loads(out)
    assert code == 0 and est["mode"] == "pathwise" and est["estimate"] < 0
    code, out, _ = run(capsys, "estimate", "--input", str(tmp_path / "a.csv"), "--estimator", "girsanov",
                       "--b", "-2", "--b0", "-2")
    assert json.loads(out)["loglik"] == 0.0


def test_simulate_many_and_other_processes(tmp_path, capsys):
    code, _, _ = run(capsys, "simulate", "--b", "-2", "--t", "0.1", "--dt", "0.01", "--seed", "1", "--n-paths", "3",
                     "--threads", "2", "--out", str(tmp_path / "p.csv"))
    assert code == 0 and sorted(f.name for f in tmp_path.glob("p_*.csv")) == [f"p_0000{i}.csv" for i in range(3)]
    code, out, _ = run(capsys, "simulate", "--process", "bessel", "--dim", "3", "--t", "0.1", "--dt", "0.01",
                       "--seed", "1")
    assert code == 0 and out.startswith("t,value\n") and len(out.splitlines()) == 12
    code, _, _ = run(capsys, "simulate", "--process", "skew", "--d", "3", "--dprime", "4", "--t", "0.1",
                     "--dt", "0.01", "--seed", "1", "--out", str(tmp_path / "s.csv"))
    meta = json.loads((tmp_path / "s.json").read_text())
    assert code == 0 and meta["kind"] == "jacobi_01" and meta["d"] == 3.0


def test_numeric_failure_exit_3(tmp_path, capsys):
    p = tmp_path / "flat.csv"
    p.write_text("t,value\n0,0\n0.5,0\n1,0\n")
    code, _, err = run(capsys, "estimate", "--input", str(p))
    assert code == 3 and json.loads(err)["error"] == "DegeneratePathError"


def test_cgf(capsys):
    code, out, _ = run(capsys, "cgf", "--b", "-3", "--x", "-2", "--phi", "1", "--t", "5", "10")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["status"] for r in rows] == ["ok", "ok"]


def test_mc_ldp_config_file(tmp_path, capsys):
    cfgf = tmp_path / "run.cfg"
    cfgf.write_text("# small run\nb = -3\nx = -2.5\nt = 1, 2\nn-paths = 200\ndt = 0.01\nseed = 2\n")
    code, out, _ = run(capsys, "mc-ldp", "--config", str(cfgf), "--threads", "1", "--out", str(tmp_path / "r.jsonl"))
    res = json.loads(out)
    assert code == 0 and len(res["cells"]) == 2 and (tmp_path / "r.jsonl").exists()
    code2, out2, _ = run(capsys, "mc-ldp", "--config", str(cfgf), "--threads", "2")
    assert [c["count"] for c in json.loads(out2)["cells"]] == [c["count"] for c in res["cells"]]
