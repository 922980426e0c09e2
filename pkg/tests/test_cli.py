"""End-to-end CLI tests: files in, files out, exit codes."""

import json
from pathlib import Path

import pytest

from weakgadgets.cli import main, parse_target
from weakgadgets.errors import MalformedInputError


ZZ_TARGET = {
    "n": 2,
    "coupled_terms": [{"gamma": 1.0, "sites": [[0, "Z"], [1, "Z"]]}],
    "h_else": {"n": 2, "terms": []},
}

ZZZ_TARGET = {
    "n": 3,
    "coupled_terms": [{"gamma": 1.0, "sites": [[0, "Z"], [1, "Z"], [2, "Z"]]}],
    "h_else": {"n": 3, "terms": []},
}


@pytest.fixture
def zz_file(tmp_path):
    path = tmp_path / "t.json"
    path.write_text(json.dumps(ZZ_TARGET))
    return str(path)


@pytest.fixture
def zzz_file(tmp_path):
    path = tmp_path / "t3.json"
    path.write_text(json.dumps(ZZZ_TARGET))
    return str(path)


def run(*argv):
    return main([*argv, "--quiet"])


def test_build_desk_records_delta(zz_file, tmp_path):
    out = tmp_path / "g.json"
    rc = run(
        "build", "--target", zz_file, "--desk", "--R", "2", "--C", "2", "--J", "40",
        "-o", str(out),
    )
    assert rc == 0
    data = json.loads(out.read_text())
    assert data["resolved_plan"]["Delta"] == 80.0
    assert data["gadget"]["plan"]["Delta"] == 80.0
    assert data["tool_version"]
    assert data["gadget"]["known_shift"] == -1.0


def test_build_asymptotic_resource_error(zz_file, tmp_path):
    rc = run("build", "--target", zz_file, "-o", str(tmp_path / "g.json"))
    assert rc == 3  # honest asymptotic plans do not fit at desk scale


def test_verify_round_trip(zz_file, tmp_path):
    gpath = tmp_path / "g.json"
    rpath = tmp_path / "report.json"
    assert run(
        "build", "--target", zz_file, "--desk", "--R", "2", "--C", "2", "--J", "80",
        "-o", str(gpath),
    ) == 0
    rc = run(
        "verify", "--target", zz_file, "--gadget", str(gpath), "--levels", "4",
        "--eps", "0.3", "-o", str(rpath),
    )
    assert rc == 0
    report = json.loads(rpath.read_text())["report"]
    assert report["pass"]
    assert report["max_abs_error"] < 0.3
    assert (tmp_path / "report.png").exists()


def test_verify_fail_exit_code(zz_file, tmp_path):
    gpath = tmp_path / "g.json"
    run("build", "--target", zz_file, "--desk", "--R", "1", "--C", "1", "--J", "20",
        "-o", str(gpath))
    rc = run(
        "verify", "--target", zz_file, "--gadget", str(gpath), "--levels", "4",
        "--eps", "1e-6", "-o", str(tmp_path / "r.json"), "--no-plot",
    )
    assert rc == 1


def test_parse_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 2, "coupled_terms": [
        {"gamma": 1.0, "sites": [[0, "Q"], [1, "Z"]]}]}))
    rc = run("build", "--target", str(bad), "--desk", "--R", "1", "--C", "1",
             "--J", "1", "-o", str(tmp_path / "g.json"))
    assert rc == 2
    notjson = tmp_path / "notjson.json"
    notjson.write_text("{oops")
    assert run("build", "--target", str(notjson), "--desk", "--R", "1", "--C", "1",
               "--J", "1", "-o", str(tmp_path / "g.json")) == 2


def test_parse_target_names_bad_field(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 2, "coupled_terms": [], "h_else":
                               {"n": 2, "terms": [{"coeff": 1.0, "ops": [[0, "Q"]]}]}}))
    with pytest.raises(MalformedInputError, match="unknown Pauli label"):
        parse_target(str(bad))


def test_target_round_trip_through_files(zz_file):
    t = parse_target(zz_file)
    assert t.m_terms == 1
    assert t.gamma_max == 1.0


def test_json_logs_smoke(zz_file, tmp_path, capsys):
    rc = main([
        "build", "--target", zz_file, "--desk", "--R", "1", "--C", "1", "--J", "10",
        "-o", str(tmp_path / "g.json"), "--json-logs",
    ])
    assert rc == 0
    lines = [l for l in capsys.readouterr().err.strip().split("\n") if l]
    parsed = [json.loads(l) for l in lines]
    assert any(p["level"] == "info" and "resolved plan" in p["msg"] for p in parsed)


def test_sweep_csv(zz_file, tmp_path):
    csv = tmp_path / "out.csv"
    rc = run(
        "sweep", "--target", zz_file, "--vary", "Delta", "--values", "40,80,160",
        "--R", "2", "--C", "2", "--csv", str(csv),
    )
    assert rc == 0
    lines = csv.read_text().strip().split("\n")
    assert lines[0] == "param,value,max_abs_error,beta_max,J,n_total,runtime_ms,pass"
    assert len(lines) == 4
    assert (tmp_path / "out.png").exists()


def test_sweep_deterministic_bytes(zz_file, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert run(
            "sweep", "--target", zz_file, "--vary", "Delta", "--values", "40,80",
            "--R", "1", "--C", "1", "--csv", str(path), "--no-plot",
        ) == 0
    assert a.read_bytes() == b.read_bytes()


def test_selfenergy_report(zz_file, tmp_path):
    gpath = tmp_path / "g.json"
    run("build", "--target", zz_file, "--desk", "--R", "2", "--C", "2", "--J", "80",
        "-o", str(gpath))
    rpath = tmp_path / "se.json"
    rc = run(
        "selfenergy", "--target", zz_file, "--gadget", str(gpath),
        "--orders", "4", "--zpoints", "7", "-o", str(rpath),
    )
    assert rc == 0
    rep = json.loads(rpath.read_text())["report"]
    assert rep["bounds_ok"]
    assert rep["subspace"]["ok"]
    assert len(rep["z_values"]) == 7
    assert rep["max_deviation"] < 0.1


def test_subspace_command(zz_file, tmp_path):
    gpath = tmp_path / "g.json"
    run("build", "--target", zz_file, "--desk", "--R", "2", "--C", "2", "--J", "80",
        "-o", str(gpath))
    rpath = tmp_path / "sub.json"
    rc = run("subspace", "--gadget", str(gpath), "--monotonicity-trials", "2",
             "-o", str(rpath), "--no-plot")
    assert rc == 0
    data = json.loads(rpath.read_text())
    assert data["report"]["ok"]
    assert data["monotonicity"]["ok"]


def test_build3_and_verify(zzz_file, tmp_path):
    gpath = tmp_path / "g3.json"
    rc = run(
        "build3", "--target", zzz_file, "--delta1", "216", "--delta2", "24000",
        "-o", str(gpath),
    )
    assert rc == 0
    rc = run(
        "verify", "--target", zzz_file, "--gadget", str(gpath), "--levels", "8",
        "--eps", "2.0", "-o", str(tmp_path / "r3.json"), "--no-plot",
    )
    assert rc == 0


def test_build3_rejects_2local(zz_file, tmp_path):
    rc = run("build3", "--target", zz_file, "--delta1", "64", "--delta2", "1000",
             "-o", str(tmp_path / "g.json"))
    assert rc == 2


def test_amplify_writes_both_files(zz_file, tmp_path):
    gpath = tmp_path / "amp.json"
    rc = run(
        "amplify", "--target", zz_file, "--theta", "3", "--R", "2", "--C", "2",
        "--J", "160", "-o", str(gpath),
    )
    assert rc == 0
    tpath = tmp_path / "amp.target.json"
    assert tpath.exists()
    amped = parse_target(str(tpath))
    assert amped.m_terms == 3
    rc = run(
        "verify", "--target", str(tpath), "--gadget", str(gpath), "--levels", "4",
        "--eps", "0.15", "-o", str(tmp_path / "ra.json"), "--no-plot",
    )
    assert rc == 0


def test_demo_appxc(zzz_file, tmp_path):
    rpath = tmp_path / "appxc.json"
    rc = run(
        "demo-appxC", "--target", zzz_file, "--deltas", "50,100,200",
        "-o", str(rpath),
    )
    assert rc == 0
    rep = json.loads(rpath.read_text())["report"]
    assert rep["experimental"]
    assert rep["coefficient_identity_residual"] <= 1e-12
    assert rep["delta_sweep"]["decreasing"]
    betas = [row["beta"] for row in rep["pathology"]]
    assert betas == sorted(betas)
    assert (tmp_path / "appxc.png").exists()


def test_json_reports_deterministic(zz_file, tmp_path):
    outs = []
    for name in ("r1.json", "r2.json"):
        gpath = tmp_path / f"g_{name}"
        run("build", "--target", zz_file, "--desk", "--R", "2", "--C", "2",
            "--J", "80", "-o", str(gpath))
        rpath = tmp_path / name
        run("verify", "--target", zz_file, "--gadget", str(gpath), "--levels", "4",
            "--eps", "0.3", "-o", str(rpath), "--no-plot")
        data = json.loads(rpath.read_text())
        data.pop("command", None)
        outs.append(json.dumps(data, sort_keys=True))
    assert outs[0] == outs[1]
