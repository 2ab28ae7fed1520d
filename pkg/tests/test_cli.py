import datetime as dt
import json

import pytest

from centroaffine import analysis, cli, report

FIXED = dt.datetime(2026, 1, 1, tzinfo=dt.timezone.utc)


def run_main(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def strip_timestamp(text):
    return "\n".join(line for line in text.splitlines() if '"timestamp"' not in line)


# ---------------------------------------------------------------- run()


def test_sphere_grid_inequality():
    cfg = cli.RunConfig("unit_sphere_2", grid=[5, 5], checks=("inequality",))
    doc, status = cli.run(cfg)
    assert status == 0
    assert doc["aggregate"]["points_evaluated"] == 25
    assert abs(doc["aggregate"]["min_slack"]) <= 1e-10


def test_paraboloid_invariants():
    cfg = cli.RunConfig("shifted_paraboloid_2", points=[[0.0, 0.0]], checks=("invariants",))
    doc, status = cli.run(cfg)
    assert status == 0
    s = doc["points"][0]["scalars"]
    assert s["normNablaK2"] == pytest.approx(6.0, abs=1e-8)
    assert s["normNablaT2"] == pytest.approx(2.0, abs=1e-8)
    assert s["mu"] == pytest.approx(-0.5, abs=1e-8)


def test_unknown_surface_run():
    with pytest.raises(cli.UnknownSurfaceError, match="unknown surface"):
        cli.run(cli.RunConfig("nosuch"))


def test_config_validation():
    with pytest.raises(cli.UsageError):
        cli.RunConfig("unit_sphere_2", grid=[0, 3])
    with pytest.raises(cli.UsageError):
        cli.RunConfig("unit_sphere_2", checks=("bogus",))


def test_skipped_points_counted():
    cfg = cli.RunConfig("canonical_viii_2", points=[[1.0, 0.0], [-1.0, 0.0]], checks=("inequality",))
    doc, status = cli.run(cfg)
    assert status == 0
    assert doc["aggregate"]["points_skipped"] == 1
    assert "DomainError" in doc["skipped"][0]["reason"]


def test_json_deterministic_with_fixed_clock():
    cfg = cli.RunConfig("perturbed_graph_3", samples=4, seed=3, checks=tuple(cli.CHECKS))
    a = report.to_json(cli.run(cfg, now=FIXED)[0])
    b = report.to_json(cli.run(cfg, now=FIXED)[0])
    assert a == b


def test_parallel_matches_serial(monkeypatch):
    cfg = cli.RunConfig("canonical_viii_3", samples=6, checks=("inequality", "residuals", "ejiri"))
    serial = report.to_json(cli.run(cfg, now=FIXED)[0])
    monkeypatch.setenv(cli.JOBS_ENV, "3")
    parallel = report.to_json(cli.run(cfg, now=FIXED)[0])
    assert serial == parallel


def test_bad_jobs_env(monkeypatch):
    monkeypatch.setenv(cli.JOBS_ENV, "many")
    with pytest.raises(cli.UsageError):
        cli.run(cli.RunConfig("unit_sphere_2", samples=1))


# ---------------------------------------------------------------- main()


def test_exit_pass(capsys):
    code, out, _ = run_main(capsys, "check", "unit_sphere_2", "--grid", "5x5", "--checks", "inequality")
    assert code == 0
    assert "check inequality: PASS" in out


def test_exit_unknown_surface(capsys):
    code, _, err = run_main(capsys, "check", "nosuch")
    assert code == 1
    assert "unknown surface" in err


def test_exit_tightened_tolerance(capsys):
    code, out, _ = run_main(
        capsys, "check", "perturbed_graph_2", "--samples", "3", "--checks", "inequality", "--tol-inequality", "1e-30"
    )
    assert code == 2
    assert "fail" in out


def test_exit_usage_errors(capsys):
    assert run_main(capsys, "frobnicate")[0] == 1
    assert run_main(capsys)[0] == 1
    assert run_main(capsys, "check", "unit_sphere_2", "--tol-equality", "-1")[0] == 1
    assert run_main(capsys, "check", "unit_sphere_2", "--point", "1,2,3")[0] == 1
    assert run_main(capsys, "check", "unit_sphere_2", "--grid", "axb")[0] == 1
    assert run_main(capsys, "check", "unit_sphere_2", "--checks", "nope")[0] == 1


def test_exit_empty_sample(capsys):
    code, _, err = run_main(capsys, "check", "canonical_viii_2", "--point", "-1,0")
    assert code == 1
    assert "empty effective sample" in err


def test_surface_file(tmp_path, capsys):
    f = tmp_path / "para.surf"
    f.write_text("name=para\nn=2\nx1=u1\nx2=u2\nx3=1+(u1^2+u2^2)/2\n")
    code, out, _ = run_main(capsys, "invariants", str(f), "--point", "0,0", "--json")
    assert code == 0
    doc = json.loads(out)
    assert doc["surface"]["name"] == "para"
    assert doc["points"][0]["scalars"]["normNablaK2"] == pytest.approx(6.0, abs=1e-8)


def test_bad_surface_file(tmp_path, capsys):
    f = tmp_path / "bad.surf"
    f.write_text("n=2\nx1=u1\nx2=u2 +\n")
    code, _, err = run_main(capsys, "check", str(f))
    assert code == 1
    assert "line 3" in err


def test_json_determinism_via_main(capsys):
    argv = ("check", "perturbed_graph_2", "--samples", "4", "--seed", "5", "--json",
            "--checks", "inequality,residuals,ejiri,invariants,classify,identities")
    _, a, _ = run_main(capsys, *argv)
    _, b, _ = run_main(capsys, *argv)
    assert strip_timestamp(a) == strip_timestamp(b)
    doc = json.loads(a)
    assert doc["schema_version"] == report.SCHEMA_VERSION
    assert set(doc["checks"]) == {"inequality", "residuals", "ejiri", "invariants", "classify", "identities"}


def test_csv_output(capsys):
    code, out, _ = run_main(capsys, "check", "unit_sphere_2", "--samples", "3", "--csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == ",".join(report.CSV_COLUMNS)
    assert len(lines) == 4


def test_classify_expect(capsys):
    ok = run_main(capsys, "classify", "perturbed_graph_2", "--samples", "3", "--expect", analysis.AGG_STRICT)
    bad = run_main(capsys, "classify", "perturbed_graph_2", "--samples", "3", "--expect", analysis.AGG_EQUALITY)
    assert ok[0] == 0 and bad[0] == 2


def test_ejiri_and_identities_text(capsys):
    code, out, _ = run_main(capsys, "ejiri", "shifted_paraboloid_2", "--point", "0.5,0")
    assert code == 0 and "ejiri lambdas" in out
    code, out, _ = run_main(capsys, "identities", "shifted_paraboloid_2", "--point", "0.5,0")
    assert code == 0 and "identities ok" in out


def test_catalog_list(capsys):
    code, out, _ = run_main(capsys, "catalog", "list")
    assert code == 0
    assert "sl3_so3" in out and "n=5" in out
    code, out, _ = run_main(capsys, "catalog", "list", "--json")
    names = [e["name"] for e in json.loads(out)]
    assert "canonical_viii_3" in names


def test_box_override(capsys):
    code, out, _ = run_main(capsys, "check", "canonical_viii_2", "--box", "3:4,0:1", "--samples", "2", "--json")
    assert code == 0
    for p in json.loads(out)["points"]:
        assert 3 <= p["point"][0] <= 4
