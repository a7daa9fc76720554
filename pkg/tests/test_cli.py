import csv
import json

import pytest

from cartanlab.checks import FAIL, PASS, WARN, Check
from cartanlab.cli import main
from cartanlab.presets import BUILTIN, Preset, catalog
from cartanlab.report import Report


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_so3_all_pass(capsys):
    code, out, _ = run(capsys, "check", "--preset", "so3-mc")
    assert code == 0
    assert "curvature_norm" in out and "FAIL" not in out and "WARN" not in out


def test_prolong_so3_from_group_flag(capsys):
    code, out, _ = run(capsys, "prolong", "--group", "so3", "--k-max", "2", "--format", "json")
    assert code == 0
    table = json.loads(out)["info"]["table"]
    assert table["dims"] == [3, 0, 0] and table["verdict"] == "TYPE1"


def test_malformed_json_exits_2_without_report(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"model": {"kind": "group",\n "algebra": "so3",,}')
    code, out, err = run(capsys, "check", "--config", str(bad))
    assert code == 2 and out == ""
    assert ":2:19:" in err


@pytest.mark.parametrize("config,field", [
    ({"model": {"kind": "group", "algebra": "so3"}, "kappa": {"preset": "maurer_cartan"}, "flat": "yes"},
     "config.flat"),
    ({"model": {"kind": "group", "algebra": "so9"}, "kappa": {"preset": "maurer_cartan"}}, "config.model.algebra"),
    ({"kappa": {"preset": "maurer_cartan"}}, "config.model")])
def test_schema_errors_name_the_field(capsys, tmp_path, config, field):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(config))
    code, out, err = run(capsys, "check", "--config", str(path))
    assert code == 2 and out == ""
    assert field in err


@pytest.mark.parametrize("argv", [["check", "--preset", "nope"], ["check", "--preset", "so2-flat"],
                                  ["check"], ["check", "--preset", "so3-mc", "--seed", "xyz"],
                                  ["bogus"], ["check", "--preset", "so3-mc", "--config", "x.json"]])
def test_argument_errors_exit_2(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 2 and out == ""


def test_failing_check_exits_1(capsys, tmp_path):
    cfg = dict(next(p for p in BUILTIN if p.name == "e2-curved").config, flat=True)
    path = tmp_path / "curved.json"
    path.write_text(json.dumps(cfg))
    code, out, _ = run(capsys, "check", "--config", str(path), "--format", "json")
    report = json.loads(out)
    assert code == 1 and report["summary"]["status"] == FAIL
    assert any(c["name"] == "curvature_norm" and c["verdict"] == FAIL for c in report["checks"])


def test_wrapped_config_file_and_subcommand_mismatch(capsys, tmp_path):
    preset = next(p for p in BUILTIN if p.name == "so2-mc")
    path = tmp_path / "wrapped.json"
    path.write_text(preset.to_json())
    assert run(capsys, "check", "--config", str(path))[0] == 0
    assert run(capsys, "jets", "--config", str(path))[0] == 2


def test_verdict_bands_and_strict_status():
    assert Check("a", 0.5, 1.0).verdict == PASS
    assert Check("a", 1.0, 1.0).verdict == WARN
    assert Check("a", 9.9, 1.0).verdict == WARN
    assert Check("a", 10.0, 1.0).verdict == FAIL
    assert Check("a", float("nan"), 1.0).verdict == FAIL
    assert Check("a", 1e9, None).verdict == PASS
    assert Check("a", 5.0, 1.0).scaled(10).verdict == PASS
    warn = [Check("a", 2.0, 1.0)]
    assert Report("check", "x", 1, 1, 1.0, False, warn).exit_code == 0
    assert Report("check", "x", 1, 1, 1.0, True, warn).exit_code == 1


def test_tol_scale_is_applied(capsys):
    _, out, _ = run(capsys, "check", "--preset", "so2-mc", "--format", "json", "--tol-scale", "2")
    tols = {c["name"]: c["tolerance"] for c in json.loads(out)["checks"]}
    assert tols["curvature_norm"] == pytest.approx(2e-8)


def test_list_presets_contents_and_stability(capsys):
    code, out, _ = run(capsys, "list-presets", "--format", "json")
    assert code == 0
    names = {a["name"] for a in json.loads(out)["algebras"]}
    assert {"so3", "sl2", "e2", "co3"} <= names
    assert run(capsys, "list-presets", "--format", "json")[1] == out
    text = run(capsys, "list-presets")[1]
    assert "so3-mc" in text and "co3-k2" in text


@pytest.mark.parametrize("preset", BUILTIN, ids=lambda p: p.name)
def test_preset_json_round_trip(preset):
    again = Preset.from_dict(json.loads(preset.to_json()))
    assert again == preset


def test_user_preset_directory(capsys, tmp_path, monkeypatch):
    user = Preset("my-so2", "check", "user copy", {"model": {"kind": "group", "algebra": "so2"},
                                                   "kappa": {"preset": "maurer_cartan"}, "flat": True})
    (tmp_path / "my.json").write_text(user.to_json())
    override = Preset("so3-mc", "check", "overridden", user.config)
    (tmp_path / "override.json").write_text(override.to_json())
    monkeypatch.setenv("CARTANLAB_PRESET_DIR", str(tmp_path))
    assert run(capsys, "check", "--preset", "my-so2")[0] == 0
    names = {p["name"]: p["description"] for p in catalog()["presets"]["check"]}
    assert names["my-so2"] == "user copy" and names["so3-mc"] == "overridden"
    (tmp_path / "broken.json").write_text("{")
    assert run(capsys, "check", "--preset", "my-so2")[0] == 2


def test_csv_series(capsys, tmp_path):
    path = tmp_path / "series.csv"
    code, _, _ = run(capsys, "develop", "--preset", "so3-exp", "--csv", str(path))
    assert code == 0
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["series", "parameter", "residual"]
    body = [r for r in rows[1:] if r[0] == "rk4_endpoint_error_vs_steps"]
    assert [float(r[1]) for r in body] == [8.0, 16.0, 32.0, 64.0]
    errs = [float(r[2]) for r in body]
    assert errs == sorted(errs, reverse=True)


@pytest.mark.parametrize("preset", BUILTIN, ids=lambda p: f"{p.subcommand}:{p.name}")
def test_every_preset_is_deterministic_and_passes(capsys, preset):
    outs = []
    for _ in range(2):
        code = main([preset.subcommand, "--preset", preset.name, "--format", "json"])
        outs.append(capsys.readouterr().out)
        assert code == 0
    assert outs[0] == outs[1]
