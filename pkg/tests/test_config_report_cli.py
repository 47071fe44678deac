import json
import math

import pytest

from geofol.cli import SCENARIOS, SUITES, main
from geofol.config import SCHEMA, ConfigError, ScenarioConfig, reference
from geofol.report import SCHEMA_VERSION, build_report, dumps, sanitize

SMALL = """
[run]
seed = 3
csv_samples = 20
[surfaces]
samples = 2
horizon = 40
[riemannize]
points = 10
"""


def test_defaults_validate():
    cfg = ScenarioConfig()
    cfg.validate()
    assert cfg["run"]["seed"] == 0
    assert cfg["orbits"]["u0"] == [0.3, 0.7, 1.0, 1.5]


def test_reference_round_trips_to_defaults():
    assert ScenarioConfig.from_text(reference()).values == ScenarioConfig().values


def test_every_schema_key_documented():
    text = reference()
    for section, keys in SCHEMA.items():
        assert f"[{section}]" in text
        for key in keys:
            assert f"\n{key} = " in text


@pytest.mark.parametrize("text", [
    "[nope]\nx = 1",
    "[run]\ncolour = red",
    "[flow]\ntol = -1e-9",
    "[flow]\ntol = 0",
    "[run]\nseed = 1.5",
    "[run]\nseed = abc",
    "[run]\njobs = 0",
    "[orbits]\nhorizon = inf",
    "[run]\ncsv = maybe",
    "[typechange]\nmutation = swap",
    "[orbits]\nu0 =",
    "not an ini file",
])
def test_invalid_configs_rejected(text):
    with pytest.raises(ConfigError):
        ScenarioConfig.from_text(text)


def test_overrides():
    cfg = ScenarioConfig().with_overrides(seed=7, tol=1e-9)
    assert cfg["run"]["seed"] == 7
    assert cfg["flow"]["tol"] == cfg["sasaki"]["tol"] == cfg["orbits"]["integ_tol"] == 1e-9
    assert ScenarioConfig()["flow"]["tol"] == 1e-10
    with pytest.raises(ConfigError):
        ScenarioConfig().with_overrides(tol=-1.0)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        ScenarioConfig.from_file(tmp_path / "missing.ini")


def test_sanitize_non_finite():
    assert sanitize({"a": math.nan, "b": [math.inf, -math.inf], "c": (1, 2.5)}) == {
        "a": "nan", "b": ["inf", "-inf"], "c": [1, 2.5]}


def test_report_summary_and_fingerprint():
    suites = [{"name": "s", "pass": False, "checks": [{"name": "a", "pass": True}, {"name": "b", "pass": False}]}]
    rep = build_report("x", {"run": {"seed": 1}}, suites, {})
    assert rep["schema_version"] == SCHEMA_VERSION
    assert rep["summary"] == {"checks": 2, "failed": ["b"]}
    assert rep["overall_pass"] is False
    assert rep["fingerprint"]["sha256"] == build_report("y", {"run": {"seed": 1}}, [], {})["fingerprint"]["sha256"]
    assert build_report("x", {}, [], {})["overall_pass"] is False
    json.loads(dumps(rep))


def test_scenarios_name_known_suites():
    for keys in SCENARIOS.values():
        assert set(keys) <= set(SUITES)
    assert set(SCENARIOS["all"]) == set(SUITES)


def test_print_defaults(capsys):
    assert main(["--print-defaults"]) == 0
    assert capsys.readouterr().out.strip() == reference().strip()


def test_missing_scenario_is_an_error(capsys):
    assert main([]) == 1


def test_bad_config_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text("[flow]\ntol = -1\n")
    assert main(["orbit-sweep", "--config", str(path), "--out", str(tmp_path / "o")]) == 1
    assert "tolerance" in capsys.readouterr().err


def test_surface_audit_is_deterministic_and_writes_csv(tmp_path):
    cfg = tmp_path / "small.ini"
    cfg.write_text(SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["surface-audit", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["surface-audit", "--config", str(cfg), "--out", str(b)]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    rep = json.loads((a / "report.json").read_text())
    assert rep["overall_pass"] is True
    assert rep["fingerprint"]["parameters"]["run"]["seed"] == 3
    header = (a / "S2_1_spacelike_0.csv").read_text().splitlines()[0]
    assert header == "s,w,theta,vw,vtheta,g_vv"


def test_jobs_do_not_change_the_report(tmp_path):
    cfg = tmp_path / "small.ini"
    cfg.write_text(SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["riemannize-check", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["riemannize-check", "--config", str(cfg), "--out", str(b), "--jobs", "2"]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


def test_mutated_model_fails_with_named_check(tmp_path, capsys):
    cfg = tmp_path / "mut.ini"
    cfg.write_text("[typechange]\nmutation = flip:0,3\naudit_points = 2000\n"
                   "[sampling]\npoints = 40\nbracket_points = 2\noverlap_points = 2\ncrosspath_points = 5\n"
                   "u_grid = 201\n")
    assert main(["verify-typechange", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "FAIL [" in err
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["overall_pass"] is False and rep["summary"]["failed"]
