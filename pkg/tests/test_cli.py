import json
import subprocess
import sys

import numpy as np
import pytest

import orbitloop as ol
from orbitloop import cli


def _write(tmp_path, payload, name="scenario.json"):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return p


def test_parse_empty_object_gives_defaults(tmp_path):
    path = _write(tmp_path, {})
    scenario = cli.parse_scenario(path)
    assert scenario == ol.Scenario()


def test_parse_single_override(tmp_path):
    path = _write(tmp_path, {"horizon_s": 200.0})
    scenario = cli.parse_scenario(path)
    assert scenario.horizon == 200.0
    assert scenario.output_dt == 0.1


def test_parse_unknown_key_rejected(tmp_path):
    path = _write(tmp_path, {"hozizon": 200.0})
    with pytest.raises(ol.ScenarioError, match="hozizon"):
        cli.parse_scenario(path)
    path = _write(tmp_path, {"srp": {"thetaO": 0.1}}, "s2.json")
    with pytest.raises(ol.ScenarioError, match="srp.thetaO"):
        cli.parse_scenario(path)


def test_parse_malformed_json_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "horizon_s": 200.0,\n}\n')
    with pytest.raises(ol.ScenarioError, match="line 3"):
        cli.parse_scenario(p)


def test_parse_invariant_violation(tmp_path):
    path = _write(tmp_path, {"horizon_s": -5.0})
    with pytest.raises(ol.ScenarioError):
        cli.parse_scenario(path)


def test_parse_weights_shorthand(tmp_path):
    path = _write(tmp_path, {"weights": {"q": [1.0, 2.0, 3.0, 4.0],
                                         "r": [0.5, 0.5]}})
    scenario = cli.parse_scenario(path)
    assert np.allclose(scenario.weights.q, np.diag([1.0, 2.0, 3.0, 4.0]))
    assert np.allclose(scenario.weights.r, np.diag([0.5, 0.5]))


def test_parse_bad_noise_sigma(tmp_path):
    path = _write(tmp_path, {"measurement_noise_sigma": [0.1, 0.1, 0.1]})
    with pytest.raises(ol.ScenarioError, match="exactly 2"):
        cli.parse_scenario(path)


def test_parse_irradiance_mode_runs(tmp_path):
    path = _write(tmp_path, {
        "horizon_s": 5.0, "output_dt_s": 0.5,
        "srp": {"mode": "irradiance", "irradiance_w_m2": 1361.0,
                "theta0_rad": 0.0},
    })
    scenario = cli.parse_scenario(path)
    assert scenario.srp.mode == "irradiance"
    rec = ol.run_scenario(scenario)
    assert rec.times.size == 11


def test_set_overrides(tmp_path):
    path = _write(tmp_path, {})
    scenario = cli.parse_scenario(
        path, ["horizon_s=200", "srp.theta0_rad=0.1", "method=\"lqr\""]
    )
    assert scenario.horizon == 200.0
    assert scenario.srp.theta0 == 0.1
    assert scenario.method is ol.Method.LQR


def test_dispatch_analyze(tmp_path, capsys):
    path = _write(tmp_path, {})
    out = tmp_path / "out"
    code = cli.dispatch("analyze", path, out, "csv")
    assert code == 0
    payload = json.loads((out / "analyze.json").read_text())
    assert payload["rank_controllability"] == 4
    assert payload["rank_observability"] == 4
    assert payload["stability_class"] == "unstable"
    assert abs(payload["natural_freq_sq_per_s2"] - 4.104275907665159e-07) < 1e-18
    assert "rank(controllability) = 4" in capsys.readouterr().out


def test_dispatch_analyze_degenerate_output_map(tmp_path):
    # Analysis is rank reporting, not synthesis: a blind output map yields
    # rank 0 and a successful exit.
    path = _write(tmp_path, {"measurement_matrix": [[0, 0, 0, 0],
                                                    [0, 0, 0, 0]]})
    out = tmp_path / "out"
    assert cli.dispatch("analyze", path, out, "csv") == 0
    payload = json.loads((out / "analyze.json").read_text())
    assert payload["rank_observability"] == 0
    assert payload["rank_controllability"] == 4


def test_dispatch_missing_file_exit_2(tmp_path, capsys):
    code = cli.dispatch("analyze", tmp_path / "absent.json", tmp_path, "csv")
    assert code == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    diagnostic = json.loads(err[0])
    assert diagnostic["error"] == "ScenarioError"


def test_dispatch_unobservable_override_exit_1(tmp_path, capsys):
    path = _write(tmp_path, {"horizon_s": 1.0, "output_dt_s": 0.5})
    code = cli.dispatch(
        "simulate", path, tmp_path / "out", "csv",
        ["measurement_matrix=[[0,0,0,0],[0,0,0,0]]"],
    )
    assert code == 1
    diagnostic = json.loads(capsys.readouterr().err.strip())
    assert diagnostic["error"] == "SynthesisError"


def test_dispatch_simulate_writes_series_and_metrics(tmp_path):
    path = _write(tmp_path, {"horizon_s": 5.0, "output_dt_s": 0.5})
    out = tmp_path / "out"
    assert cli.dispatch("simulate", path, out, "csv") == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == ("t,x_p,y_p,vx,vy,xhat_p,yhat_q,vxhat,vyhat,"
                        "ux,uy,ref_x,ref_y")
    assert len(lines) == 12  # header + 11 samples
    metrics = json.loads((out / "metrics.json").read_text())
    assert set(metrics) == {"terminal_error_km", "rms_error_km",
                            "control_energy_km2_s3", "settling_time_s"}


def test_write_series_round_trip(tmp_path):
    s = ol.Scenario(horizon=2.0, output_dt=0.5)
    record = ol.run_scenario(s)
    path = tmp_path / "series.csv"
    cli.write_series(record, path, "csv")
    lines = path.read_text().splitlines()
    parsed = np.array([[float(v) for v in line.split(",")]
                       for line in lines[1:]])
    assert np.array_equal(parsed[:, 0], record.times)
    assert np.array_equal(parsed[:, 1:5], record.true_states)
    assert np.array_equal(parsed[:, 5:9], record.estimates)
    assert np.array_equal(parsed[:, 9:11], record.controls)
    assert np.array_equal(parsed[:, 11:13], record.reference[:, 0:2])


def test_write_series_absent_channels(tmp_path):
    s = ol.Scenario(horizon=1.0, output_dt=0.5, method=ol.Method.LQR)
    record = ol.run_scenario(s)
    path = tmp_path / "series.csv"
    cli.write_series(record, path, "csv")
    row = path.read_text().splitlines()[1].split(",")
    assert row[5] == row[6] == row[7] == row[8] == ""


def test_write_series_json_mirrors_names(tmp_path):
    s = ol.Scenario(horizon=1.0, output_dt=0.5)
    record = ol.run_scenario(s)
    path = tmp_path / "series.json"
    cli.write_series(record, path, "json")
    payload = json.loads(path.read_text())
    assert list(payload) == cli.SERIES_COLUMNS
    assert payload["t"] == record.times.tolist()
    assert payload["x_p"] == record.true_states[:, 0].tolist()


def test_single_sample_record_two_line_csv(tmp_path):
    rec = ol.SimulationRecord(
        method=ol.Method.LQR,
        times=np.array([0.0]),
        true_states=np.zeros((1, 4)),
        controls=np.zeros((1, 2)),
        reference=np.zeros((1, 4)),
    )
    path = tmp_path / "one.csv"
    cli.write_series(rec, path, "csv")
    assert len(path.read_text().splitlines()) == 2


def test_compare_writes_method_named_series(tmp_path):
    path = _write(tmp_path, {"horizon_s": 5.0, "output_dt_s": 0.5})
    out = tmp_path / "cmp"
    assert cli.dispatch("compare", path, out, "csv") == 0
    for name in ("uncontrolled", "lqr", "observer_only", "observer_lqr"):
        assert (out / f"trajectory_{name}.csv").exists()
    payload = json.loads((out / "compare.json").read_text())
    assert set(payload["methods"]) == {"uncontrolled", "lqr",
                                       "observer_only", "observer_lqr"}
    # Reference comparison blocks ride along with the computed values.
    assert payload["methods"]["observer_lqr"]["reference"][
        "control_energy"] == 6.7
    assert payload["methods"]["lqr"]["reference_eigenvalues"] is not None
    assert payload["reference_gains"]["pole_placement_1x4"] == [
        0.293, 0.169, 9.115, 4.998]
    assert payload["methods"]["observer_lqr"]["metrics"][
        "terminal_error_km"] >= 0.0


def test_compare_determinism_bytes(tmp_path):
    path = _write(tmp_path, {"horizon_s": 20.0, "output_dt_s": 0.5})
    out1, out2 = tmp_path / "c1", tmp_path / "c2"
    assert cli.dispatch("compare", path, out1, "csv") == 0
    assert cli.dispatch("compare", path, out2, "csv") == 0
    for child in sorted(out1.iterdir()):
        assert child.read_bytes() == (out2 / child.name).read_bytes()


def test_drift_command(tmp_path):
    path = _write(tmp_path, {"drift": {"duration_s": 3600.0,
                                       "output_dt_s": 120.0}})
    out = tmp_path / "drift"
    assert cli.dispatch("drift", path, out, "csv") == 0
    payload = json.loads((out / "drift.json").read_text())
    assert abs(payload["srp_accel_km_s2"] - 9.0769e-6 * 20 / 500 / 1000.0) \
        < 1e-20
    table = (out / "drift_series.csv").read_text().splitlines()
    assert table[0] == "t,deviation_km,relative_error"
    assert len(table) == 32  # header + 31 samples


def test_response_command(tmp_path):
    path = _write(tmp_path, {"response": {"step_horizon_s": 10.0,
                                          "step_dt_s": 0.05,
                                          "freq_points": 50}})
    out = tmp_path / "resp"
    assert cli.dispatch("response", path, out, "csv") == 0
    payload = json.loads((out / "response.json").read_text())
    assert payload["step_settling_time_s"] is not None
    assert payload["step_settling_time_s"] < 10.0
    freq = (out / "frequency_lqr.csv").read_text().splitlines()
    assert len(freq) == 51
    assert freq[0].startswith("omega_rad_s,re_00,im_00")
    assert (out / "frequency_observer_lqr.csv").exists()
    assert (out / "step_response.csv").exists()


def test_lambert_command(tmp_path):
    path = _write(tmp_path, {})
    out = tmp_path / "lam"
    assert cli.dispatch("lambert", path, out, "csv") == 0
    payload = json.loads((out / "lambert.json").read_text())
    assert payload["closure_residual_km"] < 1.0


def test_main_entry_point(tmp_path):
    path = _write(tmp_path, {})
    code = cli.main(["analyze", "--scenario", str(path),
                     "--out", str(tmp_path / "m")])
    assert code == 0


def test_cli_as_module_subprocess(tmp_path):
    path = _write(tmp_path, {})
    proc = subprocess.run(
        [sys.executable, "-m", "orbitloop.cli", "analyze",
         "--scenario", str(path), "--out", str(tmp_path / "sp")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "rank(controllability) = 4" in proc.stdout
