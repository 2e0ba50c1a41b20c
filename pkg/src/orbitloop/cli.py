"""Command-line front end.

Subcommands: analyze, synthesize, lambert, simulate, compare, drift,
response.  Scenario files are strict JSON (unknown keys are rejected);
--set key=value overrides are applied onto the parsed tree using dotted
paths.  Series files are CSV or JSON with 17-significant-digit numbers so
every double round-trips bit-exactly; reports are JSON plus a short text
summary on stdout.  Exit codes: 0 success, 1 numerical or synthesis
failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (
    OrbitState,
    PhysicalConstants,
    SpacecraftParams,
    SrpConfig,
    lambert_solve,
    linearize_plant,
)
from .errors import ScenarioError
from .linalg import eigenvalues, rank
from .ltisys import (
    StateSpace,
    controllability_matrix,
    default_frequency_grid,
    frequency_response,
    observability_matrix,
    stability_class,
    step_response,
)
from .simulate import (
    Method,
    PlantMode,
    ReferenceMode,
    REFERENCE_EIGENVALUES,
    REFERENCE_GAINS,
    REFERENCE_METRICS,
    REFERENCE_NATURAL_FREQ_SQ,
    REFERENCE_SRP_PRESSURE_PA,
    Scenario,
    assemble_separation_loop,
    compare_methods,
    compute_metrics,
    propagate_two_body,
    run_scenario,
    srp_drift_study,
    synthesize_for_scenario,
)
from .synthesis import (
    GammaRangeError,
    SynthesisError,
    Weights,
    hinf_state_feedback,
    lqr_loop_transfer,
    observer_compensator,
)

SERIES_COLUMNS = [
    "t", "x_p", "y_p", "vx", "vy",
    "xhat_p", "yhat_q", "vxhat", "vyhat",
    "ux", "uy", "ref_x", "ref_y",
]


@dataclass
class DriftSettings:
    duration_s: float = 86400.0
    output_dt_s: float = 60.0
    srp_magnitude_km_s2: float | None = None  # None: pressure-equivalent default
    theta0_rad: float = 0.0


@dataclass
class ResponseSettings:
    step_horizon_s: float = 15.0
    step_dt_s: float = 0.01
    freq_points: int = 400
    freq_lo_rad_s: float = 1.0e-5
    freq_hi_rad_s: float = 1.0e1


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _expect(tree: dict, allowed: dict, context: str):
    for key in tree:
        if key not in allowed:
            raise ScenarioError(f"unknown key {context + key!r}")


def _vec4(value, name):
    try:
        v = [float(x) for x in value]
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{name} must be a list of 4 numbers") from exc
    if len(v) != 4:
        raise ScenarioError(f"{name} must have exactly 4 entries")
    return v


def _sigma_pair(value):
    try:
        pair = tuple(float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ScenarioError("measurement_noise_sigma must be two numbers") from exc
    if len(pair) != 2:
        raise ScenarioError("measurement_noise_sigma must have exactly 2 entries")
    return pair


def _matrix_from(value, name, shape):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1 and shape[0] == shape[1] and arr.size == shape[0]:
        arr = np.diag(arr)  # diagonal shorthand
    if arr.shape != shape:
        raise ScenarioError(f"{name} must have shape {shape[0]}x{shape[1]}")
    return arr


_TOP_KEYS = {
    "x0", "xf", "horizon_s", "output_dt_s", "rtol", "atol", "srp",
    "spacecraft", "weights", "observer_speed_factor", "method",
    "reference_mode", "xhat0", "measurement_noise_sigma", "noise_seed",
    "disturbance_matrix", "measurement_matrix", "plant_mode",
    "linearization_sign", "lambert_direction", "settle_band",
    "mu_km3_s2", "c_light_km_s", "drift", "response",
}
_SRP_KEYS = {"mode", "magnitude_km_s2", "irradiance_w_m2", "theta0_rad"}
_CRAFT_KEYS = {"mass_kg", "area_m2", "reflectivity"}
_WEIGHT_KEYS = {"q", "r"}
_DRIFT_KEYS = {"duration_s", "output_dt_s", "srp_magnitude_km_s2", "theta0_rad"}
_RESPONSE_KEYS = {"step_horizon_s", "step_dt_s", "freq_points",
                  "freq_lo_rad_s", "freq_hi_rad_s"}


def build_scenario(tree: dict) -> tuple[Scenario, DriftSettings, ResponseSettings]:
    """Construct a Scenario (plus drift/response settings) from a parsed
    scenario tree, rejecting unknown keys anywhere in the tree."""
    if not isinstance(tree, dict):
        raise ScenarioError("scenario root must be a JSON object")
    _expect(tree, _TOP_KEYS, "")

    constants = PhysicalConstants(
        mu=float(tree.get("mu_km3_s2", PhysicalConstants().mu)),
        c_light=float(tree.get("c_light_km_s", PhysicalConstants().c_light)),
    )

    srp_tree = tree.get("srp", {})
    _expect(srp_tree, _SRP_KEYS, "srp.")
    srp_defaults = SrpConfig()
    srp = SrpConfig(
        mode=srp_tree.get("mode", srp_defaults.mode),
        magnitude_km_s2=float(srp_tree.get("magnitude_km_s2",
                                           srp_defaults.magnitude_km_s2)),
        irradiance_w_m2=float(srp_tree.get("irradiance_w_m2",
                                           srp_defaults.irradiance_w_m2)),
        theta0=float(srp_tree.get("theta0_rad", srp_defaults.theta0)),
    )

    craft_tree = tree.get("spacecraft", {})
    _expect(craft_tree, _CRAFT_KEYS, "spacecraft.")
    craft = SpacecraftParams(
        mass=float(craft_tree.get("mass_kg", 500.0)),
        area=float(craft_tree.get("area_m2", 20.0)),
        reflectivity_multiplier=float(craft_tree.get("reflectivity", 1.0)),
    )

    weights_tree = tree.get("weights", {})
    _expect(weights_tree, _WEIGHT_KEYS, "weights.")
    q = _matrix_from(weights_tree["q"], "weights.q", (4, 4)) \
        if "q" in weights_tree else np.eye(4)
    r = _matrix_from(weights_tree["r"], "weights.r", (2, 2)) \
        if "r" in weights_tree else np.eye(2)

    defaults = Scenario()
    x0 = _vec4(tree["x0"], "x0") if "x0" in tree else None
    xf = _vec4(tree["xf"], "xf") if "xf" in tree else None

    def _enum(cls, value, name):
        try:
            return cls(value)
        except ValueError as exc:
            options = ", ".join(e.value for e in cls)
            raise ScenarioError(f"{name} must be one of: {options}") from exc

    try:
        scenario = Scenario(
            x0=OrbitState((x0[0], x0[1]), (x0[2], x0[3])) if x0 else defaults.x0,
            xf=OrbitState((xf[0], xf[1]), (xf[2], xf[3])) if xf else defaults.xf,
            horizon=float(tree.get("horizon_s", defaults.horizon)),
            output_dt=float(tree.get("output_dt_s", defaults.output_dt)),
            rtol=float(tree.get("rtol", defaults.rtol)),
            atol=float(tree.get("atol", defaults.atol)),
            srp=srp,
            spacecraft=craft,
            weights=Weights(q, r),
            observer_speed_factor=float(tree.get("observer_speed_factor", 4.0)),
            method=_enum(Method, tree.get("method", "observer_lqr"), "method"),
            reference_mode=_enum(ReferenceMode,
                                 tree.get("reference_mode", "lambert_arc"),
                                 "reference_mode"),
            xhat0=tuple(_vec4(tree["xhat0"], "xhat0"))
            if tree.get("xhat0") is not None else None,
            measurement_noise_sigma=_sigma_pair(
                tree.get("measurement_noise_sigma", (0.0, 0.0))
            ),
            noise_seed=int(tree.get("noise_seed", 0)),
            disturbance_matrix=_matrix_from(
                tree["disturbance_matrix"], "disturbance_matrix", (4, 2)
            ) if tree.get("disturbance_matrix") is not None else None,
            measurement_matrix=_matrix_from(
                tree["measurement_matrix"], "measurement_matrix", (2, 4)
            ) if tree.get("measurement_matrix") is not None else None,
            plant_mode=_enum(PlantMode, tree.get("plant_mode", "nonlinear"),
                             "plant_mode"),
            linearization_sign=float(tree.get("linearization_sign", 1.0)),
            lambert_direction=str(tree.get("lambert_direction", "prograde")),
            settle_band=float(tree.get("settle_band", 0.02)),
            constants=constants,
        )
    except ScenarioError:
        raise
    except (ValueError, TypeError) as exc:
        raise ScenarioError(str(exc)) from exc

    drift_tree = tree.get("drift", {})
    _expect(drift_tree, _DRIFT_KEYS, "drift.")
    drift = DriftSettings(
        duration_s=float(drift_tree.get("duration_s", 86400.0)),
        output_dt_s=float(drift_tree.get("output_dt_s", 60.0)),
        srp_magnitude_km_s2=(
            float(drift_tree["srp_magnitude_km_s2"])
            if drift_tree.get("srp_magnitude_km_s2") is not None else None
        ),
        theta0_rad=float(drift_tree.get("theta0_rad", 0.0)),
    )
    response_tree = tree.get("response", {})
    _expect(response_tree, _RESPONSE_KEYS, "response.")
    response = ResponseSettings(
        step_horizon_s=float(response_tree.get("step_horizon_s", 15.0)),
        step_dt_s=float(response_tree.get("step_dt_s", 0.01)),
        freq_points=int(response_tree.get("freq_points", 400)),
        freq_lo_rad_s=float(response_tree.get("freq_lo_rad_s", 1.0e-5)),
        freq_hi_rad_s=float(response_tree.get("freq_hi_rad_s", 1.0e1)),
    )
    return scenario, drift, response


def _apply_override(tree: dict, dotted: str, raw: str):
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    keys = dotted.split(".")
    node = tree
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ScenarioError(f"override path {dotted!r} crosses a non-object")
    node[keys[-1]] = value


def parse_scenario(path, overrides=()) -> Scenario:
    """Parse a scenario file (strict schema) and apply overrides."""
    scenario, _, _ = _load_settings(path, overrides)
    return scenario


def _load_settings(path, overrides=()):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {p}: {exc}") from exc
    try:
        tree = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"malformed scenario file {p}: {exc.msg} at line {exc.lineno}, "
            f"column {exc.colno}"
        ) from exc
    for item in overrides:
        if "=" not in item:
            raise ScenarioError(f"override {item!r} must look like key=value")
        dotted, raw = item.split("=", 1)
        _apply_override(tree, dotted, raw)
    return build_scenario(tree)


def _complex_list(values) -> list[list[float]]:
    return [[float(v.real), float(v.imag)] for v in np.atleast_1d(values)]


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not serializable: {type(obj)}")


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True,
                               default=_json_default) + "\n")


def write_series(record, path, fmt: str = "csv"):
    """Serialize a SimulationRecord with the fixed column order
    t, x_p, y_p, vx, vy, xhat_p, yhat_q, vxhat, vyhat, ux, uy, ref_x, ref_y.
    Channels without data (no observer) are emitted as empty fields in CSV
    and null in JSON."""
    path = Path(path)
    t = record.times
    if t.size == 0:
        raise ValueError("refusing to write an empty series")
    est = record.estimates
    if fmt == "csv":
        lines = [",".join(SERIES_COLUMNS)]
        for i in range(t.size):
            row = [
                _fmt(t[i]),
                _fmt(record.true_states[i, 0]), _fmt(record.true_states[i, 1]),
                _fmt(record.true_states[i, 2]), _fmt(record.true_states[i, 3]),
            ]
            if est is not None:
                row += [_fmt(est[i, j]) for j in range(4)]
            else:
                row += ["", "", "", ""]
            row += [
                _fmt(record.controls[i, 0]), _fmt(record.controls[i, 1]),
                _fmt(record.reference[i, 0]), _fmt(record.reference[i, 1]),
            ]
            lines.append(",".join(row))
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "json":
        payload = {
            "t": record.times.tolist(),
            "x_p": record.true_states[:, 0].tolist(),
            "y_p": record.true_states[:, 1].tolist(),
            "vx": record.true_states[:, 2].tolist(),
            "vy": record.true_states[:, 3].tolist(),
            "xhat_p": est[:, 0].tolist() if est is not None else None,
            "yhat_q": est[:, 1].tolist() if est is not None else None,
            "vxhat": est[:, 2].tolist() if est is not None else None,
            "vyhat": est[:, 3].tolist() if est is not None else None,
            "ux": record.controls[:, 0].tolist(),
            "uy": record.controls[:, 1].tolist(),
            "ref_x": record.reference[:, 0].tolist(),
            "ref_y": record.reference[:, 1].tolist(),
        }
        # Column order is part of the format: no key sorting here.
        path.write_text(json.dumps(payload, indent=2,
                                   default=_json_default) + "\n")
    else:
        raise ScenarioError(f"unknown format {fmt!r}")


def _write_table(path: Path, header: list[str], rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if v is not None else "" for v in row))
    path.write_text("\n".join(lines) + "\n")


def _emit_series(outdir: Path, stem: str, names: list[str], columns, fmt: str):
    """Write a named-column series as stem.csv or stem.json (object of
    arrays, preserving column order)."""
    if fmt == "json":
        payload = {name: [float(v) for v in col]
                   for name, col in zip(names, columns)}
        (outdir / f"{stem}.json").write_text(
            json.dumps(payload, indent=2, default=_json_default) + "\n"
        )
    else:
        _write_table(outdir / f"{stem}.csv", names, zip(*columns))


def _metrics_payload(metrics) -> dict:
    return {
        "terminal_error_km": metrics.terminal_error_km,
        "rms_error_km": metrics.rms_error_km,
        "control_energy_km2_s3": metrics.control_energy,
        "settling_time_s": metrics.settling_time_s,
    }


def _cmd_analyze(scenario, drift_cfg, response_cfg, outdir, fmt):
    # Pure analysis: rank tests and the open-loop spectrum do not require a
    # successful synthesis, so degenerate scenarios still get a report.
    r0 = float(np.hypot(*scenario.x0.position))
    plant = linearize_plant(r0, scenario.constants,
                            scenario.linearization_sign)
    sys_meas = StateSpace(plant.a, plant.b,
                          plant.c if scenario.measurement_matrix is None
                          else scenario.measurement_matrix)
    ctrb = controllability_matrix(plant)
    obsv = observability_matrix(sys_meas)
    spectrum = eigenvalues(plant.a)
    stability = stability_class(plant.a)
    w2 = scenario.linearization_sign * scenario.constants.mu \
        / float(np.hypot(*scenario.x0.position)) ** 3
    payload = {
        "rank_controllability": rank(ctrb),
        "rank_observability": rank(obsv),
        "n_states": plant.n_states,
        "open_loop_eigenvalues": _complex_list(spectrum),
        "stability_class": stability.value,
        "natural_freq_sq_per_s2": w2,
        "reference_natural_freq_sq_per_s2": REFERENCE_NATURAL_FREQ_SQ,
    }
    _write_json(outdir / "analyze.json", payload)
    print(f"rank(controllability) = {payload['rank_controllability']}")
    print(f"rank(observability)   = {payload['rank_observability']}")
    print(f"stability class       = {stability.value}")
    print(f"omega^2               = {_fmt(w2)} 1/s^2")
    return 0


def _cmd_synthesize(scenario, drift_cfg, response_cfg, outdir, fmt):
    plant, lqr, l_gain = synthesize_for_scenario(scenario)
    sep = assemble_separation_loop(plant.a, plant.b, plant.c, lqr.k, l_gain)
    payload = {
        "gain_k": lqr.k,
        "riccati_p": lqr.p,
        "observer_gain_l": l_gain,
        "closed_loop_eigenvalues": _complex_list(lqr.closed_loop_spectrum),
        "observer_eigenvalues": _complex_list(
            eigenvalues(plant.a - l_gain @ plant.c)
        ),
        "separation_loop_eigenvalues": _complex_list(
            eigenvalues(sep.error_coords)
        ),
        "reference_gains": REFERENCE_GAINS,
    }
    g = plant.b if scenario.disturbance_matrix is None \
        else scenario.disturbance_matrix
    try:
        hinf = hinf_state_feedback(plant.a, plant.b, g, scenario.weights,
                                   (1e-2, 1e4))
        payload["hinf"] = {"gamma": hinf.gamma, "gain_k": hinf.k}
    except (SynthesisError, GammaRangeError) as exc:
        payload["hinf"] = {"error": str(exc)}
    _write_json(outdir / "synthesize.json", payload)
    print("K =", np.array2string(lqr.k, precision=6))
    print("L =", np.array2string(l_gain, precision=6))
    if "gamma" in payload["hinf"]:
        print(f"hinf gamma = {payload['hinf']['gamma']:.6g}")
    return 0


def _cmd_lambert(scenario, drift_cfg, response_cfg, outdir, fmt):
    v1, v2 = lambert_solve(scenario.x0.position, scenario.xf.position,
                           scenario.horizon, scenario.lambert_direction,
                           scenario.constants)
    t = np.array([0.0, scenario.horizon])
    arc = propagate_two_body(
        OrbitState(scenario.x0.position, (v1[0], v1[1])), t,
        constants=scenario.constants, rtol=scenario.rtol, atol=scenario.atol,
    )
    residual = float(np.hypot(arc[-1, 0] - scenario.xf.position[0],
                              arc[-1, 1] - scenario.xf.position[1]))
    payload = {
        "v1_km_s": [float(v1[0]), float(v1[1])],
        "v2_km_s": [float(v2[0]), float(v2[1])],
        "tof_s": scenario.horizon,
        "closure_residual_km": residual,
    }
    _write_json(outdir / "lambert.json", payload)
    print(f"v1 = ({_fmt(v1[0])}, {_fmt(v1[1])}) km/s")
    print(f"v2 = ({_fmt(v2[0])}, {_fmt(v2[1])}) km/s")
    print(f"closure residual = {residual:.6g} km")
    return 0


def _cmd_simulate(scenario, drift_cfg, response_cfg, outdir, fmt):
    record = run_scenario(scenario)
    metrics = compute_metrics(record, scenario.xf, scenario.settle_band)
    write_series(record, outdir / f"trajectory.{fmt}", fmt)
    _write_json(outdir / "metrics.json", _metrics_payload(metrics))
    print(f"method            = {scenario.method.value}")
    print(f"terminal error    = {metrics.terminal_error_km:.6g} km")
    print(f"rms error         = {metrics.rms_error_km:.6g} km")
    print(f"control energy    = {metrics.control_energy:.6g} km^2/s^3")
    print(f"settling time     = {metrics.settling_time_s}")
    if record.estimation_error is not None:
        e = record.estimation_error[-1]
        print(f"terminal est err  = {math.hypot(e[0], e[1]):.6g} km, "
              f"{math.hypot(e[2], e[3]):.6g} km/s")
    return 0


def _cmd_compare(scenario, drift_cfg, response_cfg, outdir, fmt):
    report = compare_methods(scenario)
    rows = []
    payload_methods = {}
    for entry in report.reports:
        name = entry.method.value
        payload_methods[name] = {
            "stability_class": entry.stability,
            "eigenvalues": {
                key: _complex_list(vals)
                for key, vals in entry.eigenvalues.items()
            },
            "metrics": _metrics_payload(entry.metrics) if entry.metrics else None,
            "error": entry.error,
            "reference": REFERENCE_METRICS.get(name),
            "reference_eigenvalues": _complex_list(REFERENCE_EIGENVALUES[name])
            if name in REFERENCE_EIGENVALUES else None,
        }
        if entry.metrics:
            rows.append((name, entry.metrics))
    payload = {
        "methods": payload_methods,
        "gain_k": report.gain_k,
        "observer_gain_l": report.gain_l,
        "reference_gains": REFERENCE_GAINS,
    }
    _write_json(outdir / "compare.json", payload)
    for name, record in sorted(report.records.items()):
        write_series(record, outdir / f"trajectory_{name}.{fmt}", fmt)
    header = f"{'method':<14} {'terminal_km':>14} {'rms_km':>14} " \
             f"{'energy':>12} {'settle_s':>10}"
    print(header)
    for name, m in rows:
        settle = f"{m.settling_time_s:.1f}" if m.settling_time_s is not None \
            else "-"
        print(f"{name:<14} {m.terminal_error_km:>14.6g} "
              f"{m.rms_error_km:>14.6g} {m.control_energy:>12.6g} "
              f"{settle:>10}")
    failed = [e.method.value for e in report.reports if e.error]
    if failed:
        print(f"failed methods: {', '.join(failed)}")
    return 0


def _cmd_drift(scenario, drift_cfg, response_cfg, outdir, fmt):
    craft = scenario.spacecraft
    if drift_cfg.srp_magnitude_km_s2 is None:
        # Pressure-equivalent default: P * A / m, converted to km/s^2.
        magnitude = REFERENCE_SRP_PRESSURE_PA * craft.area / craft.mass / 1000.0
    else:
        magnitude = drift_cfg.srp_magnitude_km_s2
    srp = SrpConfig(mode="direct", magnitude_km_s2=magnitude,
                    theta0=drift_cfg.theta0_rad)
    study = srp_drift_study(
        drift_cfg.duration_s, craft, srp, scenario.x0,
        constants=scenario.constants, output_dt=drift_cfg.output_dt_s,
        rtol=scenario.rtol, atol=scenario.atol,
    )
    _emit_series(outdir, "drift_series",
                 ["t", "deviation_km", "relative_error"],
                 [study.times, study.deviation_km, study.relative_error], fmt)
    accel = magnitude * math.cos(drift_cfg.theta0_rad) ** 2
    ballistic = 0.5 * accel * drift_cfg.duration_s**2
    payload = {
        "duration_s": drift_cfg.duration_s,
        "srp_accel_km_s2": magnitude,
        "final_deviation_km": float(study.deviation_km[-1]),
        "max_deviation_km": float(study.deviation_km.max()),
        "ballistic_estimate_km": ballistic,
    }
    _write_json(outdir / "drift.json", payload)
    print(f"final deviation  = {payload['final_deviation_km']:.6g} km")
    print(f"max deviation    = {payload['max_deviation_km']:.6g} km")
    print(f"ballistic 0.5at^2 = {ballistic:.6g} km")
    return 0


def _cmd_response(scenario, drift_cfg, response_cfg, outdir, fmt):
    plant, lqr, l_gain = synthesize_for_scenario(scenario)
    g = plant.b if scenario.disturbance_matrix is None \
        else scenario.disturbance_matrix
    sep = assemble_separation_loop(plant.a, plant.b, plant.c, lqr.k, l_gain)
    b_aug = np.vstack([g, g])
    c_aug = np.hstack([plant.c, np.zeros_like(plant.c)])
    closed_a = StateSpace(plant.a - plant.b @ lqr.k, g, plant.c)
    closed_c = StateSpace(sep.error_coords, b_aug, c_aug)

    t, y_c = step_response(closed_c, response_cfg.step_horizon_s,
                           response_cfg.step_dt_s)
    _, y_a = step_response(closed_a, response_cfg.step_horizon_s,
                           response_cfg.step_dt_s)
    names = ["t"]
    columns = [t]
    for label, y in (("lqr", y_a), ("observer_lqr", y_c)):
        for out in range(2):
            for inp in range(2):
                names.append(f"{label}_y{out}_u{inp}")
                columns.append(y[:, out, inp])
    _emit_series(outdir, "step_response", names, columns, fmt)

    grid = default_frequency_grid(response_cfg.freq_points,
                                  response_cfg.freq_lo_rad_s,
                                  response_cfg.freq_hi_rad_s)
    loops = {
        "lqr": lqr_loop_transfer(plant, lqr.k),
        "observer_lqr": observer_compensator(plant, lqr.k, l_gain),
    }
    settle = _settling_from_step(t, y_c, scenario.settle_band)
    for name, sys_loop in loops.items():
        points = frequency_response(sys_loop, grid)
        head = ["omega_rad_s"]
        columns = [np.array([pt.omega for pt in points])]
        for out in range(sys_loop.n_outputs):
            for inp in range(sys_loop.n_inputs):
                head += [f"re_{out}{inp}", f"im_{out}{inp}"]
                vals = np.array([pt.response[out, inp] if pt.ok
                                 else complex("nan") for pt in points])
                columns += [vals.real, vals.imag]
        _emit_series(outdir, f"frequency_{name}", head, columns, fmt)
    _write_json(outdir / "response.json", {
        "step_settling_time_s": settle,
        "step_horizon_s": response_cfg.step_horizon_s,
        "frequency_points": response_cfg.freq_points,
    })
    print(f"step settling time (disturbance channels) = {settle}")
    return 0


def _settling_from_step(t, y, band):
    """Settling time of each disturbance-step output relative to its final
    value; returns the worst channel (None when a channel never settles)."""
    worst = 0.0
    for out in range(y.shape[1]):
        for inp in range(y.shape[2]):
            series = y[:, out, inp]
            final = series[-1]
            spread = np.abs(series - final)
            scale = max(abs(final), spread.max(), 1e-30)
            suffix = np.maximum.accumulate(spread[::-1])[::-1]
            idx = np.nonzero(suffix <= band * scale)[0]
            if idx.size == 0:
                return None
            worst = max(worst, float(t[idx[0]]))
    return worst


_COMMANDS = {
    "analyze": _cmd_analyze,
    "synthesize": _cmd_synthesize,
    "lambert": _cmd_lambert,
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
    "drift": _cmd_drift,
    "response": _cmd_response,
}


def dispatch(command: str, scenario_path, outdir, fmt: str, overrides=()) -> int:
    """Run one command; returns the process exit code (0 success, 1
    numerical/synthesis failure, 2 input error) and emits a single
    structured diagnostic line on stderr for every failure."""
    try:
        scenario, drift_cfg, response_cfg = _load_settings(scenario_path,
                                                           overrides)
        if fmt not in ("csv", "json"):
            raise ScenarioError(f"unknown format {fmt!r}")
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[command](scenario, drift_cfg, response_cfg, out, fmt)
    except (ScenarioError, OSError) as exc:
        _emit_error(exc)
        return 2
    except Exception as exc:  # noqa: BLE001 - exit-code contract is total
        _emit_error(exc)
        return 1


def _emit_error(exc: Exception):
    diagnostic = json.dumps(
        {"error": type(exc).__name__, "message": str(exc)}
    )
    print(diagnostic, file=sys.stderr)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="orbitloop",
        description="Observer-based closed-loop orbit maneuver toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True,
                       help="path to the JSON scenario file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", default="csv", choices=("csv", "json"),
                       dest="fmt", help="series file format")
        p.add_argument("--set", action="append", default=[], dest="overrides",
                       metavar="KEY=VALUE",
                       help="override a scenario entry (dotted path, JSON value)")
    args = parser.parse_args(argv)
    code = dispatch(args.command, args.scenario, args.out, args.fmt,
                    args.overrides)
    return code


if __name__ == "__main__":
    sys.exit(main())
