"""Closed-loop scenario execution and evaluation.

A Scenario bundles boundary states, disturbance configuration, weights and
integrator settings; run_scenario synthesizes the gains, assembles the
augmented plant-observer-reference system and propagates it with the
adaptive Dormand-Prince kernel.  Four methods are supported: free flight,
state-feedback LQR on the true state, observer-only estimation without
control, and observer-based LQR on the estimated state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _dopri, linalg
from .dynamics import (
    OrbitState,
    PhysicalConstants,
    SpacecraftParams,
    SrpConfig,
    lambert_solve,
    linearize_plant,
    srp_accel,
)
from .errors import DimensionError, NotApplicableError, NumericalError
from .ltisys import StateSpace, stability_class
from .synthesis import (
    SynthesisResult,
    Weights,
    assemble_separation_loop,
    lqr_gain,
    observer_gain,
)

__all__ = [
    "Method",
    "ReferenceMode",
    "PlantMode",
    "Scenario",
    "SimulationRecord",
    "Metrics",
    "MethodReport",
    "ComparisonReport",
    "DriftStudy",
    "run_scenario",
    "compute_metrics",
    "estimation_error_series",
    "compare_methods",
    "srp_drift_study",
    "propagate_two_body",
    "synthesize_for_scenario",
    "REFERENCE_METRICS",
    "REFERENCE_EIGENVALUES",
    "REFERENCE_GAINS",
    "REFERENCE_NATURAL_FREQ_SQ",
    "REFERENCE_SRP_PRESSURE_PA",
]


class Method(enum.Enum):
    UNCONTROLLED = "uncontrolled"
    LQR = "lqr"
    OBSERVER_ONLY = "observer_only"
    OBSERVER_LQR = "observer_lqr"


class ReferenceMode(enum.Enum):
    CONSTANT_SETPOINT = "constant_setpoint"
    LAMBERT_ARC = "lambert_arc"


class PlantMode(enum.Enum):
    NONLINEAR = "nonlinear"
    LINEAR = "linear"


_METHOD_ID = {
    Method.UNCONTROLLED: _dopri.METHOD_UNCONTROLLED,
    Method.LQR: _dopri.METHOD_LQR,
    Method.OBSERVER_ONLY: _dopri.METHOD_OBSERVER_ONLY,
    Method.OBSERVER_LQR: _dopri.METHOD_OBSERVER_LQR,
}

_STATUS_MESSAGES = {
    _dopri.STATUS_SINGULAR_RADIUS: "trajectory radius fell below 1 km",
    _dopri.STATUS_STEP_UNDERFLOW: "integrator step size underflowed",
    _dopri.STATUS_NOT_FINITE: "integrator produced a non-finite state",
    _dopri.STATUS_STEP_BUDGET: "integrator exceeded its step budget",
}

# Fixed baseline values included in comparison reports so computed results
# can be read side by side with the original analysis; they depend on design
# parameters that were never published and are not reproduced or asserted.
REFERENCE_METRICS = {
    "lqr": {"settling_time_s": 220.0, "steady_state_error_km": 0.12,
            "control_energy": 5.2},
    "observer_only": {"settling_time_s": None, "steady_state_error_km": None,
                      "control_energy": None, "note": "divergent"},
    "observer_lqr": {"settling_time_s": 140.0, "steady_state_error_km": 0.005,
                     "control_energy": 6.7},
}
REFERENCE_EIGENVALUES = {
    "lqr": [-1.02 + 0j, -0.97 + 0j, -0.15 + 0.42j, -0.15 - 0.42j],
    "observer_only": [0.08 + 0j, 0j, -0.02 + 0j],
    "observer_lqr": [-1.25 + 0j, -1.10 + 0j, -0.85 + 0j, -0.60 + 0j],
}
REFERENCE_GAINS = {
    "pole_placement_1x4": [0.293, 0.169, 9.115, 4.998],
    "canonical_form_1x4": [3.721, 5.0, 3.998, 1.0],
}
REFERENCE_NATURAL_FREQ_SQ = 0.004865  # quoted transfer-function constant, unreproduced
REFERENCE_SRP_PRESSURE_PA = 9.0769e-6


@dataclass(frozen=True)
class Scenario:
    """Full description of one closed-loop maneuver simulation."""

    x0: OrbitState = OrbitState((4292.87, 8924.17), (7.8, 0.0))
    xf: OrbitState = OrbitState((-2000.0, 8878.0), (-2.728, -6.56))
    horizon: float = 4000.0
    output_dt: float = 0.1
    rtol: float = 1.0e-8
    atol: float = 1.0e-9
    srp: SrpConfig = SrpConfig()
    spacecraft: SpacecraftParams = SpacecraftParams()
    weights: Weights = field(default_factory=lambda: Weights.identity(4, 2))
    observer_speed_factor: float = 4.0
    method: Method = Method.OBSERVER_LQR
    reference_mode: ReferenceMode = ReferenceMode.LAMBERT_ARC
    # None: estimate starts from the measured positions with zero velocities.
    xhat0: tuple[float, float, float, float] | None = None
    measurement_noise_sigma: tuple[float, float] = (0.0, 0.0)
    noise_seed: int = 0
    disturbance_matrix: np.ndarray | None = None  # None: matched through B
    measurement_matrix: np.ndarray | None = None  # None: plant output map
    plant_mode: PlantMode = PlantMode.NONLINEAR
    linearization_sign: float = 1.0
    lambert_direction: str = "prograde"
    settle_band: float = 0.02
    constants: PhysicalConstants = PhysicalConstants()

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if not 0 < self.output_dt <= self.horizon:
            raise ValueError("output_dt must lie in (0, horizon]")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("rtol and atol must be positive")
        if self.observer_speed_factor <= 0:
            raise ValueError("observer speed factor must be positive")
        if not 0 < self.settle_band < 1:
            raise ValueError("settle band must lie in (0, 1)")
        if any(s < 0 for s in self.measurement_noise_sigma):
            raise ValueError("noise sigma must be non-negative")

    def initial_estimate(self) -> np.ndarray:
        if self.xhat0 is not None:
            v = np.asarray(self.xhat0, dtype=float).reshape(4)
            return v
        return np.array([*self.x0.position, 0.0, 0.0])

    def output_grid(self) -> np.ndarray:
        n = max(1, int(round(self.horizon / self.output_dt)))
        return np.linspace(0.0, self.horizon, n + 1)


@dataclass(frozen=True)
class SimulationRecord:
    """Time-gridded result of one run; estimates and estimation_error are
    None for methods without an observer."""

    method: Method
    times: np.ndarray
    true_states: np.ndarray
    controls: np.ndarray
    reference: np.ndarray
    estimates: np.ndarray | None = None
    estimation_error: np.ndarray | None = None

    def __post_init__(self):
        n = self.times.shape[0]
        for name in ("true_states", "controls", "reference", "estimates",
                     "estimation_error"):
            series = getattr(self, name)
            if series is not None and series.shape[0] != n:
                raise DimensionError(f"{name} does not share the time grid")


@dataclass(frozen=True)
class Metrics:
    terminal_error_km: float
    rms_error_km: float
    control_energy: float
    settling_time_s: float | None

    def __post_init__(self):
        if self.terminal_error_km < 0 or self.rms_error_km < 0:
            raise ValueError("position metrics must be non-negative")
        if self.control_energy < 0:
            raise ValueError("control energy must be non-negative")


@dataclass(frozen=True)
class MethodReport:
    method: Method
    metrics: Metrics | None
    eigenvalues: dict[str, np.ndarray]
    stability: str
    error: str | None = None


@dataclass(frozen=True)
class ComparisonReport:
    scenario: Scenario
    reports: list[MethodReport]
    records: dict[str, SimulationRecord]
    gain_k: np.ndarray
    gain_l: np.ndarray


@dataclass(frozen=True)
class DriftStudy:
    times: np.ndarray
    perturbed: np.ndarray
    reference: np.ndarray
    deviation_km: np.ndarray
    relative_error: np.ndarray


def _raise_for_status(status: int):
    if status != _dopri.STATUS_OK:
        raise NumericalError(_STATUS_MESSAGES.get(status, f"status {status}"))


def _propagate(z0, t_out, mu, a_srp, method_id, plant_linear, ref_moving,
               am, b, cm, g, k, l, noise, rtol, atol):
    state, ctrl, status = _dopri.propagate_grid(
        np.ascontiguousarray(z0, dtype=float),
        np.ascontiguousarray(t_out, dtype=float),
        float(mu), float(a_srp[0]), float(a_srp[1]),
        method_id, plant_linear, ref_moving,
        np.ascontiguousarray(am, dtype=float),
        np.ascontiguousarray(b, dtype=float),
        np.ascontiguousarray(cm, dtype=float),
        np.ascontiguousarray(g, dtype=float),
        np.ascontiguousarray(k, dtype=float),
        np.ascontiguousarray(l, dtype=float),
        np.ascontiguousarray(noise, dtype=float),
        float(rtol), float(atol), 50_000_000,
    )
    _raise_for_status(status)
    return state, ctrl


def propagate_two_body(
    state0: OrbitState,
    tgrid,
    a_srp: tuple[float, float] = (0.0, 0.0),
    constants: PhysicalConstants = PhysicalConstants(),
    rtol: float = 1.0e-8,
    atol: float = 1.0e-9,
) -> np.ndarray:
    """Free-flight propagation of [p, q, pdot, qdot] on the given time grid
    under central gravity plus an optional constant SRP acceleration."""
    t = np.asarray(tgrid, dtype=float)
    z0 = np.zeros(12)
    z0[0:4] = state0.as_vector()
    zeros42 = np.zeros((4, 2))
    zeros24 = np.zeros((2, 4))
    b = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    noise = np.zeros((max(t.size - 1, 1), 2))
    state, _ = _propagate(
        z0, t, constants.mu, a_srp, _dopri.METHOD_UNCONTROLLED, 0, 0,
        np.zeros((4, 4)), b, zeros24, b, zeros24, zeros42, noise, rtol, atol,
    )
    return state[:, 0:4]


def synthesize_for_scenario(s: Scenario) -> tuple[StateSpace, SynthesisResult, np.ndarray]:
    """Linearized plant, LQR synthesis and observer gain for a scenario.

    The observer poles sit at speed_factor times the LQR closed-loop poles;
    the LQR design is computed even for methods that do not apply control,
    because it defines that pole base.
    """
    r0 = float(np.hypot(*s.x0.position))
    plant = linearize_plant(r0, s.constants, s.linearization_sign)
    lqr = lqr_gain(plant.a, plant.b, s.weights)
    c_meas = plant.c if s.measurement_matrix is None else linalg.as_matrix(
        s.measurement_matrix, "measurement_matrix"
    )
    l = observer_gain(plant.a, c_meas, lqr.closed_loop_spectrum,
                      s.observer_speed_factor)
    return plant, lqr, l


def run_scenario(s: Scenario) -> SimulationRecord:
    """Propagate one scenario and return the gridded record.

    The true dynamics are the nonlinear planar two-body equations with SRP
    (or the linearized model when plant_mode is LINEAR); the observer always
    integrates the linearized model driven by the measured positions, and
    the whole coupled system advances as one ODE.
    """
    plant, lqr, l_gain = synthesize_for_scenario(s)
    c_meas = plant.c if s.measurement_matrix is None else linalg.as_matrix(
        s.measurement_matrix, "measurement_matrix"
    )
    if s.disturbance_matrix is None:
        g = plant.b
    else:
        g = linalg.as_matrix(s.disturbance_matrix, "disturbance_matrix")
        if g.shape != (4, 2):
            raise DimensionError("disturbance matrix must be 4x2")
    a_srp = srp_accel(s.srp, s.spacecraft, s.constants)

    has_observer = s.method in (Method.OBSERVER_ONLY, Method.OBSERVER_LQR)
    t_out = s.output_grid()
    z0 = np.zeros(12)
    z0[0:4] = s.x0.as_vector()
    if has_observer:
        z0[4:8] = s.x0.as_vector() - s.initial_estimate()
    if s.reference_mode is ReferenceMode.LAMBERT_ARC:
        v1, _ = lambert_solve(
            s.x0.position, s.xf.position, s.horizon,
            s.lambert_direction, s.constants,
        )
        z0[8:10] = s.x0.position
        z0[10:12] = v1
        ref_moving = 1
    else:
        z0[8:12] = s.xf.as_vector()
        ref_moving = 0

    sigma = s.measurement_noise_sigma
    if sigma[0] > 0 or sigma[1] > 0:
        rng = np.random.default_rng(s.noise_seed)
        noise = rng.standard_normal((t_out.size - 1, 2))
        noise[:, 0] *= sigma[0]
        noise[:, 1] *= sigma[1]
    else:
        noise = np.zeros((t_out.size - 1, 2))

    state, ctrl = _propagate(
        z0, t_out, s.constants.mu, a_srp, _METHOD_ID[s.method],
        1 if s.plant_mode is PlantMode.LINEAR else 0, ref_moving,
        plant.a, plant.b, c_meas, g, lqr.k, l_gain, noise, s.rtol, s.atol,
    )

    true_states = state[:, 0:4].copy()
    reference = state[:, 8:12].copy()
    if has_observer:
        err = state[:, 4:8].copy()
        estimates = true_states - err
    else:
        err = None
        estimates = None
    if s.method in (Method.UNCONTROLLED, Method.OBSERVER_ONLY):
        ctrl = np.zeros_like(ctrl)
    return SimulationRecord(
        method=s.method,
        times=t_out,
        true_states=true_states,
        controls=ctrl,
        reference=reference,
        estimates=estimates,
        estimation_error=err,
    )


def compute_metrics(rec: SimulationRecord, xf: OrbitState,
                    settle_band: float = 0.02) -> Metrics:
    """Terminal position error, RMS position error (time-averaged quadratic
    mean against the target), quadratic control energy, and the 2 percent
    settling time (first time after which the position error stays within
    settle_band of its initial value; None if it never does)."""
    t = rec.times
    if t.size == 0:
        raise ValueError("empty record")
    dx = rec.true_states[:, 0] - xf.position[0]
    dy = rec.true_states[:, 1] - xf.position[1]
    pos_err = np.hypot(dx, dy)
    terminal = float(pos_err[-1])
    span = float(t[-1] - t[0])
    if span > 0:
        rms = float(math.sqrt(np.trapezoid(pos_err**2, t) / span))
        energy = float(np.trapezoid(rec.controls[:, 0] ** 2
                                    + rec.controls[:, 1] ** 2, t))
    else:
        rms = terminal
        energy = 0.0
    threshold = settle_band * float(pos_err[0])
    suffix_max = np.maximum.accumulate(pos_err[::-1])[::-1]
    inside = np.nonzero(suffix_max <= threshold)[0]
    settling = float(t[inside[0]]) if inside.size else None
    return Metrics(terminal_error_km=terminal, rms_error_km=rms,
                   control_energy=energy, settling_time_s=settling)


def estimation_error_series(rec: SimulationRecord):
    """Estimation-error norms per state block: (times, position-error norm
    in km, velocity-error norm in km/s).  Only defined for observer runs."""
    if rec.estimation_error is None:
        raise NotApplicableError(
            f"method {rec.method.value} does not run an observer"
        )
    e = rec.estimation_error
    return rec.times, np.hypot(e[:, 0], e[:, 1]), np.hypot(e[:, 2], e[:, 3])


def _stability_label(matrix) -> str:
    return stability_class(matrix).value


def compare_methods(s: Scenario) -> ComparisonReport:
    """Run all four methods on one scenario and collect metrics, dominant
    closed-loop spectra and stability classes.  A single method's failure is
    reported in its row rather than aborting the comparison."""
    plant, lqr, l_gain = synthesize_for_scenario(s)
    a = plant.a
    bk = plant.b @ lqr.k
    lc = l_gain @ plant.c
    sep = assemble_separation_loop(a, plant.b, plant.c, lqr.k, l_gain)

    eig_info = {
        Method.UNCONTROLLED: {"plant": linalg.eigenvalues(a)},
        Method.LQR: {"closed_loop": linalg.eigenvalues(a - bk)},
        Method.OBSERVER_ONLY: {
            "plant": linalg.eigenvalues(a),
            "observer": linalg.eigenvalues(a - lc),
        },
        Method.OBSERVER_LQR: {
            "separation_loop": linalg.eigenvalues(sep.error_coords)
        },
    }
    stab_info = {
        Method.UNCONTROLLED: _stability_label(a),
        Method.LQR: _stability_label(a - bk),
        Method.OBSERVER_ONLY: _stability_label(a),
        Method.OBSERVER_LQR: _stability_label(sep.error_coords),
    }

    reports = []
    records = {}
    for method in Method:
        scenario = replace(s, method=method)
        try:
            rec = run_scenario(scenario)
            metrics = compute_metrics(rec, s.xf, s.settle_band)
            records[method.value] = rec
            reports.append(MethodReport(
                method=method, metrics=metrics,
                eigenvalues=eig_info[method], stability=stab_info[method],
            ))
        except Exception as exc:  # noqa: BLE001 - per-method fault isolation
            reports.append(MethodReport(
                method=method, metrics=None,
                eigenvalues=eig_info[method], stability=stab_info[method],
                error=str(exc),
            ))
    return ComparisonReport(scenario=s, reports=reports, records=records,
                            gain_k=lqr.k, gain_l=l_gain)


def srp_drift_study(
    duration: float,
    craft: SpacecraftParams,
    srp: SrpConfig,
    orbit: OrbitState,
    constants: PhysicalConstants = PhysicalConstants(),
    output_dt: float = 60.0,
    rtol: float = 1.0e-8,
    atol: float = 1.0e-9,
) -> DriftStudy:
    """Propagate the same initial orbit with and without SRP and emit the
    position deviation and relative position error over time."""
    if duration <= 0:
        raise ValueError("duration must be positive")
    n = max(1, int(round(duration / output_dt)))
    t = np.linspace(0.0, duration, n + 1)
    accel = srp_accel(srp, craft, constants)
    perturbed = propagate_two_body(orbit, t, accel, constants, rtol, atol)
    reference = propagate_two_body(orbit, t, (0.0, 0.0), constants, rtol, atol)
    dev = np.hypot(perturbed[:, 0] - reference[:, 0],
                   perturbed[:, 1] - reference[:, 1])
    ref_norm = np.hypot(reference[:, 0], reference[:, 1])
    return DriftStudy(times=t, perturbed=perturbed, reference=reference,
                      deviation_km=dev, relative_error=dev / ref_norm)
