"""LTI system representation and analysis.

Kalman rank-test matrices, spectral stability classification, resolvent
evaluation, frequency response, and the zero-input / zero-state decomposition
of the forced linear response (computed exactly per piecewise-constant input
interval through the augmented matrix exponential).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DimensionError, SingularMatrixError

__all__ = [
    "StateSpace",
    "FrequencyPoint",
    "Stability",
    "controllability_matrix",
    "observability_matrix",
    "stability_class",
    "transfer_eval",
    "frequency_response",
    "default_frequency_grid",
    "zero_input_response",
    "zero_state_response",
    "step_response",
]


@dataclass(frozen=True)
class StateSpace:
    """LTI quadruple (A, B, C, D): n states, m inputs, p outputs."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray = None  # defaults to the p x m zero matrix

    def __post_init__(self):
        a = linalg.as_matrix(self.a, "a")
        if a.shape[0] != a.shape[1]:
            raise DimensionError(f"a must be square, got {a.shape}")
        b = linalg.as_matrix(self.b, "b")
        c = linalg.as_matrix(self.c, "c")
        if b.shape[0] != a.shape[0]:
            raise DimensionError("b must have one row per state")
        if c.shape[1] != a.shape[0]:
            raise DimensionError("c must have one column per state")
        d = self.d
        if d is None:
            d = np.zeros((c.shape[0], b.shape[1]))
        d = linalg.as_matrix(d, "d")
        if d.shape != (c.shape[0], b.shape[1]):
            raise DimensionError(f"d must be {c.shape[0]}x{b.shape[1]}")
        for name, val in (("a", a), ("b", b), ("c", c), ("d", d)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n_states(self) -> int:
        return self.a.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.b.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True)
class FrequencyPoint:
    """Response matrix at one frequency; ok=False marks a point where the
    resolvent was numerically singular (near an imaginary-axis pole)."""

    omega: float
    response: np.ndarray = field(repr=False)
    ok: bool = True


class Stability(enum.Enum):
    ASYMPTOTICALLY_STABLE = "asymptotically_stable"
    MARGINALLY_STABLE = "marginally_stable"
    UNSTABLE = "unstable"


def controllability_matrix(sys: StateSpace) -> np.ndarray:
    """Kalman block matrix [B, AB, ..., A^(n-1)B] of shape n x (n*m)."""
    n, m = sys.n_states, sys.n_inputs
    blocks = np.empty((n, n * m))
    ab = sys.b.copy()
    for i in range(n):
        blocks[:, i * m : (i + 1) * m] = ab
        ab = sys.a @ ab
    return blocks


def observability_matrix(sys: StateSpace) -> np.ndarray:
    """Stacked matrix [C; CA; ...; CA^(n-1)] of shape (n*p) x n."""
    n, p = sys.n_states, sys.n_outputs
    blocks = np.empty((n * p, n))
    ca = sys.c.copy()
    for i in range(n):
        blocks[i * p : (i + 1) * p, :] = ca
        ca = ca @ sys.a
    return blocks


def stability_class(a) -> Stability:
    """Spectral stability classification of the matrix `a`.

    Eigenvalues within +-1e-9 * max(1, ||a||) of the imaginary axis count as
    on-axis; Jordan-block multiplicity on the axis is not analyzed, so the
    marginal verdict is spectral only.
    """
    am = linalg.as_matrix(a)
    lam = linalg.eigenvalues(am)
    tol = 1e-9 * max(1.0, float(np.linalg.norm(am, 2)))
    if np.any(lam.real > tol):
        return Stability.UNSTABLE
    if np.all(lam.real < -tol):
        return Stability.ASYMPTOTICALLY_STABLE
    return Stability.MARGINALLY_STABLE


def transfer_eval(sys: StateSpace, s: complex) -> np.ndarray:
    """H(s) = C (sI - A)^-1 B + D via a complex linear solve.

    Raises SingularMatrixError when s is at (or numerically near) an
    eigenvalue of A.
    """
    n = sys.n_states
    m = complex(s) * np.eye(n) - sys.a
    try:
        x = np.linalg.solve(m, sys.b.astype(complex))
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"s={s} is a pole of the system") from exc
    if not np.isfinite(x).all() or np.linalg.cond(m) > 1e13:
        raise SingularMatrixError(f"resolvent is numerically singular at s={s}")
    return sys.c @ x + sys.d


def default_frequency_grid(n_points: int = 400, lo: float = 1e-5, hi: float = 1e1) -> np.ndarray:
    return np.logspace(np.log10(lo), np.log10(hi), n_points)


def frequency_response(sys: StateSpace, omegas) -> list[FrequencyPoint]:
    """Evaluate H(j*omega) on a strictly increasing positive grid.

    Near-singular points are flagged (ok=False, NaN response) instead of
    aborting the sweep.
    """
    w = np.asarray(omegas, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise DimensionError("omega grid must be a non-empty 1-D array")
    if np.any(w <= 0) or np.any(np.diff(w) <= 0):
        raise ValueError("omega grid must be strictly increasing and positive")
    points = []
    for omega in w:
        try:
            h = transfer_eval(sys, 1j * omega)
            points.append(FrequencyPoint(float(omega), h, True))
        except SingularMatrixError:
            nan = np.full((sys.n_outputs, sys.n_inputs), np.nan + 1j * np.nan)
            points.append(FrequencyPoint(float(omega), nan, False))
    return points


def _check_tgrid(tgrid) -> np.ndarray:
    t = np.asarray(tgrid, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise DimensionError("time grid must be a non-empty 1-D array")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be strictly increasing")
    return t


def zero_input_response(sys: StateSpace, x0, tgrid) -> np.ndarray:
    """x(t) = expm(A (t - t0)) x0 sampled on tgrid (shape len(t) x n).

    Uniform grids reuse a single per-step transition matrix, which keeps the
    response exactly consistent with the zero-state recursion.
    """
    t = _check_tgrid(tgrid)
    x0v = np.asarray(x0, dtype=float).reshape(-1)
    if x0v.size != sys.n_states:
        raise DimensionError("x0 has wrong length")
    out = np.empty((t.size, sys.n_states))
    out[0] = x0v
    if t.size == 1:
        return out
    dts = np.diff(t)
    if np.allclose(dts, dts[0], rtol=1e-12, atol=0.0):
        phi = linalg.expm(sys.a, float(dts[0]))
        for k in range(1, t.size):
            out[k] = phi @ out[k - 1]
    else:
        for k in range(1, t.size):
            out[k] = linalg.expm(sys.a, float(t[k] - t[0])) @ x0v
    return out


def _discretize(a: np.ndarray, b: np.ndarray, dt: float):
    """Exact zero-order-hold pair (Ad, Bd) from the augmented exponential
    exp([[A, B], [0, 0]] dt); valid for singular A."""
    n, m = a.shape[0], b.shape[1]
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = a
    aug[:n, n:] = b
    phi = linalg.expm(aug, dt)
    return phi[:n, :n], phi[:n, n:]


def zero_state_response(sys: StateSpace, u, tgrid) -> np.ndarray:
    """Forced response from rest for a piecewise-constant input.

    u[k] is held constant on [t_k, t_{k+1}); the response is exact per
    interval via the zero-order-hold discretization.  u has shape
    len(t) x m (the final row is unused) or len(t) for single-input systems.
    """
    t = _check_tgrid(tgrid)
    um = np.asarray(u, dtype=float)
    if um.ndim == 1:
        um = um.reshape(-1, 1)
    if um.shape[0] != t.size or um.shape[1] != sys.n_inputs:
        raise DimensionError(f"u must be {t.size}x{sys.n_inputs}")
    out = np.zeros((t.size, sys.n_states))
    if t.size == 1:
        return out
    dts = np.diff(t)
    uniform = np.allclose(dts, dts[0], rtol=1e-12, atol=0.0)
    if uniform:
        ad, bd = _discretize(sys.a, sys.b, float(dts[0]))
    for k in range(1, t.size):
        if not uniform:
            ad, bd = _discretize(sys.a, sys.b, float(dts[k - 1]))
        out[k] = ad @ out[k - 1] + bd @ um[k - 1]
    return out


def step_response(sys: StateSpace, horizon: float, dt: float):
    """Unit-step response per input channel.

    Returns (t, y) with y of shape len(t) x p x m: y[:, :, j] is the output
    trajectory for a unit step applied on input j alone.
    """
    if horizon <= 0 or dt <= 0:
        raise ValueError("horizon and dt must be positive")
    n_steps = int(round(horizon / dt))
    t = np.arange(n_steps + 1) * dt
    y = np.empty((t.size, sys.n_outputs, sys.n_inputs))
    for j in range(sys.n_inputs):
        u = np.zeros((t.size, sys.n_inputs))
        u[:, j] = 1.0
        x = zero_state_response(sys, u, t)
        y[:, :, j] = x @ sys.c.T + u @ sys.d.T
    return t, y
