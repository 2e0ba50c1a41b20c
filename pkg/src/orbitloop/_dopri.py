"""Adaptive Dormand-Prince 4(5) propagation kernel (the hot loop).

One compiled function advances the 12-state closed-loop system — true plant,
observer estimation error, and reference arc — between output grid points,
honoring rtol/atol and landing exactly on every grid time (so piecewise-
constant measurement noise never straddles a sample interval).

The kernel is compiled with numba's @njit when available; setting the
environment variable ORBITLOOP_NO_NUMBA=1 selects the pure-numpy fallback,
which runs the identical source uncompiled.  benchmarks/bench_propagation.py
compares the two paths.

State layout: z = [x (true, 4) | e = x - xhat (4) | reference (4)].
The observer is integrated in (x, e) coordinates, which makes the error
block's arithmetic independent of the applied control for a linear plant.
"""

from __future__ import annotations

import os

import numpy as np

_flag = os.environ.get("ORBITLOOP_NO_NUMBA", "").strip().lower()
_DISABLED = _flag not in ("", "0", "false", "no")

USING_NUMBA = False
if not _DISABLED:
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass

if USING_NUMBA:
    def _jit(f):
        return njit(cache=True, fastmath=False)(f)
else:
    def _jit(f):
        return f

METHOD_UNCONTROLLED = 0
METHOD_LQR = 1
METHOD_OBSERVER_ONLY = 2
METHOD_OBSERVER_LQR = 3

STATUS_OK = 0
STATUS_SINGULAR_RADIUS = 1
STATUS_STEP_UNDERFLOW = 2
STATUS_NOT_FINITE = 3
STATUS_STEP_BUDGET = 4


def _control_impl(z, k, method, ux_uy):
    ux = 0.0
    uy = 0.0
    if method == 1:
        for i in range(4):
            dev = z[i] - z[8 + i]
            ux -= k[0, i] * dev
            uy -= k[1, i] * dev
    elif method == 3:
        for i in range(4):
            dev = z[i] - z[4 + i] - z[8 + i]
            ux -= k[0, i] * dev
            uy -= k[1, i] * dev
    ux_uy[0] = ux
    ux_uy[1] = uy


def _rhs_impl(z, dz, mu, ax, ay, method, plant_linear, ref_moving,
              am, b, cm, g, k, l, nx, ny, uu):
    # Reference block: a two-body arc, or frozen for a constant setpoint.
    if ref_moving == 1:
        rp = z[8]
        rq = z[9]
        rr = (rp * rp + rq * rq) ** 0.5
        if rr < 1.0:
            return STATUS_SINGULAR_RADIUS
        rr3 = rr * rr * rr
        dz[8] = z[10]
        dz[9] = z[11]
        dz[10] = -mu * rp / rr3
        dz[11] = -mu * rq / rr3
    else:
        dz[8] = 0.0
        dz[9] = 0.0
        dz[10] = 0.0
        dz[11] = 0.0

    _control_impl(z, k, method, uu)
    ux = uu[0]
    uy = uu[1]

    # True plant: nonlinear two-body gravity or the linearized model; the
    # disturbance channel G carries the SRP components either way.
    if plant_linear == 1:
        for i in range(4):
            acc = 0.0
            for j in range(4):
                acc += am[i, j] * z[j]
            dz[i] = acc + b[i, 0] * ux + b[i, 1] * uy + g[i, 0] * ax + g[i, 1] * ay
    else:
        p = z[0]
        q = z[1]
        r = (p * p + q * q) ** 0.5
        if r < 1.0:
            return STATUS_SINGULAR_RADIUS
        r3 = r * r * r
        dz[0] = z[2] + g[0, 0] * ax + g[0, 1] * ay
        dz[1] = z[3] + g[1, 0] * ax + g[1, 1] * ay
        dz[2] = -mu * p / r3 + g[2, 0] * ax + g[2, 1] * ay + ux
        dz[3] = -mu * q / r3 + g[3, 0] * ax + g[3, 1] * ay + uy

    # Estimation-error block:  de = (Am - L C) e + (f(x) - Am x - B u) - L nu,
    # with f(x) the full forced true dynamics already stored in dz[0:4].  On
    # the linear plant the model-mismatch term reduces to G w exactly; it is
    # computed directly in that form so the error block's arithmetic never
    # depends on the state or control trajectory.
    if method >= 2:
        ce0 = 0.0
        ce1 = 0.0
        for j in range(4):
            ce0 += cm[0, j] * z[4 + j]
            ce1 += cm[1, j] * z[4 + j]
        ce0 += nx
        ce1 += ny
        for i in range(4):
            ame = 0.0
            for j in range(4):
                ame += am[i, j] * z[4 + j]
            if plant_linear == 1:
                mism = g[i, 0] * ax + g[i, 1] * ay
            else:
                amx = 0.0
                for j in range(4):
                    amx += am[i, j] * z[j]
                mism = dz[i] - amx - (b[i, 0] * ux + b[i, 1] * uy)
            dz[4 + i] = ame - (l[i, 0] * ce0 + l[i, 1] * ce1) + mism
    else:
        for i in range(4):
            dz[4 + i] = 0.0
    return STATUS_OK


def _propagate_impl(z0, t_out, mu, ax, ay, method, plant_linear, ref_moving,
                    am, b, cm, g, k, l, noise, rtol, atol, max_steps):
    # Dormand-Prince 5(4) tableau.
    a21 = 1.0 / 5.0
    a31 = 3.0 / 40.0
    a32 = 9.0 / 40.0
    a41 = 44.0 / 45.0
    a42 = -56.0 / 15.0
    a43 = 32.0 / 9.0
    a51 = 19372.0 / 6561.0
    a52 = -25360.0 / 2187.0
    a53 = 64448.0 / 6561.0
    a54 = -212.0 / 729.0
    a61 = 9017.0 / 3168.0
    a62 = -355.0 / 33.0
    a63 = 46732.0 / 5247.0
    a64 = 49.0 / 176.0
    a65 = -5103.0 / 18656.0
    b1 = 35.0 / 384.0
    b3 = 500.0 / 1113.0
    b4 = 125.0 / 192.0
    b5 = -2187.0 / 6784.0
    b6 = 11.0 / 84.0
    e1 = 71.0 / 57600.0
    e3 = -71.0 / 16695.0
    e4 = 71.0 / 1920.0
    e5 = -17253.0 / 339200.0
    e6 = 22.0 / 525.0
    e7 = -1.0 / 40.0

    n_out = t_out.shape[0]
    out_state = np.empty((n_out, 12))
    out_ctrl = np.empty((n_out, 2))
    z = z0.copy()
    znew = np.empty(12)
    ytmp = np.empty(12)
    k1 = np.empty(12)
    k2 = np.empty(12)
    k3 = np.empty(12)
    k4 = np.empty(12)
    k5 = np.empty(12)
    k6 = np.empty(12)
    k7 = np.empty(12)
    uu = np.empty(2)

    for i in range(12):
        out_state[0, i] = z[i]
    _control_impl(z, k, method, uu)
    out_ctrl[0, 0] = uu[0]
    out_ctrl[0, 1] = uu[1]

    h = -1.0
    steps = 0
    for seg in range(n_out - 1):
        t = t_out[seg]
        t_end = t_out[seg + 1]
        seg_len = t_end - t
        nx = noise[seg, 0]
        ny = noise[seg, 1]
        if h <= 0.0:
            h = min(seg_len, 1.0)
        st = _rhs_impl(z, k1, mu, ax, ay, method, plant_linear, ref_moving,
                       am, b, cm, g, k, l, nx, ny, uu)
        if st != STATUS_OK:
            return out_state, out_ctrl, st
        while t_end - t > 1e-10 * max(1.0, abs(t_end)):
            steps += 1
            if steps > max_steps:
                return out_state, out_ctrl, STATUS_STEP_BUDGET
            remaining = t_end - t
            clamped = h >= remaining
            hs = remaining if clamped else h

            for i in range(12):
                ytmp[i] = z[i] + hs * a21 * k1[i]
            st = _rhs_impl(ytmp, k2, mu, ax, ay, method, plant_linear,
                           ref_moving, am, b, cm, g, k, l, nx, ny, uu)
            if st == STATUS_OK:
                for i in range(12):
                    ytmp[i] = z[i] + hs * (a31 * k1[i] + a32 * k2[i])
                st = _rhs_impl(ytmp, k3, mu, ax, ay, method, plant_linear,
                               ref_moving, am, b, cm, g, k, l, nx, ny, uu)
            if st == STATUS_OK:
                for i in range(12):
                    ytmp[i] = z[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i])
                st = _rhs_impl(ytmp, k4, mu, ax, ay, method, plant_linear,
                               ref_moving, am, b, cm, g, k, l, nx, ny, uu)
            if st == STATUS_OK:
                for i in range(12):
                    ytmp[i] = z[i] + hs * (a51 * k1[i] + a52 * k2[i]
                                           + a53 * k3[i] + a54 * k4[i])
                st = _rhs_impl(ytmp, k5, mu, ax, ay, method, plant_linear,
                               ref_moving, am, b, cm, g, k, l, nx, ny, uu)
            if st == STATUS_OK:
                for i in range(12):
                    ytmp[i] = z[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i]
                                           + a64 * k4[i] + a65 * k5[i])
                st = _rhs_impl(ytmp, k6, mu, ax, ay, method, plant_linear,
                               ref_moving, am, b, cm, g, k, l, nx, ny, uu)
            if st == STATUS_OK:
                for i in range(12):
                    znew[i] = z[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i]
                                           + b5 * k5[i] + b6 * k6[i])
                st = _rhs_impl(znew, k7, mu, ax, ay, method, plant_linear,
                               ref_moving, am, b, cm, g, k, l, nx, ny, uu)

            if st != STATUS_OK:
                # A stage left the admissible region: retry with a smaller
                # step, declaring the singularity only once h underflows.
                h = 0.5 * hs
                if h < 1e-12 * max(1.0, abs(t)):
                    return out_state, out_ctrl, st
                continue

            err_norm2 = 0.0
            for i in range(12):
                err_i = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i]
                              + e5 * k5[i] + e6 * k6[i] + e7 * k7[i])
                big = abs(z[i])
                if abs(znew[i]) > big:
                    big = abs(znew[i])
                scale = atol + rtol * big
                ratio = err_i / scale
                err_norm2 += ratio * ratio
            norm = (err_norm2 / 12.0) ** 0.5

            if norm <= 1.0:
                ok = True
                for i in range(12):
                    if not np.isfinite(znew[i]):
                        ok = False
                if not ok:
                    return out_state, out_ctrl, STATUS_NOT_FINITE
                t = t_end if clamped else t + hs
                for i in range(12):
                    z[i] = znew[i]
                    k1[i] = k7[i]  # FSAL
                if norm == 0.0:
                    factor = 5.0
                else:
                    factor = 0.9 * norm ** -0.2
                    if factor > 5.0:
                        factor = 5.0
                    elif factor < 0.2:
                        factor = 0.2
                if clamped:
                    grown = hs * factor
                    if grown > h:
                        h = grown
                else:
                    h = hs * factor
            else:
                factor = 0.9 * norm ** -0.2
                if factor < 0.2:
                    factor = 0.2
                h = hs * factor
                if h < 1e-12 * max(1.0, abs(t)):
                    return out_state, out_ctrl, STATUS_STEP_UNDERFLOW

        for i in range(12):
            out_state[seg + 1, i] = z[i]
        _control_impl(z, k, method, uu)
        out_ctrl[seg + 1, 0] = uu[0]
        out_ctrl[seg + 1, 1] = uu[1]

    return out_state, out_ctrl, STATUS_OK


# Rebind in dependency order so the outer kernels resolve the jitted inner
# functions when numba compiles them on first call.
_control_impl = _jit(_control_impl)
_rhs_impl = _jit(_rhs_impl)
propagate_grid = _jit(_propagate_impl)
