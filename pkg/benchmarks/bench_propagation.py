#!/usr/bin/env python3
"""Benchmark the propagation kernel: numba @njit versus the pure-numpy
fallback (selected by ORBITLOOP_NO_NUMBA=1).

Runs each path in a subprocess so the import-time backend choice is honest,
times the default closed-loop scenario and a 24 h drift study, and verifies
the two paths produce identical trajectories.

Usage: python benchmarks/bench_propagation.py [--repeats N] [--quick]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
import orbitloop as ol
from dataclasses import replace

quick = bool(int(sys.argv[1]))
repeats = int(sys.argv[2])
horizon = 400.0 if quick else 4000.0
drift_hours = 2.0 if quick else 24.0

scenario = replace(ol.Scenario(), horizon=horizon)

t0 = time.perf_counter()
warm = ol.run_scenario(replace(scenario, horizon=1.0))
first_call = time.perf_counter() - t0

t0 = time.perf_counter()
for _ in range(repeats):
    rec = ol.run_scenario(scenario)
closed_loop = (time.perf_counter() - t0) / repeats

srp = ol.SrpConfig(mode="direct", magnitude_km_s2=3.63076e-10, theta0=0.0)
t0 = time.perf_counter()
study = ol.srp_drift_study(drift_hours * 3600.0, ol.SpacecraftParams(), srp,
                           scenario.x0)
drift = time.perf_counter() - t0

print(json.dumps({
    "backend": "numba" if ol.USING_NUMBA else "numpy",
    "first_call_s": first_call,
    "closed_loop_s": closed_loop,
    "drift_s": drift,
    "samples": int(rec.times.size),
    "terminal": [float(v) for v in rec.true_states[-1]],
    "drift_final_km": float(study.deviation_km[-1]),
}))
"""


def run_backend(disable_numba: bool, quick: bool, repeats: int) -> dict:
    env = dict(os.environ)
    if disable_numba:
        env["ORBITLOOP_NO_NUMBA"] = "1"
    else:
        env.pop("ORBITLOOP_NO_NUMBA", None)
    proc = subprocess.run(
        [sys.executable, "-c", WORKER, str(int(quick)), str(repeats)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3,
                        help="timed repetitions of the closed-loop run")
    parser.add_argument("--quick", action="store_true",
                        help="shorter horizons for a fast smoke benchmark")
    args = parser.parse_args()

    results = {}
    for disable in (False, True):
        r = run_backend(disable, args.quick, args.repeats)
        results[r["backend"]] = r
        print(f"{r['backend']:>6}: first call {r['first_call_s']:8.3f} s "
              f"(includes compilation), closed loop {r['closed_loop_s']:8.3f} s "
              f"({r['samples']} samples), drift study {r['drift_s']:8.3f} s")

    nb, np_ = results["numba"], results["numpy"]
    agree = nb["terminal"] == np_["terminal"] \
        and nb["drift_final_km"] == np_["drift_final_km"]
    print(f"paths agree bit-exactly: {agree}")
    print(f"closed-loop speedup: {np_['closed_loop_s'] / nb['closed_loop_s']:.1f}x")
    print(f"drift-study speedup: {np_['drift_s'] / nb['drift_s']:.1f}x")
    if not agree:
        raise SystemExit("backend disagreement")


if __name__ == "__main__":
    main()
