"""Time the numba kernels against their numpy/Python fallbacks.

    python benchmarks/bench_kernels.py [--repeat N] [--no-sim]

Kernel timings call both paths in-process through ``use_numba=``.  The
whole-simulator timing runs one random scenario in two subprocesses, one
with ``SWARMLOAD_DISABLE_JIT=1``, since the simulator picks its path at
import time.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from swarmload import kernels

SIM_SNIPPET = """
import time
from swarmload.sim import random_scenario, run_scenario
script = random_scenario(7, n_vehicles={n}, duration_s={d})
run_scenario(random_scenario(8, n_vehicles=20, duration_s=60))  # warm up / compile
t = time.perf_counter()
run_scenario(script)
print(time.perf_counter() - t)
"""


def _cases(rng):
    n = 7200
    t = np.arange(n, dtype=np.float64)
    v = rng.normal(80, 5, n)
    ends = np.arange(30, n, 5)
    starts, stops = ends - 30, ends
    yield f"window_features ({ends.size} windows)", lambda u: kernels.window_features(t, v, starts, stops, use_numba=u)

    w, h = 120, 80
    grid = np.ones((h, w), bool)
    for x in range(10, w - 5, 12):  # staggered walls force long detours
        if (x // 12) % 2:
            grid[2:, x] = False
        else:
            grid[:-2, x] = False
    passable = grid.ravel()
    yield "astar (120x80 grid)", lambda u: kernels.astar(passable, w, 0, w * h - 1, use_numba=u)

    nv, na = 200, 20
    cell = rng.integers(0, w * h, nv)
    ax, ay = rng.integers(0, w, na), rng.integers(0, h, na)
    live = np.ones(na, bool)
    hidden = rng.random(na) < 0.5
    threat = ~hidden
    radius = rng.integers(1, 3, na)
    spotter = rng.random(nv) < 0.7
    reach = np.ones(nv, bool)
    dwell = np.zeros((nv, na), np.int64)
    yield "artifact_scan (200 x 20)", lambda u: kernels.artifact_scan(
        cell, w, ax, ay, live, hidden, threat, radius, 3, spotter, reach, dwell, use_numba=u
    )

    r = rng.random(nv)
    drop, restore = np.full(w * h, 0.01), np.full(w * h, 0.3)
    indoor = rng.random(w * h) < 0.1
    conn = np.ones(nv, bool)
    yield "comm_update (200 vehicles)", lambda u: kernels.comm_update(
        r, cell, conn.copy(), drop, restore, indoor, use_numba=u
    )

    drain = np.full(nv, 1e-4)
    air = rng.random(nv) < 0.6
    yield "drain_battery (200 vehicles)", lambda u: kernels.drain_battery(
        np.ones(nv), drain, air, air, 0.2, use_numba=u
    )


def bench_kernels(repeat: int) -> None:
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'numba':>12s} {'fallback':>12s} {'speedup':>8s}")
    for name, fn in _cases(rng):
        fn(True)  # compile
        fast = min(timeit.repeat(lambda: fn(True), number=1, repeat=repeat))
        slow = min(timeit.repeat(lambda: fn(False), number=1, repeat=max(1, repeat // 5)))
        print(f"{name:34s} {fast * 1e6:10.1f}us {slow * 1e6:10.1f}us {slow / fast:7.1f}x")


def bench_simulator(n_vehicles: int, duration_s: int) -> None:
    code = SIM_SNIPPET.format(n=n_vehicles, d=duration_s)
    out = {}
    for label, disable in (("numba", "0"), ("fallback", "1")):
        env = dict(os.environ, SWARMLOAD_DISABLE_JIT=disable)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        out[label] = float(res.stdout.strip().splitlines()[-1])
    print(
        f"simulator {n_vehicles} vehicles x {duration_s} s: numba {out['numba']:.2f}s, "
        f"fallback {out['fallback']:.2f}s ({out['fallback'] / out['numba']:.1f}x)"
    )


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--no-sim", action="store_true", help="skip the whole-simulator comparison")
    ap.add_argument("--vehicles", type=int, default=200)
    ap.add_argument("--duration", type=int, default=1800)
    args = ap.parse_args()
    bench_kernels(args.repeat)
    if not args.no_sim:
        bench_simulator(args.vehicles, args.duration)


if __name__ == "__main__":
    main()
