"""Compare the compiled and pure-Python simulation kernels.

    python benchmarks/bench_kernel.py [--repeat N] [--duration S] [--dt S]

Both kernels are run on the same scenario; the script checks their outputs
are bit-identical before reporting timings.
"""

from __future__ import annotations

import argparse
import statistics
import sys
import time

import numpy as np

from leaktwin import _backend
from leaktwin.simkernel import Scenario, run


def timed(scenario: Scenario, backend: str, repeat: int) -> tuple[list[float], object]:
    times, result = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = run(scenario, backend=backend)
        times.append(time.perf_counter() - t0)
    return times, result


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--duration", type=float, default=7200.0)
    ap.add_argument("--dt", type=float, default=0.01)
    args = ap.parse_args(argv)

    if "cython" not in _backend.BACKENDS:
        print("compiled kernel not available; build with `pip install -e . --no-build-isolation`")
        return 1
    scenario = Scenario(duration=args.duration, dt=args.dt)
    steps = scenario.n_steps
    rows = {}
    for name in ("cython", "python"):
        run(Scenario(duration=10.0), backend=name)  # warm-up
        times, result = timed(scenario, name, args.repeat)
        rows[name] = (statistics.median(times), result)

    a, b = rows["cython"][1], rows["python"][1]
    identical = (
        all(np.array_equal(getattr(a.trace, f), getattr(b.trace, f))
            for f in ("t", "v_cap", "i_harvest", "i_load", "switch", "phase"))
        and a.events == b.events
        and a.audit == b.audit
    )

    print(f"scenario: {args.duration:g} s at dt={args.dt:g} s ({steps} steps), median of {args.repeat}")
    print(f"{'backend':<8} {'seconds':>9} {'Msteps/s':>9} {'s per 2 h':>10}")
    for name, (sec, _) in rows.items():
        per_2h = sec * 7200.0 / args.duration
        print(f"{name:<8} {sec:>9.4f} {steps / sec / 1e6:>9.2f} {per_2h:>10.4f}")
    print(f"speedup: {rows['python'][0] / rows['cython'][0]:.1f}x, outputs identical: {identical}")
    return 0 if identical else 2


if __name__ == "__main__":
    sys.exit(main())
