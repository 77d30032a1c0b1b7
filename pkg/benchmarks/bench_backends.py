"""Wall-clock comparison of the numba and numpy kernels.

    python3 benchmarks/bench_backends.py [--paths 200] [--repeat 3]

Each case runs the same batch on both backends, checks that the break
times agree, and prints the best of ``--repeat`` timings.  The first numba
call is timed separately because it includes compilation (or loading from
the on-disk cache).
"""

import argparse
import time

import numpy as np

from chainbreak import _kernels
from chainbreak.engine import SimGrid, make_plan, run_paths
from chainbreak.model import ChainParams, certify, make_cosh_potential

CASES = [
    ("linear-constant", dict(d=3, eps=1e-2, sigma=0.1), None),
    ("linear-constant", dict(d=8, eps=1e-2, sigma=0.1), None),
    ("nonlinear", dict(d=3, eps=1e-2, sigma=0.1), "cosh"),
    ("coupled", dict(d=3, eps=1e-2, sigma=0.1), "cosh"),
]


def _run(plan, n, backend):
    plan.backend = _kernels.get_backend(backend)
    t0 = time.perf_counter()
    r = run_paths(plan.system, plan.params, None, n, 1, plan=plan, track_links=False)
    return time.perf_counter() - t0, r


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = _kernels.available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'system':<18}{'d':>3}{'steps':>9}  " + "".join(f"{b:>12}" for b in backends) + "   speedup")
    for system, kw, pot in CASES:
        params = ChainParams(kw["d"], kw["eps"], kw["sigma"], 2.0)
        p = certify(make_cosh_potential(), 2.0) if pot else None
        plan = make_plan(system, params, SimGrid(0.02, 0.002, 60.0), potential=p, u=1.0)
        best = {}
        taus = {}
        for b in backends:
            if b == "numba":
                _run(plan, 2, b)  # compile / load cache
            times = []
            for _ in range(args.repeat):
                dt, r = _run(plan, args.paths, b)
                times.append(dt)
            best[b] = min(times)
            taus[b] = r.tau
        if len(backends) == 2:
            same = np.allclose(taus["numba"], taus["numpy"], rtol=0, atol=1e-9, equal_nan=True)
            speed = f"{best['numpy'] / best['numba']:8.1f}x" + ("" if same else "  (MISMATCH)")
        else:
            speed = "       -"
        cells = "".join(f"{best[b]:11.3f}s" for b in backends)
        print(f"{system:<18}{kw['d']:>3}{plan.times.size - 1:>9}  {cells}   {speed}")


if __name__ == "__main__":
    main()
