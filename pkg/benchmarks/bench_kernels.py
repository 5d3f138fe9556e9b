"""Compiled vs pure-Python kernels on the hot paths.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Times time_map_many (vectorised singular quadrature), a full shoot with
crossing/apex bookkeeping, and phi_inverse (arch evaluation), and checks that
both backends return the same numbers.
"""
import argparse
import json
import sys
import timeit

import numpy as np

from ccbvp import _backend

P, Q = 4.0, 1.5


def cases(k):
    lam = np.repeat([-5.0, 0.0, 1.0, 10.0], 250)
    alpha = np.tile(np.geomspace(3.0, 50.0, 250), 4)
    grid = np.linspace(0.0, 1.0, 1025)
    dist = np.linspace(0.0, 0.25, 2001)
    return {
        "time_map_many[1000]": lambda: k.time_map_many(P, Q, lam, alpha),
        "shoot j=3 rtol=1e-12": lambda: k.shoot(P, Q, 1.0, 70.0, grid, -1, 1e-12, 1e-11, 1e12),
        "phi_inverse[2001]": lambda: k.phi_inverse(P, Q, 1.0, 2.0, dist),
    }


def _same(a, b):
    if isinstance(a, dict):
        return all(_same(a[k], b[k]) for k in a)
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return a.shape == b.shape and np.allclose(a, b, rtol=1e-12, atol=1e-300, equal_nan=True)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="write results here")
    args = ap.parse_args(argv)
    if _backend.ckernels is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`")
        return 1
    py, c = cases(_backend.pykernels), cases(_backend.ckernels)
    rows = []
    print(f"{'kernel':24s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}  agree")
    for name in py:
        n = 1
        tp = min(timeit.repeat(py[name], number=n, repeat=args.repeat)) / n
        n = max(1, int(0.2 / max(tp / 50, 1e-6)))
        tc = min(timeit.repeat(c[name], number=n, repeat=args.repeat)) / n
        ok = _same(py[name](), c[name]())
        rows.append({"kernel": name, "python": tp, "cython": tc, "speedup": tp / tc, "agree": ok})
        print(f"{name:24s} {tp:11.4g} {tc:11.4g} {tp / tc:8.1f}  {ok}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0 if all(r["agree"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
