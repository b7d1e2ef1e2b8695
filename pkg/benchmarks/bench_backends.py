"""Numba vs numpy backends for the row-insertion kernel.

    python benchmarks/bench_backends.py [--quick]

Both backends must return identical outputs; the script exits 1 otherwise.
"""
import argparse
import sys
import time

import numpy as np

from airylab._accel import HAVE_NUMBA
from airylab._tropical import insert_rows_batch
from airylab.environments import EnvKind, sample_weight_grids

CASES = [(10, 10, 1000, 1), (50, 50, 200, 5), (200, 200, 10, 10)]
QUICK = [(5, 5, 50, 2), (20, 20, 10, 3)]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench(cases, repeat=3):
    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    rows = []
    for n, m, reps, k in cases:
        W = sample_weight_grids(EnvKind.geometric(1.0), n, m, 7, reps)
        res = {}
        for b in backends:
            insert_rows_batch(W[:1], k, backend=b)  # compile / warm up
            res[b] = best_of(lambda: insert_rows_batch(W, k, backend=b), repeat)
        ref = res["numpy"][1]
        same = all(np.array_equal(ref, out) for _, out in res.values())
        rows.append({"n": n, "m": m, "replicas": reps, "k": k, "same": same,
                     **{b + "_s": t for b, (t, _) in res.items()}})
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="tiny cases, for smoke tests")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    rows = bench(QUICK if args.quick else CASES, args.repeat)
    print("%5s %5s %8s %3s %12s %12s %8s %5s" % ("n", "m", "replicas", "k", "numpy_s",
                                                "numba_s", "speedup", "same"))
    for r in rows:
        nb = r.get("numba_s")
        print("%5d %5d %8d %3d %12.5f %12s %8s %5s" % (
            r["n"], r["m"], r["replicas"], r["k"], r["numpy_s"],
            "%.5f" % nb if nb else "-", "%.1fx" % (r["numpy_s"] / nb) if nb else "-",
            r["same"]))
    return 0 if all(r["same"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
