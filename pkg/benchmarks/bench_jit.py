"""Wall-clock comparison of the compiled kernels and the plain-Python fallback.

Each mode runs in its own interpreter because SUBLOG_JIT is read at import.

    python3 benchmarks/bench_jit.py [--n 16384] [--queries 2000]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from sublog import kernels as K, _jit
from sublog.distributions import sample_sorted, uniform
from sublog.pca import build_pca
from sublog.rda import rda_build
from sublog.rds import rds_search_many

n, nq = int(sys.argv[1]), int(sys.argv[2])
a = sample_sorted(uniform(), n, 0)
qs = np.random.default_rng(1).random(nq)

def clock(fn, reps=3):
    fn()  # warm-up (and compile)
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best

pca = build_pca(a, 0.1, 1.0)
rda = rda_build(a, 1.0)
out = {
    "jit": _jit.JIT_ENABLED,
    "pcf build": clock(lambda: build_pca(a, 0.1, 1.0)),
    "rda build": clock(lambda: rda_build(a, 1.0)),
    "binary queries": clock(lambda: K.binary_batch(a.keys, qs)),
    "pca queries": clock(lambda: pca.rank_many(qs)),
    "rds queries": clock(lambda: rds_search_many(a, qs, uniform())),
    "rda queries": clock(lambda: rda.rank_many(qs)),
}
json.dump(out, sys.stdout)
"""


def run(jit, n, queries):
    env = dict(os.environ, SUBLOG_JIT="1" if jit else "0")
    p = subprocess.run([sys.executable, "-c", WORKER, str(n), str(queries)],
                       capture_output=True, text=True, env=env, check=True)
    return json.loads(p.stdout)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=1 << 14)
    ap.add_argument("--queries", type=int, default=2000)
    args = ap.parse_args()
    fast, slow = run(True, args.n, args.queries), run(False, args.n, args.queries)
    print(f"n={args.n} queries={args.queries}")
    print(f"{'task':<16} {'numba s':>10} {'python s':>10} {'speedup':>9}")
    for key in fast:
        if key == "jit":
            continue
        print(f"{key:<16} {fast[key]:>10.5f} {slow[key]:>10.5f} {slow[key] / fast[key]:>8.1f}x")


if __name__ == "__main__":
    main()
