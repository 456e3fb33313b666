"""End-to-end acceptance criteria. Each test prints one PASS/FAIL line."""
import itertools
import math
import time

import numpy as np
import pytest

from sublog import kernels as K
from sublog._jit import njit
from sublog.bench import ExperimentConfig, gen_queries, run_experiment, write_csv
from sublog.cli import main
from sublog.core import SortedKeyArray, rank_oracle_many
from sublog.distributions import build_subexp, parse_dist, pdf_bound, sample_sorted, uniform
from sublog.pca import build_pca, build_pcf
from sublog.rda import check_coverage, depth_bound, rda_build
from sublog.rds import RdsSearcher

pytestmark = pytest.mark.acceptance

DISTS = ("uniform", "power:t=4", "gauss:mu=0.5,sigma=0.1")

# pinned tolerances
C1_MISMATCHES = 0
C1_SECONDS = 120
C2_DRIFT_OPS = 2
C2_SECONDS = 180
C3_DELTA = 5
C3_FREQ = 0.01
C3_SECONDS = 60
C4_RATIO = 1.5
C4_BINARY_2_20 = 21
C4_SPREAD = 0.20
C4_SECONDS = 180
C5_FREQ = 0.2
C5_SECONDS = 60
C6_RATIO = 1.5
C6_SIZE_LO, C6_SIZE_HI = 1.5, 2.5
C6_SECONDS = 240


@pytest.fixture
def verdict(capsys):
    def say(label, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        assert ok, detail
    return say


def _subexp(a, rho):
    shift = float(a.keys.mean())
    keys = a.keys - shift
    c = build_subexp(lambda s: build_pca(s, 0.1, rho),
                     SortedKeyArray(keys, min(keys[0], -1.0), max(keys[-1], 1.0)))
    return lambda qs: c.rank_many(qs - shift)


def test_c1_exactness(verdict):
    t0 = time.perf_counter()
    n, arrays, queries = 10_000, 100, 1000
    mismatches = {}
    for d in DISTS:
        model = parse_dist(d)
        rho = pdf_bound(model)[1]
        qs = np.concatenate([gen_queries(0.0, 1.0, queries - 2, 99), [-0.5, 1.5]])
        for z in range(arrays):
            a = sample_sorted(model, n, [1, z])
            want = rank_oracle_many(a.keys, qs)
            methods = {
                "pca": build_pca(a, 0.1, rho).rank_many,
                "rds": RdsSearcher(a, model).rank_many,
                "rda": rda_build(a, 1.0).rank_many,
                "binary": lambda q, a=a: K.binary_batch(a.keys, q),
                "subexp": _subexp(a, rho),
            }
            for name, fn in methods.items():
                got = fn(qs)[0]
                mismatches[(name, d)] = mismatches.get((name, d), 0) + int(np.count_nonzero(got != want))
    secs = time.perf_counter() - t0
    total = sum(mismatches.values())
    ok = total <= C1_MISMATCHES and secs <= C1_SECONDS
    verdict("C1 exactness (5 methods x 3 dists x 100 arrays x 1000 queries, n=1e4)", ok,
            f"mismatches={total} cells={len(mismatches)} time={secs:.1f}s")


def test_c2_pca_constant_time(verdict):
    t0 = time.perf_counter()
    ns = tuple(1 << e for e in (12, 14, 16, 18, 20))
    rows = run_experiment(ExperimentConfig(methods=("pca",), ns=ns, eps=0.1, rho=1.0))
    secs = time.perf_counter() - t0
    ops = [r.metric_ops for r in rows]
    drift = max(ops) - min(ops)
    sizes_ok = all(math.ceil(r.n ** 1.05) <= r.index_size_ints <= math.ceil(r.n ** 1.05) + 1 for r in rows)
    ok = drift <= C2_DRIFT_OPS and sizes_ok and secs <= C2_SECONDS
    verdict("C2 PCA flat query cost, eps=0.1", ok,
            f"ops={[round(x, 2) for x in ops]} drift={drift:.2f} sizes_ok={sizes_ok} time={secs:.1f}s")


def test_c3_pca_error_tail(verdict):
    t0 = time.perf_counter()
    n, seeds = 1000, 200
    k = math.ceil(n ** 1.5)
    big = sum(build_pcf(sample_sorted(uniform(), n, s), (1, n), k, 0.0, 1.0).max_err >= C3_DELTA
              for s in range(seeds))
    secs = time.perf_counter() - t0
    freq = big / seeds
    verdict("C3 PCA delta >= 5 frequency, eps=0.5, k=n^1.5, n=1e3", freq <= C3_FREQ and secs <= C3_SECONDS,
            f"freq={freq:.3f} (limit {C3_FREQ}) time={secs:.1f}s")


def test_c4_rds_loglog(verdict):
    t0 = time.perf_counter()
    ns = (1 << 12, 1 << 16, 1 << 20)
    dists = ("uniform", "power:t=4", "power:t=16")
    rows = run_experiment(ExperimentConfig(methods=("rds",), dists=dists, ns=ns))
    secs = time.perf_counter() - t0
    m = {(r.dist, r.n): r.metric_ops for r in rows}
    ratios = {d: m[(d, ns[-1])] / m[(d, ns[0])] for d in dists}
    spread = {n: max(m[(d, n)] for d in dists) / min(m[(d, n)] for d in dists) - 1 for n in ns}
    ok = (all(r <= C4_RATIO for r in ratios.values())
          and all(m[(d, ns[-1])] < C4_BINARY_2_20 for d in dists)
          and all(s <= C4_SPREAD for s in spread.values()) and secs <= C4_SECONDS)
    verdict("C4 RDS log-log growth", ok,
            f"ops={ {k: round(v, 2) for k, v in m.items()} } ratios={ {k: round(v, 3) for k, v in ratios.items()} } "
            f"spread={ {k: round(v, 3) for k, v in spread.items()} } time={secs:.1f}s")


def test_c5_dkw_frequency(verdict):
    t0 = time.perf_counter()
    k, seeds = 1000, 1000
    r = math.sqrt(0.5 * k * math.log(math.log(k)))
    i = np.arange(1, k + 1)
    hits = 0
    for s in range(seeds):
        u = sample_sorted(uniform(), k, [5, s]).keys
        dev = max(np.max(i - k * u), np.max(k * u - (i - 1)))
        hits += dev >= r
    secs = time.perf_counter() - t0
    freq = hits / seeds
    verdict("C5 DKW deviation frequency, k=1000", freq <= C5_FREQ and secs <= C5_SECONDS,
            f"freq={freq:.3f} (limit {C5_FREQ}, radius {r:.2f}) time={secs:.1f}s")


def test_c6_rda_behaviour(verdict):
    t0 = time.perf_counter()
    ns = tuple(1 << e for e in range(12, 21))
    rows = run_experiment(ExperimentConfig(methods=("rda",), ns=ns, ratio=1.0))
    secs = time.perf_counter() - t0
    ops = [r.metric_ops for r in rows]
    sizes = [r.index_size_ints for r in rows]
    growth = [b / a for a, b in zip(sizes, sizes[1:])]
    ratio = ops[-1] / ops[0]
    ok = (ratio <= C6_RATIO and all(C6_SIZE_LO <= g <= C6_SIZE_HI for g in growth)
          and secs <= C6_SECONDS)
    verdict("C6 RDA cost and size growth", ok,
            f"ops={[round(x, 2) for x in ops]} ratio={ratio:.3f} sizes={sizes} "
            f"growth={[round(g, 2) for g in growth]} time={secs:.1f}s")


@njit
def _pcf_brute(rows, lens, k):
    """Count arrays whose pieces or error differ from a brute-force optimum."""
    bad = 0
    for t in range(rows.shape[0]):
        m = lens[t]
        keys = rows[t, :m]
        pieces, delta = K.pcf_build_loop(keys, 0, m, k, 0.0, 1.0)
        scale = k / 1.0
        lo_r = np.full(k, 1 << 30)
        hi_r = np.full(k, -1)
        ncand = 3 * (m + k + 3)
        cand = np.empty(ncand)
        c = 0
        for j in range(m):
            cand[c] = keys[j]
            c += 1
        for j in range(k + 1):
            cand[c] = j / k
            c += 1
        cand[c] = -1.0
        cand[c + 1] = 2.0
        c += 2
        for j in range(c):
            cand[c + 2 * j] = np.nextafter(cand[j], -np.inf)
            cand[c + 2 * j + 1] = np.nextafter(cand[j], np.inf)
        for j in range(3 * c):
            x = cand[j]
            i = K.piece_of(x, 0.0, scale, k)
            r = 0
            for z in range(m):
                if keys[z] <= x:
                    r += 1
            lo_r[i] = min(lo_r[i], r)
            hi_r[i] = max(hi_r[i], r)
        worst = 0
        for i in range(k):
            if pieces[i] != lo_r[i] + hi_r[i]:
                bad += 1
                break
            worst = max(worst, (hi_r[i] - lo_r[i] + 1) // 2)
        else:
            if worst != delta:
                bad += 1
    return bad


def test_c7_structure(verdict):
    t0 = time.perf_counter()
    tree_fail = 0
    for s in range(50):
        idx = rda_build(sample_sorted(uniform(), 10_000, [7, s]), 1.0)
        try:
            check_coverage(idx)
            assert idx.height() <= depth_bound(10_000)
        except AssertionError:
            tree_fail += 1
    grid = np.arange(8) / 7.0
    rows, lens = [], []
    for size in range(1, 17):
        combos = np.array(list(itertools.combinations_with_replacement(range(8), size)))
        padded = np.zeros((len(combos), 16))
        padded[:, :size] = grid[combos]
        rows.append(padded)
        lens.append(np.full(len(combos), size))
    rows, lens = np.vstack(rows), np.concatenate(lens)
    pcf_fail = sum(_pcf_brute(rows, lens, k) for k in (1, 2, 3, 5, 8))
    secs = time.perf_counter() - t0
    verdict("C7 RDA coverage/depth on 50 trees; PCF optimality on all arrays <= 16 over an 8-point grid",
            tree_fail == 0 and pcf_fail == 0,
            f"tree_failures={tree_fail} pcf_failures={pcf_fail} arrays={len(rows)} time={secs:.1f}s")


def test_c8_determinism(verdict, tmp_path, capsys):
    argv = ["bench", "--method", "pca,rds,rda,binary,subexp", "--dist", "uniform,power:t=4",
            "--n", "2^12,2^13", "--arrays", "20", "--queries", "500", "--seed", "42"]
    codes = [main(argv + ["--out", str(tmp_path / f"{i}.csv")]) for i in range(2)]
    capsys.readouterr()
    a, b = (tmp_path / "0.csv").read_bytes(), (tmp_path / "1.csv").read_bytes()
    verdict("C8 identical seeds give byte-identical CSV", codes == [0, 0] and a == b,
            f"exit={codes} bytes={len(a)} identical={a == b}")
