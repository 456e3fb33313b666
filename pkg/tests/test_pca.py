import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sublog import kernels as K
from sublog.core import SortedKeyArray, rank_oracle, rank_oracle_many
from sublog.distributions import sample_sorted, uniform
from sublog.errors import BadHeader, InvalidDomain, PieceCapExceeded, TruncatedFile
from sublog.instrument import OpContext
from sublog.pca import (MAX_PIECES, PcfModel, build_pca, build_pcf, dumps_pcf, load_pca,
                        loads_pcf, pca_piece_count, query_pca, save_pca)

from conftest import arr

keys_st = st.lists(st.sampled_from([i / 16 for i in range(17)]) | st.floats(0, 1),
                   min_size=1, max_size=40).map(sorted)


def test_build_pcf_examples():
    m = build_pcf(arr([0.5]), (1, 1), 1, 0.0, 1.0)
    assert list(m.pieces) == [1] and m.max_err == 1
    m = build_pcf(arr([0.25, 0.75]), (1, 2), 2, 0.0, 1.0)
    assert list(m.pieces / 2) == [0.5, 1.5] and m.max_err == 1


def test_build_pcf_errors():
    a = arr([0.5])
    with pytest.raises(InvalidDomain):
        build_pcf(a, (1, 1), 4, 1.0, 1.0)
    with pytest.raises(PieceCapExceeded):
        build_pcf(a, (1, 1), MAX_PIECES + 1, 0.0, 1.0)
    with pytest.raises(ValueError):
        build_pcf(a, (1, 2), 4, 0.0, 1.0)


def test_piece_count_examples():
    assert pca_piece_count(1000, 0.1, 1.0) == 1413
    # 1000^1.05 * 3.9894^1.025 = 1412.54 * 4.1297 = 5833.4
    expect = math.ceil(math.exp(1.05 * math.log(1000) + 1.025 * math.log(3.9894)))
    assert expect == 5834
    assert pca_piece_count(1000, 0.1, 3.9894) == expect


def test_piece_lookup():
    m = PcfModel(np.zeros(100, np.int64), 0.0, 1.0, 0)
    assert m.piece(0.37) == 37
    assert m.piece(1.0) == 99
    assert m.piece(-0.5) == 0 and m.piece(7.0) == 99


def _true_span(keys, lo, hi, k, i):
    """Brute-force min and max of the rank over the floats routed to piece ``i``.

    The edge pieces also receive queries outside ``[lo, hi]``.
    """
    scale = k / (hi - lo)
    cand = [lo + (hi - lo) * i / k, lo + (hi - lo) * (i + 1) / k, lo - 1.0, hi + 1.0]
    for x in list(keys) + cand:
        for y in (x, np.nextafter(x, -np.inf), np.nextafter(x, np.inf)):
            cand.append(y)
    ranks = [int(np.count_nonzero(keys <= x)) for x in cand
             if K.piece_of(x, lo, scale, k) == i]
    return (min(ranks), max(ranks)) if ranks else None


@given(keys_st, st.integers(1, 12))
def test_pieces_are_optimal_midpoints(keys, k):
    keys = np.array(keys)
    m = build_pcf(arr(keys), (1, keys.size), k, 0.0, 1.0)
    worst = 0
    for i in range(k):
        span = _true_span(keys, 0.0, 1.0, k, i)
        assert span is not None
        lo_r, hi_r = span
        # twice the best constant is lo + hi; its error is ceil of half the span
        assert m.pieces[i] == lo_r + hi_r
        worst = max(worst, (hi_r - lo_r + 1) // 2)
        # every piece's error is at most the number of keys inside it
        inside = np.count_nonzero(np.array([K.piece_of(x, 0.0, k, k) for x in keys]) == i)
        assert (hi_r - lo_r + 1) // 2 <= inside
    assert m.max_err == worst
    assert np.all(np.diff(m.pieces) >= 0)


@given(keys_st, st.integers(1, 64))
def test_loop_and_vector_builders_agree(keys, k):
    keys = np.array(keys)
    p1, d1 = K.pcf_build_loop(keys, 0, keys.size, k, 0.0, 1.0)
    p2, d2 = K.pcf_build_vec(keys, 0, keys.size, k, 0.0, 1.0)
    assert np.array_equal(p1, p2) and d1 == d2


@given(keys_st, st.integers(1, 30), st.data())
def test_window_ranks_are_relative(keys, k, data):
    keys = np.array(keys)
    i0 = data.draw(st.integers(1, keys.size))
    j0 = data.draw(st.integers(i0, keys.size))
    sub = keys[i0 - 1:j0]
    lo, hi = float(sub[0]), float(sub[-1])
    if not lo < hi:
        return
    m = build_pcf(arr(keys), (i0, j0), k, lo, hi)
    ref = build_pcf(SortedKeyArray(sub, lo, hi), (1, sub.size), k, lo, hi)
    assert np.array_equal(m.pieces, ref.pieces) and m.max_err == ref.max_err


@given(keys_st, st.floats(0.05, 2.0), st.lists(st.floats(-0.2, 1.2), min_size=1, max_size=25))
def test_query_exact(keys, eps, queries):
    a = arr(keys)
    idx = build_pca(a, eps, 1.0)
    qs = np.array(queries + list(keys))
    ranks, ops = idx.rank_many(qs)
    for q, r, o in zip(qs, ranks, ops):
        ctx = OpContext()
        assert query_pca(idx, q, ctx) == r == rank_oracle(a, q)
        assert ctx.mem_ops == o


def test_query_exact_random_uniform():
    qs = np.random.default_rng(0).random(1000)
    for s in range(10):
        a = sample_sorted(uniform(), 10_000, s)
        ranks, _ = build_pca(a, 0.1, 1.0).rank_many(qs)
        assert np.array_equal(ranks, rank_oracle_many(a.keys, qs))


def test_size_accounting():
    idx = build_pca(sample_sorted(uniform(), 1000, 0), 0.1, 1.0)
    assert idx.model.k == 1413
    assert idx.size_ints == 1414


def test_delta_tail_frequency():
    # eps = 0.5, k >= n^(1+eps) rho^(1+eps/2) with rho = 1
    n = 10_000
    k = math.ceil(n ** 1.5)
    hits = 0
    for s in range(200):
        a = sample_sorted(uniform(), n, s)
        hits += build_pcf(a, (1, n), k, 0.0, 1.0).max_err >= 5
    assert hits / 200 <= 0.01


def test_s_max_tail():
    # c = 5: k >= n^(1 + 2/(c-1)) rho^(1 + 1/(c-1))
    n, c = 1000, 5
    k = math.ceil(n ** (1 + 2 / (c - 1)))
    hits = 0
    for s in range(200):
        keys = sample_sorted(uniform(), n, s).keys
        counts = np.bincount(np.minimum((keys * k).astype(np.int64), k - 1), minlength=k)
        hits += counts.max() >= c
    assert hits / 200 <= 0.05


def test_serialization(tmp_path):
    a = sample_sorted(uniform(), 500, 3)
    idx = build_pca(a, 0.1, 1.0)
    m = loads_pcf(dumps_pcf(idx.model))
    assert np.array_equal(m.pieces, idx.model.pieces)
    assert (m.lo, m.hi, m.max_err) == (idx.model.lo, idx.model.hi, idx.model.max_err)
    save_pca(tmp_path / "i.pca", idx)
    back = load_pca(tmp_path / "i.pca", a)
    assert back.rank(0.4) == rank_oracle(a, 0.4)
    blob = dumps_pcf(idx.model)
    with pytest.raises(BadHeader):
        loads_pcf(blob[:10])
    with pytest.raises(TruncatedFile):
        loads_pcf(blob[:-8])


def test_empty_array():
    idx = build_pca(SortedKeyArray(np.empty(0)), 0.1, 1.0)
    assert idx.rank(0.5) == 0
