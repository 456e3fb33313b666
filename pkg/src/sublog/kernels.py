"""Hot loops.

Every function here is numba-compiled unless ``SUBLOG_JIT=0``. Kernels use
0-based positions; ``bsearch`` windows are inclusive ``[lo, hi]``. Query
kernels return the memory-operation count alongside the answer, using the
same charging rules as the instrumented reference paths in the index modules.

The piecewise-constant builder has two implementations: a single-pass loop
(compiled) and a vectorized numpy version used when the JIT is off. They are
required to agree bit for bit.
"""
import math

import numpy as np

from ._jit import JIT_ENABLED, njit

UNIFORM, POWER, GAUSS, EMPIRICAL = 0, 1, 2, 3

RDS_BASE = 25
LEAF_MAX = 61

_SQRT2 = math.sqrt(2.0)


# -- binary search -----------------------------------------------------------

@njit(cache=True, nogil=True)
def bsearch(keys, q, lo, hi):
    """Count of ``keys[lo..hi] <= q`` and the number of probes spent."""
    left = lo
    right = hi
    probes = 0
    while left <= right:
        mid = (left + right) // 2
        probes += 1
        if keys[mid] <= q:
            left = mid + 1
        else:
            right = mid - 1
    return left - lo, probes


@njit(cache=True, nogil=True)
def binary_batch(keys, qs):
    m = qs.size
    ranks = np.empty(m, np.int64)
    ops = np.empty(m, np.int64)
    for t in range(m):
        c, p = bsearch(keys, qs[t], 0, keys.size - 1)
        ranks[t] = c
        ops[t] = p
    return ranks, ops


# -- distribution CDFs -------------------------------------------------------

@njit(cache=True, nogil=True)
def _phi(z):
    return 0.5 * math.erfc(-z / _SQRT2)


@njit(cache=True, nogil=True)
def cdf_value(kind, params, kx, ky, x):
    """CDF of the encoded model; ``params = (lo, hi, a, b)``."""
    lo = params[0]
    hi = params[1]
    if x <= lo:
        return 0.0
    if x >= hi:
        return 1.0
    if kind == UNIFORM:
        return (x - lo) / (hi - lo)
    if kind == POWER:
        return ((x - lo) / (hi - lo)) ** params[2]
    if kind == GAUSS:
        mu = params[2]
        sigma = params[3]
        a = _phi((lo - mu) / sigma)
        b = _phi((hi - mu) / sigma)
        v = (_phi((x - mu) / sigma) - a) / (b - a)
        return min(1.0, max(0.0, v))
    return np.interp(x, kx, ky)


# -- piecewise-constant models ------------------------------------------------

@njit(cache=True, nogil=True)
def piece_of(q, lo, scale, k):
    """Piece holding ``q``: ``floor((q - lo) * scale)`` clamped to ``[0, k-1]``."""
    x = (q - lo) * scale
    if not x >= 0.0:
        return 0
    if x >= k:
        return k - 1
    return min(int(math.floor(x)), k - 1)


@njit(cache=True, nogil=True)
def pcf_build_loop(keys, s, e, k, lo, hi):
    """Pieces (doubled) and max error of a k-piece model of the rank of ``keys[s:e]``.

    For piece ``i`` the rank over every float routed to ``i`` by ``piece_of``
    spans ``[left, right]``; the stored value is ``left + right`` (twice the
    midpoint) and the error is ``ceil((right - left) / 2)``.
    """
    scale = k / (hi - lo)
    pieces = np.empty(k, np.int64)
    delta = 0
    p = s
    for i in range(k):
        left = p - s
        if p < e:
            x = keys[p]
            if piece_of(x, lo, scale, k) == i and piece_of(np.nextafter(x, -np.inf), lo, scale, k) < i:
                # x is the smallest float routed to piece i, so r(x) is the minimum
                qq = p
                while qq < e and keys[qq] == x:
                    qq += 1
                left = qq - s
        while p < e and piece_of(keys[p], lo, scale, k) <= i:
            p += 1
        right = p - s
        pieces[i] = left + right
        d = (right - left + 1) // 2
        if d > delta:
            delta = d
    return pieces, delta


def _piece_vec(x, lo, scale, k):
    v = (x - lo) * scale
    out = np.zeros(x.shape, dtype=np.int64)
    ok = v >= 0.0
    out[ok] = np.minimum(np.floor(np.minimum(v[ok], float(k))), k - 1).astype(np.int64)
    return out


def pcf_build_vec(keys, s, e, k, lo, hi):
    """Vectorized twin of :func:`pcf_build_loop`."""
    sub = np.asarray(keys[s:e], dtype=np.float64)
    scale = k / (hi - lo)
    pidx = _piece_vec(sub, lo, scale, k)
    right = np.searchsorted(pidx, np.arange(k), side="right").astype(np.int64)
    left = np.empty_like(right)
    left[0] = 0
    left[1:] = right[:-1]
    nonempty = np.nonzero(right > left)[0]
    if nonempty.size:
        first = sub[left[nonempty]]
        prev = _piece_vec(np.nextafter(first, -np.inf), lo, scale, k)
        hit = prev < nonempty
        left[nonempty[hit]] = np.searchsorted(sub, first[hit], side="right")
    pieces = left + right
    delta = int(((right - left + 1) // 2).max()) if k else 0
    return pieces, delta


pcf_build = pcf_build_loop if JIT_ENABLED else pcf_build_vec


@njit(cache=True, nogil=True)
def pca_query(keys, pieces, delta, lo, hi, q):
    k = pieces.size
    n = keys.size
    i = piece_of(q, lo, k / (hi - lo), k)
    p2 = pieces[i]
    ops = 1
    rl = (p2 - 2 * delta + 1) // 2
    ru = (p2 + 2 * delta) // 2
    rl = min(max(rl, 0), n)
    ru = min(max(ru, 0), n)
    if ru <= rl:
        return rl, ops
    c, pr = bsearch(keys, q, rl, ru - 1)
    return rl + c, ops + pr


@njit(cache=True, nogil=True)
def pca_batch(keys, pieces, delta, lo, hi, qs):
    m = qs.size
    ranks = np.empty(m, np.int64)
    ops = np.empty(m, np.int64)
    for t in range(m):
        r, o = pca_query(keys, pieces, delta, lo, hi, qs[t])
        ranks[t] = r
        ops[t] = o
    return ranks, ops


# -- recursive distribution search --------------------------------------------

@njit(cache=True, nogil=True)
def rds_radius(k):
    return math.sqrt(0.5 * k * math.log(math.log(k)))


@njit(cache=True, nogil=True)
def rds_query(keys, q, kind, params, kx, ky):
    """Returns ``(rank, mem_ops, cdf_evals, depth)``; depth counts search levels."""
    n = keys.size
    if n == 0:
        return 0, 0, 0, 0
    i = 0
    j = n - 1
    if j - i - 1 < RDS_BASE:
        c, pr = bsearch(keys, q, 0, n - 1)
        return c, pr, 0, 1
    ai = keys[i]
    aj = keys[j]
    ops = 2
    if ai > q:
        return 0, ops, 0, 1
    if aj <= q:
        return n, ops, 0, 1
    evals = 0
    depth = 1
    while True:
        k = j - i - 1
        if k < RDS_BASE:
            break
        fi = cdf_value(kind, params, kx, ky, ai)
        fj = cdf_value(kind, params, kx, ky, aj)
        ops += 1
        evals += 1
        denom = fj - fi
        if not denom > 0.0:
            break
        cond = (cdf_value(kind, params, kx, ky, q) - fi) / denom
        cond = min(1.0, max(0.0, cond))
        ihat = (i + 1) + 1 + k * cond
        r = rds_radius(k)
        l1 = max(int(math.floor(ihat - r)), i + 1)
        u1 = min(int(math.ceil(ihat + r)), j + 1)
        l0 = l1 - 1
        u0 = u1 - 1
        if u0 - l0 >= j - i:
            break
        if l0 == i:
            al = ai
        else:
            al = keys[l0]
            ops += 1
        if u0 == j:
            au = aj
        else:
            au = keys[u0]
            ops += 1
        if al > q or au <= q:
            break
        i = l0
        j = u0
        ai = al
        aj = au
        depth += 1
    # a_i <= q < a_j: only the inner keys are unresolved
    c, pr = bsearch(keys, q, i + 1, j - 1)
    return i + 1 + c, ops + pr, evals, depth


@njit(cache=True, nogil=True)
def rds_batch(keys, qs, kind, params, kx, ky):
    m = qs.size
    ranks = np.empty(m, np.int64)
    ops = np.empty(m, np.int64)
    evals = np.empty(m, np.int64)
    depth = np.empty(m, np.int64)
    for t in range(m):
        r, o, e, d = rds_query(keys, qs[t], kind, params, kx, ky)
        ranks[t] = r
        ops[t] = o
        evals[t] = e
        depth[t] = d
    return ranks, ops, evals, depth


# -- recursive distribution approximator ---------------------------------------

@njit(cache=True, nogil=True)
def rda_stride(k):
    """Child stride ``ceil(2 sqrt(k) (1 + sqrt(0.5 ln ln k)) + 2)``."""
    return int(math.ceil(2.0 * math.sqrt(k) * (1.0 + math.sqrt(0.5 * math.log(math.log(k)))) + 2.0))


@njit(cache=True, nogil=True)
def _grow_i(a, need):
    if need <= a.size:
        return a
    b = np.empty(max(need, 2 * a.size), a.dtype)
    b[:a.size] = a
    return b


@njit(cache=True, nogil=True)
def _grow_f(a, need):
    if need <= a.size:
        return a
    b = np.empty(max(need, 2 * a.size), a.dtype)
    b[:a.size] = a
    return b


@njit(cache=True, nogil=True)
def rda_build(keys, ratio):
    """Breadth-first construction into flat arrays (children are contiguous).

    A node covering global ranks ``[S, T]`` becomes internal only when it holds
    more than 61 keys, its key range is non-degenerate, a model level saves at
    least one binary-search probe (child coverage ``2k'+1 <= k/2``) and the
    measured model error is at most ``k'/2``.
    """
    n = keys.size
    cap = 64
    start = np.empty(cap, np.int64)
    end = np.empty(cap, np.int64)
    stride = np.empty(cap, np.int64)
    poff = np.empty(cap, np.int64)
    pcnt = np.empty(cap, np.int64)
    coff = np.empty(cap, np.int64)
    ccnt = np.empty(cap, np.int64)
    nlo = np.empty(cap, np.float64)
    nhi = np.empty(cap, np.float64)
    pieces = np.empty(256, np.int64)
    pused = 0
    count = 1
    start[0] = 1
    end[0] = n
    idx = 0
    while idx < count:
        s_ = start[idx]
        t_ = end[idx]
        k = t_ - s_ + 1
        stride[idx] = 0
        poff[idx] = 0
        pcnt[idx] = 0
        coff[idx] = 0
        ccnt[idx] = 0
        nlo[idx] = 0.0
        nhi[idx] = 0.0
        if k > LEAF_MAX:
            lo = keys[s_ - 1]
            hi = keys[t_ - 1]
            if lo < hi:
                kp = rda_stride(k)
                if 2 * (2 * kp + 1) <= k:
                    npc = int(math.ceil(ratio * math.sqrt(k)))
                    pc, eps = pcf_build(keys, s_ - 1, t_, npc, lo, hi)
                    if 2 * eps <= kp:
                        pieces = _grow_i(pieces, pused + npc)
                        pieces[pused:pused + npc] = pc
                        stride[idx] = kp
                        poff[idx] = pused
                        pcnt[idx] = npc
                        nlo[idx] = lo
                        nhi[idx] = hi
                        pused += npc
                        m = (k + kp - 1) // kp
                        need = count + m
                        start = _grow_i(start, need)
                        end = _grow_i(end, need)
                        stride = _grow_i(stride, need)
                        poff = _grow_i(poff, need)
                        pcnt = _grow_i(pcnt, need)
                        coff = _grow_i(coff, need)
                        ccnt = _grow_i(ccnt, need)
                        nlo = _grow_f(nlo, need)
                        nhi = _grow_f(nhi, need)
                        coff[idx] = count
                        ccnt[idx] = m
                        for z in range(m):
                            start[count] = max(s_, s_ - 1 + z * kp)
                            end[count] = min(t_, s_ - 1 + (z + 2) * kp)
                            count += 1
        idx += 1
    return (start[:count].copy(), end[:count].copy(), stride[:count].copy(),
            poff[:count].copy(), pcnt[:count].copy(), coff[:count].copy(),
            ccnt[:count].copy(), nlo[:count].copy(), nhi[:count].copy(),
            pieces[:pused].copy())


@njit(cache=True, nogil=True)
def rda_child(p2, kp, m):
    """Child slot for a doubled estimate ``p2``: ``floor((p - e) / 2e)`` with ``2e = k'``."""
    z = (p2 - kp) // (2 * kp)
    if z < 0:
        return 0
    if z > m - 1:
        return m - 1
    return z


@njit(cache=True, nogil=True)
def rda_query(keys, start, end, stride, poff, pcnt, coff, ccnt, nlo, nhi, pieces, q):
    n = keys.size
    if n == 0:
        return 0, 0, 0
    ops = 1
    if keys[0] > q:
        return 0, ops, 0
    node = 0
    depth = 0
    while stride[node] > 0:
        ops += 1
        t = pcnt[node]
        i = piece_of(q, nlo[node], t / (nhi[node] - nlo[node]), t)
        p2 = pieces[poff[node] + i]
        node = coff[node] + rda_child(p2, stride[node], ccnt[node])
        depth += 1
    c, pr = bsearch(keys, q, start[node] - 1, end[node] - 1)
    return start[node] - 1 + c, ops + pr, depth


@njit(cache=True, nogil=True)
def rda_batch(keys, start, end, stride, poff, pcnt, coff, ccnt, nlo, nhi, pieces, qs):
    m = qs.size
    ranks = np.empty(m, np.int64)
    ops = np.empty(m, np.int64)
    for t in range(m):
        r, o, _ = rda_query(keys, start, end, stride, poff, pcnt, coff, ccnt, nlo, nhi, pieces, qs[t])
        ranks[t] = r
        ops[t] = o
    return ranks, ops
