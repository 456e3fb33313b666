"""Recursive distribution search (RDS).

Searches a sorted sample using the exact CDF of the distribution it was drawn
from. Each level narrows ``[i, j]`` to a window of radius
``sqrt(0.5 k ln ln k)`` around the conditional-CDF estimate, verifies the
window with two reads and recurses; a failed check or a window below 25 keys
ends in binary search.

``search_window(i, j)`` returns ranks relative to position ``i - 1``; the
public :func:`rds_search` returns the global rank.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .core import binary_search_rank
from .errors import DegenerateInterval
from .instrument import OpContext, counted_cdf, counted_read

BASE_CASE = K.RDS_BASE


@dataclass(frozen=True)
class ConditionalCdf:
    """CDF of ``base`` restricted to ``[a_i, a_j]``."""

    base: object
    a_i: float
    a_j: float

    def cdf(self, x):
        if not self.a_i < self.a_j:
            raise DegenerateInterval(f"a_i={self.a_i} >= a_j={self.a_j}")
        fi = self.base.cdf(self.a_i)
        fj = self.base.cdf(self.a_j)
        denom = fj - fi
        if not denom > 0.0:
            raise DegenerateInterval("base CDF is flat on [a_i, a_j]")
        return min(1.0, max(0.0, (self.base.cdf(x) - fi) / denom))


def conditional_cdf(base, a_i, a_j, q, ctx=None):
    """``(F(q) - F(a_i)) / (F(a_j) - F(a_i))`` clamped to [0, 1]; one model evaluation."""
    if ctx is None:
        ctx = OpContext()
    if not a_i < a_j:
        raise DegenerateInterval(f"a_i={a_i} >= a_j={a_j}")
    return counted_cdf(ConditionalCdf(base, a_i, a_j), q, ctx)


def search_radius(k):
    return math.sqrt(0.5 * k * math.log(math.log(k)))


def estimate_window(i, j, cond):
    """Window ``[floor(ihat - r), ceil(ihat + r)]`` clipped into ``[i, j]`` (1-based)."""
    k = j - i - 1
    ihat = i + 1 + k * cond
    r = search_radius(k)
    return max(math.floor(ihat - r), i), min(math.ceil(ihat + r), j)


def rds_search(a, q, base, ctx=None, trace=None):
    """Exact rank of ``q`` in ``a`` guided by ``base``.

    Correct for any ``base``; a model that does not match the data only costs
    extra operations. ``trace``, if given, receives one ``(i, j)`` per level.
    """
    if ctx is None:
        ctx = OpContext()
    n = a.n
    if n == 0:
        return 0
    i, j = 1, n
    if trace is not None:
        trace.append((i, j))
    if j - i - 1 < BASE_CASE:
        return binary_search_rank(a, q, 1, n, ctx)
    ai = counted_read(a, i, ctx)
    aj = counted_read(a, j, ctx)
    if ai > q:
        return 0
    if aj <= q:
        return n
    # Invariant from here on: a_i <= q < a_j, so the global rank is in [i, j - 1].
    while j - i - 1 >= BASE_CASE:
        try:
            cond = conditional_cdf(base, ai, aj, q, ctx)
        except DegenerateInterval:
            break
        l, u = estimate_window(i, j, cond)
        if u - l >= j - i:
            break
        al = ai if l == i else counted_read(a, l, ctx)
        au = aj if u == j else counted_read(a, u, ctx)
        if al > q or au <= q:
            break
        i, j, ai, aj = l, u, al, au
        if trace is not None:
            trace.append((i, j))
    return i + binary_search_rank(a, q, i + 1, j - 1, ctx)


def rds_search_many(a, qs, base):
    """Batch form: ``(ranks, mem_ops, cdf_evals, depth)`` arrays."""
    code, params, kx, ky = base.kernel_args()
    return K.rds_batch(a.keys, np.asarray(qs, dtype=np.float64), code, params, kx, ky)


def max_of_means(ops):
    """``max over queries of mean over arrays`` for an ``(arrays, queries)`` matrix."""
    ops = np.asarray(ops, dtype=np.float64)
    if ops.ndim != 2 or ops.size == 0:
        raise ValueError("need a non-empty (arrays, queries) matrix")
    return float(ops.mean(axis=0).max())


def rds_expected_ops(arrays, queries, base):
    """The benchmark metric for RDS over a set of arrays and a shared query set."""
    arrays = list(arrays)
    queries = np.asarray(list(queries), dtype=np.float64)
    if not arrays or queries.size == 0:
        raise ValueError("need at least one array and one query")
    ops = np.vstack([rds_search_many(a, queries, base)[1] for a in arrays])
    return max_of_means(ops)


class RdsSearcher:
    """Index-shaped wrapper so RDS can sit beside the other methods."""

    size_ints = 0

    def __init__(self, array, base):
        self.array = array
        self.base = base

    def rank(self, q, ctx=None):
        return rds_search(self.array, q, self.base, ctx)

    def rank_many(self, qs):
        r, o, _, _ = rds_search_many(self.array, qs, self.base)
        return r, o
