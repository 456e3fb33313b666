"""Piecewise-constant approximation (PCA) index.

A single k-piece constant model of the rank function over the array's
domain, followed by a binary search of width ``2 * delta`` around the
estimate. ``delta`` is measured at build time, so answers are always exact.
"""
import math
import struct
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .core import binary_search_rank
from .errors import BadHeader, InvalidDomain, PieceCapExceeded, TruncatedFile
from .instrument import OpContext

MAX_PIECES = 1 << 26


@dataclass(frozen=True, eq=False)
class PcfModel:
    """k pieces over ``[lo, hi]``; ``pieces[i]`` stores twice the piece constant."""

    pieces: np.ndarray
    lo: float
    hi: float
    max_err: int

    @property
    def k(self):
        return int(self.pieces.size)

    @property
    def scale(self):
        return self.k / (self.hi - self.lo)

    def piece(self, q):
        return K.piece_of(float(q), self.lo, self.scale, self.k)

    def value(self, q):
        """The model estimate (a half-integer) at ``q``."""
        return self.pieces[self.piece(q)] / 2


def build_pcf(a, window, k, lo, hi):
    """Fit ``k`` equal-width constant pieces to the rank of ``a[i0..j0]`` over ``[lo, hi]``.

    ``window`` is a 1-based inclusive ``(i0, j0)``; ranks are relative to the
    window. Build-time rank evaluation is not charged to any query.
    """
    if not lo < hi:
        raise InvalidDomain(f"need lo < hi, got [{lo}, {hi}]")
    k = int(k)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > MAX_PIECES:
        raise PieceCapExceeded(f"k={k} exceeds the cap of {MAX_PIECES} pieces")
    i0, j0 = window
    if not 1 <= i0 <= j0 <= a.n:
        raise ValueError(f"window {window} invalid for n={a.n}")
    pieces, delta = K.pcf_build(a.keys, i0 - 1, j0, k, float(lo), float(hi))
    return PcfModel(np.asarray(pieces, dtype=np.int64), float(lo), float(hi), int(delta))


def pca_piece_count(n, eps, rho):
    """``ceil(n^(1 + eps/2) * rho^(1 + eps/4))``."""
    return math.ceil(n ** (1 + eps / 2) * rho ** (1 + eps / 4))


@dataclass(frozen=True, eq=False)
class PcaIndex:
    model: PcfModel
    eps: float
    rho: float
    array: object

    @property
    def size_ints(self):
        # pieces plus the stored error bound
        return self.model.k + 1

    def rank(self, q, ctx=None):
        return query_pca(self, q, ctx)

    def rank_many(self, qs):
        m = self.model
        return K.pca_batch(self.array.keys, m.pieces, m.max_err, m.lo, m.hi,
                           np.asarray(qs, dtype=np.float64))


def build_pca(a, eps, rho):
    """Build over ``a``'s domain with ``k = ceil(n^(1+eps/2) rho^(1+eps/4))`` pieces."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not rho > 0:
        raise ValueError("rho must be positive")
    if a.n == 0:
        model = PcfModel(np.zeros(1, dtype=np.int64), a.domain_lo, a.domain_hi, 0)
        return PcaIndex(model, eps, rho, a)
    k = pca_piece_count(a.n, eps, rho)
    return PcaIndex(build_pcf(a, (1, a.n), k, a.domain_lo, a.domain_hi), eps, rho, a)


def query_pca(idx, q, ctx=None):
    """Exact rank: one model read, then a binary search over ``[p - delta, p + delta]``."""
    if ctx is None:
        ctx = OpContext()
    m = idx.model
    n = idx.array.n
    p2 = int(m.pieces[m.piece(q)])
    ctx.mem_ops += 1
    d = m.max_err
    lo_rank = min(max((p2 - 2 * d + 1) // 2, 0), n)
    hi_rank = min(max((p2 + 2 * d) // 2, 0), n)
    if hi_rank <= lo_rank:
        return lo_rank
    return lo_rank + binary_search_rank(idx.array, q, lo_rank + 1, hi_rank, ctx)


# -- serialization --------------------------------------------------------------
# header: k (u64), delta (u64), lo (f64), hi (f64); then k doubled pieces (i64)

_PCF_HEADER = struct.Struct("<QQdd")


def dumps_pcf(model):
    return _PCF_HEADER.pack(model.k, model.max_err, model.lo, model.hi) + \
        model.pieces.astype("<i8").tobytes()


def loads_pcf(data):
    if len(data) < _PCF_HEADER.size:
        raise BadHeader("PCF blob shorter than its header")
    k, delta, lo, hi = _PCF_HEADER.unpack_from(data)
    body = data[_PCF_HEADER.size:]
    if len(body) != 8 * k:
        raise TruncatedFile(f"expected {k} pieces, found {len(body) // 8}")
    pieces = np.frombuffer(body, dtype="<i8").astype(np.int64)
    return PcfModel(pieces, lo, hi, int(delta))


def save_pca(path, idx):
    with open(path, "wb") as fh:
        fh.write(dumps_pcf(idx.model))


def load_pca(path, a, eps=float("nan"), rho=float("nan")):
    with open(path, "rb") as fh:
        return PcaIndex(loads_pcf(fh.read()), eps, rho, a)
