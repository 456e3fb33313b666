"""Recursive distribution approximator (RDA) index.

A tree of piecewise-constant rank models. An internal node over global ranks
``[S, T]`` holds ``t = ceil(ratio * sqrt(k))`` pieces over ``[a_S, a_T]`` and
routes a query to one of ``ceil(k / k')`` children, each spanning ``2k'``
positions at stride ``k'``. Leaves are answered with binary search.

Nodes live in flat breadth-first arrays (children are contiguous) so the
compiled kernels can walk them; :class:`RdaNode` is a read-only view.
"""
import math
import struct
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .core import binary_search_rank
from .errors import BadHeader, TruncatedFile, VersionMismatch
from .instrument import OpContext, counted_read

LEAF_MAX = K.LEAF_MAX
_FIELDS = ("start", "end", "stride", "poff", "pcnt", "coff", "ccnt", "nlo", "nhi", "pieces")


@dataclass(frozen=True)
class RdaNode:
    index: object
    id: int

    @property
    def start(self):
        return int(self.index.start[self.id])

    @property
    def end(self):
        return int(self.index.end[self.id])

    @property
    def is_leaf(self):
        return self.index.stride[self.id] == 0

    @property
    def stride(self):
        return int(self.index.stride[self.id])

    @property
    def max_err(self):
        return (self.stride + 1) // 2

    @property
    def pieces(self):
        ix = self.index
        o = ix.poff[self.id]
        return ix.pieces[o:o + ix.pcnt[self.id]]

    @property
    def key_range(self):
        return float(self.index.nlo[self.id]), float(self.index.nhi[self.id])

    @property
    def children(self):
        ix = self.index
        o = int(ix.coff[self.id])
        return [RdaNode(ix, o + z) for z in range(int(ix.ccnt[self.id]))]


class RdaIndex:
    def __init__(self, array, ratio, start, end, stride, poff, pcnt, coff, ccnt, nlo, nhi, pieces):
        self.array = array
        self.ratio = float(ratio)
        self.start = start
        self.end = end
        self.stride = stride
        self.poff = poff
        self.pcnt = pcnt
        self.coff = coff
        self.ccnt = ccnt
        self.nlo = nlo
        self.nhi = nhi
        self.pieces = pieces

    @property
    def root(self):
        return RdaNode(self, 0)

    @property
    def node_count(self):
        return int(self.start.size)

    @property
    def size_ints(self):
        return rda_size_ints(self)

    def _flat(self):
        return (self.start, self.end, self.stride, self.poff, self.pcnt, self.coff,
                self.ccnt, self.nlo, self.nhi, self.pieces)

    def rank(self, q, ctx=None):
        return rda_query(self, q, ctx)

    def rank_many(self, qs):
        return K.rda_batch(self.array.keys, *self._flat(), np.asarray(qs, dtype=np.float64))

    def height(self):
        """Number of internal levels on the longest root-to-leaf path."""
        depth = np.zeros(self.node_count, dtype=np.int64)
        for v in range(self.node_count):
            c = int(self.ccnt[v])
            if c:
                o = int(self.coff[v])
                depth[o:o + c] = depth[v] + 1
        return int(depth.max()) if depth.size else 0


def rda_build(a, ratio=1.0):
    if not ratio > 0:
        raise ValueError("ratio must be positive")
    if a.n == 0:
        z = np.zeros(1, dtype=np.int64)
        return RdaIndex(a, ratio, np.ones(1, np.int64), z.copy(), z.copy(), z.copy(), z.copy(),
                        z.copy(), z.copy(), np.zeros(1), np.zeros(1), np.empty(0, np.int64))
    return RdaIndex(a, ratio, *K.rda_build(a.keys, float(ratio)))


def rda_size_ints(idx):
    """Leaves store ``(start, end)``; internal nodes add their pieces and ``k'``."""
    internal = idx.stride > 0
    n_int = int(np.count_nonzero(internal))
    n_leaf = idx.node_count - n_int
    return 2 * n_leaf + 3 * n_int + int(idx.pcnt[internal].sum())


def rda_query(idx, q, ctx=None):
    """Reference walk, step-for-step the same as the compiled kernel."""
    if ctx is None:
        ctx = OpContext()
    a = idx.array
    if a.n == 0:
        return 0
    if counted_read(a, 1, ctx) > q:
        return 0
    v = 0
    while idx.stride[v] > 0:
        ctx.mem_ops += 1
        t = int(idx.pcnt[v])
        lo, hi = float(idx.nlo[v]), float(idx.nhi[v])
        i = K.piece_of(float(q), lo, t / (hi - lo), t)
        p2 = int(idx.pieces[idx.poff[v] + i])
        v = int(idx.coff[v]) + child_slot(p2, int(idx.stride[v]), int(idx.ccnt[v]))
    s, e = int(idx.start[v]), int(idx.end[v])
    return s - 1 + binary_search_rank(a, q, s, e, ctx)


def child_slot(p2, kp, m):
    """``floor((p - e) / 2e)`` clamped to ``[0, m-1]`` for doubled estimate ``p2`` and ``2e = k'``."""
    return min(max((p2 - kp) // (2 * kp), 0), m - 1)


def check_coverage(idx):
    """Every rank an internal node can answer lies in some child's span.

    A node over ``[S, T]`` answers ranks ``S-1 .. T`` and a child over
    ``[s, e]`` answers ``s-1 .. e``. Raises AssertionError on a gap.
    """
    for v in range(idx.node_count):
        c = int(idx.ccnt[v])
        if not c:
            continue
        o = int(idx.coff[v])
        reach = int(idx.start[v]) - 1
        for u in range(o, o + c):
            s, e = int(idx.start[u]), int(idx.end[u])
            assert s - 1 <= reach, f"node {v}: rank {reach} not covered"
            reach = max(reach, e)
        assert reach >= idx.end[v], f"node {v}: ranks above {reach} not covered"


def depth_bound(n):
    """Smallest ``d`` with ``n^(1/2^d) <= 61``, plus one."""
    d = 0
    while n ** (0.5 ** d) > LEAF_MAX:
        d += 1
    return d + 1


# -- serialization --------------------------------------------------------------
# magic, version, n, node count; then per node in preorder:
#   leaf:     tag 0, start, end
#   internal: tag 1, start, end, k', t, lo (f64), hi (f64), t pieces, child count

MAGIC = b"SLRDA\x00\x00\x00"
VERSION = 1
_HEAD = struct.Struct("<8sQQQ")
_Q = struct.Struct("<Q")
_q = struct.Struct("<q")
_d = struct.Struct("<d")


def dumps_rda(idx):
    out = [_HEAD.pack(MAGIC, VERSION, idx.array.n, idx.node_count)]
    stack = [0]
    while stack:
        v = stack.pop()
        if idx.stride[v] == 0:
            out.append(struct.pack("<Qqq", 0, idx.start[v], idx.end[v]))
            continue
        t = int(idx.pcnt[v])
        out.append(struct.pack("<QqqqQdd", 1, idx.start[v], idx.end[v], idx.stride[v], t,
                               idx.nlo[v], idx.nhi[v]))
        o = int(idx.poff[v])
        out.append(idx.pieces[o:o + t].astype("<i8").tobytes())
        c = int(idx.ccnt[v])
        out.append(_Q.pack(c))
        stack.extend(range(int(idx.coff[v]) + c - 1, int(idx.coff[v]) - 1, -1))
    return b"".join(out)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, fmt):
        if self.pos + fmt.size > len(self.data):
            raise TruncatedFile("RDA stream ends mid-node")
        v = fmt.unpack_from(self.data, self.pos)
        self.pos += fmt.size
        return v[0] if len(v) == 1 else v


def loads_rda(data, a, ratio=float("nan")):
    if len(data) < _HEAD.size:
        raise BadHeader("RDA stream shorter than its header")
    magic, version, n, count = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise BadHeader("not an RDA stream")
    if version != VERSION:
        raise VersionMismatch(f"RDA format version {version}, expected {VERSION}")
    if n != a.n:
        raise BadHeader(f"index built for n={n}, array has n={a.n}")
    rd = _Reader(data)
    rd.pos = _HEAD.size
    # Preorder records, then re-lay them out breadth-first like the builder does.
    recs = []

    def read_node():
        me = len(recs)
        tag = rd.take(_Q)
        s, e = rd.take(_q), rd.take(_q)
        if tag == 0:
            recs.append((s, e, 0, 0.0, 0.0, np.empty(0, np.int64), []))
            return me
        kp, t = rd.take(_q), rd.take(_Q)
        lo, hi = rd.take(_d), rd.take(_d)
        if rd.pos + 8 * t > len(data):
            raise TruncatedFile("RDA stream ends inside a piece table")
        pc = np.frombuffer(data, dtype="<i8", count=t, offset=rd.pos).astype(np.int64)
        rd.pos += 8 * t
        recs.append(None)
        c = rd.take(_Q)
        kids = [read_node() for _ in range(c)]
        recs[me] = (s, e, kp, lo, hi, pc, kids)
        return me

    read_node()
    if len(recs) != count or rd.pos != len(data):
        raise BadHeader("RDA node count does not match the stream")
    order = [0]
    for v in order:
        order.extend(recs[v][6])
    pos = {v: i for i, v in enumerate(order)}
    m = len(order)
    cols = {f: np.zeros(m, np.int64) for f in _FIELDS[:7]}
    nlo, nhi = np.zeros(m), np.zeros(m)
    pieces, used = [], 0
    for i, v in enumerate(order):
        s, e, kp, lo, hi, pc, kids = recs[v]
        cols["start"][i], cols["end"][i], cols["stride"][i] = s, e, kp
        nlo[i], nhi[i] = lo, hi
        if kids:
            cols["poff"][i], cols["pcnt"][i] = used, pc.size
            cols["coff"][i], cols["ccnt"][i] = pos[kids[0]], len(kids)
            pieces.append(pc)
            used += pc.size
    pieces = np.concatenate(pieces) if pieces else np.empty(0, np.int64)
    return RdaIndex(a, ratio, *(cols[f] for f in _FIELDS[:7]), nlo, nhi, pieces)


def save_rda(path, idx):
    with open(path, "wb") as fh:
        fh.write(dumps_rda(idx))


def load_rda(path, a, ratio=float("nan")):
    with open(path, "rb") as fh:
        return loads_rda(fh.read(), a, ratio)
