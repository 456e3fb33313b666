"""Rank semantics, the linear-scan oracle, binary search and key files.

Positions in the public API are 1-based and windows are inclusive; the rank of
``q`` is the number of keys ``<= q``.
"""
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadHeader, DegenerateData, TruncatedFile, WindowViolation
from .instrument import OpContext, counted_read

_HEADER = np.dtype("<u8")


@dataclass(frozen=True, eq=False)
class SortedKeyArray:
    """An immutable ascending array of float64 keys.

    ``source_range`` records ``(r, s)`` when the keys were produced by
    :func:`normalize`, so raw queries can be mapped with ``(q - r) / (s - r)``.
    """

    keys: np.ndarray
    domain_lo: float = 0.0
    domain_hi: float = 1.0
    source_range: tuple = field(default=None)

    def __post_init__(self):
        keys = np.array(self.keys, dtype=np.float64, copy=True).ravel()
        if keys.size > 1 and np.any(keys[1:] < keys[:-1]):
            raise ValueError("keys must be sorted ascending")
        if not self.domain_lo < self.domain_hi:
            raise ValueError("domain_lo must be < domain_hi")
        if keys.size and (keys[0] < self.domain_lo or keys[-1] > self.domain_hi):
            raise ValueError("keys fall outside the declared domain")
        keys.flags.writeable = False
        object.__setattr__(self, "keys", keys)

    @property
    def n(self):
        return int(self.keys.size)

    def __len__(self):
        return self.n

    @classmethod
    def from_unsorted(cls, values, domain_lo=0.0, domain_hi=1.0):
        return cls(np.sort(np.asarray(values, dtype=np.float64)), domain_lo, domain_hi)


def rank_oracle(a, q):
    """Exact count of keys <= q by a full scan. The reference for every index."""
    return int(np.count_nonzero(a.keys <= q))


def rank_oracle_many(keys, qs, chunk=256):
    """Linear-scan oracle over many queries, chunked to bound memory."""
    keys = np.asarray(keys, dtype=np.float64)
    qs = np.asarray(qs, dtype=np.float64)
    out = np.empty(qs.size, dtype=np.int64)
    for s in range(0, qs.size, chunk):
        block = qs[s:s + chunk]
        out[s:s + chunk] = np.count_nonzero(keys[None, :] <= block[:, None], axis=1)
    return out


def binary_search_rank(a, q, lo, hi, ctx=None):
    """Rank of ``q`` relative to position ``lo - 1`` inside the window ``[lo, hi]``.

    The caller guarantees the true rank lies in ``[lo - 1, hi]``; the result is
    then ``rank_oracle(a, q) - (lo - 1)``. An empty window ``lo == hi + 1`` is
    accepted and answers 0 without reading. Each probe is one counted read.
    """
    if ctx is None:
        ctx = OpContext()
    if lo < 1 or hi > a.n or lo > hi + 1:
        raise WindowViolation(f"window [{lo}, {hi}] invalid for n={a.n}")
    left, right = lo, hi
    while left <= right:
        mid = (left + right) // 2
        if counted_read(a, mid, ctx) <= q:
            left = mid + 1
        else:
            right = mid - 1
    return left - lo


def normalize(raw_keys):
    """Sort and map keys affinely onto [0, 1] (min -> 0, max -> 1).

    Unsigned 64-bit input is shifted in integer arithmetic before the float
    conversion so large keys keep as much precision as float64 allows.
    """
    raw = np.asarray(raw_keys)
    if raw.size == 0:
        raise DegenerateData("no keys")
    raw = np.sort(raw.ravel())
    r, s = raw[0], raw[-1]
    if s == r:
        raise DegenerateData("all keys are equal; range is zero")
    if np.issubdtype(raw.dtype, np.integer):
        # the difference of two in-range integers always fits in uint64
        shifted = (raw.astype(np.uint64) - np.uint64(int(r) % 2**64)).astype(np.float64)
        span = float(int(s) - int(r))
    else:
        raw = raw.astype(np.float64)
        shifted = raw - raw[0]
        span = float(s - r)
    keys = shifted / span
    keys[0], keys[-1] = 0.0, 1.0
    return SortedKeyArray(keys, 0.0, 1.0, source_range=(r.item(), s.item()))


def normalize_query(a, q):
    """Map a raw query into the coordinates of a normalized array.

    Uses the same subtraction-then-divide sequence as :func:`normalize`, so a
    raw key and its normalized image compare identically against any query.
    """
    if a.source_range is None:
        return float(q)
    r, s = a.source_range
    return float(q - r) / float(s - r)


# -- key files -------------------------------------------------------------
# 8-byte little-endian count u, then u little-endian 8-byte values:
# unsigned integers for raw key files, IEEE-754 doubles for normalized arrays.

def _read(path, dtype):
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise BadHeader(f"{path}: shorter than the 8-byte header")
    count = int(np.frombuffer(data, dtype=_HEADER, count=1)[0])
    body = len(data) - 8
    if body < count * 8:
        raise TruncatedFile(f"{path}: header says {count} keys, file holds {body // 8}")
    if body > count * 8:
        raise BadHeader(f"{path}: {body - count * 8} trailing bytes after {count} keys")
    return np.frombuffer(data, dtype=dtype, count=count, offset=8).copy()


def _write(path, values, dtype):
    values = np.asarray(values).astype(dtype, copy=False)
    with open(path, "wb") as fh:
        fh.write(np.array([values.size], dtype=_HEADER).tobytes())
        fh.write(values.tobytes())


def read_key_file(path):
    """Raw unsigned 64-bit keys (SOSD layout)."""
    return _read(path, np.dtype("<u8"))


def write_key_file(path, keys):
    _write(path, keys, np.dtype("<u8"))


def read_real_file(path):
    """A normalized-array file as a :class:`SortedKeyArray`."""
    vals = _read(path, np.dtype("<f8")).astype(np.float64)
    lo = min(0.0, float(vals.min())) if vals.size else 0.0
    hi = max(1.0, float(vals.max())) if vals.size else 1.0
    return SortedKeyArray(vals, lo, hi)


def write_real_file(path, a):
    keys = a.keys if isinstance(a, SortedKeyArray) else np.asarray(a, dtype=np.float64)
    _write(path, keys, np.dtype("<f8"))
