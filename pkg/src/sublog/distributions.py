"""Distribution models, samplers and the unbounded-domain composite index.

Spec strings accepted by :func:`parse_dist`::

    uniform
    power:t=4
    gauss:mu=0.5,sigma=0.1        (truncated to [0, 1])
    empirical:<path to a u64 key file>
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from . import kernels as K
from .core import SortedKeyArray, binary_search_rank, normalize, read_key_file
from .errors import EmptyInput, SpecParseError, UnboundedPdf
from .instrument import OpContext

_EMPTY = np.empty(0, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class CdfModel:
    """An evaluable distribution on ``[lo, hi]``.

    ``a`` and ``b`` are kind-specific: the exponent for ``power``, mean and
    standard deviation for ``gauss``. ``empirical`` interpolates linearly
    between quantile knots ``(kx, ky)``.
    """

    kind: str
    lo: float = 0.0
    hi: float = 1.0
    a: float = 0.0
    b: float = 0.0
    kx: np.ndarray = field(default=None, repr=False)
    ky: np.ndarray = field(default=None, repr=False)
    label: str = ""

    _CODES = {"uniform": K.UNIFORM, "power": K.POWER, "gauss": K.GAUSS, "empirical": K.EMPIRICAL}

    def __post_init__(self):
        if self.kind not in self._CODES:
            raise SpecParseError(f"unknown distribution kind {self.kind!r}")
        if not self.lo < self.hi:
            raise SpecParseError("distribution domain needs lo < hi")
        if self.kind == "power" and not self.a > 0:
            raise SpecParseError("power exponent t must be positive")
        if self.kind == "gauss" and not self.b > 0:
            raise SpecParseError("gauss sigma must be positive")
        if self.kind == "empirical" and (self.kx is None or len(self.kx) < 2):
            raise SpecParseError("empirical model needs at least two knots")

    # encoded form understood by the kernels
    @property
    def code(self):
        return self._CODES[self.kind]

    @property
    def params(self):
        return np.array([self.lo, self.hi, self.a, self.b], dtype=np.float64)

    def kernel_args(self):
        kx = self.kx if self.kx is not None else _EMPTY
        ky = self.ky if self.ky is not None else _EMPTY
        return self.code, self.params, kx, ky

    @property
    def spec(self):
        if self.label:
            return self.label
        if self.kind == "uniform":
            return "uniform"
        if self.kind == "power":
            return f"power:t={self.a:g}"
        if self.kind == "gauss":
            return f"gauss:mu={self.a:g},sigma={self.b:g}"
        return "empirical"

    def cdf(self, x):
        return float(K.cdf_value(self.code, self.params, *self.kernel_args()[2:], float(x)))

    def pdf(self, x):
        x = float(x)
        if x < self.lo or x > self.hi:
            return 0.0
        w = self.hi - self.lo
        if self.kind == "uniform":
            return 1.0 / w
        if self.kind == "power":
            u = (x - self.lo) / w
            if u == 0.0 and self.a < 1:
                return math.inf
            return self.a * u ** (self.a - 1) / w
        if self.kind == "gauss":
            z = (x - self.a) / self.b
            return math.exp(-0.5 * z * z) / (self.b * math.sqrt(2 * math.pi)) / self._gauss_mass()
        j = int(np.clip(np.searchsorted(self.kx, x, side="right") - 1, 0, len(self.kx) - 2))
        return float((self.ky[j + 1] - self.ky[j]) / (self.kx[j + 1] - self.kx[j]))

    def _gauss_mass(self):
        return _phi((self.hi - self.a) / self.b) - _phi((self.lo - self.a) / self.b)

    def ppf(self, u):
        """Inverse CDF, vectorized over ``u`` in [0, 1]."""
        u = np.asarray(u, dtype=np.float64)
        w = self.hi - self.lo
        if self.kind == "uniform":
            x = self.lo + u * w
        elif self.kind == "power":
            x = self.lo + w * u ** (1.0 / self.a)
        elif self.kind == "gauss":
            pa = _phi((self.lo - self.a) / self.b)
            pb = _phi((self.hi - self.a) / self.b)
            x = self.a + self.b * ndtri(pa + u * (pb - pa))
        else:
            x = np.interp(u, self.ky, self.kx)
        return np.clip(x, self.lo, self.hi)


def _phi(z):
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def uniform():
    return CdfModel("uniform")


def power(t):
    return CdfModel("power", a=float(t))


def truncated_gauss(mu=0.5, sigma=0.1):
    return CdfModel("gauss", a=float(mu), b=float(sigma))


def empirical_from_keys(a, knots=1025, label="empirical"):
    """Piecewise-linear CDF through evenly spaced order statistics of ``a``."""
    keys = a.keys
    if keys.size < 2:
        raise EmptyInput("empirical model needs at least two keys")
    pos = np.unique(np.linspace(0, keys.size - 1, min(knots, keys.size)).round().astype(np.int64))
    kx, first = np.unique(keys[pos], return_index=True)
    ky = pos[first] / (keys.size - 1)
    ky[-1] = 1.0
    if kx.size < 2:
        raise EmptyInput("empirical model needs two distinct keys")
    return CdfModel("empirical", lo=float(kx[0]), hi=float(kx[-1]), kx=kx, ky=ky, label=label)


def parse_dist(spec):
    """Build a :class:`CdfModel` from a spec string (see module docstring)."""
    spec = spec.strip()
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "empirical":
        if not rest:
            raise SpecParseError("empirical needs a key file path")
        try:
            raw = read_key_file(rest)
        except OSError as exc:
            raise SpecParseError(f"cannot read {rest}: {exc}") from exc
        return empirical_from_keys(normalize(raw), label=spec)
    kv = {}
    if rest:
        for part in rest.split(","):
            name, eq, value = part.partition("=")
            if not eq:
                raise SpecParseError(f"expected name=value in {part!r}")
            try:
                kv[name.strip().lower()] = float(value)
            except ValueError as exc:
                raise SpecParseError(f"not a number: {value!r}") from exc
    allowed = {"uniform": set(), "power": {"t"}, "gauss": {"mu", "sigma"}}
    if kind not in allowed:
        raise SpecParseError(f"unknown distribution {kind!r}")
    extra = set(kv) - allowed[kind]
    if extra:
        raise SpecParseError(f"unexpected parameters for {kind}: {sorted(extra)}")
    if kind == "uniform":
        return uniform()
    if kind == "power":
        if "t" not in kv:
            raise SpecParseError("power needs t=")
        return power(kv["t"])
    return truncated_gauss(kv.get("mu", 0.5), kv.get("sigma", 0.1))


def cdf_eval(m, x):
    return m.cdf(x)


def pdf_bound(m):
    """``(rho_lower, rho_upper)`` bounds on the density over the domain.

    Raises :class:`UnboundedPdf` when the density has no finite upper bound.
    A zero lower bound is returned as is; :func:`density_ratio` rejects it.
    """
    w = m.hi - m.lo
    if m.kind == "uniform":
        return 1.0 / w, 1.0 / w
    if m.kind == "power":
        t = m.a
        if t < 1:
            raise UnboundedPdf(f"power t={t:g} density is unbounded at the left edge")
        return (t / w if t == 1 else 0.0), t / w
    if m.kind == "gauss":
        peak = min(max(m.a, m.lo), m.hi)
        far = m.lo if abs(m.lo - m.a) >= abs(m.hi - m.a) else m.hi
        return m.pdf(far), m.pdf(peak)
    slopes = np.diff(m.ky) / np.diff(m.kx)
    return float(slopes.min()), float(slopes.max())


def density_ratio(m):
    """``rho_upper / rho_lower``; raises :class:`UnboundedPdf` if the lower bound is 0."""
    lo, hi = pdf_bound(m)
    if not lo > 0:
        raise UnboundedPdf(f"{m.spec}: density lower bound is zero")
    return hi / lo


def ppf_bisect(m, u, tol=1e-12):
    """Inverse CDF by bisection; slow but independent of :meth:`CdfModel.ppf`."""
    lo, hi = m.lo, m.hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if m.cdf(mid) < u:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sample_sorted(m, n, seed):
    """``n`` i.i.d. inverse-CDF draws from ``m``, sorted; deterministic per seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return SortedKeyArray(np.sort(m.ppf(rng.random(n))), m.lo, m.hi)


# -- sub-exponential composite --------------------------------------------------

@dataclass(eq=False)
class SubExpComposite:
    """``2l`` unit-width sub-indexes over ``[-l, l]``, or a binary-search fallback.

    ``offsets[i]`` is the number of keys below ``-l + i``; slice ``i`` holds the
    keys in ``[-l + i, -l + i + 1)`` (the last slice also holds ``l``).
    """

    half_width: int
    sub_indexes: list
    offsets: np.ndarray
    fallback: bool
    array: SortedKeyArray

    @property
    def n(self):
        return self.array.n

    @property
    def size_ints(self):
        subs = sum(s.size_ints for s in self.sub_indexes if s is not None)
        return subs + (0 if self.fallback else self.offsets.size)

    def rank(self, q, ctx=None):
        return query_subexp(self, q, ctx)

    def rank_many(self, qs):
        qs = np.asarray(qs, dtype=np.float64)
        if self.fallback:
            return K.binary_batch(self.array.keys, qs)
        ranks = np.empty(qs.size, dtype=np.int64)
        ops = np.ones(qs.size, dtype=np.int64)
        slot = self._slot(qs)
        ranks[slot == -1] = 0
        ranks[slot == -2] = self.n
        for i in np.unique(slot[slot >= 0]):
            sel = slot == i
            sub = self.sub_indexes[i]
            if sub is None:
                ranks[sel] = self.offsets[i]
                continue
            r, o = sub.rank_many(qs[sel])
            ranks[sel] = self.offsets[i] + r
            ops[sel] += o
        return ranks, ops

    def _slot(self, qs):
        l = self.half_width
        slot = np.clip(np.floor(qs).astype(np.int64) + l, 0, 2 * l - 1)
        slot[qs < -l] = -1
        slot[qs >= l] = -2
        return slot


def subexp_half_width(n):
    """``ceil(ln(2 n ln n))``: the tail cut-off with constant K = 1."""
    return max(1, math.ceil(math.log(max(2.0 * n * math.log(max(n, 2)), math.e))))


def build_subexp(builder, raw):
    """Split a centered array into unit slices and index each with ``builder``.

    ``builder`` maps a :class:`SortedKeyArray` (domain ``[b, b+1]``) to an
    index exposing ``rank``, ``rank_many`` and ``size_ints``.
    """
    n = raw.n
    if n == 0:
        raise EmptyInput("cannot build a composite over an empty array")
    l = subexp_half_width(n)
    keys = raw.keys
    bounds = np.arange(-l, l + 1, dtype=np.float64)
    offsets = np.searchsorted(keys, bounds, side="left").astype(np.int64)
    offsets[-1] = n
    if keys[0] < -l or keys[-1] > l:
        return SubExpComposite(l, [None] * (2 * l), offsets, True, raw)
    subs = []
    for i in range(2 * l):
        s, e = offsets[i], offsets[i + 1]
        if e == s:
            subs.append(None)
            continue
        b = float(i - l)
        subs.append(builder(SortedKeyArray(keys[s:e], b, b + 1.0)))
    return SubExpComposite(l, subs, offsets, False, raw)


def query_subexp(c, q, ctx=None):
    """Exact rank through the composite; routing charges one memory operation."""
    if ctx is None:
        ctx = OpContext()
    ctx.mem_ops += 1
    if c.fallback:
        return binary_search_rank(c.array, q, 1, c.n, ctx)
    l = c.half_width
    if q < -l:
        return 0
    if q >= l:
        return c.n
    i = min(max(math.floor(q) + l, 0), 2 * l - 1)
    sub = c.sub_indexes[i]
    base = int(c.offsets[i])
    return base if sub is None else base + sub.rank(q, ctx)
