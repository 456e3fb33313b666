"""Operation counting.

Query cost is measured in memory operations: one per array element read and
one per model evaluation. Arithmetic between reads is free.
"""
from dataclasses import dataclass

from .errors import IndexOutOfRange


@dataclass
class OpContext:
    """Per-query counters. Owned by the caller; never shared between queries."""

    mem_ops: int = 0
    cdf_evals: int = 0

    def reset(self):
        self.mem_ops = 0
        self.cdf_evals = 0


def counted_read(a, i, ctx):
    """Return ``a.keys[i - 1]`` (1-based) and charge one memory operation."""
    if not 1 <= i <= a.n:
        raise IndexOutOfRange(f"position {i} outside [1, {a.n}]")
    ctx.mem_ops += 1
    return float(a.keys[i - 1])


def counted_cdf(model, x, ctx):
    """Evaluate ``model.cdf(x)``, charged as one model evaluation."""
    ctx.cdf_evals += 1
    ctx.mem_ops += 1
    return model.cdf(x)
