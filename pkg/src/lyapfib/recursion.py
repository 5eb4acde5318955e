"""Coefficient-pair recursion for the symmetric Bernoulli model and the bracket it gives.

Row 0 is the single pair ``(2, 1)``.  Row ``n + 1`` is obtained from row ``n``
by mapping every pair ``(a, b)`` to ``(a + b, a)`` (first half) and to
``(b, a)`` (second half).  ``c_n`` is the product of ``a + b`` over row ``n``
and the top Lyapunov exponent of ``[[eps, 1], [1, 0]]`` with fair ``eps``
satisfies::

    log c_n / ((n + 7) 2^n)  <=  lambda  <=  log c_n / ((n + 4) 2^n)

``log c_n`` is computed by two independent engines: a streaming depth-first
walk over the ``2^n`` leaves (O(n) memory) and a multiset expansion that
merges repeated pairs.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from typing import NamedTuple

import numpy as np
from numba import njit

from .core import CapacityError, LogSumAccumulator, run_chunked

__all__ = [
    "BoundPair",
    "CoefficientPair",
    "Engine",
    "Provenance",
    "RowMultiset",
    "bounds",
    "expand_row",
    "fib",
    "fib_closed_form",
    "first_pair",
    "literal_row",
    "log_c",
    "seed_row",
]

U64_MAX = (1 << 64) - 1
# a + b on row n is at most F(n + 4); F(92) < 2**64 < F(94)
MAX_LEVEL = 88
DEFAULT_DEPTH_CAP = 34
DEFAULT_SPLIT_DEPTH = 10
DEFAULT_MAX_DISTINCT = 10**7


class Engine(str, enum.Enum):
    STREAMING = "streaming"
    MULTISET = "multiset"


# ---------------------------------------------------------------------------
# Fibonacci-like sequences
# ---------------------------------------------------------------------------


def fib(n: int, f0: int = 0, f1: int = 1) -> int:
    """n-th term of the sequence with ``f[k+1] = f[k] + f[k-1]``, by exact iteration.

    Raises OverflowError once a term leaves the unsigned 64-bit range.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    a, b = int(f0), int(f1)
    for _ in range(n):
        a, b = b, a + b
        if abs(a) > U64_MAX:
            raise OverflowError(f"fib overflow at n={n}")
    if abs(a) > U64_MAX:
        raise OverflowError(f"fib overflow at n={n}")
    return a


def fib_closed_form(n: int, f0: int = 0, f1: int = 1, digits: int = 60) -> int:
    """Evaluate the golden-ratio closed form and round to the nearest integer.

    Uses ``digits`` decimal digits of working precision; independent of
    :func:`fib` and intended as a cross-check.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    with localcontext() as ctx:
        ctx.prec = digits
        root5 = Decimal(5).sqrt()
        phi1 = (1 + root5) / 2
        phi2 = (1 - root5) / 2
        value = (f1 - f0 * phi2) / root5 * phi1**n + (f0 * phi1 - f1) / root5 * phi2**n
        return int(value.to_integral_value())


# ---------------------------------------------------------------------------
# Pairs and rows
# ---------------------------------------------------------------------------


class CoefficientPair(NamedTuple):
    a: int
    b: int

    @property
    def total(self) -> int:
        return self.a + self.b


SEED_PAIR = CoefficientPair(2, 1)


def first_pair(n: int) -> CoefficientPair:
    """First (dominating) pair of row ``n``: the transform branch iterated ``n`` times."""
    if n < 0:
        raise ValueError("n must be non-negative")
    a, b = SEED_PAIR
    for _ in range(n):
        a, b = a + b, a
        if a > U64_MAX:
            raise OverflowError(f"coefficient overflow at row {n}")
    return CoefficientPair(a, b)


def literal_row(n: int) -> list[CoefficientPair]:
    """All ``2**n`` pairs of row ``n`` in the order of the recursive definition."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > 24:
        raise CapacityError(f"literal row {n} has 2**{n} pairs; refusing to materialize")
    row = [SEED_PAIR]
    for _ in range(n):
        row = [CoefficientPair(a + b, a) for a, b in row] + [CoefficientPair(b, a) for a, b in row]
    return row


@dataclass(frozen=True)
class RowMultiset:
    """Distinct pairs of row ``n`` with their multiplicities."""

    n: int
    counts: dict = field(repr=False)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def distinct(self) -> int:
        return len(self.counts)

    def __contains__(self, pair) -> bool:
        return tuple(pair) in self.counts

    def __getitem__(self, pair) -> int:
        return self.counts.get(tuple(pair), 0)

    def items(self):
        return self.counts.items()

    @classmethod
    def from_pairs(cls, n: int, pairs) -> "RowMultiset":
        return cls(n, dict(Counter(CoefficientPair(*p) for p in pairs)))


def seed_row() -> RowMultiset:
    return RowMultiset(0, {SEED_PAIR: 1})


def expand_row(row: RowMultiset, max_distinct: int | None = DEFAULT_MAX_DISTINCT) -> RowMultiset:
    """Row ``n + 1`` from row ``n``, merging colliding pairs."""
    if row.n + 1 > MAX_LEVEL:
        raise OverflowError(f"row {row.n + 1} exceeds the 64-bit coefficient range")
    out: dict = {}
    get = out.get
    for (a, b), m in row.counts.items():
        key = CoefficientPair(a + b, a)
        out[key] = get(key, 0) + m
    for (a, b), m in row.counts.items():
        key = CoefficientPair(b, a)
        out[key] = get(key, 0) + m
    if max_distinct is not None and len(out) > max_distinct:
        raise CapacityError(
            f"row {row.n + 1} has {len(out)} distinct pairs, above the budget of {max_distinct}"
        )
    if row.n + 1 >= 64 and max(out.values()) > U64_MAX:
        raise OverflowError(f"multiplicity overflow in row {row.n + 1}")
    return RowMultiset(row.n + 1, out)


def iter_rows(n: int, max_distinct: int | None = DEFAULT_MAX_DISTINCT):
    row = seed_row()
    yield row
    for _ in range(n):
        row = expand_row(row, max_distinct)
        yield row


def row_log_sum(row: RowMultiset) -> float:
    acc = LogSumAccumulator()
    for (a, b), m in row.counts.items():
        acc.add(m * math.log(a + b))
    return acc.value


# ---------------------------------------------------------------------------
# Streaming engine
# ---------------------------------------------------------------------------


@njit(nogil=True, cache=True)
def _walk(a0, b0, depth):
    """Compensated sum of log(a + b) over the leaves below (a0, b0).

    Leaves are visited depth-first, transform child before swap child.
    Returns the (sum, compensation) pair.
    """
    if depth == 0:
        return math.log(float(a0 + b0)), 0.0
    sa = np.empty(depth, np.uint64)
    sb = np.empty(depth, np.uint64)
    state = np.zeros(depth, np.int8)
    s = 0.0
    c = 0.0
    sa[0] = a0
    sb[0] = b0
    top = 0
    while top >= 0:
        a = sa[top]
        b = sb[top]
        if top == depth - 1:
            # the two leaves below: (a + b, a) then (b, a)
            x = math.log(float(a + a + b))
            t = s + x
            if abs(s) >= abs(x):
                c += (s - t) + x
            else:
                c += (x - t) + s
            s = t
            x = math.log(float(a + b))
            t = s + x
            if abs(s) >= abs(x):
                c += (s - t) + x
            else:
                c += (x - t) + s
            s = t
            top -= 1
        elif state[top] == 0:
            state[top] = 1
            sa[top + 1] = a + b
            sb[top + 1] = a
            state[top + 1] = 0
            top += 1
        elif state[top] == 1:
            state[top] = 2
            sa[top + 1] = b
            sb[top + 1] = a
            state[top + 1] = 0
            top += 1
        else:
            top -= 1
    return s, c


@njit(nogil=True, cache=True)
def _walk_prefixes(prefix_bits, depth, lo, hi, out_s, out_c):
    # prefix j selects the first `prefix_bits` branches, most significant bit first
    for j in range(lo, hi):
        a = np.uint64(2)
        b = np.uint64(1)
        for level in range(prefix_bits - 1, -1, -1):
            if (j >> level) & 1:
                a, b = b, a
            else:
                a, b = a + b, a
        s, c = _walk(a, b, depth)
        out_s[j] = s
        out_c[j] = c


def _log_c_streaming(n: int, workers: int, split_depth: int) -> float:
    d = min(split_depth, n)
    count = 1 << d
    out_s = np.empty(count)
    out_c = np.empty(count)
    run_chunked(lambda lo, hi: _walk_prefixes(d, n - d, lo, hi, out_s, out_c), count, workers)
    acc = LogSumAccumulator()
    for s, c in zip(out_s.tolist(), out_c.tolist()):
        acc.merge(LogSumAccumulator(s, c))
    return acc.value


def _log_c_multiset(n: int, max_distinct: int | None) -> float:
    row = seed_row()
    for _ in range(n):
        row = expand_row(row, max_distinct)
    return row_log_sum(row)


def log_c(
    n: int,
    engine: Engine | str = Engine.STREAMING,
    *,
    workers: int = 1,
    depth_cap: int = DEFAULT_DEPTH_CAP,
    split_depth: int = DEFAULT_SPLIT_DEPTH,
    max_distinct: int | None = DEFAULT_MAX_DISTINCT,
) -> float:
    """Natural log of ``c_n``, the product of ``a + b`` over row ``n``.

    Parameters
    ----------
    n : int
        Row index, ``n >= 0``.
    engine : {"streaming", "multiset"}
        ``streaming`` walks all ``2**n`` leaves; the partition into ``2**split_depth``
        subtrees and their in-order reduction is fixed, so the result does not
        depend on ``workers``.  ``multiset`` expands rows with merged pairs.
    depth_cap : int
        Largest ``n`` the streaming engine accepts.
    max_distinct : int or None
        Distinct-pair budget of the multiset engine.

    Raises
    ------
    CapacityError
        If the depth cap or distinct-pair budget is exceeded.
    """
    engine = Engine(engine)
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > MAX_LEVEL:
        raise CapacityError(f"row {n} exceeds the 64-bit coefficient range (max {MAX_LEVEL})")
    if engine is Engine.STREAMING:
        if n > depth_cap:
            raise CapacityError(f"row {n} exceeds the streaming depth cap {depth_cap}")
        if split_depth < 0:
            raise ValueError("split_depth must be non-negative")
        return _log_c_streaming(n, workers, split_depth)
    return _log_c_multiset(n, max_distinct)


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------


class Provenance(str, enum.Enum):
    ANALYTIC = "analytic"
    RECURSION = "recursion"


@dataclass(frozen=True)
class BoundPair:
    lower: float
    upper: float
    provenance: Provenance
    level: int | None = None

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __contains__(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def bounds_from_log_c(n: int, lc: float) -> BoundPair:
    scale = 2.0**n
    return BoundPair(lc / ((n + 7) * scale), lc / ((n + 4) * scale), Provenance.RECURSION, n)


def bounds(n: int, engine: Engine | str = Engine.STREAMING, **kwargs) -> BoundPair:
    """Bracket ``log c_n / ((n+7) 2^n) <= lambda <= log c_n / ((n+4) 2^n)``."""
    return bounds_from_log_c(n, log_c(n, engine, **kwargs))
