"""Shared domain types: matrix models, the projective action, summation and RNG streams."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Protocol, Union

import numpy as np
from numba import njit, uint64

__all__ = [
    "Bernoulli",
    "CapacityError",
    "CauchyScale",
    "DEFAULT_X0",
    "LogSumAccumulator",
    "Matrix2",
    "ModelSpec",
    "Seed",
    "Stream",
    "UnitVector2",
    "apply_normalized",
    "draw_matrix",
    "run_chunked",
]


class CapacityError(RuntimeError):
    """A computation would exceed a configured depth cap or memory budget."""


# ---------------------------------------------------------------------------
# Matrix models
# ---------------------------------------------------------------------------


class Matrix2(NamedTuple):
    a: float
    b: float
    c: float
    d: float

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def __matmul__(self, u):
        return (self.a * u[0] + self.b * u[1], self.c * u[0] + self.d * u[1])


@dataclass(frozen=True)
class Bernoulli:
    """Random matrix ``[[eps, 1], [1, 0]]`` with ``eps ~ Bernoulli(p)``."""

    p: float

    kind = 0

    def __post_init__(self):
        p = float(self.p)
        if not (0.0 < p < 1.0):
            raise ValueError(f"Bernoulli model requires 0 < p < 1, got {self.p!r}")
        object.__setattr__(self, "p", p)

    @property
    def param(self) -> float:
        return self.p


@dataclass(frozen=True)
class CauchyScale:
    """Random matrix ``[[xi * eps, -1], [1, 0]]`` with ``eps ~ Cauchy(0, 1)``."""

    xi: float

    kind = 1

    def __post_init__(self):
        xi = float(self.xi)
        if xi == 0.0 or not math.isfinite(xi):
            raise ValueError(f"Cauchy model requires a finite xi != 0, got {self.xi!r}")
        object.__setattr__(self, "xi", xi)

    @property
    def param(self) -> float:
        return self.xi


ModelSpec = Union[Bernoulli, CauchyScale]


def make_model(kind: str, value: float) -> ModelSpec:
    if kind == "bernoulli":
        return Bernoulli(value)
    if kind == "cauchy":
        return CauchyScale(value)
    raise ValueError(f"unknown model kind {kind!r}")


class UniformSource(Protocol):
    def uniform(self) -> float: ...


def draw_matrix(model: ModelSpec, stream: UniformSource) -> Matrix2:
    """Draw one matrix from ``model`` consuming a single uniform from ``stream``."""
    u = stream.uniform()
    if isinstance(model, Bernoulli):
        return Matrix2(1.0 if u < model.p else 0.0, 1.0, 1.0, 0.0)
    if isinstance(model, CauchyScale):
        return Matrix2(model.xi * math.tan(math.pi * (u - 0.5)), -1.0, 1.0, 0.0)
    raise TypeError(f"not a model: {model!r}")


# ---------------------------------------------------------------------------
# Projective action
# ---------------------------------------------------------------------------


class UnitVector2(NamedTuple):
    x1: float
    x2: float

    @classmethod
    def normalized(cls, x1: float, x2: float) -> "UnitVector2":
        r = math.hypot(x1, x2)
        if r == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(x1 / r, x2 / r)


DEFAULT_X0 = UnitVector2(math.sqrt(2.0) / 2.0, math.sqrt(2.0) / 2.0)


def apply_normalized(m: Matrix2, u: UnitVector2) -> tuple[UnitVector2, float]:
    """Return ``(m u / |m u|, log |m u|)`` in the Euclidean norm."""
    y1, y2 = m @ u
    r = math.hypot(y1, y2)
    if r == 0.0:
        raise ArithmeticError("singular image")
    return UnitVector2(y1 / r, y2 / r), math.log(r)


# ---------------------------------------------------------------------------
# Compensated summation
# ---------------------------------------------------------------------------


class LogSumAccumulator:
    """Running Neumaier-compensated sum.

    Partial accumulators can be merged, which is how the parallel tree walk
    reduces per-subtree results in a fixed order.
    """

    __slots__ = ("_s", "_c", "count")

    def __init__(self, total: float = 0.0, compensation: float = 0.0, count: int = 0):
        self._s = float(total)
        self._c = float(compensation)
        self.count = count

    def add(self, x: float) -> None:
        s = self._s
        t = s + x
        if abs(s) >= abs(x):
            self._c += (s - t) + x
        else:
            self._c += (x - t) + s
        self._s = t
        self.count += 1

    def extend(self, xs) -> "LogSumAccumulator":
        for x in xs:
            self.add(x)
        return self

    def merge(self, other: "LogSumAccumulator") -> None:
        count = self.count + other.count
        self.add(other._s)
        self.add(other._c)
        self.count = count

    @property
    def value(self) -> float:
        return self._s + self._c

    def __float__(self) -> float:
        return self.value

    def __repr__(self) -> str:
        return f"LogSumAccumulator(value={self.value!r}, count={self.count})"


# ---------------------------------------------------------------------------
# Counter-based random streams
# ---------------------------------------------------------------------------
#
# A stream is a 64-bit key; draw i of the stream is a SplitMix64-style hash
# of (key, i).  Keys are derived from the master seed by folding indices
# through the same finalizer, so any (master, tag, replica) addresses its own
# stream without sequential state and results do not depend on scheduling.

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_KEY_GAMMA = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_ONE = np.uint64(1)
_S11 = np.uint64(11)
_S27 = np.uint64(27)
_S30 = np.uint64(30)
_S31 = np.uint64(31)
_TWO_M53 = 1.0 / 9007199254740992.0


@njit(uint64(uint64), inline="always", nogil=True, cache=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(uint64(uint64, uint64), inline="always", nogil=True, cache=True)
def derive_key(parent, index):
    return mix64(parent ^ mix64(index + _KEY_GAMMA))


@njit(inline="always", nogil=True, cache=True)
def uniform_at(key, i):
    # top 53 bits, centred in their cell: strictly inside (0, 1)
    k = mix64(key + (i + _ONE) * _GOLDEN)
    return (float(k >> _S11) + 0.5) * _TWO_M53


_MASK64 = (1 << 64) - 1


def stream_key(master: int, *path: int) -> int:
    """Fold ``path`` into the key of ``master``; returns a Python int."""
    k = mix64(np.uint64(master & _MASK64))
    for index in path:
        k = derive_key(np.uint64(k), np.uint64(index & _MASK64))
    return int(k)


class Stream:
    """Sequential view of one counter-based stream."""

    __slots__ = ("key", "counter")

    def __init__(self, key: int, counter: int = 0):
        self.key = key & _MASK64
        self.counter = counter

    def uniform(self) -> float:
        u = uniform_at(np.uint64(self.key), np.uint64(self.counter))
        self.counter += 1
        return u


@dataclass(frozen=True)
class Seed:
    master: int = 0

    def __post_init__(self):
        if not (0 <= int(self.master) <= _MASK64):
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    def key(self, *path: int) -> int:
        return stream_key(int(self.master), *path)

    def stream(self, *path: int) -> Stream:
        return Stream(self.key(*path))


# ---------------------------------------------------------------------------
# Deterministic fan-out
# ---------------------------------------------------------------------------


def run_chunked(fn: Callable[[int, int], None], total: int, workers: int = 1) -> None:
    """Call ``fn(start, stop)`` over contiguous slices of ``range(total)``.

    ``fn`` must write only to its own slice of a preallocated output; results
    are then independent of ``workers``.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if total <= 0:
        return
    if workers == 1 or total == 1:
        fn(0, total)
        return
    nchunks = min(total, 4 * workers)
    bounds = [total * i // nchunks for i in range(nchunks + 1)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, lo, hi) for lo, hi in zip(bounds, bounds[1:]) if hi > lo]
        for f in futures:
            f.result()
