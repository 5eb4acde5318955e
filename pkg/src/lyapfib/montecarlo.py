"""Monte Carlo estimation of the Lyapunov exponent, the CLT variance and the invariant law.

Every estimator draws from counter-based streams addressed by
``(seed, purpose tag, replica)``.  Grid points share replica streams (common
random numbers), so neighbouring parameters see the same uniforms and the
resulting curves are smooth in the parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import analytic
from .core import (
    DEFAULT_X0,
    Bernoulli,
    CauchyScale,
    ModelSpec,
    Seed,
    UnitVector2,
    derive_key,
    make_model,
    run_chunked,
    uniform_at,
)
from .recursion import iter_rows

__all__ = [
    "Estimate",
    "IdentityCheck",
    "InvariantSample",
    "LambdaCurve",
    "VarianceCurve",
    "clt_shape",
    "identity_checks",
    "invariant_chain",
    "invariant_sample",
    "mc_lambda",
    "mc_lambda_curve",
    "mc_variance_curve",
    "parameter_grid",
    "replica_log_sums",
]

TAG_LAMBDA = 1
TAG_VARIANCE = 2
TAG_PILOT = 3
TAG_INVARIANT = 4
TAG_BOOTSTRAP = 5

DEFAULT_PILOT_STEPS = 10**7
DEFAULT_CHAIN_DEPTH = 64

# lazy renormalization window; one Cauchy step multiplies by at most ~1e17 |xi|
_BIG = 1e100
_SMALL = 1e-100


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


@njit(nogil=True, cache=True)
def _chain_log_sum(kind, param, key, n, x1, x2):
    # Sum of log|U_i| telescopes to log|S_n x|; the vector is rescaled only
    # when it leaves [_SMALL, _BIG], and each rescale banks its log-norm.
    s = 0.0
    for i in range(n):
        u = uniform_at(key, np.uint64(i))
        if kind == 0:
            y1 = (u < param) * x1 + x2
        else:
            y1 = param * math.tan(math.pi * (u - 0.5)) * x1 - x2
        x2 = x1
        x1 = y1
        size = abs(x1) + abs(x2)
        if size > _BIG or size < _SMALL:
            r = math.hypot(x1, x2)
            s += math.log(r)
            x1 /= r
            x2 /= r
    return s + math.log(math.hypot(x1, x2))


@njit(nogil=True, cache=True)
def _chain_log_sum_stepwise(kind, param, key, n, x1, x2):
    """Renormalize after every step; also report the worst unit-norm drift."""
    s = 0.0
    c = 0.0
    drift = 0.0
    for i in range(n):
        u = uniform_at(key, np.uint64(i))
        if kind == 0:
            y1 = (u < param) * x1 + x2
        else:
            y1 = param * math.tan(math.pi * (u - 0.5)) * x1 - x2
        y2 = x1
        r = math.hypot(y1, y2)
        x1 = y1 / r
        x2 = y2 / r
        x = math.log(r)
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
        d = abs(math.hypot(x1, x2) - 1.0)
        if d > drift:
            drift = d
    return s + c, drift


@njit(nogil=True, cache=True)
def _replica_batch(kind, param, base, lo, hi, n, x1, x2, stepwise, out):
    for r in range(lo, hi):
        key = derive_key(base, np.uint64(r))
        if stepwise:
            out[r] = _chain_log_sum_stepwise(kind, param, key, n, x1, x2)[0]
        else:
            out[r] = _chain_log_sum(kind, param, key, n, x1, x2)


@njit(nogil=True, cache=True)
def _invariant_batch(p, base, lo, hi, depth, out):
    for r in range(lo, hi):
        key = derive_key(base, np.uint64(r))
        x = 1.0
        # draw 0 is the outermost map; see invariant_chain
        for i in range(depth - 1, -1, -1):
            u = uniform_at(key, np.uint64(i))
            x = 1.0 / x + (u < p)
        out[r] = x


def replica_log_sums(
    model: ModelSpec,
    n: int,
    base_key: int,
    replicas: int,
    x0: UnitVector2 = DEFAULT_X0,
    workers: int = 1,
    stepwise: bool = False,
) -> np.ndarray:
    """``sum_i log|U_i|`` for replicas ``0..replicas-1`` of the stream family ``base_key``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = np.empty(replicas)
    base = np.uint64(base_key)

    def work(lo, hi):
        _replica_batch(model.kind, model.param, base, lo, hi, n, x0[0], x0[1], stepwise, out)

    run_chunked(work, replicas, workers)
    return out


def stepwise_path(model: ModelSpec, n: int, key: int, x0: UnitVector2 = DEFAULT_X0):
    """Per-step renormalized chain: returns ``(sum log|U_i|, max | |U_i| - 1 |)``."""
    return _chain_log_sum_stepwise(model.kind, model.param, np.uint64(key), n, x0[0], x0[1])


# ---------------------------------------------------------------------------
# Lyapunov exponent
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float | None
    replicas: int
    steps: int
    seed: Seed

    @property
    def stderr_text(self) -> str:
        return "n/a" if self.stderr is None else f"{self.stderr:.12g}"

    def interval(self, z: float = 3.0) -> tuple[float, float]:
        se = self.stderr or 0.0
        return self.value - z * se, self.value + z * se


def mc_lambda(
    model: ModelSpec,
    n: int,
    seed: Seed = Seed(),
    x0: UnitVector2 = DEFAULT_X0,
    replicas: int = 1,
    workers: int = 1,
    stepwise: bool = False,
) -> Estimate:
    """Estimate the top exponent by ``(1/n) sum_i log|U_i|`` averaged over replicas.

    ``stepwise=True`` renormalizes after every step instead of lazily; the two
    agree to rounding.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    sums = replica_log_sums(model, n, seed.key(TAG_LAMBDA), replicas, x0, workers, stepwise)
    per_chain = sums / n
    value = float(np.mean(per_chain))
    stderr = float(np.std(per_chain, ddof=1) / math.sqrt(replicas)) if replicas > 1 else None
    return Estimate(value, stderr, replicas, n, seed)


def parameter_grid(a: float, b: float, k: float) -> np.ndarray:
    """``a, a + k, ..., b``; ``k`` must divide ``b - a``."""
    if not (math.isfinite(a) and math.isfinite(b) and math.isfinite(k)):
        raise ValueError("grid bounds and step must be finite")
    if b < a:
        raise ValueError(f"empty range [{a}, {b}]")
    if k <= 0:
        raise ValueError("grid step must be positive")
    count = round((b - a) / k)
    if abs(count * k - (b - a)) > 1e-9 * max(1.0, abs(b - a)):
        raise ValueError(f"step {k} does not divide the range length {b - a}")
    grid = np.array([round(a + j * k, 12) for j in range(count + 1)])
    grid[grid == 0.0] = 0.0  # no negative zeros
    return grid


def _check_grid(kind: str, grid: np.ndarray) -> None:
    if kind == "bernoulli":
        if grid[0] < 0.0 or grid[-1] > 1.0:
            raise ValueError("Bernoulli parameters must lie in [0, 1]")
    elif kind != "cauchy":
        raise ValueError(f"unknown model kind {kind!r}")


def _is_endpoint(kind: str, x: float) -> bool:
    return x == 0.0 or (kind == "bernoulli" and x == 1.0)


@dataclass(frozen=True)
class LambdaCurve:
    kind: str
    params: np.ndarray
    estimates: np.ndarray
    n: int
    seed: Seed

    def rows(self):
        """``(param, lambda_hat, lower, upper)`` or ``(param, lambda_hat, exact)`` tuples."""
        for x, est in zip(self.params.tolist(), self.estimates.tolist()):
            if self.kind == "bernoulli":
                lo, hi = analytic._bernoulli_bracket(x)
                yield x, est, lo, hi
            else:
                exact = 0.0 if x == 0.0 else analytic.cauchy_lambda(x).value
                yield x, est, exact


def mc_lambda_curve(
    kind: str,
    a: float,
    b: float,
    k: float,
    n: int,
    seed: Seed = Seed(),
    x0: UnitVector2 = DEFAULT_X0,
    workers: int = 1,
) -> LambdaCurve:
    """Single-chain estimates over a parameter grid; endpoints take their exact values."""
    grid = parameter_grid(a, b, k)
    _check_grid(kind, grid)
    if n < 1:
        raise ValueError("n must be >= 1")
    out = np.empty(len(grid))
    base = np.uint64(seed.key(TAG_LAMBDA))
    key0 = np.uint64(derive_key(base, np.uint64(0)))

    def work(lo, hi):
        for j in range(lo, hi):
            x = float(grid[j])
            if _is_endpoint(kind, x):
                out[j] = analytic.boundary_lambda(kind, x).value
            else:
                model = make_model(kind, x)
                out[j] = _chain_log_sum(model.kind, model.param, key0, n, x0[0], x0[1]) / n

    run_chunked(work, len(grid), workers)
    return LambdaCurve(kind, grid, out, n, seed)


# ---------------------------------------------------------------------------
# CLT variance
# ---------------------------------------------------------------------------


def variance_with_stderr(values: np.ndarray) -> tuple[float, float]:
    """Sample variance and its standard error from the fourth central moment."""
    m = len(values)
    if m < 2:
        raise ValueError("need at least two replicas for a sample variance")
    centred = values - values.mean()
    s2 = float(np.dot(centred, centred) / (m - 1))
    if m < 4:
        return s2, float("nan")
    m4 = float(np.mean(centred**4))
    var_s2 = (m4 - s2 * s2 * (m - 3) / (m - 1)) / m
    return s2, math.sqrt(max(var_s2, 0.0))


@dataclass(frozen=True)
class VarianceCurve:
    kind: str
    params: np.ndarray
    variance: np.ndarray
    stderr: np.ndarray
    lambdas: np.ndarray = field(repr=False)
    n: int
    m: int
    k: float
    seed: Seed

    def rows(self):
        return zip(self.params.tolist(), self.variance.tolist(), self.stderr.tolist())

    def peak(self, half_width: float = 0.1) -> float:
        """Location of the maximum of a quadratic fitted around the largest point."""
        j = int(np.argmax(self.variance))
        x0 = float(self.params[j])
        sel = np.abs(self.params - x0) <= half_width + 1e-12
        x = self.params[sel]
        y = self.variance[sel]
        if len(x) < 3:
            return x0
        w = 1.0 / np.maximum(self.stderr[sel], 1e-300)
        c2, c1, _ = np.polyfit(x - x0, y, 2, w=w)
        if c2 >= 0:
            return x0
        vertex = x0 - c1 / (2.0 * c2)
        return float(np.clip(vertex, x[0], x[-1]))


def clt_samples(
    model: ModelSpec,
    n: int,
    m: int,
    lam: float,
    seed: Seed = Seed(),
    x0: UnitVector2 = DEFAULT_X0,
    workers: int = 1,
) -> np.ndarray:
    """``m`` replicas of ``L = (sum_i log|U_i| - n lam) / sqrt(n)``."""
    sums = replica_log_sums(model, n, seed.key(TAG_VARIANCE), m, x0, workers)
    return (sums - n * lam) / math.sqrt(n)


def pilot_lambda(model: ModelSpec, steps: int, seed: Seed, x0: UnitVector2 = DEFAULT_X0) -> float:
    """Exponent used to centre ``L``: exact for Cauchy, a long single run otherwise."""
    exact = analytic.exact_lambda(model)
    if exact is not None:
        return exact
    return float(replica_log_sums(model, steps, seed.key(TAG_PILOT), 1, x0)[0] / steps)


def mc_variance_curve(
    kind: str,
    a: float,
    b: float,
    k: float,
    n: int,
    m: int,
    seed: Seed = Seed(),
    x0: UnitVector2 = DEFAULT_X0,
    pilot_steps: int = DEFAULT_PILOT_STEPS,
    workers: int = 1,
) -> VarianceCurve:
    """Sample variance of ``m`` replicas of ``L`` at each grid parameter.

    Parameters
    ----------
    kind : {"bernoulli", "cauchy"}
    a, b, k : float
        Grid ``a, a + k, ..., b``; ``k`` must divide ``b - a``.
    n : int
        Matrix steps per replica.
    m : int
        Replicas per grid point (at least 2).
    pilot_steps : int
        Length of the run that estimates the Bernoulli exponent before ``L``
        is formed.  Cauchy uses the closed form.

    Notes
    -----
    Exact endpoints (Bernoulli ``p`` in {0, 1}, Cauchy ``xi = 0``) have
    deterministic products and get variance 0 without simulation.
    """
    grid = parameter_grid(a, b, k)
    _check_grid(kind, grid)
    if n < 1:
        raise ValueError("n must be >= 1")
    if m < 2:
        raise ValueError("m must be >= 2")
    variance = np.zeros(len(grid))
    stderr = np.zeros(len(grid))
    lambdas = np.zeros(len(grid))
    for j, x in enumerate(grid.tolist()):
        if _is_endpoint(kind, x):
            lambdas[j] = analytic.boundary_lambda(kind, x).value
            continue
        model = make_model(kind, x)
        lam = pilot_lambda(model, pilot_steps, seed, x0)
        samples = clt_samples(model, n, m, lam, seed, x0, workers)
        lambdas[j] = lam
        variance[j], stderr[j] = variance_with_stderr(samples)
    return VarianceCurve(kind, grid, variance, stderr, lambdas, n, m, k, seed)


def clt_shape(samples: np.ndarray) -> dict:
    """Skewness and excess kurtosis with their large-sample standard errors under normality."""
    m = len(samples)
    c = samples - samples.mean()
    s2 = np.mean(c**2)
    return {
        "skewness": float(np.mean(c**3) / s2**1.5),
        "excess_kurtosis": float(np.mean(c**4) / s2**2 - 3.0),
        "skewness_se": math.sqrt(6.0 / m),
        "kurtosis_se": math.sqrt(24.0 / m),
    }


# ---------------------------------------------------------------------------
# Invariant law of X ~ 1/X + eps
# ---------------------------------------------------------------------------


def invariant_chain(p: float, depth: int, stream) -> float:
    """Apply ``X <- 1/X + eps`` ``depth`` times from ``X = 1``; an approximate draw from the invariant law.

    The ``depth`` Bernoulli(p) draws are taken from ``stream`` in order and
    applied last-to-first, so the first draw is the outermost map::

        X = eps_0 + 1 / (eps_1 + 1 / (... + 1 / (eps_{depth-1} + 1)))

    The law of the result is the same as for the forward order, but a deeper
    chain on the same stream only perturbs the innermost terms, which the
    maps contract away.
    """
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    eps = [1.0 if stream.uniform() < p else 0.0 for _ in range(depth)]
    x = 1.0
    for e in reversed(eps):
        if x == 0.0:
            raise ArithmeticError("degenerate iterate")
        x = 1.0 / x + e
    return x


@dataclass(frozen=True)
class InvariantSample:
    values: np.ndarray
    p: float
    depth: int

    def __len__(self) -> int:
        return len(self.values)

    def histogram(self, bins: int = 200, upper: float = 4.0):
        return np.histogram(self.values, bins=bins, range=(0.0, upper))

    def ecdf(self):
        x = np.sort(self.values)
        return x, np.arange(1, len(x) + 1) / len(x)


def invariant_sample(
    p: float,
    count: int,
    depth: int = DEFAULT_CHAIN_DEPTH,
    seed: Seed = Seed(),
    workers: int = 1,
) -> InvariantSample:
    """``count`` independent finite-depth chains, chain ``r`` on stream ``(seed, TAG_INVARIANT, r)``."""
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    if depth < 1 or count < 1:
        raise ValueError("depth and count must be >= 1")
    out = np.empty(count)
    base = np.uint64(seed.key(TAG_INVARIANT))
    run_chunked(lambda lo, hi: _invariant_batch(p, base, lo, hi, depth, out), count, workers)
    if not np.all(out > 0.0):
        raise ArithmeticError("degenerate iterate")
    return InvariantSample(out, p, depth)


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    residual: float
    stderr: float

    @property
    def z(self) -> float:
        return abs(self.residual) / self.stderr if self.stderr > 0 else math.inf

    def holds(self, z: float = 3.0) -> bool:
        return abs(self.residual) <= z * self.stderr


def identity_residuals(values: np.ndarray, p: float, levels=(1, 2, 3)) -> dict[str, np.ndarray]:
    """Per-draw residuals whose expectation vanishes under the invariant law.

    The row-polynomial identities are only included for ``p = 1/2``.
    """
    x = np.asarray(values, dtype=float)
    lx = np.log(x)
    above = np.where(x > 1.0, lx, 0.0)
    below = np.where(x < 1.0, lx, 0.0)
    out = {
        "log_x_vs_log_2x_plus_1": lx - (p / 3.0) * np.log(2.0 * x + 1.0),
        "below_vs_above": below - (p - 1.0) * above,
        "above_vs_mean": above - lx / p,
        "below_vs_mean": below - (p - 1.0) / p * lx,
    }
    if p == 0.5 and levels:
        top = max(levels)
        for row in iter_rows(top):
            if row.n not in levels:
                continue
            poly = np.zeros_like(x)
            for (a, b), mult in row.items():
                poly += mult * np.log(a * x + b)
            out[f"row_{row.n}_polynomial"] = lx - poly / ((row.n + 6) * 2.0**row.n)
    return out


def identity_checks(
    sample: InvariantSample,
    n_boot: int = 200,
    seed: Seed = Seed(),
    levels=(1, 2, 3),
) -> list[IdentityCheck]:
    """Mean residual of each identity with a bootstrap standard error."""
    res = identity_residuals(sample.values, sample.p, levels)
    names = list(res)
    mat = np.column_stack([res[k] for k in names])
    rng = np.random.Generator(np.random.PCG64(seed.key(TAG_BOOTSTRAP)))
    size = mat.shape[0]
    boot = np.empty((n_boot, mat.shape[1]))
    for i in range(n_boot):
        boot[i] = mat[rng.integers(0, size, size)].mean(axis=0)
    means = mat.mean(axis=0)
    ses = boot.std(axis=0, ddof=1)
    return [IdentityCheck(k, float(mu), float(se)) for k, mu, se in zip(names, means, ses)]
