"""Closed forms and analytic brackets for the top Lyapunov exponent (natural log units)."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import CauchyScale, ModelSpec
from .recursion import BoundPair, Provenance

__all__ = [
    "LambdaValue",
    "bernoulli_bounds",
    "boundary_lambda",
    "cauchy_lambda",
    "cauchy_scale",
]

LOG3 = math.log(3.0)
LOG_GOLDEN = math.log((1.0 + math.sqrt(5.0)) / 2.0)


@dataclass(frozen=True)
class LambdaValue:
    value: float
    model: ModelSpec | tuple[str, float]

    def __float__(self) -> float:
        return self.value


def cauchy_scale(xi: float) -> float:
    """Scale of the Cauchy law invariant under ``x -> -1/x + xi * eps``.

    It is the positive root of ``g = 1/g + |xi|``.
    """
    x = abs(float(xi))
    return (x + math.sqrt(x * x + 4.0)) / 2.0


def cauchy_lambda(xi: float) -> LambdaValue:
    """Exact exponent ``log((|xi| + sqrt(xi^2 + 4)) / 2)`` of the Cauchy model."""
    if xi == 0:
        raise ValueError("boundary parameter: xi = 0 is only available through boundary_lambda")
    x = abs(float(xi))
    # asinh(x/2) is the same quantity without cancellation for small |xi|
    return LambdaValue(math.asinh(x / 2.0), CauchyScale(xi))


def _bernoulli_bracket(p: float) -> tuple[float, float]:
    return p * LOG3 / (4.0 - p), p * LOG3 / 2.0


def bernoulli_bounds(p: float) -> BoundPair:
    """Two-sided bracket ``p log3 / (4 - p) <= lambda(p) <= p log3 / 2``."""
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    lo, hi = _bernoulli_bracket(p)
    return BoundPair(lo, hi, Provenance.ANALYTIC)


def boundary_lambda(kind: str, value: float) -> LambdaValue:
    """Exponent at a parameter endpoint excluded from the model definitions.

    ``("bernoulli", 0)`` gives 0 (the swap matrix is an isometry),
    ``("bernoulli", 1)`` gives log of the golden ratio (Fibonacci growth) and
    ``("cauchy", 0)`` gives 0, the limit of the closed form.
    """
    if kind == "bernoulli":
        if value == 0:
            return LambdaValue(0.0, (kind, 0.0))
        if value == 1:
            return LambdaValue(LOG_GOLDEN, (kind, 1.0))
    elif kind == "cauchy":
        if value == 0:
            return LambdaValue(0.0, (kind, 0.0))
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    raise ValueError(f"{kind} parameter {value!r} is not an endpoint")


def exact_lambda(model: ModelSpec) -> float | None:
    """Closed-form exponent when one is known, else None."""
    if isinstance(model, CauchyScale):
        return cauchy_lambda(model.xi).value
    return None
