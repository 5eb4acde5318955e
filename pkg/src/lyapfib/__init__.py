"""Lyapunov exponents and CLT variances for random Fibonacci-type matrix products."""

from .analytic import LambdaValue, bernoulli_bounds, boundary_lambda, cauchy_lambda, cauchy_scale
from .core import (
    DEFAULT_X0,
    Bernoulli,
    CapacityError,
    CauchyScale,
    LogSumAccumulator,
    Matrix2,
    Seed,
    Stream,
    UnitVector2,
    apply_normalized,
    draw_matrix,
)
from .montecarlo import (
    Estimate,
    InvariantSample,
    VarianceCurve,
    identity_checks,
    invariant_chain,
    invariant_sample,
    mc_lambda,
    mc_lambda_curve,
    mc_variance_curve,
)
from .recursion import (
    BoundPair,
    CoefficientPair,
    RowMultiset,
    bounds,
    expand_row,
    fib,
    fib_closed_form,
    first_pair,
    log_c,
)

__version__ = "0.1.0"
