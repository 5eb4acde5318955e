import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lyapfib.analytic import (
    bernoulli_bounds,
    boundary_lambda,
    cauchy_lambda,
    cauchy_scale,
)
from lyapfib.recursion import Provenance, bounds

xis = st.floats(1e-6, 1e6).flatmap(lambda x: st.sampled_from([x, -x]))


def test_cauchy_unit_scale_is_golden_ratio():
    assert cauchy_lambda(1.0).value == pytest.approx(math.log((1 + math.sqrt(5)) / 2), rel=1e-15)
    assert round(cauchy_lambda(1.0).value, 7) == 0.4812118


def test_cauchy_negative_parameter():
    assert cauchy_lambda(-1.0).value == cauchy_lambda(1.0).value


def test_cauchy_two():
    assert cauchy_lambda(2.0).value == pytest.approx(math.log(1 + math.sqrt(2)), rel=1e-15)
    assert round(cauchy_lambda(2.0).value, 7) == 0.8813736


def test_cauchy_twenty():
    assert cauchy_lambda(20.0).value == pytest.approx(math.log((20 + math.sqrt(404)) / 2), rel=1e-15)


def test_cauchy_zero_is_boundary():
    with pytest.raises(ValueError, match="boundary"):
        cauchy_lambda(0.0)


@given(xis)
def test_cauchy_matches_printed_formula(xi):
    x = abs(xi)
    assert cauchy_lambda(xi).value == pytest.approx(math.log((x + math.sqrt(x * x + 4)) / 2), rel=1e-9)


@given(xis)
def test_cauchy_even(xi):
    assert cauchy_lambda(xi).value == cauchy_lambda(-xi).value


@given(xis)
def test_scale_fixed_point(xi):
    g = cauchy_scale(xi)
    assert g == pytest.approx(1 / g + abs(xi), rel=1e-14)


def test_cauchy_strictly_increasing():
    grid = np.geomspace(1e-4, 1e4, 400)
    values = [cauchy_lambda(x).value for x in grid]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_cauchy_positive():
    for xi in (1e-8, 0.3, 7.0):
        assert cauchy_lambda(xi).value > 0


def test_bernoulli_half_matches_recursion_level_zero():
    a = bernoulli_bounds(0.5)
    r = bounds(0)
    assert abs(a.lower - r.lower) <= 1e-15
    assert abs(a.upper - r.upper) <= 1e-15
    assert a.provenance is Provenance.ANALYTIC


def test_bernoulli_nine_tenths():
    b = bernoulli_bounds(0.9)
    assert b.lower == pytest.approx(0.9 * math.log(3) / 3.1, rel=1e-15)
    assert b.upper == pytest.approx(0.45 * math.log(3), rel=1e-15)
    # decimal oracle: 0.318951954774..., 0.494375529900...
    assert round(b.lower, 6) == 0.318952
    assert round(b.upper, 6) == 0.494376


def test_bernoulli_vanish_near_zero():
    b = bernoulli_bounds(1e-12)
    assert 0 < b.lower < b.upper < 1e-11


@given(st.floats(1e-9, 1 - 1e-9))
def test_bernoulli_bracket_strict(p):
    b = bernoulli_bounds(p)
    assert b.lower < b.upper
    assert b.lower == p * math.log(3) / (4 - p)
    assert b.upper == p * math.log(3) / 2


@pytest.mark.parametrize("p", [0.0, 1.0, -0.5, 2.0])
def test_bernoulli_bounds_domain(p):
    with pytest.raises(ValueError):
        bernoulli_bounds(p)


def test_boundary_values():
    assert boundary_lambda("cauchy", 0).value == 0.0
    assert boundary_lambda("bernoulli", 0).value == 0.0
    assert boundary_lambda("bernoulli", 1).value == pytest.approx(math.log((1 + math.sqrt(5)) / 2))


def test_boundary_golden_growth_from_fibonacci_matrices():
    # [[1,1],[1,0]]^n has largest entry F(n+1); (1/n) log F(n+1) -> log golden ratio
    n = 1000
    a, b = 1, 1
    for _ in range(n - 1):
        a, b = a + b, a
    assert math.log(a) / n == pytest.approx(boundary_lambda("bernoulli", 1).value, abs=2e-3)


@pytest.mark.parametrize("kind,value", [("bernoulli", 0.5), ("cauchy", 1.0), ("other", 0.0)])
def test_boundary_rejects_interior(kind, value):
    with pytest.raises(ValueError):
        boundary_lambda(kind, value)
