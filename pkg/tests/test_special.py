"""Exponential-integral accuracy against frozen high-precision references."""

import math

import pytest
from scipy.special import exp1

from arqsec.errors import DomainError
from arqsec.special import exp_integral_e1, exp_integral_e1_scaled

# 22-digit values from 30-digit quadrature of exp(-t)/t on [x, inf).
REFERENCE = {
    1e-6: 13.23829589306249124356,
    0.1: 1.822923958419390666081,
    0.5: 0.5597735947761608117468,
    1.0: 0.2193839343955202736772,
    2.0: 0.04890051070806111956724,
    10.0: 4.156968929685324277403e-6,
    25.0: 5.348899755340216640325e-13,
    50.0: 3.783264029550459018699e-24,
}


@pytest.mark.parametrize("x,expected", sorted(REFERENCE.items()))
def test_reference_values(x, expected):
    assert exp_integral_e1(x) == pytest.approx(expected, rel=1e-10)


def test_matches_scipy_across_range():
    x = 1e-6
    while x < 50:
        assert exp_integral_e1(x) == pytest.approx(float(exp1(x)), rel=1e-9)
        x *= 1.7


def test_scaled_variant_consistent():
    for x in (1e-4, 0.3, 1.0, 3.0, 40.0):
        assert exp_integral_e1_scaled(x) == pytest.approx(
            math.exp(x) * exp_integral_e1(x), rel=1e-12
        )


def test_scaled_variant_no_overflow_at_large_argument():
    # e^x alone overflows near x = 710; the scaled form must not.
    value = exp_integral_e1_scaled(5000.0)
    assert 0.0 < value < 1.0 / 5000.0  # E1(x) e^x < 1/x


def test_underflow_to_zero():
    assert exp_integral_e1(800.0) == 0.0


@pytest.mark.parametrize("x", [0.0, -1.0])
def test_domain_error(x):
    with pytest.raises(DomainError):
        exp_integral_e1(x)
    with pytest.raises(DomainError):
        exp_integral_e1_scaled(x)
