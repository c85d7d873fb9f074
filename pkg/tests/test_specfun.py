import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kerrlab.errors import DomainError
from kerrlab.specfun import binomial, laguerre, laguerre_coefficients, laguerre_table, log_factorial


def exact_laguerre(m, s, x: Fraction) -> Fraction:
    return sum(Fraction(math.comb(m + s, n + s)) * (-x) ** n / math.factorial(n) for n in range(m + 1))


def test_trivial_orders():
    assert laguerre(0, 0, 3.7) == 1.0
    assert laguerre(1, 0, -1.0) == 2.0


def test_rational_oracle():
    got = laguerre(5, 2, -0.7)
    want = float(exact_laguerre(5, 2, Fraction(-7, 10)))
    assert abs(got - want) <= 1e-12 * abs(want)


@pytest.mark.parametrize("m,s", [(0, 0), (3, 1), (10, 0), (12, 5), (25, 3)])
def test_against_mpmath(m, s):
    for x in (-20.0, -1.3, 0.0, 0.4, 7.5):
        want = float(mpmath.laguerre(m, s, x))
        assert laguerre(m, s, x) == pytest.approx(want, rel=1e-10, abs=1e-10)


def test_complex_argument_matches_mpmath():
    z = -2.0 * complex(math.cos(0.3), math.sin(0.3))
    want = complex(mpmath.laguerre(6, 2, z))
    assert abs(laguerre(6, 2, z) - want) <= 1e-12 * abs(want)


def test_non_finite_rejected():
    with pytest.raises(DomainError):
        laguerre(2, 0, float("nan"))
    with pytest.raises(DomainError):
        laguerre(2, 0, np.array([1.0, np.inf]))


def test_log_factorial():
    assert log_factorial(0) == 0.0
    assert log_factorial(1) == 0.0
    assert log_factorial(20) == pytest.approx(math.log(2432902008176640000), rel=1e-15)


def test_binomial_pascal():
    row = [1]
    for n in range(1, 13):
        row = [1] + [row[i] + row[i + 1] for i in range(len(row) - 1)] + [1]
    assert [binomial(12, k) for k in range(13)] == row
    assert binomial(12, 5) == 792
    assert binomial(5, 0) == 1
    assert binomial(5, 7) == 0


def test_value_at_zero_is_binomial():
    for m in range(15):
        for s in range(6):
            assert laguerre(m, s, 0.0) == math.comb(m + s, s)


def test_coefficients_sum_form():
    c = laguerre_coefficients(4, 1)
    x = 1.7
    assert np.polyval(c[::-1], x) == pytest.approx(laguerre(4, 1, x), rel=1e-13)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 39), st.floats(-50, 50))
def test_three_term_recurrence(m, x):
    lhs = (m + 1) * laguerre(m + 1, 0, x)
    rhs = (2 * m + 1 - x) * laguerre(m, 0, x) - m * laguerre(m - 1, 0, x)
    scale = max(abs((2 * m + 1 - x) * laguerre(m, 0, x)), abs(m * laguerre(m - 1, 0, x)), 1.0)
    assert abs(lhs - rhs) <= 1e-10 * scale


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 20), st.integers(0, 5), st.floats(-10, 10), st.floats(-10, 10))
def test_conjugate_symmetry(m, s, re, im):
    z = complex(re, im)
    assert laguerre(m, s, z.conjugate()) == laguerre(m, s, z).conjugate()


@pytest.mark.parametrize("m", [0, 2, 7])
def test_associated_is_derivative(m):
    nu, h = 1.3, 1e-5
    # d/dnu L_{m+1}(-nu) = L_m^1(-nu)
    fd = (laguerre(m + 1, 0, -(nu + h)) - laguerre(m + 1, 0, -(nu - h))) / (2 * h)
    assert fd == pytest.approx(laguerre(m, 1, -nu), rel=1e-6)


def test_table_matches_direct():
    x = np.linspace(-5, 5, 7)
    tab = laguerre_table(12, 2, x)
    for m in range(13):
        np.testing.assert_allclose(tab[m], laguerre(m, 2, x), rtol=1e-11, atol=1e-11)
