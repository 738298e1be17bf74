import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from chainlab.bessel import (
    bessel_j,
    bessel_j_oracle,
    bessel_row,
    bessel_rows,
    default_panels,
    even_order_sum,
    neumann_identity_residual,
    start_order,
)
from chainlab.errors import DomainError

# J_n(t) to 16 digits from mpmath.besselj at 50 digits
FROZEN = [
    (0, 1.0, 0.76519768655796655),
    (1, 1.0, 0.44005058574493352),
    (5, 12.3, -0.0084050359655249599),
    (0, 20.0, 0.16702466434058315),
    (2, 400.0, 0.038779071238641024),
    (200, 150.0, 8.0577021983968538e-14),
]


@pytest.mark.parametrize("n,t,expected", FROZEN)
def test_frozen_values(n, t, expected):
    assert bessel_j(n, t) == pytest.approx(expected, rel=1e-13, abs=1e-25)


def test_zero_argument():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(3, 0.0) == 0.0
    np.testing.assert_array_equal(bessel_row(4, 0.0).values, [1, 0, 0, 0, 0])


def test_matches_quadrature_at_one():
    assert abs(bessel_j(0, 1.0) - bessel_j_oracle(0, 1.0)) <= 1e-12


def test_row_sum_of_squares():
    row = bessel_row(64, 10.0)
    total = row.values[0] ** 2 + 2.0 * np.sum(row.values[1:] ** 2)
    assert abs(total - 1.0) <= 1e-10


def test_row_uniform_bound():
    row = bessel_row(200, 50.0).values
    n = np.arange(1, 201, dtype=float)
    bound = np.minimum(n ** (-1 / 3), 50.0 ** (-1 / 3))
    assert np.all(np.abs(row[1:]) <= bound)


def test_negative_orders_and_arguments():
    row = bessel_row(10, 7.5)
    for n in range(11):
        assert row[-n] == (-1) ** n * row[n]
        assert bessel_j(-n, 7.5) == pytest.approx((-1) ** n * bessel_j(n, 7.5), abs=1e-16)
        assert bessel_j(n, -7.5) == pytest.approx((-1) ** n * bessel_j(n, 7.5), abs=1e-16)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_rejected(bad):
    with pytest.raises(DomainError):
        bessel_j(0, bad)


def test_scipy_agreement_large_arguments():
    for t in (1e3, 1e4, 3e4):
        row = bessel_row(60, t).values
        np.testing.assert_allclose(row, special.jv(np.arange(61), t), atol=1e-12)


def test_start_order_grows_with_argument():
    assert start_order(0, 1e4) > 1e4
    assert start_order(200, 1.0) > 200


def test_bessel_rows_stack():
    ts = np.array([0.0, 1.0, 50.0])
    rows = bessel_rows(20, ts)
    assert rows.shape == (3, 21)
    for i, t in enumerate(ts):
        np.testing.assert_array_equal(rows[i], bessel_row(20, t).values)


def test_even_order_sum_matches_direct():
    t = 300.0
    ks = np.array([0, 3, 17, 40, 141])
    w = np.array([1.0, -2.0, 0.5, 3.0, 1.0])
    row = bessel_row(2 * ks.max(), t).values
    direct = float(np.dot(w, row[2 * ks]))
    assert even_order_sum(t, ks, w) == pytest.approx(direct, abs=1e-14)
    assert even_order_sum(t, ks) == pytest.approx(float(row[2 * ks].sum()), abs=1e-14)


def test_even_order_sum_large_argument():
    t = 2e5
    ks = np.arange(20000, 20010)
    np.testing.assert_allclose(even_order_sum(t, ks), special.jv(2 * ks, t).sum(), atol=1e-12)


class TestQuadratureOracle:
    def test_trivial(self):
        assert bessel_j_oracle(0, 0.0, 64) == pytest.approx(1.0, abs=1e-16)
        assert bessel_j_oracle(1, 0.0, 64) == pytest.approx(0.0, abs=1e-16)

    def test_panel_doubling(self):
        assert abs(bessel_j_oracle(5, 12.3, 512) - bessel_j_oracle(5, 12.3, 1024)) <= 1e-13

    def test_default_panels(self):
        assert default_panels(0, 0.0) == 64
        assert default_panels(10, 100.0) == 880


class TestNeumannIdentity:
    def test_sum_of_squares_case(self):
        assert neumann_identity_residual(30.0, 30.0, 0.0, 61) <= 1e-10

    def test_trivial(self):
        assert neumann_identity_residual(0.0, 0.0, 1.0, 8) <= 1e-15

    def test_even_order_case(self):
        assert neumann_identity_residual(7.0, 3.0, math.pi, 60) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(n=st.integers(0, 150), t=st.floats(0.01, 300.0))
def test_three_term_recurrence(n, t):
    row = bessel_row(n + 2, t).values
    lhs = row[n] + row[n + 2]
    rhs = 2.0 * (n + 1) / t * row[n + 1]
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, 2.0 * (n + 1) / t)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(0, 200), t=st.floats(0.0, 400.0))
def test_matches_quadrature(n, t):
    assert abs(bessel_j(n, t) - bessel_j_oracle(n, t)) <= 1e-11


@settings(max_examples=40, deadline=None)
@given(t1=st.floats(0.0, 80.0), t2=st.floats(0.0, 80.0), phi=st.floats(0.0, 2 * math.pi))
def test_addition_theorem(t1, t2, phi):
    assert neumann_identity_residual(t1, t2, phi, math.ceil(max(t1, t2)) + 40) <= 1e-9
