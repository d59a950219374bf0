from fractions import Fraction

import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from qdisc.errors import DivByZero, InvertNonUnit, OrderMismatch
from qdisc.qscalar import (
    QContext,
    TSeries,
    box_eigenvalue,
    exact,
    fmt,
    phi32_terminating,
    qbinom_expand,
    qint,
    qpoch,
    tseries_arith,
)

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=12)
series = st.lists(rationals, min_size=4, max_size=4).map(lambda c: TSeries(c, 3))
units = series.filter(lambda s: s[0] != 0)


def test_exact_accepts_rationals_and_refuses_floats():
    assert exact("7/10") == mpq(7, 10)
    assert exact(Fraction(1, 3)) == mpq(1, 3)
    assert exact(3) == 3
    with pytest.raises(TypeError):
        exact(0.5)
    with pytest.raises(TypeError):
        exact(True)


def test_qcontext_validates_range():
    assert QContext("1/2").q2 == mpq(1, 4)
    for bad in ("0", "1", "3/2"):
        with pytest.raises(ValueError):
            QContext(bad)


def test_qpoch_values(q):
    q2 = q * q
    assert qpoch(q2, q2, 0) == 1
    assert qpoch(q2, q2, 2) == mpq(45, 64)
    assert qpoch(1, q2, 3) == 0


def test_qpoch_on_series():
    t = TSeries.variable(3)
    assert qpoch(t, mpq(1, 4), 1) == 1 - t


def test_qint(q):
    assert qint(0, q * q) == 0
    assert qint(3, q * q) == 1 + mpq(1, 4) + mpq(1, 16)


def test_box_eigenvalue(q):
    assert box_eigenvalue(q * q, q) == 5
    assert box_eigenvalue(1, q) == 0
    with pytest.raises(DivByZero):
        box_eigenvalue(0, q)


def test_qbinom_expand_degenerate_cases(q):
    assert qbinom_expand(q * q, q, 4) == TSeries([1, 1, 1, 1, 1])
    assert qbinom_expand(1, q, 4) == TSeries([1], 4)


def test_qbinom_expand_is_inverse_of_finite_product(q):
    # sum_m (q^{2k};q^2)_m/(q^2;q^2)_m t^m = 1/(t;q^2)_k
    q2 = q * q
    t = TSeries.variable(6)
    for k in range(4):
        assert qbinom_expand(q2**k, q, 6) * qpoch(t, q2, k) == 1


def test_phi32_at_l0_is_one(q):
    for j in range(8):
        assert phi32_terminating(j, 1, q * q, q) == 1


def test_series_order_mismatch():
    with pytest.raises(OrderMismatch):
        TSeries.variable(2) + TSeries.variable(3)


def test_invert_non_unit():
    with pytest.raises(InvertNonUnit):
        TSeries.variable(3).invert()


def test_fmt():
    assert fmt(mpq(-3, 4)) == "-3/4"
    assert fmt(TSeries([1, 2], 1)) == ["1/1", "2/1"]


def test_dilate():
    assert TSeries([1, 1, 1], 2).dilate(2) == TSeries([1, 2, 4])


@settings(max_examples=60, deadline=None)
@given(series, series, series)
def test_series_ring_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    assert a - a == 0


@settings(max_examples=60, deadline=None)
@given(units, series)
def test_series_inverse(u, b):
    assert u * u.invert() == 1
    assert (b / u) * u == b
    assert tseries_arith(u, None, "invert") == u.invert()
