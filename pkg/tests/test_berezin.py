import random

import pytest
from gmpy2 import mpq

from qdisc.bergman import HatOperator, WeightedSpace, hat_generators, toeplitz
from qdisc.berezin import (
    PPoly,
    berezin,
    berezin_radial,
    covariant_symbol,
    duality_sides,
    expansion_check_f0,
    expansion_coeffs,
    hypergeometric_failures,
    p_poly,
    routes_agree,
    symbol_matrix,
    trace_q,
)
from qdisc.discrep import ANTI_NORMAL, MixedElement, OpMatrix, OrderedElement, RadialElement, to_matrix
from qdisc.errors import NotFinite
from qdisc.qscalar import TSeries
from qdisc.starprod import c_series


def test_trace_q(q):
    space = WeightedSpace(q, mpq(1, 3), 8)
    assert trace_q(toeplitz(RadialElement([1]), space)) == 1 - space.t
    assert trace_q(HatOperator(OpMatrix({}), space)) == 0
    z, _ = hat_generators(space)
    with pytest.raises(NotFinite):
        trace_q(z)


def test_symbol_of_rank_one_projection(q):
    space = WeightedSpace.formal(q, 5, 8)
    op = HatOperator(OpMatrix({(0, 0): mpq(1)}), space)
    sym = covariant_symbol(op)
    t, q2 = space.t, space.q2
    assert sym.terms == {(0, n, 0): (t * q2) ** n for n in range(6)}


def test_symbol_of_shift_is_z(q):
    space = WeightedSpace(q, mpq(1, 3), 16)
    z, _ = hat_generators(space)
    assert covariant_symbol(z, route="normal", max_deg=5).coeffs == {(1, 0): 1}
    A = symbol_matrix(covariant_symbol(z, n_max=8), space)
    assert A.equal_on(to_matrix(OrderedElement({(1, 0): 1}), 9, q))


@pytest.mark.parametrize("t", [mpq(1, 3), TSeries.variable(3)])
def test_routes_agree_on_random_finite_operators(t, q):
    rng = random.Random(3)
    space = WeightedSpace(q, t, 12)
    for _ in range(5):
        entries = {(rng.randint(0, 4), rng.randint(0, 4)): mpq(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(4)}
        assert routes_agree(HatOperator(OpMatrix(entries), space), cols=6)


def test_berezin_of_one(q):
    space = WeightedSpace.formal(q, 3, 12)
    b = berezin(OrderedElement({(0, 0): 1}), space, "normal", max_deg=6)
    assert b.coeffs == {(0, 0): 1}


def test_berezin_of_radial_is_radial(q):
    space = WeightedSpace.formal(q, 3, 12)
    for n in range(3):
        coeffs = [0] * n + [1]
        sym = berezin(RadialElement(coeffs), space).canonical(q)
        assert all(j == 0 and k == 0 for j, _, k in sym.terms)


def test_berezin_of_zstar_z_is_c_series(q):
    space = WeightedSpace.formal(q, 3, 20)
    b = berezin(OrderedElement({(1, 1): 1}, ANTI_NORMAL), space, "normal", max_deg=6)
    for k, c in enumerate(c_series(6, q, 3)):
        assert b.coeffs.get((k, k), TSeries([0], 3)) == c


def test_berezin_f0_series(q):
    space = WeightedSpace.formal(q, 4, 8)
    radial = berezin_radial(RadialElement([1]), space, 4)
    t = space.t
    assert radial[0] == 1 - t
    assert radial[1] == (1 - t) * t * q * q


def test_expansion_check_f0():
    assert expansion_check_f0(mpq(3, 5), 10, 10)


def test_duality(q):
    space = WeightedSpace(q, mpq(1, 3), 12)
    f = MixedElement({(1, 0, 2): 3, (0, 2, 0): 1})
    psi = MixedElement({(2, 1, 0): 1, (0, 0, 1): -2})
    lhs, rhs = duality_sides(f, psi, space)
    assert lhs == rhs


def test_p_poly_small(q):
    assert p_poly(0, q) == PPoly(0, (1,))
    assert p_poly(1, q).coeffs == (1, 1 - q * q)
    assert all(p_poly(j, q)(0) == 1 for j in range(21))
    assert all(p_poly(j, q).degree <= j for j in range(8))


def test_expansion_coeffs(q):
    assert expansion_coeffs(0, q).coeffs == (1,)
    assert expansion_coeffs(1, q).coeffs == (0, 1 - q * q)


def test_expansion_coeffs_telescope(q):
    # sum_{n<=N} t^n e_n = t^N p_N + (1-t) sum_{j<N} t^j p_j
    N = 4
    t = TSeries.variable(N + 1)
    for x in (mpq(0), mpq(2), mpq(-1, 3)):
        lhs = sum((t**n * expansion_coeffs(n, q)(x) for n in range(N + 1)), TSeries([0], N + 1))
        rhs = t**N * p_poly(N, q)(x) + (1 - t) * sum(
            (t**j * p_poly(j, q)(x) for j in range(N)), TSeries([0], N + 1)
        )
        assert lhs == rhs


@pytest.mark.parametrize("qq", [mpq(1, 2), mpq(3, 5)])
def test_hypergeometric_identity(qq):
    assert hypergeometric_failures(qq, 12, 12) == []
