import pytest
from gmpy2 import mpq

from qdisc.bergman import WeightedSpace
from qdisc.berezin import berezin
from qdisc.discrep import ANTI_NORMAL, CALIBRATED, OrderedElement, TensorElement, box_tilde, multiply_tensor, pol_mul
from qdisc.errors import CrossCheckFailed
from qdisc.qscalar import TSeries
from qdisc.starprod import (
    c_series,
    c_series_closed_form,
    c_series_solve,
    calibrate_convention,
    calibration_table,
    compare_routes,
    lift,
    q_image,
    star_asymptotic_route,
    star_operator_route,
)

Z = OrderedElement.monomial


def test_q_image_of_one_is_identity(q):
    Q = q_image(Z(0, 0), q, 3, 8).matrix
    assert Q.entries == {(m, m): TSeries([1], 3) for m in range(8)}


def test_q_image_single_term(q):
    Q = q_image(Z(1, 1), q, 2, 6).matrix
    q2 = q * q
    m = 2
    w = (1 - q2**m) * TSeries([1, q2**m, q2 ** (2 * m)], 2)
    assert Q.entry(2, m) == w


def test_q_image_injective_on_samples(q):
    f = OrderedElement({(1, 2): 1, (0, 0): 2})
    assert not q_image(f, q, 3, 10).matrix.is_zero()


def test_unit_and_holomorphic_products(q):
    f = OrderedElement({(1, 2): 3, (0, 1): mpq(1, 2)})
    assert star_operator_route(Z(0, 0), f, q, 3) == lift(f, 3)
    assert star_operator_route(f, Z(0, 0), q, 3) == lift(f, 3)
    assert star_operator_route(Z(1, 0), Z(1, 0), q, 3) == lift(Z(2, 0), 3)


def test_zstar_star_z_leading_order(q):
    p = star_operator_route(Z(0, 1), Z(1, 0), q, 2)
    q2 = q * q
    assert p.coeffs[(0, 0)][0] == 1 - q2
    assert p.coeffs[(1, 1)][0] == q2


def test_one_sided_module_property(q):
    f1, f2 = Z(1, 2), Z(2, 1)
    base = star_operator_route(f1, f2, q, 2)
    left = star_operator_route(pol_mul(Z(1, 0), f1, q), pol_mul(f2, Z(0, 1), q), q, 2)
    assert left == pol_mul(pol_mul(Z(1, 0), base, q), Z(0, 1), q)


def test_q_is_homomorphism(q):
    f1, f2 = Z(1, 2), OrderedElement({(2, 1): 1, (0, 1): 1})
    p = star_operator_route(f1, f2, q, 2)
    lhs = q_image(p, q, 2, 8).matrix
    rhs = q_image(f1, q, 2, 12).matrix @ q_image(f2, q, 2, 10).matrix
    assert lhs.equal_on(rhs, 8)


@pytest.mark.parametrize("m,k", [(1, 1), (2, 1), (1, 2), (2, 2)])
def test_antinormal_product_is_berezin(m, k, q):
    space = WeightedSpace.formal(q, 3, 24)
    b = berezin(OrderedElement({(m, k): 1}, ANTI_NORMAL), space, "normal", max_deg=8)
    p = star_operator_route(Z(0, m), Z(k, 0), q, 3)
    assert b.truncated(8).coeffs == p.coeffs


def test_c_series_leading_layers(q):
    c = c_series(6, q, 3)
    q2 = q * q
    assert c[0][0] == 1 - q2 and c[1][0] == q2
    assert all(x[0] == 0 for x in c[2:])
    # t^1 layer has degree <= 2 in u and equals (1-q^2) q^2 (1-u)(1-q^2 u)
    p1 = [x[1] for x in c]
    assert p1[:3] == [(1 - q2) * q2, -(1 - q2) * q2 * (1 + q2), (1 - q2) * q2 * q2]
    assert all(v == 0 for v in p1[3:])


def test_c_series_solves_its_system(q):
    from qdisc.bergman import hat_weight

    space = WeightedSpace.formal(q, 4, 4)
    c = c_series(8, q, 4)
    q2, t = space.q2, space.t
    for m in range(9):
        lhs = sum((c[k] * hat_weight(k, m, space) for k in range(m + 1)), TSeries([0], 4))
        assert lhs == (1 - q2 ** (m + 1)) / (1 - t * q2 ** (m + 1))


def test_c_series_cross_check(q):
    assert c_series_solve(12, q, 8) == c_series_closed_form(12, q, 8)


def test_c_series_cross_check_failure_is_reported(monkeypatch, q):
    import qdisc.starprod as sp

    monkeypatch.setattr(sp, "c_series_closed_form", lambda K, q, o: [TSeries([0], o)] * (K + 1))
    with pytest.raises(CrossCheckFailed):
        sp.c_series(3, q, 2)


def test_asymptotic_route_zeroth_order_is_product(q):
    f1, f2 = Z(1, 2), Z(2, 1)
    r = star_asymptotic_route(f1, f2, q, 2)
    prod = pol_mul(f1, f2, q)
    assert {k: v[0] for k, v in r.coeffs.items() if v[0] != 0} == prod.coeffs


def test_asymptotic_route_with_unit(q):
    f = OrderedElement({(3, 2): 1})
    assert star_asymptotic_route(Z(0, 0), f, q, 4) == lift(f, 4)


def test_first_order_anchor(q):
    p = star_operator_route(Z(0, 1), Z(1, 0), q, 1)
    box = multiply_tensor(box_tilde(TensorElement.from_pair(Z(0, 1), Z(1, 0), q), CALIBRATED, q), q)
    first = {k: v[1] / (1 - q * q) for k, v in p.coeffs.items() if v[1] != 0}
    assert first == box.coeffs


@pytest.mark.parametrize("qq", [mpq(1, 2), mpq(2, 3)])
def test_calibration_is_unique(qq):
    table = calibration_table(qq, 2)
    assert sorted(k for k, v in table.items() if v == 0) == [CALIBRATED.name]
    assert calibrate_convention(qq) == CALIBRATED


def test_compare_routes_reports_mismatch_under_wrong_convention(q):
    from qdisc.discrep import ConventionSet

    rep = compare_routes(Z(0, 1), Z(1, 0), q, 2, ConventionSet("left", "mirror", "after"))
    assert not rep.equal
    t_order, mono, lhs, rhs = rep.mismatches[0]
    assert t_order >= 1 and lhs != rhs


def test_routes_agree_sample(q):
    assert compare_routes(Z(0, 1), Z(1, 0), q, 4).equal
    assert compare_routes(Z(0, 0), OrderedElement({(3, 2): 1}), q, 4).equal
    assert compare_routes(Z(2, 1), Z(1, 2), mpq(3, 5), 3).equal
