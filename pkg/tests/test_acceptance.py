"""Acceptance criteria 1-11, each checked by exact rational equality.

Every test prints one ``PASS``/``FAIL`` line (visible even under output
capture) and then asserts the result.
"""

import random

import pytest
from gmpy2 import mpq

from qdisc.bergman import (
    HatOperator,
    WeightedSpace,
    f0hat_identity_check,
    hat_apply,
    hat_normal_order,
    project_gram,
    toeplitz_integral_form,
    toeplitz_left_integral_form,
    toeplitz_trace_form,
)
from qdisc.berezin import duality_sides, expansion_check_f0, hypergeometric_failures
from qdisc.discrep import (
    MixedElement,
    OpMatrix,
    OrderedElement,
    adjoint,
    integrate,
    inner_product,
    normal_order,
    to_matrix,
)
from qdisc.qkernels import HalfIntWeight, pfp_kernel_pair, project_kernel
from qdisc.qscalar import TSeries
from qdisc.starprod import (
    c_series_closed_form,
    c_series_solve,
    calibrate_convention,
    calibration_table,
    compare_routes,
    star_operator_route,
)

Z = OrderedElement.monomial
Q = mpq(1, 2)


@pytest.fixture
def report(capsys):
    def emit(n: int, title: str, ok: bool, detail: str = ""):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {title}" + (f" ({detail})" if detail else ""))
        assert ok, detail
    return emit


def _random_normal(rng, deg, terms):
    return OrderedElement({
        (rng.randint(0, deg), rng.randint(0, deg)): mpq(rng.randint(-9, 9) or 1, rng.randint(1, 9))
        for _ in range(terms)
    })


def _random_finite(rng, k, terms=3):
    return MixedElement({
        (rng.randint(0, k), rng.randint(0, k), rng.randint(0, k)): mpq(rng.randint(-7, 7) or 1, rng.randint(1, 7))
        for _ in range(terms)
    })


def test_criterion_01_f0hat_delta(report):
    bad = []
    for q, t in [(mpq(1, 2), mpq(1, 3)), (mpq(2, 3), mpq(1, 5)), (mpq(9, 10), mpq(1, 2))]:
        space = WeightedSpace(q, t, 4)
        bad += [(q, t, j) for j in range(21) if not f0hat_identity_check(j, space)]
    report(1, "normal-ordered symbol of f_0 gives delta_j0, j <= 20", not bad, f"failures: {bad}" if bad else "")


def test_criterion_02_hypergeometric(report):
    bad = {str(q): hypergeometric_failures(q, 12, 12) for q in (mpq(1, 2), mpq(3, 5))}
    ok = not any(bad.values())
    report(2, "p_j at Laplacian eigenvalues equals terminating 3phi2, j, l <= 12", ok, "" if ok else str(bad))


def test_criterion_03_berezin_f0(report):
    report(3, "Berezin transform of f_0 to N_t = N_f = 10", expansion_check_f0(Q, 10, 10))


def test_criterion_04_ordering_roundtrips(report):
    rng = random.Random(4)
    elems = [_random_normal(rng, 5, rng.randint(1, 5)) for _ in range(100)]
    space = WeightedSpace.formal(Q, 4, 24)
    bad_n = bad_h = 0
    for e in elems:
        bad_n += normal_order(to_matrix(e, 24, Q), 5, Q) != e
        entries = {(m, n): v for n in range(24) for m, v in hat_apply(e, n, space).items()}
        back = hat_normal_order(HatOperator(OpMatrix(entries, 24, e.offsets()), space), 5, strict=True)
        bad_h += back != e
    report(4, "normal and hat-normal ordering roundtrips on 100 elements", bad_n == bad_h == 0,
           f"normal failures {bad_n}, hat failures {bad_h}")


def test_criterion_05_toeplitz_forms(report):
    space = WeightedSpace(Q, mpq(1, 3), 8)
    bad = []
    basis = [(a, n, b) for a in range(5) for n in range(5) for b in range(5)]
    for key in basis:
        F = to_matrix(MixedElement({key: mpq(1)}), q=Q)
        forms = [
            {k: v for k, v in form(F, space).items() if max(k) <= 6}
            for form in (toeplitz_trace_form, toeplitz_integral_form, toeplitz_left_integral_form)
        ]
        if not forms[0] == forms[1] == forms[2]:
            bad.append(key)
    report(5, "integral and trace forms of Toeplitz entries, 125 basis symbols", not bad, f"failures: {bad}")


def test_criterion_06_c_series(report):
    q2 = Q * Q
    agree = c_series_solve(12, Q, 8) == c_series_closed_form(12, Q, 8)
    c = c_series_solve(12, Q, 8)
    layer = [x[0] for x in c]
    lead = layer == [1 - q2, q2] + [0] * 11
    report(6, "c-series solve vs closed form (K <= 12, order 8) and t^0 layer", agree and lead,
           f"closed form {'ok' if agree else 'differs'}, t^0 layer {layer[:3]}")


def test_criterion_07_star_routes(report):
    table = calibration_table(Q, 2)
    try:
        conv = calibrate_convention(Q)
    except Exception as exc:  # the residual table is the finding
        report(7, "asymptotic vs operator star product", False, f"{exc}; table {table}")
        return
    pairs = [(Z(0, a), Z(b, 0)) for a in range(3) for b in range(3)]
    pairs += [(Z(a, b), Z(c, d)) for a in range(3) for b in range(3) for c in range(3) for d in range(3)]
    bad = []
    for f1, f2 in pairs:
        rep = compare_routes(f1, f2, Q, 4, conv)
        if not rep.equal:
            bad.append((list(f1.coeffs)[0], list(f2.coeffs)[0], rep.mismatches[0][:2]))
    report(7, f"asymptotic vs operator star product to t^4 under {conv.name}", not bad,
           f"{len(pairs)} pairs; mismatches {bad[:5]}" if bad else f"{len(pairs)} pairs; table {table}")


def test_criterion_08_associativity(report):
    order = 3
    monos = [Z(a, b) for a in range(7) for b in range(7) if a + b <= 6]
    deg = {id(m): sum(next(iter(m.coeffs))) for m in monos}
    cache = {}

    def star(x, y):
        key = (id(x), id(y))
        if key not in cache:
            cache[key] = star_operator_route(x, y, Q, order)
        return cache[key]

    count = bad = 0
    for x in monos:
        for y in monos:
            for z in monos:
                if deg[id(x)] + deg[id(y)] + deg[id(z)] > 6:
                    continue
                count += 1
                lhs = star_operator_route(star(x, y), z, Q, order)
                rhs = star_operator_route(x, star(y, z), Q, order)
                bad += lhs != rhs
    report(8, "associativity of monomial triples, total degree <= 6, t^3", bad == 0, f"{count - bad}/{count} triples")


def test_criterion_09_kernels(report):
    rng = random.Random(9)
    elems = [_random_finite(rng, 3) for _ in range(20)]
    bad = []
    for two_alpha in (1, 2, 3):
        w = HalfIntWeight(two_alpha, Q)
        for i, e in enumerate(elems):
            if project_kernel(e, w, 12) != project_gram(e, w.space(), 12):
                bad.append(("projection", two_alpha, i))
            small = MixedElement({k: v for k, v in e.terms.items() if max(k) <= 4})
            pair = pfp_kernel_pair(small, w, 4)
            if pair.moments != pair.coherent:
                bad.append(("kernel", two_alpha, i))
    report(9, "kernel vs Gram projection and both kernel computations", not bad, f"failures: {bad}")


def test_criterion_10_duality(report):
    rng = random.Random(10)
    bad = 0
    for t in (mpq(1, 3), mpq(1, 7)):
        space = WeightedSpace(Q, t, 16)
        for _ in range(10):
            lhs, rhs = duality_sides(_random_finite(rng, 5), _random_finite(rng, 5), space)
            bad += lhs != rhs
    report(10, "duality of Berezin transform and tr_q pairing", bad == 0, f"{20 - bad}/20 exact")


def test_criterion_11_limit_shadow(report):
    rng = random.Random(11)
    t = TSeries.variable(2)
    f0 = to_matrix(MixedElement({(0, 0, 0): mpq(1)}), q=Q)
    bad = 0
    for _ in range(20):
        psi = _random_normal(rng, 5, rng.randint(1, 4))
        lhs = (1 - Q * Q) / (1 - t) * inner_product(psi, psi, Q, t)
        P = to_matrix(psi, 8, Q) @ f0
        bad += lhs[0] != integrate(adjoint(P, Q) @ P, Q)
    report(11, "constant t-term of the weighted norm equals the f_0-compressed norm", bad == 0, f"{20 - bad}/20 exact")
