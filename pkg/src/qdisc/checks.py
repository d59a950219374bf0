"""Named verification suites run by the command-line front end.

Every check is a small closure returning ``(ok, detail)``; suites assemble
them into :class:`Check` records sorted by id.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from gmpy2 import mpq

from . import __version__
from .bergman import (
    HatOperator,
    WeightedSpace,
    f0hat_identity_check,
    hat_apply,
    hat_normal_order,
    hat_relation_residual,
    toeplitz_integral_form,
    toeplitz_left_integral_form,
    toeplitz_trace_form,
)
from .berezin import duality_sides, expansion_check_f0, hypergeometric_failures, p_poly
from .discrep import (
    ConventionSet,
    MixedElement,
    OpMatrix,
    OrderedElement,
    adjoint,
    integrate,
    inner_product,
    normal_order,
    to_matrix,
)
from .errors import QDiscError
from .qkernels import HalfIntWeight, pfp_kernel_pair, project_kernel
from .qscalar import TSeries, box_eigenvalue, exact, fmt, qbinom_expand, qpoch
from .starprod import (
    c_series_closed_form,
    c_series_solve,
    calibration_table,
    compare_routes,
    star_operator_route,
)

STATUS_PASS = "pass"
STATUS_FAIL = "fail"
STATUS_SKIP = "skipped"


@dataclass
class Check:
    id: str
    identity: str
    status: str
    detail: str = ""

    def as_dict(self) -> dict:
        return {"id": self.id, "identity": self.identity, "status": self.status, "detail": self.detail}


@dataclass
class RunConfig:
    q: str = "1/2"
    t: str = "1/3"
    nt: int = 4
    m: int = 32
    nf: int = 24
    s: int = 4
    convention: str = "calibrate"
    suites: tuple = ("all",)
    seed: int = 20240601

    def as_dict(self) -> dict:
        return {
            "q": self.q, "t": self.t, "nt": self.nt, "m": self.m, "nf": self.nf,
            "s": self.s, "convention": self.convention, "suites": list(self.suites),
            "seed": self.seed,
        }


def _run(cid: str, identity: str, fn) -> Check:
    try:
        ok, detail = fn()
    except QDiscError as exc:
        return Check(cid, identity, STATUS_FAIL, f"{type(exc).__name__}: {exc}")
    return Check(cid, identity, STATUS_PASS if ok else STATUS_FAIL, detail)


def _numeric_t(cfg: RunConfig):
    return exact(cfg.t) if cfg.t != "formal" else mpq(1, 3)


# ---------------------------------------------------------------------------


def suite_identities(cfg: RunConfig) -> list:
    q = exact(cfg.q)
    q2 = q * q
    checks = []

    def pochhammer():
        ok = qpoch(q2, q2, 0) == 1 and qpoch(q2, q2, 2) == (1 - q2) * (1 - q2 * q2)
        return ok, f"(q^2;q^2)_2 = {fmt(qpoch(q2, q2, 2))}"

    def series_inverse():
        s = qbinom_expand(q2, q, cfg.nt)
        one = s * s.invert()
        return one == 1, "s * s^-1 == 1"

    def laplace_eigen():
        return box_eigenvalue(1, q) == 0, "constant function has eigenvalue 0"

    checks.append(_run("identities.qpoch", "q-Pochhammer recursion", pochhammer))
    checks.append(_run("identities.series-inverse", "series ring inverse", series_inverse))
    checks.append(_run("identities.box-eigenvalue", "Laplacian eigenvalue at l=0", laplace_eigen))
    for tq in (_numeric_t(cfg),):
        space = WeightedSpace(q, tq, 4)

        def f0hat(space=space):
            bad = [j for j in range(21) if not f0hat_identity_check(j, space)]
            return not bad, f"failing j: {bad}" if bad else "j = 0..20 exact"

        checks.append(_run(f"identities.f0hat-delta[t={fmt(tq)}]", "normal-ordered symbol of f_0 reproduces delta_j0", f0hat))
    return checks


def _random_normal(rng, deg: int, terms: int) -> OrderedElement:
    c = {}
    for _ in range(terms):
        c[(rng.randint(0, deg), rng.randint(0, deg))] = mpq(rng.randint(-9, 9), rng.randint(1, 9))
    return OrderedElement(c)


def suite_ordering(cfg: RunConfig) -> list:
    q = exact(cfg.q)
    rng = random.Random(cfg.seed)
    elems = [_random_normal(rng, 5, rng.randint(1, 5)) for _ in range(100)]

    def normal_roundtrip():
        bad = 0
        for e in elems:
            if normal_order(to_matrix(e, 24, q), 5, q) != e:
                bad += 1
        return bad == 0, f"{len(elems) - bad}/{len(elems)} exact"

    space = WeightedSpace.formal(q, cfg.nt, 24)

    def hat_roundtrip():
        bad = 0
        for e in elems:
            cols = {n: hat_apply(e, n, space) for n in range(24)}
            entries = {(m, n): v for n, col in cols.items() for m, v in col.items()}
            A = OpMatrix(entries, 24, e.offsets())
            back = hat_normal_order(HatOperator(A, space), 5, strict=True)
            if back != e:
                bad += 1
        return bad == 0, f"{len(elems) - bad}/{len(elems)} exact"

    def hat_relation():
        return hat_relation_residual(WeightedSpace(q, _numeric_t(cfg), 16)).is_zero(), "residual vanishes"

    return [
        _run("ordering.normal-roundtrip", "unique normal ordering", normal_roundtrip),
        _run("ordering.hat-roundtrip", "unique hat normal ordering", hat_roundtrip),
        _run("ordering.hat-relation", "commutation relation of zhat, zhat*", hat_relation),
    ]


def suite_toeplitz(cfg: RunConfig) -> list:
    q = exact(cfg.q)
    space = WeightedSpace(q, _numeric_t(cfg), 8)
    basis = [MixedElement({(a, n, b): mpq(1)}) for a in range(5) for n in range(5) for b in range(5)]

    def forms_agree():
        bad = []
        for e in basis:
            F = to_matrix(e, q=q)
            tr = toeplitz_trace_form(F, space)
            tr6 = {k: v for k, v in tr.items() if max(k) <= 6}
            i1 = {k: v for k, v in toeplitz_integral_form(F, space).items() if max(k) <= 6}
            i2 = {k: v for k, v in toeplitz_left_integral_form(F, space).items() if max(k) <= 6}
            if not (tr6 == i1 == i2):
                bad.append(list(e.terms)[0])
        return not bad, f"mismatching symbols: {bad}" if bad else f"{len(basis)} basis symbols agree"

    return [_run("toeplitz.integral-vs-trace", "integral and trace forms of Toeplitz entries", forms_agree)]


def suite_berezin_f0(cfg: RunConfig) -> list:
    q = exact(cfg.q)
    n = max(cfg.nt, 1)

    def f0():
        return expansion_check_f0(q, n, n), f"orders N_t = N_f = {n}"

    return [_run("berezin.f0-expansion", "Berezin transform of f_0", f0)]


def suite_duality(cfg: RunConfig) -> list:
    q = exact(cfg.q)
    rng = random.Random(cfg.seed + 1)
    space = WeightedSpace(q, _numeric_t(cfg), 12)

    def rand_finite(k):
        return MixedElement({
            (rng.randint(0, k), rng.randint(0, k), rng.randint(0, k)): mpq(rng.randint(-5, 5), rng.randint(1, 5))
            for _ in range(3)
        })

    def duality():
        bad = 0
        for _ in range(10):
            lhs, rhs = duality_sides(rand_finite(2), rand_finite(2), space)
            bad += lhs != rhs
        return bad == 0, f"{10 - bad}/10 exact"

    def limit_shadow():
        t = TSeries.variable(2)
        bad = 0
        f0 = to_matrix(MixedElement({(0, 0, 0): mpq(1)}), q=q)
        for _ in range(10):
            psi = _random_normal(rng, 5, 3)
            lhs = (1 - q * q) / (1 - t) * inner_product(psi, psi, q, t)
            P = to_matrix(psi, 8, q) @ f0
            rhs = integrate(adjoint(P, q) @ P, q)
            bad += lhs[0] != rhs
        return bad == 0, f"{10 - bad}/10 exact"

    return [
        _run("berezin.duality", "Berezin transform dual to tr_q pairing", duality),
        _run("berezin.limit-shadow", "weighted norm tends to the f_0-compressed norm", limit_shadow),
    ]


def suite_hypergeometric(cfg: RunConfig) -> list:
    q = exact(cfg.q)

    def ident():
        bad = hypergeometric_failures(q, 12, 12)
        return not bad, f"failing (j, l): {bad}" if bad else "j, l <= 12 exact"

    def p_at_zero():
        bad = [j for j in range(21) if p_poly(j, q)(0) != 1]
        return not bad, f"failing j: {bad}" if bad else "p_j(0) = 1 for j <= 20"

    return [
        _run("p-poly.hypergeometric", "p_j at Laplacian eigenvalues equals terminating 3phi2", ident),
        _run("p-poly.at-zero", "p_j(0) = 1", p_at_zero),
    ]


def _select_convention(cfg: RunConfig, q):
    if cfg.convention == "calibrate":
        table = calibration_table(q, min(cfg.nt, 2))
        matches = [k for k, v in sorted(table.items()) if v == 0]
        return (ConventionSet.parse(matches[0]) if len(matches) == 1 else None), table
    return ConventionSet.parse(cfg.convention), None


def suite_star(cfg: RunConfig) -> list:
    q = exact(cfg.q)
    conv, table = _select_convention(cfg, q)
    checks = []
    if table is not None:
        detail = ", ".join(f"{k}: {v}" for k, v in sorted(table.items()))
        checks.append(Check("star.calibration", "unique derivative convention", STATUS_PASS if conv else STATUS_FAIL, detail))
    if conv is None:
        checks.append(Check("star.routes", "asymptotic vs operator star product", STATUS_SKIP, "no convention"))
        return checks
    m = OrderedElement.monomial
    pairs = [(m(0, a), m(b, 0)) for a in range(3) for b in range(3)]
    pairs += [(m(a, b), m(c, d)) for a in range(3) for b in range(3) for c in range(3) for d in range(3)]

    def routes():
        bad = []
        for f1, f2 in pairs:
            rep = compare_routes(f1, f2, q, cfg.nt, conv)
            if not rep.equal:
                bad.append((list(f1.coeffs)[0], list(f2.coeffs)[0], rep.mismatches[0][:2]))
        return not bad, f"mismatches: {bad[:5]}" if bad else f"{len(pairs)} pairs agree to t^{cfg.nt}"

    def assoc():
        order = min(cfg.nt, 3)
        monos = [m(a, b) for a in range(3) for b in range(3) if a + b <= 2]
        bad = 0
        count = 0
        for x in monos:
            for y in monos:
                xy = star_operator_route(x, y, q, order)
                for z in monos:
                    if sum(sum(list(e.coeffs)[0]) for e in (x, y, z)) > 6:
                        continue
                    count += 1
                    lhs = star_operator_route(xy, z, q, order)
                    rhs = star_operator_route(x, star_operator_route(y, z, q, order), q, order)
                    bad += lhs != rhs
        return bad == 0, f"{count - bad}/{count} triples associative to t^{order}"

    checks.append(_run("star.routes", "asymptotic vs operator star product", routes))
    checks.append(_run("star.associativity", "associativity of the operator-route product", assoc))
    return checks


def suite_c_series(cfg: RunConfig) -> list:
    q = exact(cfg.q)
    q2 = q * q

    def agree():
        order = 8
        a = c_series_solve(12, q, order)
        b = c_series_closed_form(12, q, order)
        return a == b, "K <= 12, t-order <= 8"

    def leading():
        c = c_series_solve(4, q, 2)
        ok = c[0][0] == 1 - q2 and c[1][0] == q2 and all(x[0] == 0 for x in c[2:])
        return ok, "t^0 layer is 1 - q^2 + q^2 u"

    return [
        _run("c-series.closed-form", "triangular solve vs closed form", agree),
        _run("c-series.leading-layer", "leading layer of the c-series", leading),
    ]


def suite_kernels(cfg: RunConfig) -> list:
    q = exact(cfg.q)
    rng = random.Random(cfg.seed + 2)
    elems = [
        MixedElement({
            (rng.randint(0, 3), rng.randint(0, 3), rng.randint(0, 3)): mpq(rng.randint(-7, 7), rng.randint(1, 7))
            for _ in range(3)
        })
        for _ in range(20)
    ]

    def projections():
        for ta in (1, 2, 3):
            w = HalfIntWeight(ta, q)
            for e in elems:
                project_kernel(e, w)
        return True, "20 elements x 2alpha in {1,2,3}"

    def factorisation():
        for ta in (1, 2, 3):
            w = HalfIntWeight(ta, q)
            for e in elems[:5]:
                pfp_kernel_pair(e, w, cfg.s)
        return True, f"S = {cfg.s}"

    return [
        _run("kernels.projection", "kernel projection equals Gram projection", projections),
        _run("kernels.factorisation", "coherent-vector factorisation of P f P", factorisation),
    ]


SUITES = {
    "identities-qscalar": suite_identities,
    "ordering-roundtrips": suite_ordering,
    "toeplitz-consistency": suite_toeplitz,
    "berezin-f0": suite_berezin_f0,
    "berezin-duality": suite_duality,
    "lemma33": suite_hypergeometric,
    "star-routes": suite_star,
    "c-series": suite_c_series,
    "kernels-appendix": suite_kernels,
}


def run_verify(cfg: RunConfig) -> dict:
    names = list(SUITES) if "all" in cfg.suites else list(cfg.suites)
    checks = []
    for name in names:
        checks.extend(SUITES[name](cfg))
    checks.sort(key=lambda c: c.id)
    summary = {
        "passed": sum(c.status == STATUS_PASS for c in checks),
        "failed": sum(c.status == STATUS_FAIL for c in checks),
        "skipped": sum(c.status == STATUS_SKIP for c in checks),
    }
    return {
        "version": __version__,
        "config": cfg.as_dict(),
        "checks": [c.as_dict() for c in checks],
        "summary": summary,
    }


__all__ = ["Check", "RunConfig", "SUITES", "run_verify"]
