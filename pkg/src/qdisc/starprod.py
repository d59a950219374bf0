"""The formal star product on polynomials in ``z``, ``z*`` with coefficients
in truncated power series of ``t``.

Two independent constructions are provided:

* the *operator route* sends each polynomial to its operator image ``Q(f)``
  (weights of ``zhat^j zhat*^k`` expanded as q-binomial series in ``t``),
  composes, and reads the product back by the unique normal-ordered
  expansion;
* the *asymptotic route* sums ``(1-t) sum_j t^j m(p_j(box~) f1 (x) f2)`` with
  the bidifferential Laplacian ``box~``.

The operator route has no convention freedom and serves as the oracle used to
select the q-derivative convention for the asymptotic route.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from gmpy2 import mpq

from .bergman import HatOperator, WeightedSpace, hat_normal_order, hat_weight
from .berezin import p_poly
from .discrep import (
    CALIBRATED,
    NORMAL,
    ConventionSet,
    OpMatrix,
    OrderedElement,
    TensorElement,
    box_tilde,
    multiply_tensor,
    qfall,
    to_normal,
)
from .errors import (
    AmbiguousConvention,
    CrossCheckFailed,
    NoConventionMatches,
    SolveInconsistent,
    TruncationTooSmall,
)
from .qscalar import TSeries, exact, qbinom_expand, qpoch


def lift(e: OrderedElement, order: int, q=None) -> OrderedElement:
    """Normal-ordered copy of ``e`` with every coefficient a :class:`TSeries`."""
    if e.order != NORMAL:
        if q is None:
            raise ValueError("q is needed to reorder an anti-normal element")
        e = to_normal(e, q)
    out = {}
    for k, v in e.items():
        if isinstance(v, TSeries):
            if v.order != order:
                raise ValueError(f"coefficient order {v.order} != {order}")
            out[k] = v
        else:
            out[k] = TSeries.constant(v, order)
    return OrderedElement(out, NORMAL)


#: A polynomial whose coefficients are truncated power series in ``t``.
FormalElement = OrderedElement


@dataclass(frozen=True, eq=False)
class QImage:
    """Operator image of a formal element, with the element it came from."""

    matrix: OpMatrix
    source: OrderedElement


@lru_cache(maxsize=None)
def _binomial_weight(q, k: int, m: int, order: int) -> TSeries:
    """``1 / (t q^{2m}; q^-2)_k`` as ``sum_n (q^{2k}; q^2)_n / (q^2; q^2)_n q^{2(m-k+1)n} t^n``."""
    q2 = q * q
    return qbinom_expand(q2**k, q, order).dilate(q2 ** (m - k + 1))


def q_image(f: OrderedElement, q, order: int, M: int) -> QImage:
    """``Q(f)`` with ``M`` exact columns: ``z^j z*^k`` sends ``z^m`` to
    ``(q^{2m}; q^-2)_k / (t q^{2m}; q^-2)_k z^{m-k+j}`` with the denominator
    expanded as a q-binomial series."""
    q = exact(q)
    q2 = q * q
    f = lift(f, order, q)
    e: dict = {}
    for (j, k), a in f.items():
        for m in range(k, M):
            w = qfall(q2, m, k)
            if w == 0:
                continue
            key = (m - k + j, m)
            v = a * (_binomial_weight(q, k, m, order) * w)
            e[key] = e[key] + v if key in e else v
    return QImage(OpMatrix(e, M, f.offsets()), f)


def _degrees(f: OrderedElement) -> tuple:
    js = [j for j, _ in f.coeffs] or [0]
    ks = [k for _, k in f.coeffs] or [0]
    return max(js), max(ks)


def star_operator_route(f1: OrderedElement, f2: OrderedElement, q, order: int,
                        max_deg: int | None = None, retries: int = 2) -> OrderedElement:
    """``f1 * f2`` from ``Q(f1 * f2) = Q(f1) Q(f2)``.

    The product's ``z*``-degree is bounded by ``max_deg`` (default: the sum of
    both degrees plus the series order); the solve is strict, and an
    inconsistent residual triggers a bounded number of enlargements before
    :class:`TruncationTooSmall` is raised.
    """
    q = exact(q)
    f1, f2 = lift(f1, order, q), lift(f2, order, q)
    if f1.is_zero() or f2.is_zero():
        return OrderedElement({})
    j1, k1 = _degrees(f1)
    j2, k2 = _degrees(f2)
    K = max_deg if max_deg is not None else j1 + k1 + j2 + k2 + order
    space = WeightedSpace.formal(q, order, M=2)
    for _ in range(retries + 1):
        cols = 3 * K + 4
        hi2 = max(f2.offsets()[1], 0)
        Q2 = q_image(f2, q, order, cols).matrix
        Q1 = q_image(f1, q, order, cols + hi2).matrix
        P = Q1 @ Q2
        try:
            coeffs = hat_normal_order(HatOperator(P, space), K, strict=True)
        except SolveInconsistent:
            K = 2 * K + 1
            continue
        return OrderedElement(coeffs.coeffs, NORMAL)
    raise TruncationTooSmall(f"star product needs z*-degree beyond {K}", needed=K + 1)


# ---------------------------------------------------------------------------
# The c-series
# ---------------------------------------------------------------------------


def c_series_solve(K: int, q, order: int) -> list:
    """``c_0..c_K`` from ``sum_k c_k w_k(m) = (1-q^{2(m+1)})/(1-t q^{2(m+1)})``,
    ``m = 0..K`` (lower triangular since ``w_k(m) = 0`` for ``k > m``)."""
    space = WeightedSpace.formal(q, order, M=2)
    q2 = space.q2
    t = space.t
    cs = []
    for m in range(K + 1):
        rhs = (1 - q2 ** (m + 1)) * (1 - t * q2 ** (m + 1)).invert()
        for k, c in enumerate(cs):
            rhs = rhs - c * hat_weight(k, m, space)
        cs.append(rhs / hat_weight(m, m, space))
    return cs


def _poly_mul(a: list, b: list, zero) -> list:
    out = [zero] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def c_series_closed_form(K: int, q, order: int) -> list:
    """Coefficients of ``u^k`` in

        c(u) = 1 + sum_{j>=1} (t^j - t^{j-1}) q^{2j} (u; q^2)_j / (t q^2 u; q^2)_j,

    with ``1/(x; q^2)_j = sum_s (q^{2j}; q^2)_s / (q^2; q^2)_s x^s``."""
    q2 = exact(q) ** 2
    t = TSeries.variable(order)
    zero = TSeries.constant(0, order)
    total = [TSeries.constant(1, order)]
    for j in range(1, order + 2):
        num = [TSeries.constant(1, order)]
        for i in range(j):
            num = _poly_mul(num, [TSeries.constant(1, order), TSeries.constant(-(q2**i), order)], zero)
        inv = []
        for s in range(order + 1):
            coef = qpoch(q2**j, q2, s) / qpoch(q2, q2, s) * q2**s
            inv.append(t**s * coef)
        term = _poly_mul(num, inv, zero)
        pref = (t**j - t ** (j - 1)) * q2**j
        term = [pref * x for x in term]
        n = max(len(total), len(term))
        total = [
            (total[i] if i < len(total) else zero) + (term[i] if i < len(term) else zero)
            for i in range(n)
        ]
    total = total + [zero] * (K + 1 - len(total))
    return total[: K + 1]


def c_series(K: int, q, order: int) -> list:
    """``c_0..c_K`` by the triangular solve, cross-checked against the closed form."""
    solved = c_series_solve(K, q, order)
    closed = c_series_closed_form(K, q, order)
    for k, (a, b) in enumerate(zip(solved, closed)):
        if a != b:
            raise CrossCheckFailed(f"c_{k}: solve gives {a}, closed form gives {b}")
    return solved


# ---------------------------------------------------------------------------
# Asymptotic route
# ---------------------------------------------------------------------------


def star_asymptotic_route(f1: OrderedElement, f2: OrderedElement, q, order: int,
                          convention: ConventionSet = CALIBRATED) -> OrderedElement:
    """``(1-t) sum_{j<=order} t^j m(p_j(box~) f1 (x) f2)`` with ``p_j(box~)``
    expanded into powers of the bidifferential operator."""
    q = exact(q)
    T = TensorElement.from_pair(lift(f1, order, q), lift(f2, order, q), q)
    powers = [T]
    for _ in range(order):
        powers.append(box_tilde(powers[-1], convention, q))
    products = [multiply_tensor(P, q) for P in powers]
    t = TSeries.variable(order)
    total = OrderedElement({})
    for j in range(order + 1):
        pj = p_poly(j, q)
        layer = OrderedElement({})
        for i, c in enumerate(pj.coeffs):
            if c != 0 and i < len(products):
                layer = layer + products[i].scale(c)
        total = total + layer.scale((1 - t) * t**j)
    return total


@dataclass
class RouteReport:
    """Outcome of comparing the two star-product routes."""

    equal: bool
    mismatches: list = field(default_factory=list)


def compare_elements(lhs: OrderedElement, rhs: OrderedElement, order: int) -> RouteReport:
    """Coefficientwise comparison; mismatches are ``(t_order, monomial, lhs, rhs)``."""
    zero = TSeries.constant(0, order)
    bad = []
    for key in sorted(set(lhs.coeffs) | set(rhs.coeffs)):
        a = lhs.coeffs.get(key, zero)
        b = rhs.coeffs.get(key, zero)
        a = a if isinstance(a, TSeries) else TSeries.constant(a, order)
        b = b if isinstance(b, TSeries) else TSeries.constant(b, order)
        for n in range(order + 1):
            if a[n] != b[n]:
                bad.append((n, key, a[n], b[n]))
    bad.sort(key=lambda r: (r[0], r[1]))
    return RouteReport(not bad, bad)


def compare_routes(f1: OrderedElement, f2: OrderedElement, q, order: int,
                   convention: ConventionSet = CALIBRATED,
                   max_deg: int | None = None) -> RouteReport:
    """Exact comparison of the operator and asymptotic routes for ``f1 * f2``."""
    lhs = star_asymptotic_route(f1, f2, q, order, convention)
    rhs = star_operator_route(f1, f2, q, order, max_deg)
    return compare_elements(lhs, rhs, order)


def probe_pairs(q) -> list:
    """``z* z``, ``z*^2 z``, ``z* z^2`` and ``(z z*)(z* z)`` as factor pairs."""
    m = OrderedElement.monomial
    zsz = OrderedElement({(1, 1): mpq(1)}, "anti_normal")
    return [
        (m(0, 1), m(1, 0)),
        (m(0, 2), m(1, 0)),
        (m(0, 1), m(2, 0)),
        (m(1, 1), to_normal(zsz, q)),
    ]


def calibration_table(q, order: int = 2) -> dict:
    """Number of mismatching coefficients for each convention on the probes."""
    order = min(order, 2)
    q = exact(q)
    oracle = [star_operator_route(a, b, q, order) for a, b in probe_pairs(q)]
    table = {}
    for conv in ConventionSet.all():
        bad = 0
        for (a, b), rhs in zip(probe_pairs(q), oracle):
            lhs = star_asymptotic_route(a, b, q, order, conv)
            bad += len(compare_elements(lhs, rhs, order).mismatches)
        table[conv.name] = bad
    return table


def calibrate_convention(q, order: int = 2) -> ConventionSet:
    """The unique convention under which both routes agree on the probes."""
    table = calibration_table(q, order)
    matches = [name for name, bad in sorted(table.items()) if bad == 0]
    if not matches:
        raise NoConventionMatches("no derivative convention reproduces the operator route", table)
    if len(matches) > 1:
        raise AmbiguousConvention("several conventions reproduce the operator route", matches)
    return ConventionSet.parse(matches[0])


__all__ = [
    "FormalElement",
    "QImage",
    "RouteReport",
    "c_series",
    "c_series_closed_form",
    "c_series_solve",
    "calibrate_convention",
    "calibration_table",
    "compare_elements",
    "compare_routes",
    "lift",
    "probe_pairs",
    "q_image",
    "star_asymptotic_route",
    "star_operator_route",
]
