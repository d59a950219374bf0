"""Covariant symbols, the quantized trace and the Berezin transform.

Two independent routes produce the covariant symbol of an operator:

* ``"trace"`` pairs the operator with the rank-one kernel family and expands
  ``(1 - zz*)^{2 alpha + 1}`` over the radial units ``f_n``, giving a
  :class:`SymbolExpansion` in the terms ``z^j f_n z*^k``;
* ``"normal"`` normal-orders the operator over ``zhat``, ``zhat*`` and reads
  the same coefficients on ``z``, ``z*``.

The closed-form kernel of the Berezin transform is not implemented; only the
exact algebraic routes above are.
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpq

from .bergman import HatOperator, WeightedSpace, hat_normal_order, inv_gram, toeplitz
from .discrep import (
    NORMAL,
    MixedElement,
    OpMatrix,
    OrderedElement,
    RadialElement,
    integrate,
    radial_from_matrix,
    to_matrix,
)
from .errors import NotFinite, TruncationTooSmall
from .qscalar import TSeries, box_eigenvalue, exact, phi32_terminating, qpoch

#: Truncation in ``n`` of the radial series in the trace route at numeric ``t``.
DEFAULT_NF = 24

#: ``sum a z^j f_n z*^k``; ``n_max`` records the exact-column bound of a truncation.
SymbolExpansion = MixedElement


def _matrix_of(op) -> OpMatrix:
    return op.matrix if isinstance(op, HatOperator) else op


def trace_q(op):
    """``tr_q(A) = sum_k a_kk q^{-2k}`` for a finitely supported operator."""
    if isinstance(op, HatOperator):
        A, q2 = op.matrix, op.space.q2
    else:
        raise TypeError("trace_q needs a HatOperator (its space fixes q)")
    if not A.finite:
        raise NotFinite("tr_q of an operator with unbounded support")
    total = mpq(0)
    for (r, c), v in A.items():
        if r == c:
            total = total + v * q2 ** (-r)
    return total


def covariant_symbol(op: HatOperator, space: WeightedSpace | None = None,
                     route: str = "trace", n_max: int | None = None,
                     max_deg: int | None = None):
    """Covariant symbol of ``op``.

    ``route="trace"`` returns a :class:`SymbolExpansion`; the coefficient of
    ``z^j f_n z*^m`` is ``a_jm (q^2 t; q^2)_m / (q^2; q^2)_m t^n q^{2n}``.
    At formal ``t`` the radial series terminates, so the expansion is complete
    whenever the operator is finite; otherwise it is exact on matrix columns
    ``<= n_max``.

    ``route="normal"`` returns the normal-ordered :class:`OrderedElement`
    whose coefficients are those of ``op`` over ``zhat``, ``zhat*``, exact for
    ``z*``-degree ``<= max_deg``.
    """
    space = space or op.space
    A = _matrix_of(op)
    if route == "normal":
        if max_deg is None:
            max_deg = (A.max_index() if A.finite else A.cols - 1)
        el = hat_normal_order(HatOperator(A, space), max_deg, strict=False)
        return OrderedElement(el.coeffs, NORMAL, el.exact_below)
    if route != "trace":
        raise ValueError(f"unknown route {route!r}")
    q2, t = space.q2, space.t
    if space.is_formal:
        top = t.order if n_max is None else min(n_max, t.order)
        complete = n_max is None or n_max >= t.order
    else:
        top = DEFAULT_NF if n_max is None else n_max
        complete = False
    exact_cols = None
    if not A.finite:
        exact_cols = A.cols
    if not complete:
        exact_cols = top + 1 if exact_cols is None else min(exact_cols, top + 1)
    if exact_cols is not None and exact_cols < 1:
        raise TruncationTooSmall("no exact columns in the symbol", needed=1)
    radial = [(t * q2) ** n for n in range(top + 1)]
    terms: dict = {}
    for (j, m), a in A.items():
        base = a * inv_gram(m, space)
        for n, r in enumerate(radial):
            if exact_cols is not None and m + n >= exact_cols:
                break
            terms[(j, n, m)] = base * r
    return SymbolExpansion(terms, None if exact_cols is None else exact_cols - 1)


def berezin(f, space: WeightedSpace, route: str = "trace", n_max: int | None = None,
            max_deg: int | None = None, M: int | None = None):
    """Berezin transform: the covariant symbol of the Toeplitz operator of ``f``."""
    return covariant_symbol(toeplitz(f, space, M), space, route, n_max, max_deg)


def symbol_matrix(symbol, space: WeightedSpace, M: int | None = None) -> OpMatrix:
    """Matrix of a symbol from either route."""
    if isinstance(symbol, OrderedElement):
        return to_matrix(symbol, M or space.M, space.q)
    return to_matrix(symbol, q=space.q)


def routes_agree(op: HatOperator, space: WeightedSpace | None = None, cols: int = 6) -> bool:
    """Compare the two symbol routes on their common exact columns."""
    space = space or op.space
    s1 = covariant_symbol(op, space, "trace", n_max=cols)
    s2 = covariant_symbol(op, space, "normal", max_deg=cols)
    A = symbol_matrix(s1, space)
    B = symbol_matrix(s2, space, cols + 1)
    return A.equal_on(B, cols + 1)


def duality_sides(f, psi, space: WeightedSpace):
    """Both sides of ``int B(f) psi dnu = (1-q^2)/(1-t) tr_q(fhat psihat)``
    for finite ``f`` and ``psi``."""
    Psi = to_matrix(psi, q=space.q) if not isinstance(psi, OpMatrix) else psi
    fhat = toeplitz(f, space)
    need = Psi.max_row() + 1
    B = symbol_matrix(berezin(f, space, "trace", n_max=max(need, 1)), space)
    lhs = integrate(B @ Psi, space.q)
    rhs = (1 - space.q2) / (1 - space.t) * trace_q(fhat @ toeplitz(psi, space))
    return lhs, rhs


# ---------------------------------------------------------------------------
# The polynomials p_j
# ---------------------------------------------------------------------------


def _pmul(a: list, b: list) -> list:
    out = [mpq(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _padd(a: list, b: list) -> list:
    n = max(len(a), len(b))
    a = a + [mpq(0)] * (n - len(a))
    b = b + [mpq(0)] * (n - len(b))
    return [x + y for x, y in zip(a, b)]


def _ptrim(a: list) -> tuple:
    a = list(a)
    while len(a) > 1 and a[-1] == 0:
        a.pop()
    return tuple(a)


@dataclass(frozen=True)
class PPoly:
    """Exact polynomial in the Laplacian slot ``X``; ``coeffs[i]`` multiplies ``X^i``."""

    j: int
    coeffs: tuple

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        x = x if isinstance(x, TSeries) else exact(x)
        acc = mpq(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __sub__(self, other: "PPoly") -> "PPoly":
        return PPoly(self.j, _ptrim(_padd(list(self.coeffs), [-c for c in other.coeffs])))


def p_poly(j: int, q) -> PPoly:
    """``p_j(X) = sum_{k<=j} (q^{-2j}; q^2)_k / (q^2; q^2)_k^2 q^{2k}
    prod_{i<k} (1 - q^{2i}((1-q^2)^2 X + 1 + q^2) + q^{4i+2})``."""
    if j < 0:
        raise ValueError("j must be >= 0")
    q2 = exact(q) ** 2
    total = [mpq(0)]
    prod = [mpq(1)]
    for k in range(j + 1):
        c = qpoch(q2 ** (-j), q2, k) / qpoch(q2, q2, k) ** 2 * q2**k
        total = _padd(total, [c * x for x in prod])
        i = k
        factor = [1 - q2**i * (1 + q2) + q2 ** (2 * i + 1), -(q2**i) * (1 - q2) ** 2]
        prod = _pmul(prod, factor)
    return PPoly(j, _ptrim(total))


def expansion_coeffs(n: int, q) -> PPoly:
    """Coefficient of ``t^n`` in the Berezin expansion: 1 for ``n = 0``,
    otherwise ``p_n - p_{n-1}``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return PPoly(0, (mpq(1),))
    d = p_poly(n, q) - p_poly(n - 1, q)
    return PPoly(n, d.coeffs)


def hypergeometric_failures(q, jmax: int = 12, lmax: int = 12) -> list:
    """Pairs ``(j, l)`` where ``p_j`` at the Laplacian eigenvalue of the
    spherical function with ``s = q^{2l}`` differs from the terminating
    hypergeometric sum with parameters ``q^{-2l}``, ``q^{2(l+1)}``."""
    q = exact(q)
    q2 = q * q
    bad = []
    polys = [p_poly(j, q) for j in range(jmax + 1)]
    for l in range(lmax + 1):
        x = box_eigenvalue(q2**l, q)
        for j, p in enumerate(polys):
            if p(x) != phi32_terminating(j, q2 ** (-l), q2 ** (l + 1), q):
                bad.append((j, l))
    return bad


def berezin_radial(f, space: WeightedSpace, n_f: int, route: str = "trace") -> list:
    """Radial coefficients ``r_0..r_{n_f}`` of the Berezin transform of a radial ``f``."""
    if route == "trace":
        sym = berezin(f, space, "trace", n_max=n_f)
        A = symbol_matrix(sym, space)
    else:
        sym = berezin(f, space, "normal", max_deg=n_f)
        A = symbol_matrix(sym, space, n_f + 1)
    return list(radial_from_matrix(A, upto=n_f).coeffs)


def expansion_check_f0(q, order: int, n_f: int) -> bool:
    """Whether the Berezin transform of ``f_0`` equals
    ``(1-t) sum_j t^j q^{2j} f_j`` through ``t^order`` and ``f_{n_f}``,
    via both symbol routes."""
    space = WeightedSpace.formal(q, order, M=max(n_f + 2, 2))
    t, q2 = space.t, space.q2
    expected = [(1 - t) * (t * q2) ** n for n in range(n_f + 1)]
    f0 = RadialElement([mpq(1)])
    for route in ("trace", "normal"):
        got = berezin_radial(f0, space, n_f, route)
        got = got + [TSeries.constant(0, order)] * (n_f + 1 - len(got))
        if any(g != e for g, e in zip(got, expected)):
            return False
    return True


__all__ = [
    "DEFAULT_NF",
    "PPoly",
    "SymbolExpansion",
    "berezin",
    "berezin_radial",
    "covariant_symbol",
    "duality_sides",
    "expansion_check_f0",
    "expansion_coeffs",
    "hypergeometric_failures",
    "p_poly",
    "routes_agree",
    "symbol_matrix",
    "trace_q",
]
