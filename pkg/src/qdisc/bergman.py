"""Weighted Bergman space on the quantum disc and its Toeplitz operators.

The space is spanned by the holomorphic monomials ``z^m`` with Gram data

    (z^m, z^l) = delta_ml (q^2; q^2)_m / (q^2 t; q^2)_m,

where ``t = q^{4 alpha}`` is an exact rational in (0, 1) or a formal series
variable.  Operators are :class:`~qdisc.discrep.OpMatrix` objects in the
(unnormalised) basis ``z^m``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from gmpy2 import mpq

from .discrep import (
    NORMAL,
    MixedElement,
    OpMatrix,
    OrderedElement,
    RadialElement,
    adjoint,
    integrate,
    ordered_matrix,
    ordered_solve,
    qfall,
    radial_power,
    to_anti_normal,
    to_matrix,
    trace,
)
from .errors import InvertNonUnit, NotFinite
from .qscalar import TSeries, exact, qpoch


@dataclass(frozen=True)
class WeightedSpace:
    """The Hilbert space of holomorphic functions at weight parameter ``t``.

    ``M`` is the default number of exact columns kept for infinite operators.
    """

    q: object
    t: object
    M: int = 32

    def __post_init__(self):
        q = exact(self.q)
        if not 0 < q < 1:
            raise ValueError(f"q must lie in (0, 1), got {q}")
        object.__setattr__(self, "q", q)
        if isinstance(self.t, TSeries):
            if self.t != TSeries.variable(self.t.order):
                raise ValueError("a formal weight must be the series variable t itself")
        else:
            t = exact(self.t)
            if not 0 < t < 1:
                raise ValueError(f"t must lie in (0, 1), got {t}")
            object.__setattr__(self, "t", t)
        if self.M < 2:
            raise ValueError("M must be >= 2")

    @classmethod
    def formal(cls, q, order: int, M: int = 32) -> "WeightedSpace":
        return cls(q, TSeries.variable(order), M)

    @property
    def is_formal(self) -> bool:
        return isinstance(self.t, TSeries)

    @property
    def q2(self):
        return self.q * self.q

    @property
    def one(self):
        return TSeries.constant(1, self.t.order) if self.is_formal else mpq(1)


def _one_minus_unit(x):
    """``1 / x`` with the unit check required for series denominators."""
    if isinstance(x, TSeries):
        if x[0] == 0:
            raise InvertNonUnit("denominator is not a unit in the series ring")
        return x.invert()
    return mpq(1) / x


def gram(m: int, space: WeightedSpace):
    """``||z^m||^2 = (q^2; q^2)_m / (q^2 t; q^2)_m``."""
    if m < 0:
        raise ValueError("m must be >= 0")
    q2 = space.q2
    return qpoch(q2, q2, m) * _one_minus_unit(qpoch(space.t * q2, q2, m))


def inv_gram(m: int, space: WeightedSpace):
    """``(q^2 t; q^2)_m / (q^2; q^2)_m``."""
    q2 = space.q2
    return qpoch(space.t * q2, q2, m) / qpoch(q2, q2, m)


@lru_cache(maxsize=None)
def _hat_weight(q2, t, k: int, m: int):
    num = qfall(q2, m, k)
    if num == 0:
        return mpq(0)
    den = mpq(1)
    for i in range(k):
        den = den * (1 - t * q2 ** (m - i))
    return num * _one_minus_unit(den)


def hat_weight(k: int, m: int, space: WeightedSpace):
    """``(q^{2m}; q^-2)_k / (t q^{2m}; q^-2)_k``: the action of
    ``zhat^j zhat*^k`` on ``z^m`` is this weight times ``z^{m-k+j}``."""
    return _hat_weight(space.q2, space.t, k, m)


@dataclass(frozen=True, eq=False)
class HatOperator:
    """An operator on the holomorphic monomials, optionally with its
    normal-ordered expansion over ``zhat``, ``zhat*``."""

    matrix: OpMatrix
    space: WeightedSpace
    normal: OrderedElement | None = None

    def __matmul__(self, other: "HatOperator") -> "HatOperator":
        return HatOperator(self.matrix @ other.matrix, self.space)

    def __add__(self, other: "HatOperator") -> "HatOperator":
        return HatOperator(self.matrix + other.matrix, self.space)

    def __sub__(self, other: "HatOperator") -> "HatOperator":
        return HatOperator(self.matrix - other.matrix, self.space)

    def scale(self, s) -> "HatOperator":
        return HatOperator(self.matrix.scale(s), self.space)

    def entry(self, r: int, c: int):
        return self.matrix.entry(r, c)

    def adjoint(self) -> "HatOperator":
        """Adjoint with respect to the weighted inner product."""
        A = self.matrix
        lo, hi = A.band
        sp = self.space
        if A.finite:
            return HatOperator(
                OpMatrix({(c, r): v * gram(r, sp) * inv_gram(c, sp) for (r, c), v in A.items()}),
                sp,
            )
        cols = max(0, A.cols + lo)
        e = {(c, r): v * gram(r, sp) * inv_gram(c, sp) for (r, c), v in A.items() if r < cols}
        return HatOperator(OpMatrix(e, cols, (-hi, -lo)), sp)


def hat_generators(space: WeightedSpace, M: int | None = None):
    """``(zhat, zhat*)``: the shift and its adjoint."""
    M = M or space.M
    if M < 2:
        raise ValueError("M must be >= 2")
    z = OpMatrix({(m + 1, m): mpq(1) for m in range(M)}, M, (1, 1))
    zs = OpMatrix(
        {(m - 1, m): hat_weight(1, m, space) for m in range(1, M)}, M, (-1, -1)
    )
    return HatOperator(z, space), HatOperator(zs, space)


def hat_matrix(coeffs: OrderedElement, space: WeightedSpace, M: int | None = None) -> OpMatrix:
    """Matrix of ``sum a_jk zhat^j zhat*^k`` with ``M`` exact columns."""
    M = M or space.M
    if coeffs.order != NORMAL:
        raise ValueError("hat_matrix expects normal-ordered coefficients")
    if coeffs.exact_below is not None:
        M = min(M, coeffs.exact_below)
    return ordered_matrix(coeffs.coeffs, lambda k, m: hat_weight(k, m, space), M, coeffs.offsets())


def hat_apply(coeffs: OrderedElement, n: int, space: WeightedSpace) -> dict:
    """Column ``n`` of the operator with normal-ordered coefficients ``a``:

        b_mn = sum_{j <= min(m, n)} w_{n-j}(n) a_{m-j, n-j}.
    """
    a = coeffs.coeffs
    out = {}
    rows = {j - k + n for j, k in a if k <= n}
    for m in sorted(r for r in rows if r >= 0):
        acc = 0
        for j in range(min(m, n) + 1):
            c = a.get((m - j, n - j))
            if c is not None:
                acc = acc + hat_weight(n - j, n, space) * c
        if not (acc == 0):
            out[m] = acc
    return out


def hat_normal_order(op, max_deg: int, strict: bool = False) -> OrderedElement:
    """Unique normal-ordered expansion over ``zhat``, ``zhat*`` up to
    ``zhat*``-degree ``max_deg``."""
    A = op.matrix
    sp = op.space
    coeffs = ordered_solve(A, lambda k, m: hat_weight(k, m, sp), max_deg, strict)
    return OrderedElement(coeffs, NORMAL, None if strict else max_deg + 1)


# ---------------------------------------------------------------------------
# Toeplitz operators
# ---------------------------------------------------------------------------


def _finite_matrix(symbol, q) -> OpMatrix:
    if isinstance(symbol, OpMatrix):
        F = symbol
    elif isinstance(symbol, (MixedElement, RadialElement)):
        F = to_matrix(symbol, q=q)
    else:
        raise NotFinite(f"{type(symbol).__name__} is not a finite symbol")
    if not F.finite:
        raise NotFinite("symbol has unbounded matrix support")
    return F


def _sandwich(j: int, m: int, space: WeightedSpace, size: int, middle) -> OpMatrix:
    """``T(z^j) D T(z*^m)`` restricted to ``size`` exact columns."""
    q = space.q
    cols = size + m + 1
    Zs = to_matrix(OrderedElement({(0, m): mpq(1)}), cols, q)
    right = middle(cols + 1) @ Zs
    reach = right.max_row() + 1 if right.finite else cols + 1
    Zj = to_matrix(OrderedElement({(j, 0): mpq(1)}), max(reach, cols) + j + 1, q)
    return Zj @ right


def toeplitz_trace_form(F: OpMatrix, space: WeightedSpace) -> dict:
    """Matrix entries ``(m, j)`` via

        fhat_mj = (q^2 t; q^2)_m / (q^2; q^2)_m (1 - t) tr(T(z^j (1-zz*)^{2alpha} z*^m) T(f)).
    """
    F = _finite_matrix(F, space.q)
    S = F.max_index()
    out = {}
    for m in range(S + 1):
        for j in range(S + 1):
            X = _sandwich(j, m, space, S + 1, lambda M: radial_power(space.t, M))
            v = trace(X @ F)
            v = v * (1 - space.t) * inv_gram(m, space)
            if not (v == 0):
                out[(m, j)] = v
    return out


def toeplitz_integral_form(F: OpMatrix, space: WeightedSpace) -> dict:
    """Matrix entries via the invariant integral of the kernel

        P_{z,mj} = c_m q^{2j} z^j (1-zz*)^{2alpha+1} z*^m,

    against ``f``, scaled by ``(1-t)/(1-q^2)``."""
    F = _finite_matrix(F, space.q)
    S = F.max_index()
    q2, t = space.q2, space.t
    out = {}
    for m in range(S + 1):
        for j in range(S + 1):
            X = _sandwich(j, m, space, S + 1, lambda M: radial_power(t * q2, M))
            v = integrate(X @ F, space.q) * inv_gram(m, space) * q2**j
            v = v * (1 - t) / (1 - q2)
            if not (v == 0):
                out[(m, j)] = v
    return out


def toeplitz_left_integral_form(F: OpMatrix, space: WeightedSpace) -> dict:
    """As :func:`toeplitz_integral_form`, with the extra ``(1 - zz*)`` placed
    on the far left instead of inside the kernel."""
    F = _finite_matrix(F, space.q)
    S = F.max_index()
    q2, t = space.q2, space.t
    out = {}
    for m in range(S + 1):
        for j in range(S + 1):
            X = _sandwich(j, m, space, S + 1, lambda M: radial_power(t, M))
            D = radial_power(q2, X.max_index() + 2 if X.finite else X.cols + j + 2)
            v = integrate(D @ (X @ F), space.q) * inv_gram(m, space)
            v = v * (1 - t) / (1 - q2)
            if not (v == 0):
                out[(m, j)] = v
    return out


def toeplitz_gram_form(F: OpMatrix, space: WeightedSpace) -> dict:
    """Matrix entries from the definition ``(f z^j, z^m) / (z^m, z^m)``."""
    F = _finite_matrix(F, space.q)
    S = F.max_index()
    q = space.q
    out = {}
    for m in range(S + 1):
        for j in range(S + 1):
            Zj = to_matrix(OrderedElement({(j, 0): mpq(1)}), S + 2, q)
            Zm = to_matrix(OrderedElement({(m, 0): mpq(1)}), S + 2 * m + 4, q)
            FZ = F @ Zj
            inner = integrate(adjoint(Zm, q) @ FZ, q, "weighted", space.t)
            v = inner * inv_gram(m, space)
            if not (v == 0):
                out[(m, j)] = v
    return out


@lru_cache(maxsize=None)
def _antinormal_hat_column(q2, t, j: int, k: int, m: int):
    """``zhat*^j zhat^k z^m = w z^{m+k-j}``; returns ``w``."""
    w = mpq(1)
    p = m + k
    for i in range(j):
        num = 1 - q2 ** (p - i)
        if num == 0:
            return mpq(0)
        w = w * num * _one_minus_unit(1 - t * q2 ** (p - i))
    return w


def toeplitz(symbol, space: WeightedSpace, M: int | None = None) -> HatOperator:
    """Toeplitz operator of a finite or polynomial symbol.

    Finite symbols use the trace formula; a polynomial is first written in
    anti-normal order and each ``z*^j z^k`` becomes ``zhat*^j zhat^k``.
    """
    if isinstance(symbol, OrderedElement):
        if symbol.exact_below is not None:
            raise NotFinite("a truncated expansion is not a polynomial symbol")
        M = M or space.M
        anti = to_anti_normal(symbol, space.q)
        e: dict = {}
        for (j, k), a in anti.items():
            for m in range(M):
                if m + k - j < 0:
                    continue
                w = _antinormal_hat_column(space.q2, space.t, j, k, m)
                if w == 0:
                    continue
                key = (m + k - j, m)
                v = a * w
                e[key] = e[key] + v if key in e else v
        return HatOperator(OpMatrix(e, M, anti.offsets()), space)
    F = _finite_matrix(symbol, space.q)
    entries = {(m, j): v for (m, j), v in toeplitz_trace_form(F, space).items()}
    return HatOperator(OpMatrix(entries), space)


def f0hat_identity_check(j: int, space: WeightedSpace) -> bool:
    """Whether ``sum_k (t^-1 q^-2; q^2)_k/(q^2; q^2)_k w_k(j) (t q^2)^k = delta_j0``.

    At numeric ``t`` the sum is evaluated literally; for formal ``t`` the
    factor ``(t q^2)^k (t^-1 q^-2; q^2)_k`` is used in its polynomial form
    ``prod_{i<k} (t q^2 - q^{2i})``.
    """
    if j < 0:
        raise ValueError("j must be >= 0")
    q2, t = space.q2, space.t
    total = 0
    for k in range(j + 1):
        if space.is_formal:
            lead = 1
            for i in range(k):
                lead = lead * (t * q2 - q2**i)
        else:
            lead = qpoch(1 / (t * q2), q2, k) * (t * q2) ** k
        total = total + lead / qpoch(q2, q2, k) * hat_weight(k, j, space)
    return total == (1 if j == 0 else 0)


def project_gram(f, space: WeightedSpace, degree: int | None = None) -> list:
    """Coefficients of the orthogonal projection of a finite ``f`` onto the
    holomorphic monomials: ``(f, z^s) / (z^s, z^s)`` for ``s <= degree``."""
    F = _finite_matrix(f, space.q)
    degree = F.max_index() if degree is None else degree
    q = space.q
    out = []
    for s in range(degree + 1):
        Zs = to_matrix(OrderedElement({(s, 0): mpq(1)}), F.max_index() + 2 * s + 4, q)
        inner = integrate(adjoint(Zs, q) @ F, q, "weighted", space.t)
        out.append(inner * inv_gram(s, space))
    return out


def hat_relation_residual(space: WeightedSpace, M: int | None = None) -> OpMatrix:
    """``zhat* zhat - q^2 zhat zhat* - (1-q^2) - t(1-q^2)/(1-t) (1-zhat zhat*)(1-zhat* zhat)``,
    which vanishes identically."""
    M = M or space.M
    z, zs = hat_generators(space, M + 4)
    Z, S = z.matrix, zs.matrix
    one = OpMatrix({(m, m): mpq(1) for m in range(M + 4)}, M + 4, (0, 0))
    q2, t = space.q2, space.t
    a = one - Z @ S
    b = one - S @ Z
    R = S @ Z - (Z @ S).scale(q2) - one.scale(1 - q2) - (a @ b).scale(t * (1 - q2) / (1 - t))
    return R.restrict(M)


__all__ = [
    "HatOperator",
    "WeightedSpace",
    "f0hat_identity_check",
    "gram",
    "hat_apply",
    "hat_generators",
    "hat_matrix",
    "hat_normal_order",
    "hat_relation_residual",
    "hat_weight",
    "inv_gram",
    "project_gram",
    "toeplitz",
    "toeplitz_gram_form",
    "toeplitz_integral_form",
    "toeplitz_left_integral_form",
    "toeplitz_trace_form",
]
