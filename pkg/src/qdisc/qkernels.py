"""Reproducing kernel and the kernel of ``P f P`` at half-integer weight.

For ``2 alpha`` a positive integer, ``t = q^{2 (2 alpha)}`` is an exact power
of ``q^2`` and ``(1 - zz*)^{alpha + 1/2}`` is the exact diagonal
``q^{n (2 alpha + 1)}``, so everything stays rational.
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpq

from .bergman import WeightedSpace, gram, project_gram, toeplitz
from .discrep import (
    MixedElement,
    OpMatrix,
    OrderedElement,
    RadialElement,
    integrate,
    radial_power,
    to_matrix,
)
from .errors import FactorizationMismatch, MismatchWithGram, NotFinite
from .qscalar import exact, qpoch


@dataclass(frozen=True)
class HalfIntWeight:
    """Weight with ``2 alpha = two_alpha`` a positive integer."""

    two_alpha: int
    q: object

    def __post_init__(self):
        if not isinstance(self.two_alpha, int) or self.two_alpha < 1:
            raise ValueError("two_alpha must be a positive integer")
        q = exact(self.q)
        if not 0 < q < 1:
            raise ValueError(f"q must lie in (0, 1), got {q}")
        object.__setattr__(self, "q", q)

    @property
    def t(self):
        return self.q ** (2 * self.two_alpha)

    def space(self, M: int = 32) -> WeightedSpace:
        return WeightedSpace(self.q, self.t, M)


def repro_kernel_coeffs(w: HalfIntWeight, S: int) -> list:
    """``C_s = (q^{2(2 alpha + 1)}; q^2)_s / (q^2; q^2)_s`` for ``s <= S``: the
    q-binomial coefficients of ``(z zeta*; q^2)^{-1}_{2 alpha + 1}``."""
    q2 = w.q * w.q
    a = q2 ** (w.two_alpha + 1)
    return [qpoch(a, q2, s) / qpoch(q2, q2, s) for s in range(S + 1)]


def _finite(f, q) -> OpMatrix:
    if isinstance(f, OpMatrix):
        F = f
    elif isinstance(f, (MixedElement, RadialElement)):
        F = to_matrix(f, q=q)
    else:
        raise NotFinite(f"{type(f).__name__} is not a finite element")
    if not F.finite:
        raise NotFinite("element has unbounded support")
    return F


def _power(j: int, k: int, q, cols: int) -> OpMatrix:
    """``T(z^j z*^k)`` with ``cols`` exact columns."""
    return to_matrix(OrderedElement({(j, k): mpq(1)}), cols, q)


def project_kernel(psi, w: HalfIntWeight, degree: int | None = None) -> list:
    """Projection through the reproducing kernel: the coefficient of ``z^s``
    is ``C_s int zeta*^s psi dnu_alpha``.  Cross-checked against the Gram
    projection."""
    q, t = w.q, w.t
    F = _finite(psi, q)
    degree = F.max_index() if degree is None else degree
    C = repro_kernel_coeffs(w, degree)
    out = []
    for s in range(degree + 1):
        X = _power(0, s, q, F.max_index() + 2) @ F
        out.append(C[s] * integrate(X, q, "weighted", t))
    expected = project_gram(F, w.space(), degree)
    if out != expected:
        raise MismatchWithGram(f"kernel projection {out} != Gram projection {expected}")
    return out


@dataclass(frozen=True)
class KernelPair:
    """The ``(s, r)`` coefficient arrays of the kernel of ``P f P`` from the
    moment formula and from the coherent-vector factorisation."""

    moments: dict
    coherent: dict


def pfp_kernel(f, w: HalfIntWeight, S: int) -> dict:
    """Coefficients ``K[(s, r)]`` of ``z^s ... z'*^r`` in the kernel of ``P f P``.

    Moment route: ``C_s C_r int zeta*^s f zeta^r dnu_alpha``.
    Coherent route: ``(1-t)/(1-q^2) int k_zeta(q^2 z')* k_zeta(z) f dnu`` with
    ``k_zeta(z) = (1-zeta zeta*)^{alpha+1/2} (zeta* z; q^2)^{-1}_{2 alpha+1}``;
    the dilation ``z' -> q^2 z'`` contributes ``q^{2r}``.
    """
    return pfp_kernel_pair(f, w, S).moments


def pfp_kernel_pair(f, w: HalfIntWeight, S: int) -> KernelPair:
    q, t = w.q, w.t
    q2 = q * q
    F = _finite(f, q)
    C = repro_kernel_coeffs(w, S)
    size = F.max_index() + 2 * S + 4
    H = radial_power(q ** (w.two_alpha + 1), size)
    HH = H @ H
    moments, coherent = {}, {}
    for s in range(S + 1):
        Zs = _power(0, s, q, size)
        for r in range(S + 1):
            Zr = _power(r, 0, q, size)
            m = integrate(Zs @ F @ Zr.restrict(F.max_index() + 2), q, "weighted", t)
            m = C[s] * C[r] * m
            kern = Zr @ HH @ Zs @ F
            c = C[s] * C[r] * q2**r * (1 - t) / (1 - q2) * integrate(kern, q)
            if m != 0:
                moments[(s, r)] = m
            if c != 0:
                coherent[(s, r)] = c
    if moments != coherent:
        raise FactorizationMismatch("moment and coherent-vector kernels differ")
    return KernelPair(moments, coherent)


def pfp_matrix_element_failures(f, w: HalfIntWeight, n: int = 4) -> list:
    """Indices ``(m, j)`` where ``<P f P z^j, z^m> / ||z^m||^2`` from the
    kernel disagrees with the Toeplitz matrix entry."""
    space = w.space()
    K = pfp_kernel(f, w, n)
    T = toeplitz(_finite(f, w.q), space).matrix
    bad = []
    for m in range(n + 1):
        for j in range(n + 1):
            via_kernel = K.get((m, j), mpq(0)) * gram(j, space)
            if via_kernel != T.entry(m, j):
                bad.append((m, j))
    return bad


__all__ = [
    "HalfIntWeight",
    "KernelPair",
    "pfp_kernel",
    "pfp_kernel_pair",
    "pfp_matrix_element_failures",
    "project_kernel",
    "repro_kernel_coeffs",
]
