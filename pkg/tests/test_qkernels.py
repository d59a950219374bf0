import random

import pytest
from gmpy2 import mpq

from qdisc.discrep import MixedElement, RadialElement
from qdisc.errors import MismatchWithGram
from qdisc.qkernels import (
    HalfIntWeight,
    pfp_kernel,
    pfp_kernel_pair,
    pfp_matrix_element_failures,
    project_kernel,
    repro_kernel_coeffs,
)


def test_weight_validation(q):
    with pytest.raises(ValueError):
        HalfIntWeight(0, q)
    assert HalfIntWeight(2, q).t == q**4


def test_repro_kernel_coeffs(q):
    assert repro_kernel_coeffs(HalfIntWeight(1, q), 0) == [1]
    assert repro_kernel_coeffs(HalfIntWeight(1, q), 1)[1] == mpq(5, 4)


def test_project_kernel_f0(q):
    w = HalfIntWeight(1, q)
    assert project_kernel(RadialElement([1]), w) == [1 - w.t]


def test_project_kernel_z_f0(q):
    w = HalfIntWeight(2, q)
    coeffs = project_kernel(MixedElement({(1, 0, 0): 1}), w)
    assert coeffs[0] == 0 and coeffs[1] != 0


def test_project_kernel_detects_mismatch(monkeypatch, q):
    import qdisc.qkernels as qk

    monkeypatch.setattr(qk, "project_gram", lambda f, space, degree: [mpq(0)] * (degree + 1))
    with pytest.raises(MismatchWithGram):
        qk.project_kernel(RadialElement([1]), HalfIntWeight(1, q))


@pytest.mark.parametrize("two_alpha", [1, 2, 3])
def test_kernel_routes_agree(two_alpha, q):
    rng = random.Random(two_alpha)
    w = HalfIntWeight(two_alpha, q)
    for _ in range(4):
        f = MixedElement({(rng.randint(0, 2), rng.randint(0, 2), rng.randint(0, 2)): mpq(rng.randint(-3, 3), 2) for _ in range(3)})
        pair = pfp_kernel_pair(f, w, 4)
        assert pair.moments == pair.coherent
        assert pfp_matrix_element_failures(f, w, 4) == []


def test_kernel_of_f0_and_zero(q):
    w = HalfIntWeight(1, q)
    assert pfp_kernel(RadialElement([1]), w, 3) == {(0, 0): 1 - w.t}
    assert pfp_kernel(MixedElement({}), w, 3) == {}


def test_kernel_symmetry_for_self_adjoint(q):
    w = HalfIntWeight(2, q)
    f = MixedElement({(0, 1, 0): 1, (1, 0, 1): 2, (1, 0, 0): 1, (0, 0, 1): 1})
    K = pfp_kernel(f, w, 3)
    assert any(r != s for r, s in K)
    from qdisc.discrep import adjoint, to_matrix

    F = to_matrix(f, q=q)
    Fs = adjoint(F, q)
    assert F == Fs
    assert all(K.get((r, s), 0) == v for (s, r), v in K.items())
