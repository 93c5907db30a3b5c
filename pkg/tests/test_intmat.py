from fractions import Fraction

import numpy as np
import pytest
from sympy import Matrix
from sympy.matrices.normalforms import smith_normal_form as sympy_snf

from vcmlc import intmat


def _random_int_matrix(rng, n, lo=-6, hi=7):
    while True:
        a = rng.integers(lo, hi, size=(n, n)).tolist()
        if intmat.det(a) != 0:
            return a


def test_det_and_inverse_small():
    a = [[2, 1], [1, 2]]
    assert intmat.det(a) == 3
    inv = intmat.inverse(a)
    assert inv == [[Fraction(2, 3), Fraction(-1, 3)], [Fraction(-1, 3), Fraction(2, 3)]]
    assert intmat.matmul(a, inv) == intmat.identity(2)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_det_matches_sympy(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        a = rng.integers(-5, 6, size=(n, n)).tolist()
        assert intmat.det(a) == Matrix(a).det()


def test_singular_inverse_raises():
    with pytest.raises(ValueError):
        intmat.inverse([[1, 2], [2, 4]])


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_smith_form_against_sympy(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(4):
        a = _random_int_matrix(rng, n)
        diag, U, V = intmat.smith_normal_form(a)
        want = [abs(int(x)) for x in sympy_snf(Matrix(a)).diagonal()]
        assert diag == want
        # transforms are unimodular and reproduce the diagonal exactly
        assert abs(intmat.det(U)) == 1 and abs(intmat.det(V)) == 1
        d = intmat.matmul(intmat.matmul(U, a), V)
        assert d == [[diag[i] if i == j else 0 for j in range(n)] for i in range(n)]
        assert all(diag[i + 1] % diag[i] == 0 for i in range(n - 1))


def test_smith_form_two_by_two_example():
    # basis (2,0),(1,2) inside Z^2
    diag, _, _ = intmat.smith_normal_form([[2, 0], [1, 2]])
    assert diag == [1, 4]


def test_lattice_basis_hnf_spans_generators():
    gens = [[2, 0, 0], [0, 2, 0], [1, 1, 1], [0, 0, 2], [1, 1, 1]]
    b = intmat.lattice_basis(gens)
    assert len(b) == 3
    assert abs(intmat.det(b)) == 4
    inv = intmat.inverse(b)
    for g in gens:
        coeffs = intmat.matmul([g], inv)[0]
        assert all(c.denominator == 1 for c in coeffs)


def test_lll_reduces_and_preserves_lattice():
    basis = [[1, 0, 0], [4, 1, 0], [15, 7, 1]]
    red, T = intmat.lll_reduce(basis)
    assert abs(intmat.det(T)) == 1
    assert intmat.matmul(T, basis) == [[Fraction(x) for x in row] for row in red]
    norms = sorted(sum(x * x for x in row) for row in red)
    assert norms[-1] <= 3  # unimodular image of Z^3 ends up (close to) orthonormal
