import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vcmlc.codes import reed_muller
from vcmlc.lattice import (checkerboard, closest_point, code_formula_lattice, coset_count,
                           integer_lattice, is_sublattice, lattice_from_config, lattice_to_config,
                           make_lattice, mod_lattice, quantize, shaping_16d, smith_radices,
                           with_hint)

SKEW = [[2, 0], [1, 2]]


def _enumerate(basis, y, span=8):
    """Every lattice point with |u_i| <= span; the oracle for small dimensions."""
    B = np.asarray(basis, dtype=float)
    n = B.shape[0]
    U = np.array(list(itertools.product(range(-span, span + 1), repeat=n)))
    P = U @ B
    d = np.sum((P - y) ** 2, axis=1)
    return P, d


def test_round_example():
    res = closest_point(integer_lattice(2), [0.4, -1.6])
    assert res.nearest.coords == (0, -2)
    assert res.dist2 == pytest.approx(0.32)
    assert res.residual == pytest.approx([0.4, 0.4])


@pytest.mark.parametrize("hint", ["sphere", "brute"])
def test_lattice_point_is_its_own_nearest(hint):
    lat = make_lattice(SKEW, hint)
    p = np.array([1, 2]) @ np.array(SKEW, dtype=float)
    res = closest_point(lat, p)
    assert res.dist2 == 0.0
    assert np.all(res.residual == 0)
    assert res.nearest.integer_label == (1, 2)


def test_sphere_equals_brute_force_on_skew_lattice():
    rng = np.random.default_rng(0)
    sph = make_lattice(SKEW, "sphere")
    for y in rng.uniform(-4, 4, size=(200, 2)):
        res = closest_point(sph, y)
        P, d = _enumerate(SKEW, y)
        assert res.dist2 == pytest.approx(d.min(), abs=1e-12)
        best = P[np.isclose(d, d.min(), atol=1e-12)]
        assert any(np.allclose(res.nearest.coords, b) for b in best)


def test_coords_match_label_exactly():
    lat = make_lattice([[1, Fraction(1, 2)], [0, Fraction(3, 2)]], "sphere")
    res = closest_point(lat, [0.3, 2.2])
    u = res.nearest.integer_label
    want = tuple(sum(Fraction(u[i]) * lat.basis[i][j] for i in range(2)) for j in range(2))
    assert res.nearest.coords == want


def test_ties_resolve_to_smallest_point():
    # (0.5, 0.5) is equidistant from four points of Z^2
    for hint in ("round", "sphere", "brute"):
        lat = with_hint(integer_lattice(2), hint) if hint != "round" else integer_lattice(2)
        assert closest_point(lat, [0.5, 0.5]).nearest.coords == (0, 0)


def test_errors():
    with pytest.raises(ValueError):
        closest_point(integer_lattice(2), [np.nan, 0.0])
    with pytest.raises(ValueError):
        closest_point(integer_lattice(2), [0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        closest_point(with_hint(integer_lattice(7), "brute"), np.zeros(7))
    with pytest.raises(ValueError):
        make_lattice([[1, 2], [2, 4]])
    with pytest.raises(ValueError):
        make_lattice(SKEW, "round")


def test_mod_lattice_examples():
    lat = integer_lattice(2, 4)
    assert mod_lattice(lat, [5.0, -1.0]).tolist() == [1.0, -1.0]
    assert mod_lattice(lat, [0.5, -1.5]).tolist() == [0.5, -1.5]


def test_mod_lattice_minimum_norm():
    basis = [[8, 0], [4, 8]]  # 4 * SKEW
    lat = make_lattice(basis, "sphere")
    rng = np.random.default_rng(3)
    for x in rng.uniform(-20, 20, size=(100, 2)):
        r = mod_lattice(lat, x)
        P, _ = _enumerate(basis, x, span=6)
        assert np.linalg.norm(r) <= np.min(np.linalg.norm(x - P, axis=1)) + 1e-9
        # same coset: x - r lies on the lattice
        u = np.linalg.solve(np.array(basis, float).T, x - r)
        assert np.allclose(u, np.round(u))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-30, 30, allow_nan=False), min_size=4, max_size=4))
def test_mod_lattice_idempotent(x):
    lat = checkerboard(4, 4)
    r = mod_lattice(lat, x)
    assert np.array_equal(mod_lattice(lat, r), r)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=2),
       st.integers(-3, 3), st.integers(-3, 3))
def test_translation_invariance(y, u0, u1):
    lat = make_lattice(SKEW, "sphere")
    p = np.array([u0, u1]) @ np.array(SKEW, float)
    y = np.array(y)
    _, d = _enumerate(SKEW, y)
    if np.sort(d)[1] - d.min() < 1e-6:
        return  # boundary input, excluded
    a = np.array(closest_point(lat, y + p).nearest.coords, float) - p
    b = np.array(closest_point(lat, y).nearest.coords, float)
    assert np.allclose(a, b)


@pytest.mark.parametrize("lat_c, lat_s, count", [
    (integer_lattice(2), integer_lattice(2, 4), 16),
    (integer_lattice(4), checkerboard(4, 4), 512),
    (integer_lattice(3), integer_lattice(3), 1),
    (integer_lattice(2), make_lattice(SKEW), 4),
])
def test_coset_count(lat_c, lat_s, count):
    assert coset_count(lat_c, lat_s) == count


def test_coset_count_default_16d():
    assert coset_count(integer_lattice(16), shaping_16d()) == 2 ** 36


def test_coset_count_multiplicative_under_direct_sum():
    a_c, a_s = integer_lattice(2), make_lattice(SKEW)
    b_c, b_s = integer_lattice(2), integer_lattice(2, 3)
    def block(x, y):
        n, m = x.dim, y.dim
        rows = [list(r) + [0] * m for r in x.basis] + [[0] * n + list(r) for r in y.basis]
        return make_lattice(rows)
    assert coset_count(block(a_c, b_c), block(a_s, b_s)) == coset_count(a_c, a_s) * coset_count(b_c, b_s)


def test_not_a_sublattice():
    assert not is_sublattice(integer_lattice(2, 2), integer_lattice(2, 3))
    with pytest.raises(ValueError):
        coset_count(integer_lattice(2, 2), integer_lattice(2, 3))


@pytest.mark.parametrize("lat_c, lat_s, radices", [
    (integer_lattice(2), integer_lattice(2, 4), (4, 4)),
    (integer_lattice(2), make_lattice(SKEW), (1, 4)),
    (integer_lattice(3), integer_lattice(3), (1, 1, 1)),
    (integer_lattice(16), shaping_16d(), (2,) + (4,) * 10 + (8,) * 5),
])
def test_smith_radices(lat_c, lat_s, radices):
    snf = smith_radices(lat_c, lat_s)
    assert snf.radices == radices
    assert np.prod(radices, dtype=object) == coset_count(lat_c, lat_s)
    # transforms multiply back to the diagonal
    S, U, V = (np.array(m, dtype=object) for m in (snf.relation, snf.U, snf.V))
    assert (U.dot(S).dot(V) == np.diag(radices)).all()


def test_code_formula_not_closed():
    # RM(1,4) + 2 RM(1,4) fails the Schur-product condition
    with pytest.raises(ValueError, match="not closed"):
        code_formula_lattice([reed_muller(1, 4), reed_muller(1, 4)])


def test_code_formula_decoder_matches_sphere_16d():
    lat = shaping_16d()
    sph = with_hint(lat, "sphere")
    rng = np.random.default_rng(11)
    # half-integer inputs exercise the tie rule on the Voronoi boundary
    Y = np.vstack([rng.normal(scale=3, size=(20, 16)), rng.integers(-6, 6, size=(20, 16)) + 0.5])
    assert np.array_equal(quantize(lat, Y), quantize(sph, Y))


@pytest.mark.parametrize("cfg, dim, det", [
    ({"type": "Z", "dim": "3", "scale": "1/2"}, 3, Fraction(1, 8)),
    ({"type": "D", "dim": "4", "scale": "4"}, 4, 512),
    ({"type": "explicit", "basis": "2 0; 1 2"}, 2, 4),
    ({"type": "code_formula", "codes": "RM(0,4) RM(2,4)", "scale": "2"}, 16, 2 ** 36),
])
def test_lattice_config(cfg, dim, det):
    lat = lattice_from_config(cfg)
    assert lat.dim == dim and lat.det_abs == det
    back = lattice_from_config(lattice_to_config(lat))
    assert back.basis == lat.basis
