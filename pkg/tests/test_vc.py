import itertools

import numpy as np
import pytest

from vcmlc.lattice import coset_count, integer_lattice, is_sublattice, make_lattice
from vcmlc.vc import (BitLabel, VcSymbol, all_labels, build_spec, canonical_points,
                      constellation_stats, decode, decode_points, encode, encode_bits,
                      random_labels, spec_from_config, spec_to_config, vc_default_16d, vc_toy)


@pytest.fixture(scope="module")
def spec16():
    return vc_default_16d()


def test_default_spec(spec16):
    assert spec16.se == 4.5
    assert (spec16.m, spec16.q, spec16.dim) == (36, 16, 16)
    assert coset_count(spec16.lat_c, spec16.lat_s) == 2 ** 36
    assert is_sublattice(spec16.lat_c, spec16.lat_s)
    assert all(x.denominator == 1 for row in spec16.lat_s.basis for x in row)
    assert spec16.digit_bits.sum() == spec16.m - spec16.q


@pytest.mark.parametrize("name, count, se", [("z2_4z2", 16, 4.0), ("z4_4d4", 512, 4.5)])
def test_toy_presets(name, count, se):
    spec = vc_toy(name)
    assert coset_count(spec.lat_c, spec.lat_s) == count == 2 ** spec.m
    assert spec.se == se


def test_unknown_toy():
    with pytest.raises(ValueError):
        vc_toy("z8_e8")


def test_toy_zero_label():
    spec = vc_toy("z2_4z2")
    sym = encode(spec, BitLabel((0, 0), (0, 0)))
    assert sym.integers.tolist() == [0, 0]
    assert sym.point == pytest.approx(spec.scale * np.array([0.5, 0.5]))


def test_toy_grid_is_centred_4x4():
    spec = vc_toy("z2_4z2")
    lrb, mrb = all_labels(spec)
    pts, _ = encode_bits(spec, lrb, mrb)
    grid = np.array(list(itertools.product([-1.5, -0.5, 0.5, 1.5], repeat=2)))
    got = np.round(pts / spec.scale, 12)
    assert sorted(map(tuple, got)) == sorted(map(tuple, grid))


@pytest.mark.parametrize("name", ["z2_4z2", "z4_4d4"])
def test_exhaustive_round_trip(name):
    spec = vc_toy(name)
    lrb, mrb = all_labels(spec)
    pts, _ = encode_bits(spec, lrb, mrb)
    assert len(np.unique(np.round(pts, 9), axis=0)) == 2 ** spec.m
    l2, m2 = decode_points(spec, pts)
    assert np.array_equal(l2, lrb) and np.array_equal(m2, mrb)


def test_single_label_api():
    spec = vc_toy("z4_4d4")
    label = BitLabel((1, 0, 1, 1), (1, 0, 0, 1, 1))
    assert decode(spec, encode(spec, label)) == label
    with pytest.raises(ValueError):
        encode(spec, BitLabel((1, 0), (1,)))


def test_random_round_trip_16d(spec16):
    rng = np.random.default_rng(5)
    lrb, mrb = random_labels(spec16, 20000, rng)
    pts, _ = encode_bits(spec16, lrb, mrb)
    l2, m2 = decode_points(spec16, pts)
    assert np.array_equal(l2, lrb) and np.array_equal(m2, mrb)


def test_off_grid_point_rejected():
    spec = vc_toy("z2_4z2")
    p = encode(spec, BitLabel((0, 1), (1, 0))).point + 1e-3
    with pytest.raises(ValueError, match="grid"):
        decode(spec, VcSymbol(p, np.zeros(2)))


def test_lrb_locality(spec16):
    rng = np.random.default_rng(9)
    lrb, mrb = random_labels(spec16, 200, rng)
    _, a = encode_bits(spec16, lrb, mrb)
    for i in (0, 5, 15):
        flipped = lrb.copy()
        flipped[:, i] ^= 1
        _, b = encode_bits(spec16, flipped, mrb)
        changed = (a & 1) != (b & 1)
        assert np.all(changed[:, i]) and not np.any(np.delete(changed, i, axis=1))


@pytest.mark.parametrize("name", ["z2_4z2", "z4_4d4"])
def test_minimum_energy_representatives(name):
    spec = vc_toy(name)
    lrb, mrb = all_labels(spec)
    pts, _ = encode_bits(spec, lrb, mrb)
    u = pts / spec.scale
    B = spec.lat_s.basis_f
    shifts = np.array(list(itertools.product(range(-2, 3), repeat=spec.dim))) @ B
    norms = np.sum((u[:, None, :] + shifts[None]) ** 2, axis=2)
    assert np.all(np.sum(u ** 2, axis=1) <= norms.min(axis=1) + 1e-9)


def test_canonical_points_fold_coset_members(spec16):
    rng = np.random.default_rng(2)
    lrb, mrb = random_labels(spec16, 500, rng)
    pts, _ = encode_bits(spec16, lrb, mrb)
    shift = rng.integers(-2, 3, size=(500, 16)) @ spec16.lat_s.basis_f
    assert np.allclose(canonical_points(spec16, pts + spec16.scale * shift), pts)


def test_stats_toy_exact():
    spec = vc_toy("z2_4z2")
    st = constellation_stats(spec, unscaled=True)
    assert np.array_equal(st.mean, np.zeros(2))
    assert st.energy_per_2d == pytest.approx(2.5, abs=1e-12)
    assert constellation_stats(spec).energy_per_2d == pytest.approx(1.0, abs=1e-12)


def test_stats_default_mean_and_energy(spec16):
    st = constellation_stats(spec16, 1 << 17, seed=123)
    assert st.se == 4.5
    assert st.energy_per_2d == pytest.approx(1.0, abs=5e-3)
    # sample-mean test per coordinate: 5 standard errors
    rng = np.random.default_rng(123)
    lrb, mrb = random_labels(spec16, 1 << 17, rng)
    pts, _ = encode_bits(spec16, lrb, mrb)
    se = pts.std(axis=0) / np.sqrt(len(pts))
    assert np.all(np.abs(st.mean) < 5 * se)


def test_build_spec_validation():
    with pytest.raises(ValueError, match="coset count"):
        build_spec("bad", integer_lattice(2), integer_lattice(2, 4), m=5, q=2, scale=1.0)
    # radices (1, 4): the unit radix leaves one dimension without a parity bit
    with pytest.raises(ValueError, match="2 \\* coding lattice"):
        build_spec("skew", integer_lattice(2), make_lattice([[2, 0], [1, 2]]), m=2, q=2, scale=1.0)
    with pytest.raises(ValueError, match="q == dim"):
        build_spec("q", integer_lattice(2), integer_lattice(2, 4), m=4, q=1, scale=1.0)


def test_config_round_trip():
    spec = vc_toy("z4_4d4")
    assert spec_from_config(spec_to_config(spec)) is spec
    custom = build_spec("custom", integer_lattice(2), integer_lattice(2, 4), m=4, q=2)
    back = spec_from_config(spec_to_config(custom))
    assert back.scale == pytest.approx(custom.scale)
    assert back.radices == custom.radices
