import itertools

import numpy as np
import pytest

from vcmlc.fec import (OuterCodeModel, code_from_parity_check, deinterleave, girth_at_least_6,
                       hamming_7_4, hamming_8_4, identity_interleaver, info_rate, interleave,
                       ldpc_build, ldpc_decode, ldpc_encode, make_interleaver, read_alist,
                       syndrome, write_alist)


@pytest.fixture(scope="module")
def half():
    return ldpc_build("1/2", 4096)


@pytest.fixture(scope="module")
def high():
    return ldpc_build("8/9", 4608)


def _codebook(code):
    info = np.array(list(itertools.product([0, 1], repeat=code.k)), dtype=np.uint8)
    return info, ldpc_encode(code, info)


@pytest.mark.parametrize("rate, n, k", [("1/2", 4096, 2048), ("8/9", 4608, 4096)])
def test_preset_dimensions(rate, n, k):
    code = ldpc_build(rate, n)
    assert (code.n, code.k) == (n, k)
    assert not np.any((code.h @ code.generator.T.astype(np.int64)) % 2)
    assert np.all(np.diff(code.h.tocsc().indptr) == 3)
    assert girth_at_least_6(code.h)


def test_build_errors():
    with pytest.raises(ValueError):
        ldpc_build("2/3", 4096)
    with pytest.raises(ValueError):
        ldpc_build("1/2", 512)
    with pytest.raises(ValueError):
        ldpc_build("8/9", 4100)
    with pytest.raises(ValueError, match="rank"):
        code_from_parity_check(np.array([[1, 1, 0], [1, 1, 0]]))


def test_girth_detects_four_cycle():
    h = np.array([[1, 1, 0], [1, 1, 1]])
    assert not girth_at_least_6(h)


@pytest.mark.parametrize("code", [hamming_7_4(), hamming_8_4()], ids=["H74", "H84"])
def test_hamming_codebook(code):
    info, words = _codebook(code)
    assert len(np.unique(words, axis=0)) == 2 ** code.k
    assert not syndrome(code, words).any()
    # the codebook is exactly the null space of H
    every = np.array(list(itertools.product([0, 1], repeat=code.n)))
    null = every[~syndrome(code, every).any(axis=1)]
    assert sorted(map(tuple, null)) == sorted(map(tuple, words))
    assert np.array_equal(words[:, code.info_idx], info)


def test_hamming_8_4_info_positions():
    assert hamming_8_4().info_idx.tolist() == [4, 5, 6, 7]


def test_all_zero_info(half):
    assert not ldpc_encode(half, np.zeros(half.k, np.uint8)).any()


def test_random_words_pass_parity(high):
    rng = np.random.default_rng(4)
    words = ldpc_encode(high, rng.integers(0, 2, (8, high.k)))
    assert not syndrome(high, words).any()
    with pytest.raises(ValueError):
        ldpc_encode(high, np.zeros(high.k - 1))


def test_noiseless_converges_in_one_iteration(half):
    rng = np.random.default_rng(1)
    cw = ldpc_encode(half, rng.integers(0, 2, half.k))
    res = ldpc_decode(half, 20.0 * (1 - 2.0 * cw))
    assert res.converged and res.iterations == 1
    assert np.array_equal(res.bits, cw)


def test_single_error_matches_ml():
    code = hamming_7_4()
    _, words = _codebook(code)
    rng = np.random.default_rng(0)
    for cw in words:
        for pos in range(code.n):
            llr = (1 - 2.0 * cw) * rng.uniform(4, 6, code.n)
            llr[pos] = -llr[pos] * 0.5
            # ML oracle: maximise correlation over the codebook
            ml = words[np.argmax(((1 - 2.0 * words) * llr).sum(axis=1))]
            res = ldpc_decode(code, llr)
            assert np.array_equal(ml, cw)
            assert res.converged and np.array_equal(res.bits, ml)


def test_all_zero_llr_does_not_converge(half):
    res = ldpc_decode(half, np.zeros(half.n), max_iters=10)
    assert not res.converged and res.iterations == 10


def test_non_finite_llr_rejected(half):
    llr = np.zeros(half.n)
    llr[3] = np.inf
    with pytest.raises(ValueError):
        ldpc_decode(half, llr)
    with pytest.raises(ValueError):
        ldpc_decode(half, np.zeros(half.n + 1))


def test_batch_rows_are_independent(half):
    rng = np.random.default_rng(8)
    cw = ldpc_encode(half, rng.integers(0, 2, (4, half.k)))
    llr = 2 * (1 - 2.0 * cw + rng.normal(scale=0.9, size=cw.shape)) / 0.81
    batch = ldpc_decode(half, llr)
    for i in range(4):
        one = ldpc_decode(half, llr[i])
        assert np.array_equal(one.bits, batch.bits[i])
        assert one.iterations == batch.iterations[i]


@pytest.mark.parametrize("rate, n, sigma", [("1/2", 4096, 0.75), ("8/9", 4608, 0.42)])
def test_decoder_improves_above_waterfall(rate, n, sigma):
    code = ldpc_build(rate, n)
    rng = np.random.default_rng(21)
    cw = ldpc_encode(code, rng.integers(0, 2, (40, code.k)))
    y = 1 - 2.0 * cw + rng.normal(scale=sigma, size=cw.shape)
    res = ldpc_decode(code, 2 * y / sigma ** 2)
    before = ((y < 0) != cw).sum(axis=1)
    after = (res.bits != cw).sum(axis=1)
    assert np.mean(after <= before) >= 0.95
    assert res.converged.mean() >= 0.95


def test_failed_rows_never_worse_in_syndrome(half):
    # below the waterfall: the output has no more unsatisfied checks than the input decisions
    rng = np.random.default_rng(3)
    cw = ldpc_encode(half, rng.integers(0, 2, (6, half.k)))
    y = 1 - 2.0 * cw + rng.normal(scale=1.3, size=cw.shape)
    res = ldpc_decode(half, 2 * y / 1.69, max_iters=20)
    assert not res.converged.all()
    assert np.all(syndrome(half, res.bits).sum(axis=1) <= syndrome(half, y < 0).sum(axis=1))


def test_alist_round_trip(tmp_path, high):
    path = tmp_path / "h.alist"
    write_alist(high.h, path)
    back = read_alist(path)
    assert (back != high.h).nnz == 0
    write_alist(back, tmp_path / "again.alist")
    assert (tmp_path / "again.alist").read_bytes() == path.read_bytes()


def test_interleaver_golden():
    assert make_interleaver(8, 7).permutation.tolist() == [0, 6, 7, 2, 4, 5, 1, 3]
    assert make_interleaver(8, 11).permutation.tolist() == [3, 1, 7, 5, 4, 2, 0, 6]


@pytest.mark.parametrize("length", [1, 8, 17, 7168])
def test_interleaver_round_trip(length):
    spec = make_interleaver(length, 7)
    bits = np.random.default_rng(length).integers(0, 2, (3, length))
    assert np.array_equal(deinterleave(spec, interleave(spec, bits)), bits)
    ident = identity_interleaver(length)
    assert np.array_equal(interleave(ident, bits), bits)


def test_interleaver_seeds_differ():
    for length in (16, 4608, 7168):
        assert not np.array_equal(make_interleaver(length, 7).permutation,
                                  make_interleaver(length, 11).permutation)


def test_interleaver_errors():
    spec = make_interleaver(8, 7)
    with pytest.raises(ValueError):
        interleave(spec, np.zeros(9))
    with pytest.raises(ValueError):
        deinterleave(spec, np.zeros(7))
    with pytest.raises(ValueError):
        type(spec)(3, 0, np.array([0, 0, 1]))


def test_outer_model():
    outer = OuterCodeModel()
    assert outer.succeeds(4.7e-3) and not outer.succeeds(4.8e-3)
    assert OuterCodeModel(ber_threshold=1e-2).succeeds(5e-3)
    with pytest.raises(ValueError):
        OuterCodeModel(rate=0.9, overhead=0.067)


@pytest.mark.parametrize("se, m, q, r, want", [
    (4.0, 4, 4, 8 / 9, 3.556),
    (4.5, 36, 16, 1 / 2, 3.5),
    (4.5, 36, 7, 1.0, 4.5),
])
def test_info_rate(se, m, q, r, want):
    got = info_rate(se, m, q, r, 0.9373)
    assert got.inner_info_per_2d == pytest.approx(want, abs=5e-4)
    assert got.net_per_2d == pytest.approx(got.inner_info_per_2d * 0.9373)


def test_info_rate_errors():
    with pytest.raises(ValueError):
        info_rate(4.0, 4, 5, 0.5, 1.0)
    with pytest.raises(ValueError):
        info_rate(4.0, 4, 4, 0.0, 1.0)
