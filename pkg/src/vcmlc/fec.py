"""Inner LDPC code, interleaver and outer-code accounting.

LLR convention throughout the package: positive means bit 0 is more likely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from pathlib import Path

import numba
import numpy as np
import scipy.sparse as sp

MAX_LLR = 50.0
_MIN_MAG = 1e-15

RATE_PRESETS = {Fraction(1, 2): 3, Fraction(8, 9): 3}  # rate -> column weight


@dataclass(frozen=True, eq=False)
class LdpcCode:
    h: sp.csr_matrix = field(repr=False)
    n: int
    k: int
    info_idx: np.ndarray = field(repr=False)
    parity_idx: np.ndarray = field(repr=False)
    parity_map: np.ndarray = field(repr=False)  # (k, n-k): parity = info @ parity_map mod 2

    @property
    def rate(self) -> float:
        return self.k / self.n

    @cached_property
    def generator(self) -> np.ndarray:
        """Dense systematic generator (rows are codewords, identity on ``info_idx``)."""
        g = np.zeros((self.k, self.n), dtype=np.uint8)
        g[np.arange(self.k), self.info_idx] = 1
        g[:, self.parity_idx] = self.parity_map
        return g

    @cached_property
    def _graph(self):
        h = self.h.tocsr()
        h.sort_indices()
        e_var = h.indices.astype(np.int64)
        chk_start = h.indptr[:-1].astype(np.int64)
        e_chk = np.repeat(np.arange(h.shape[0]), np.diff(h.indptr))
        var_perm = np.argsort(e_var, kind="stable")
        var_start = np.searchsorted(e_var[var_perm], np.arange(self.n))
        return e_chk, e_var, chk_start, var_perm, var_start

    @cached_property
    def _parity_f32(self) -> np.ndarray:
        return self.parity_map.astype(np.float32)


@dataclass(frozen=True)
class DecodeResult:
    bits: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray


# ---------------------------------------------------------------------------
# construction


def _gf2_systematic(H: np.ndarray):
    """Row-reduce H over GF(2) on 64-bit packed rows; returns (rank, pivots, reduced dense)."""
    m, n = H.shape
    words = (n + 63) // 64
    packed = np.packbits(H.astype(np.uint8), axis=1, bitorder="little")
    buf = np.zeros((m, words * 8), dtype=np.uint8)
    buf[:, :packed.shape[1]] = packed
    A = buf.view(np.uint64).copy()
    pivots = []
    row = 0
    for c in range(n):
        if row == m:
            break
        w = c // 64
        mask = np.uint64(1) << np.uint64(c % 64)
        col = (A[:, w] & mask) != 0
        nz = np.flatnonzero(col[row:])
        if nz.size == 0:
            continue
        p = row + nz[0]
        if p != row:
            A[[row, p]] = A[[p, row]]
            col[[row, p]] = col[[p, row]]
        hits = np.flatnonzero(col)
        hits = hits[hits != row]
        A[hits] ^= A[row]
        pivots.append(c)
        row += 1
    dense = np.unpackbits(A.view(np.uint8), axis=1, bitorder="little")[:, :n]
    return row, np.array(pivots, dtype=np.int64), dense


def code_from_parity_check(H) -> LdpcCode:
    """Systematic encoder for an arbitrary full-rank parity-check matrix."""
    Hd = np.asarray(H.toarray() if sp.issparse(H) else H, dtype=np.uint8) & 1
    m, n = Hd.shape
    rank, pivots, red = _gf2_systematic(Hd)
    if rank < m:
        raise ValueError(f"parity-check matrix is rank deficient ({rank} < {m})")
    free = np.setdiff1d(np.arange(n), pivots)
    parity_map = red[:rank][:, free].T.copy()
    return LdpcCode(sp.csr_matrix(Hd), n, n - rank, free, pivots, parity_map)


@numba.njit(cache=True)
def _peg(n, m, dv, prio, max_dc):
    var_adj = -np.ones((n, dv), np.int64)
    chk_adj = -np.ones((m, max_dc), np.int64)
    chk_deg = np.zeros(m, np.int64)
    reached = np.zeros(m, np.bool_)
    prev = np.zeros(m, np.bool_)
    seen = np.zeros(n, np.bool_)
    frontier = np.empty(m, np.int64)
    nxt = np.empty(m, np.int64)
    for v in range(n):
        for e in range(dv):
            cand = np.ones(m, np.bool_)
            if e > 0:
                reached[:] = False
                seen[:] = False
                seen[v] = True
                nf = 0
                count = 0
                for j in range(e):
                    c = var_adj[v, j]
                    reached[c] = True
                    frontier[nf] = c
                    nf += 1
                    count += 1
                while True:
                    prev[:] = reached
                    nn = 0
                    for fi in range(nf):
                        c = frontier[fi]
                        for t in range(chk_deg[c]):
                            u = chk_adj[c, t]
                            if seen[u]:
                                continue
                            seen[u] = True
                            for s in range(dv):
                                c2 = var_adj[u, s]
                                if c2 >= 0 and not reached[c2]:
                                    reached[c2] = True
                                    nxt[nn] = c2
                                    nn += 1
                    count += nn
                    if nn == 0:
                        cand = ~reached
                        break
                    if count == m:
                        cand = ~prev
                        break
                    frontier[:nn] = nxt[:nn]
                    nf = nn
            best = -1
            for c in range(m):
                if cand[c] and chk_deg[c] < max_dc:
                    if best < 0 or chk_deg[c] < chk_deg[best] or (
                            chk_deg[c] == chk_deg[best] and prio[c] < prio[best]):
                        best = c
            if best < 0:
                return var_adj, False
            var_adj[v, e] = best
            chk_adj[best, chk_deg[best]] = v
            chk_deg[best] += 1
    return var_adj, True


def peg_parity_check(n: int, m: int, dv: int, seed: int) -> sp.csr_matrix:
    """Progressive edge growth with column weight ``dv``; ties broken by a seeded priority."""
    prio = np.random.default_rng(seed).permutation(m).astype(np.int64)
    max_dc = -(-n * dv // m) + 2
    var_adj, ok = _peg(n, m, dv, prio, max_dc)
    if not ok:
        raise ValueError("PEG construction ran out of check capacity")
    rows = var_adj.ravel()
    cols = np.repeat(np.arange(n), dv)
    return sp.csr_matrix((np.ones(rows.size, np.uint8), (rows, cols)), shape=(m, n))


def girth_at_least_6(h) -> bool:
    """No two columns share more than one check (no 4-cycles)."""
    h = sp.csc_matrix(h, dtype=np.int32)
    overlap = (h.T @ h).tocoo()
    off = overlap.row != overlap.col
    return not np.any(overlap.data[off] > 1)


@lru_cache(maxsize=8)
def ldpc_build(rate, n: int, seed: int = 1) -> LdpcCode:
    """PEG-constructed code for the 1/2 and 8/9 presets."""
    r = Fraction(rate).limit_denominator(64)
    if r not in RATE_PRESETS:
        raise ValueError(f"no preset for rate {rate}")
    if not 1024 <= n <= 65536:
        raise ValueError("block length must lie in [1024, 65536]")
    k = n * r
    if k.denominator != 1:
        raise ValueError(f"n = {n} is incompatible with rate {r}")
    m = n - int(k)
    h = peg_parity_check(n, m, RATE_PRESETS[r], seed)
    if not girth_at_least_6(h):
        raise ValueError("girth 6 not achieved at this size")
    return code_from_parity_check(h)


def hamming_7_4() -> LdpcCode:
    h = np.array([[1, 0, 1, 0, 1, 0, 1],
                  [0, 1, 1, 0, 0, 1, 1],
                  [0, 0, 0, 1, 1, 1, 1]], dtype=np.uint8)
    return code_from_parity_check(h)


def hamming_8_4() -> LdpcCode:
    """Extended Hamming code: Hamming(7,4) plus an overall parity check."""
    h7 = hamming_7_4().h.toarray()
    h = np.vstack([np.ones(8, np.uint8), np.hstack([h7, np.zeros((3, 1), np.uint8)])])
    return code_from_parity_check(h)


# ---------------------------------------------------------------------------
# encoding / decoding


def ldpc_encode(code: LdpcCode, info_bits) -> np.ndarray:
    info = np.asarray(info_bits, dtype=np.uint8)
    if info.shape[-1] != code.k:
        raise ValueError(f"expected {code.k} information bits, got {info.shape[-1]}")
    single = info.ndim == 1
    info = np.atleast_2d(info)
    parity = (info.astype(np.float32) @ code._parity_f32).astype(np.int64) & 1
    cw = np.empty((info.shape[0], code.n), dtype=np.uint8)
    cw[:, code.info_idx] = info
    cw[:, code.parity_idx] = parity
    return cw[0] if single else cw


def syndrome(code: LdpcCode, bits) -> np.ndarray:
    bits = np.atleast_2d(bits)
    return (code.h @ bits.T.astype(np.int64)).T & 1


def _phi(x):
    x = np.clip(x, _MIN_MAG, MAX_LLR)
    return np.log1p(2.0 / np.expm1(x))


_PHI_CAP = float(_phi(np.array(_MIN_MAG)))


def ldpc_decode(code: LdpcCode, llr, max_iters: int = 50) -> DecodeResult:
    """Sum-product decoding (exact tanh rule) with syndrome early stop.

    Accepts a single LLR vector or a batch ``(B, n)``; rows are independent.
    A row counts as converged when its syndrome is zero and no posterior LLR
    is exactly zero. Rows that never converge return the hard decisions with
    the fewest unsatisfied checks seen, counting the input LLRs as iteration 0.
    """
    llr = np.asarray(llr, dtype=float)
    if llr.shape[-1] != code.n:
        raise ValueError(f"expected {code.n} LLRs, got {llr.shape[-1]}")
    if not np.all(np.isfinite(llr)):
        raise ValueError("LLRs must be finite")
    single = llr.ndim == 1
    L = np.clip(np.atleast_2d(llr), -MAX_LLR, MAX_LLR)
    B = L.shape[0]
    e_chk, e_var, chk_start, var_perm, var_start = code._graph

    bits = (L < 0).astype(np.uint8)
    best_unsat = np.add.reduceat(bits[:, e_var], chk_start, axis=1) & 1
    best_unsat = best_unsat.sum(axis=1)
    converged = np.zeros(B, dtype=bool)
    iterations = np.full(B, max_iters, dtype=np.int64)
    active = np.arange(B)
    La = L
    v2c = La[:, e_var]
    for it in range(1, max_iters + 1):
        mag = _phi(np.abs(v2c))
        ext = np.add.reduceat(mag, chk_start, axis=1)[:, e_chk] - mag
        neg = v2c < 0
        parity = np.add.reduceat(neg.astype(np.uint8), chk_start, axis=1) & 1
        sign = np.where(parity[:, e_chk].astype(bool) ^ neg, -1.0, 1.0)
        c2v = sign * np.where(ext >= _PHI_CAP, 0.0, _phi(ext))
        post = La + np.add.reduceat(c2v[:, var_perm], var_start, axis=1)
        hard = post < 0
        synd = np.add.reduceat(hard[:, e_var].astype(np.uint8), chk_start, axis=1) & 1
        done = ~synd.any(axis=1) & np.all(post != 0, axis=1)
        unsat = synd.sum(axis=1)
        better = (unsat < best_unsat[active]) | done
        bits[active[better]] = hard[better]
        best_unsat[active[better]] = unsat[better]
        if done.any():
            converged[active[done]] = True
            iterations[active[done]] = it
            keep = ~done
            active, La, post, c2v = active[keep], La[keep], post[keep], c2v[keep]
            if active.size == 0:
                break
        v2c = np.clip(post[:, e_var] - c2v, -MAX_LLR, MAX_LLR)
    if single:
        return DecodeResult(bits[0], converged[0], iterations[0])
    return DecodeResult(bits, converged, iterations)


# ---------------------------------------------------------------------------
# alist files


def write_alist(h, path) -> None:
    h = sp.csc_matrix(h)
    m, n = h.shape
    hr = h.tocsr()
    col_rows = [np.sort(h.indices[h.indptr[j]:h.indptr[j + 1]]) + 1 for j in range(n)]
    row_cols = [np.sort(hr.indices[hr.indptr[i]:hr.indptr[i + 1]]) + 1 for i in range(m)]
    dv = max(len(c) for c in col_rows)
    dc = max(len(r) for r in row_cols)
    lines = [f"{n} {m}", f"{dv} {dc}",
             " ".join(str(len(c)) for c in col_rows),
             " ".join(str(len(r)) for r in row_cols)]
    lines += [" ".join(str(x) for x in list(c) + [0] * (dv - len(c))) for c in col_rows]
    lines += [" ".join(str(x) for x in list(r) + [0] * (dc - len(r))) for r in row_cols]
    Path(path).write_text("\n".join(lines) + "\n")


def read_alist(path) -> sp.csr_matrix:
    tok = Path(path).read_text().split("\n")
    n, m = (int(x) for x in tok[0].split())
    rows, cols = [], []
    for j in range(n):
        for r in tok[4 + j].split():
            if int(r):
                rows.append(int(r) - 1)
                cols.append(j)
    return sp.csr_matrix((np.ones(len(rows), np.uint8), (rows, cols)), shape=(m, n))


# ---------------------------------------------------------------------------
# interleaver and outer code


@dataclass(frozen=True, eq=False)
class InterleaverSpec:
    length: int
    seed: int
    permutation: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = self.permutation
        if p.shape != (self.length,) or not np.array_equal(np.sort(p), np.arange(self.length)):
            raise ValueError("permutation is not a bijection on [0, length)")

    @cached_property
    def inverse(self) -> np.ndarray:
        inv = np.empty_like(self.permutation)
        inv[self.permutation] = np.arange(self.length)
        return inv


def make_interleaver(length: int, seed: int) -> InterleaverSpec:
    return InterleaverSpec(length, seed, np.random.default_rng(seed).permutation(length))


def identity_interleaver(length: int) -> InterleaverSpec:
    return InterleaverSpec(length, -1, np.arange(length))


def interleave(spec: InterleaverSpec, bits) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.shape[-1] != spec.length:
        raise ValueError("length mismatch")
    return bits[..., spec.permutation]


def deinterleave(spec: InterleaverSpec, bits) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.shape[-1] != spec.length:
        raise ValueError("length mismatch")
    return bits[..., spec.inverse]


@dataclass(frozen=True)
class OuterCodeModel:
    """Hard-decision outer code, modeled by its rate and a BER threshold."""

    rate: float = 0.9373
    overhead: float = 0.067
    ber_threshold: float = 4.7e-3

    def __post_init__(self):
        if abs(self.rate * (1 + self.overhead) - 1) > 3e-3:
            raise ValueError("rate and overhead are inconsistent")

    def succeeds(self, ber: float) -> bool:
        return ber <= self.ber_threshold


@dataclass(frozen=True)
class InfoRate:
    inner_info_per_2d: float
    net_per_2d: float


def info_rate(se_bits_per_2d: float, m: int, q: int, inner_rate: float,
              outer_rate: float) -> InfoRate:
    """Information rate after inner parity removal, and after the outer code."""
    if q > m:
        raise ValueError("q must not exceed m")
    if not (0 < inner_rate <= 1 and 0 < outer_rate <= 1):
        raise ValueError("rates must lie in (0, 1]")
    inner = (m - q * (1 - inner_rate)) / m * se_bits_per_2d
    return InfoRate(inner, inner * outer_rate)
