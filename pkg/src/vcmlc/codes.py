"""Small binary linear codes: Reed-Muller generators, GF(2) algebra, and an
exact soft-decision ML decoder on the syndrome trellis."""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np


def reed_muller(r: int, m: int) -> np.ndarray:
    """Generator matrix of RM(r, m); coordinate j is the binary expansion of j."""
    pts = (np.arange(2 ** m)[:, None] >> np.arange(m)) & 1  # (2^m, m)
    rows = []
    for deg in range(r + 1):
        for vars_ in combinations(range(m), deg):
            rows.append(np.prod(pts[:, list(vars_)], axis=1) if vars_ else np.ones(2 ** m, int))
    return np.array(rows, dtype=np.uint8)


def even_weight(n: int) -> np.ndarray:
    """Generator of the [n, n-1, 2] single parity check code."""
    g = np.zeros((n - 1, n), dtype=np.uint8)
    g[:, 0] = 1
    g[np.arange(n - 1), np.arange(1, n)] = 1
    return g


def gf2_rref(a: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2); returns (rref rows of full rank, pivot columns)."""
    m = (np.asarray(a) & 1).astype(np.uint8).copy()
    pivots = []
    r = 0
    for c in range(m.shape[1]):
        if r == m.shape[0]:
            break
        nz = np.nonzero(m[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + nz[0]
        if p != r:
            m[[r, p]] = m[[p, r]]
        hit = np.nonzero(m[:, c])[0]
        hit = hit[hit != r]
        m[hit] ^= m[r]
        pivots.append(c)
        r += 1
    return m[:r], pivots


def gf2_rank(a: np.ndarray) -> int:
    return len(gf2_rref(a)[1])


def gf2_nullspace(g: np.ndarray) -> np.ndarray:
    """Basis (rows) of the dual code of the row space of ``g``."""
    rref, piv = gf2_rref(g)
    n = g.shape[1]
    free = [c for c in range(n) if c not in piv]
    h = np.zeros((len(free), n), dtype=np.uint8)
    for i, f in enumerate(free):
        h[i, f] = 1
        h[i, piv] = rref[:, f]
    return h


def codewords(g: np.ndarray) -> np.ndarray:
    """All 2^k codewords of the code generated by the rows of ``g`` (small k only)."""
    k = g.shape[0]
    msgs = (np.arange(2 ** k)[:, None] >> np.arange(k)) & 1
    return (msgs @ g.astype(np.int64)) % 2


class TrellisDecoder:
    """Exact minimum-cost decoder for a binary linear code.

    Given per-coordinate costs for bit 0 and bit 1 it returns the codeword of
    minimum total cost, searching the syndrome (Wolf) trellis with
    ``2**(n-k)`` partial-syndrome states. Among equal-cost codewords the one
    that is lexicographically smallest under a per-coordinate preference
    (``prefer1[:, i]`` true when bit 1 sorts first) is returned; cost
    equality is exact, so this is well defined for exactly representable costs.
    """

    def __init__(self, generator: np.ndarray):
        self.generator = np.asarray(generator, dtype=np.uint8)
        self.n = self.generator.shape[1]
        self.k = gf2_rank(self.generator)
        h = gf2_nullspace(self.generator)
        self.states = 1 << h.shape[0]
        # column syndromes as integers
        self.col_syndrome = (h.astype(np.int64) << np.arange(h.shape[0])[:, None]).sum(axis=0)
        idx = np.arange(self.states)
        self._next1 = [idx ^ s for s in self.col_syndrome]

    def decode(self, cost0: np.ndarray, cost1: np.ndarray, prefer1: np.ndarray | None = None):
        """Return ``(bits, total_cost)`` for cost arrays of shape (N, n)."""
        N = cost0.shape[0]
        # backward pass: beta[i, :, s] = best cost of coordinates i.. from state s to 0
        beta = np.empty((self.n + 1, N, self.states))
        beta[self.n] = np.inf
        beta[self.n, :, 0] = 0.0
        for i in range(self.n - 1, -1, -1):
            beta[i] = np.minimum(beta[i + 1] + cost0[:, i:i + 1],
                                 beta[i + 1][:, self._next1[i]] + cost1[:, i:i + 1])
        # forward traceback picks the preferred branch among optimal ones
        bits = np.zeros((N, self.n), dtype=np.uint8)
        rows = np.arange(N)
        state = np.zeros(N, dtype=np.int64)
        for i in range(self.n):
            opt = beta[i, rows, state]
            nxt1 = state ^ self.col_syndrome[i]
            ok0 = beta[i + 1, rows, state] + cost0[:, i] == opt
            ok1 = beta[i + 1, rows, nxt1] + cost1[:, i] == opt
            if prefer1 is None:
                b = ~ok0
            else:
                b = ok1 & (~ok0 | prefer1[:, i])
            bits[:, i] = b
            state = np.where(b, nxt1, state)
        return bits, beta[0, :, 0]


@lru_cache(maxsize=None)
def _cached_trellis(key: bytes, shape: tuple[int, int]) -> TrellisDecoder:
    return TrellisDecoder(np.frombuffer(key, dtype=np.uint8).reshape(shape))


def trellis_for(generator: np.ndarray) -> TrellisDecoder:
    g = np.ascontiguousarray(generator, dtype=np.uint8)
    return _cached_trellis(g.tobytes(), g.shape)
