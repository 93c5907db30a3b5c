"""Coded-modulation chains: two-level MLC over a Voronoi constellation, and
BICM over Gray-labeled 16QAM.

Both chains work on batches of blocks: ``info`` has shape ``(B, info_len)``
and received symbols ``(B, symbols, dim)``. Blocks are independent, so any
batching gives the same per-block result.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import fec
from .fec import InterleaverSpec, LdpcCode, OuterCodeModel
from .vc import VcSpec, canonical_points, decode_points, encode_bits


@dataclass(frozen=True)
class BlockResult:
    """Error counts of one block; level 0 = uncoded MRBs, level 1 = coded bits."""

    pre_errors: tuple[int, ...]
    pre_bits: tuple[int, ...]
    post_errors: tuple[int, ...]
    post_bits: tuple[int, ...]
    info_errors: int
    info_bits: int
    symbol_errors: int
    symbols: int
    converged: bool

    @property
    def pre_inner_ber(self) -> tuple[float, ...]:
        return tuple(e / b for e, b in zip(self.pre_errors, self.pre_bits))

    @property
    def post_inner_ber(self) -> tuple[float, ...]:
        return tuple(e / b for e, b in zip(self.post_errors, self.post_bits))

    @property
    def post_pipeline_ber(self) -> float:
        return self.info_errors / self.info_bits


# ---------------------------------------------------------------------------
# MLC over a Voronoi constellation


@dataclass(frozen=True, eq=False)
class MlcConfig:
    vc: VcSpec
    inner: LdpcCode
    interleaver: InterleaverSpec
    outer: OuterCodeModel = OuterCodeModel()
    lrb_candidates: int = 2

    def __post_init__(self):
        if self.vc.lat_c.decoder_hint != "round":
            raise ValueError("MLC demapping needs a diagonal coding lattice")
        if self.inner.n % self.vc.q:
            raise ValueError("LDPC length must be a multiple of q")
        if self.interleaver.length != self.info_len:
            raise ValueError(f"interleaver length must be {self.info_len}")

    @property
    def symbols_per_block(self) -> int:
        return self.inner.n // self.vc.q

    @property
    def info_len(self) -> int:
        return self.inner.n // self.vc.q * self.vc.m - (self.inner.n - self.inner.k)


def make_mlc(vc: VcSpec, inner: LdpcCode, interleaver_seed: int | None = 7,
             outer: OuterCodeModel = OuterCodeModel()) -> MlcConfig:
    length = inner.n // vc.q * vc.m - (inner.n - inner.k)
    pi = (fec.identity_interleaver(length) if interleaver_seed is None
          else fec.make_interleaver(length, interleaver_seed))
    return MlcConfig(vc, inner, pi, outer)


@dataclass(frozen=True)
class MlcFrame:
    info: np.ndarray = field(repr=False)       # (B, info_len)
    codeword: np.ndarray = field(repr=False)   # (B, n) inner codeword = LRBs
    mrb: np.ndarray = field(repr=False)        # (B, S, m - q)
    points: np.ndarray = field(repr=False)     # (B, S, dim)
    integers: np.ndarray = field(repr=False)   # (B, S, dim)


def mlc_encode(cfg: MlcConfig, info_bits) -> MlcFrame:
    """Interleave, split into LRB information and MRBs, LDPC-encode the LRBs, map."""
    info = np.atleast_2d(np.asarray(info_bits, dtype=np.uint8))
    if info.shape[1] != cfg.info_len:
        raise ValueError(f"expected {cfg.info_len} bits per block, got {info.shape[1]}")
    B, S, vc = info.shape[0], cfg.symbols_per_block, cfg.vc
    x = fec.interleave(cfg.interleaver, info)
    k = cfg.inner.k
    cw = fec.ldpc_encode(cfg.inner, x[:, :k])
    mrb = x[:, k:].reshape(B, S, vc.m - vc.q)
    pts, ints = encode_bits(vc, cw.reshape(B * S, vc.q), mrb.reshape(B * S, -1))
    return MlcFrame(info, cw, mrb, pts.reshape(B, S, vc.dim), ints.reshape(B, S, vc.dim))


def lrb_demap(vc: VcSpec, y, sigma2, candidates: int = 2) -> np.ndarray:
    """Per-dimension parity LLRs, ignoring the shaping boundary.

    For each coordinate the ``candidates`` nearest grid values of each parity
    enter a log-sum-exp; ``sigma2`` is the noise variance per real dimension
    in the normalized frame and may broadcast against ``y``.
    """
    sigma2 = np.asarray(sigma2, dtype=float)
    if np.any(sigma2 <= 0):
        raise ValueError("sigma2 must be positive")
    diag = np.diag(vc.lat_c.basis_f)
    z = (np.asarray(y, dtype=float) / vc.scale - vc.offset) / diag
    s2 = sigma2 / (vc.scale * diag) ** 2
    K = candidates
    win = np.arange(-K, K + 1)
    out = []
    for parity in (0, 1):
        centre = 2.0 * np.floor((z - parity) / 2.0 + 0.5) + parity
        cand = centre[..., None] + 2.0 * win
        d2 = np.sort((z[..., None] - cand) ** 2, axis=-1)[..., :K]
        out.append(logsumexp(-d2 / (2.0 * np.asarray(s2)[..., None]), axis=-1))
    return out[0] - out[1]


def grid_decision(vc: VcSpec, y, lrb=None) -> np.ndarray:
    """Nearest point of ``Z^n + d`` (or of ``2Z^n + lrb + d`` when LRBs are given)."""
    diag = np.diag(vc.lat_c.basis_f)
    z = (np.asarray(y, dtype=float) / vc.scale - vc.offset) / diag
    if lrb is None:
        a = np.rint(z)
    else:
        a = 2.0 * np.rint((z - lrb) / 2.0) + lrb
    return vc.scale * (a * diag + vc.offset)


def hd_estimate(vc: VcSpec, y, lrb) -> np.ndarray:
    """Closest constellation point whose per-dimension parities equal ``lrb``."""
    shape = np.shape(y)
    pts = grid_decision(vc, y, lrb).reshape(-1, vc.dim)
    return canonical_points(vc, pts).reshape(shape)


def mrb_demap(vc: VcSpec, points) -> np.ndarray:
    shape = np.shape(points)
    _, mrb = decode_points(vc, np.reshape(points, (-1, vc.dim)))
    return mrb.reshape(shape[:-1] + (vc.m - vc.q,))


def mlc_decode(cfg: MlcConfig, y, sigma2, frame: MlcFrame | None = None, max_iters: int = 50):
    """Two-stage decoding. Returns ``(bits, results)``; ``results`` is a list of
    :class:`BlockResult` when the transmitted ``frame`` is supplied, else None."""
    vc = cfg.vc
    y = np.asarray(y, dtype=float)
    S = cfg.symbols_per_block
    if y.ndim == 2:
        y = y[None]
    if y.shape[1:] != (S, vc.dim):
        raise ValueError(f"expected blocks of shape ({S}, {vc.dim}), got {y.shape[1:]}")
    B = y.shape[0]
    sigma2 = np.broadcast_to(np.asarray(sigma2, dtype=float), y.shape) if np.ndim(sigma2) else sigma2
    # stage 1: LRB demapper and inner decoder
    llr = lrb_demap(vc, y, sigma2, cfg.lrb_candidates).reshape(B, cfg.inner.n)
    dec = fec.ldpc_decode(cfg.inner, llr, max_iters)
    info_lrb = dec.bits[:, cfg.inner.info_idx]
    # re-encoding a non-codeword would smear its errors over the parity bits
    c_hat = np.where(dec.converged[:, None], fec.ldpc_encode(cfg.inner, info_lrb), dec.bits)
    # stage 2: HD estimator and MRB demapper
    lrb_hat = c_hat.reshape(B, S, vc.q)
    x_hat = hd_estimate(vc, y, lrb_hat)
    mrb_hat = mrb_demap(vc, x_hat)
    merged = np.concatenate([info_lrb, mrb_hat.reshape(B, -1)], axis=1)
    bits = fec.deinterleave(cfg.interleaver, merged)
    if frame is None:
        return bits, None
    hard = (llr < 0).astype(np.uint8)
    mrb_raw = mrb_demap(vc, grid_decision(vc, y, hard.reshape(B, S, vc.q)))
    results = []
    for b in range(B):
        results.append(BlockResult(
            pre_errors=(int(np.sum(mrb_raw[b] != frame.mrb[b])), int(np.sum(hard[b] != frame.codeword[b]))),
            pre_bits=(frame.mrb[b].size, cfg.inner.n),
            post_errors=(int(np.sum(mrb_hat[b] != frame.mrb[b])), int(np.sum(c_hat[b] != frame.codeword[b]))),
            post_bits=(frame.mrb[b].size, cfg.inner.n),
            info_errors=int(np.sum(bits[b] != frame.info[b])),
            info_bits=cfg.info_len,
            symbol_errors=int(np.sum(np.any(np.abs(x_hat[b] - frame.points[b]) > 1e-9, axis=-1))),
            symbols=S,
            converged=bool(dec.converged[b]),
        ))
    return bits, results


# ---------------------------------------------------------------------------
# BICM over Gray 16QAM

_PAM = np.array([-3.0, -1.0, 3.0, 1.0])  # 2-bit Gray label (msb, lsb) -> level
QAM_SCALE = 1.0 / np.sqrt(10.0)


def qam16_points() -> np.ndarray:
    """(16, 2) table indexed by the 4-bit label ``b0 b1 b2 b3`` (b0 most significant)."""
    idx = np.arange(16)
    return np.stack([_PAM[idx >> 2], _PAM[idx & 3]], axis=1) * QAM_SCALE


QAM16 = qam16_points()
_QAM_LABELS = ((np.arange(16)[:, None] >> np.array([3, 2, 1, 0])) & 1).astype(np.uint8)


def qam16_map(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    g = bits.reshape(bits.shape[:-1] + (-1, 4))
    idx = (g[..., 0] << 3) | (g[..., 1] << 2) | (g[..., 2] << 1) | g[..., 3]
    return QAM16[idx]


def qam16_hard(y) -> np.ndarray:
    """Nearest-point decisions, returned as bits."""
    d2 = np.sum((np.asarray(y)[..., None, :] - QAM16) ** 2, axis=-1)
    lab = _QAM_LABELS[np.argmin(d2, axis=-1)]
    return lab.reshape(lab.shape[:-2] + (-1,))


def qam16_llr(y, sigma2, max_log: bool = False) -> np.ndarray:
    """Exact per-bit LLRs by marginalizing over all 16 points (positive => 0)."""
    y = np.asarray(y, dtype=float)
    s2 = np.asarray(sigma2, dtype=float)
    if np.any(s2 <= 0):
        raise ValueError("sigma2 must be positive")
    if s2.ndim:
        s2 = np.broadcast_to(s2, y.shape)[..., 0]
    metric = -np.sum((y[..., None, :] - QAM16) ** 2, axis=-1) / (2.0 * np.asarray(s2)[..., None])
    out = np.empty(y.shape[:-1] + (4,))
    for j in range(4):
        zero = _QAM_LABELS[:, j] == 0
        if max_log:
            out[..., j] = metric[..., zero].max(-1) - metric[..., ~zero].max(-1)
        else:
            out[..., j] = logsumexp(metric[..., zero], axis=-1) - logsumexp(metric[..., ~zero], axis=-1)
    return out.reshape(y.shape[:-2] + (-1,))


@dataclass(frozen=True, eq=False)
class BicmConfig:
    inner: LdpcCode
    interleaver: InterleaverSpec
    outer: OuterCodeModel = OuterCodeModel()

    def __post_init__(self):
        if self.inner.n % 4:
            raise ValueError("LDPC length must be a multiple of 4")
        if self.interleaver.length != self.inner.n:
            raise ValueError("interleaver must span one codeword")

    @property
    def symbols_per_block(self) -> int:
        return self.inner.n // 4

    @property
    def info_len(self) -> int:
        return self.inner.k


def make_bicm(inner: LdpcCode, interleaver_seed: int | None = 11,
              outer: OuterCodeModel = OuterCodeModel()) -> BicmConfig:
    pi = (fec.identity_interleaver(inner.n) if interleaver_seed is None
          else fec.make_interleaver(inner.n, interleaver_seed))
    return BicmConfig(inner, pi, outer)


@dataclass(frozen=True)
class BicmFrame:
    info: np.ndarray = field(repr=False)
    codeword: np.ndarray = field(repr=False)   # before interleaving
    coded: np.ndarray = field(repr=False)      # after interleaving, as mapped
    points: np.ndarray = field(repr=False)     # (B, S, 2)


def bicm_encode(cfg: BicmConfig, info_bits) -> BicmFrame:
    info = np.atleast_2d(np.asarray(info_bits, dtype=np.uint8))
    if info.shape[1] != cfg.inner.k:
        raise ValueError(f"expected {cfg.inner.k} bits per block, got {info.shape[1]}")
    cw = fec.ldpc_encode(cfg.inner, info)
    coded = fec.interleave(cfg.interleaver, cw)
    return BicmFrame(info, cw, coded, qam16_map(coded))


def bicm_demap_decode(cfg: BicmConfig, y, sigma2, frame: BicmFrame | None = None,
                      max_iters: int = 50):
    y = np.asarray(y, dtype=float)
    if y.ndim == 2:
        y = y[None]
    if y.shape[1:] != (cfg.symbols_per_block, 2):
        raise ValueError("misaligned block")
    llr_coded = qam16_llr(y, sigma2)
    llr = fec.deinterleave(cfg.interleaver, llr_coded)
    dec = fec.ldpc_decode(cfg.inner, llr, max_iters)
    bits = dec.bits[:, cfg.inner.info_idx]
    if frame is None:
        return bits, None
    hard = (llr_coded < 0).astype(np.uint8)
    results = []
    for b in range(y.shape[0]):
        sym_err = int(np.sum(np.any(
            qam16_hard(y[b]).reshape(-1, 4) != frame.coded[b].reshape(-1, 4), axis=-1)))
        results.append(BlockResult(
            pre_errors=(int(np.sum(hard[b] != frame.coded[b])),),
            pre_bits=(cfg.inner.n,),
            post_errors=(int(np.sum(dec.bits[b] != frame.codeword[b])),),
            post_bits=(cfg.inner.n,),
            info_errors=int(np.sum(bits[b] != frame.info[b])),
            info_bits=cfg.inner.k,
            symbol_errors=sym_err,
            symbols=cfg.symbols_per_block,
            converged=bool(dec.converged[b]),
        ))
    return bits, results
