"""Monte Carlo sweeps over SNR or launch power, threshold crossings, throughput
accounting and CSV / gnuplot output.

Every block draws its information bits and noise from a generator keyed by
``(seed, grid index, block index)``. Blocks are decoded in fixed-size batches
and the stop rule is applied in block order, so a grid point's result does
not depend on how points are spread over worker processes.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import channel as chan
from . import fec, pipeline
from .fec import OuterCodeModel
from .vc import vc_preset

SCHEMES = ("mlc-vc", "bicm-qam")
CHANNELS = ("awgn", "mcf")
INNER_KINDS = ("peg", "hamming84")
CSV_COLUMNS = ("grid", "pre_ber", "post_ber", "errors", "bits", "eff_snr", "converged", "seed")
EXTRA_COLUMNS = ("blocks", "pre_ber_l0", "pre_ber_l1", "post_ber_l0", "post_ber_l1",
                 "symbol_errors", "symbols", "max_bits_hit")
_NOT_HASHED = ("workers", "out", "batch_blocks")


@dataclass(frozen=True)
class SweepConfig:
    scheme: str = "mlc-vc"
    channel: str = "awgn"
    grid: tuple[float, ...] = (10.0, 11.0, 12.0, 13.0)
    min_bit_errors: int = 200
    max_bits: int = 10 ** 8
    seed: int = 1
    out: str | None = None
    workers: int = 1
    batch_blocks: int = 16
    max_iters: int = 50
    vc: str = "default16"
    inner: str = "peg"
    ldpc_rate: str | None = None     # "1/2" (MLC) or "8/9" (BICM) when None
    ldpc_n: int | None = None        # 4096 (MLC) or 4608 (BICM) when None
    ldpc_seed: int = 1
    interleaver_seed: int = 7
    outer_rate: float = 0.9373
    outer_threshold: float = 4.7e-3
    mcf_p_ase: tuple[float, ...] = (chan.DEFAULT_P_ASE,) * chan.N_CORES
    mcf_eta: tuple[float, ...] = (chan.DEFAULT_ETA,) * chan.N_CORES
    mcf_offsets: tuple[float, ...] = chan.DEFAULT_OFFSETS

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.channel not in CHANNELS:
            raise ValueError(f"channel must be one of {CHANNELS}")
        if self.inner not in INNER_KINDS:
            raise ValueError(f"inner must be one of {INNER_KINDS}")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid must be strictly increasing")
        if self.min_bit_errors <= 0 or self.max_bits <= 0 or self.batch_blocks <= 0:
            raise ValueError("stop rule and batch size must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def hash(self) -> str:
        d = {k: v for k, v in dataclasses.asdict(self).items() if k not in _NOT_HASHED}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def parse_grid(text: str) -> tuple[float, ...]:
    """``"10 10.5 11"`` or ``"start:stop:step"`` (stop inclusive)."""
    text = text.strip()
    if ":" in text:
        a, b, s = (float(x) for x in text.split(":"))
        if s <= 0:
            raise ValueError("grid step must be positive")
        count = int(math.floor((b - a) / s + 1e-9)) + 1
        return tuple(round(a + i * s, 10) for i in range(count))
    return _floats(text)


def load_config(path: str | None = None, **overrides) -> SweepConfig:
    """Read an INI file with sections ``[sweep]``, ``[code]``, ``[outer]``, ``[mcf]``.

    ``[mcf]`` takes ``p_ase``, ``eta_nl`` and ``snr_offset_db`` for all cores;
    ``[mcf.core<i>]`` sections override single cores.
    """
    kw: dict = {}
    if path is not None:
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        if not cp.read(path):
            raise FileNotFoundError(path)
        s = cp["sweep"] if cp.has_section("sweep") else {}
        for key in ("scheme", "channel", "vc", "out"):
            if key in s:
                kw[key] = s[key].strip()
        if "grid" in s:
            kw["grid"] = parse_grid(s["grid"])
        for key in ("min_bit_errors", "max_bits", "seed", "workers", "batch_blocks", "max_iters"):
            if key in s:
                kw[key] = int(float(s[key]))
        if cp.has_section("code"):
            c = cp["code"]
            if "inner" in c:
                kw["inner"] = c["inner"].strip()
            if "rate" in c:
                kw["ldpc_rate"] = c["rate"].strip()
            for key, name in (("n", "ldpc_n"), ("seed", "ldpc_seed"), ("interleaver_seed", "interleaver_seed")):
                if key in c:
                    kw[name] = int(c[key])
        if cp.has_section("outer"):
            o = cp["outer"]
            if "rate" in o:
                kw["outer_rate"] = float(o["rate"])
            if "threshold" in o:
                kw["outer_threshold"] = float(o["threshold"])
        p_ase = list(SweepConfig.mcf_p_ase)
        eta = list(SweepConfig.mcf_eta)
        offs = list(SweepConfig.mcf_offsets)
        if cp.has_section("mcf"):
            m = cp["mcf"]
            if "p_ase" in m:
                p_ase = [float(m["p_ase"])] * chan.N_CORES
            if "eta_nl" in m:
                eta = [float(m["eta_nl"])] * chan.N_CORES
            if "snr_offset_db" in m:
                v = _floats(m["snr_offset_db"])
                offs = list(v) if len(v) == chan.N_CORES else [v[0]] * chan.N_CORES
        for i in range(chan.N_CORES):
            sec = f"mcf.core{i}"
            if cp.has_section(sec):
                p_ase[i] = cp[sec].getfloat("p_ase", p_ase[i])
                eta[i] = cp[sec].getfloat("eta_nl", eta[i])
                offs[i] = cp[sec].getfloat("snr_offset_db", offs[i])
        kw.update(mcf_p_ase=tuple(p_ase), mcf_eta=tuple(eta), mcf_offsets=tuple(offs))
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return SweepConfig(**kw)


def mcf_model(cfg: SweepConfig) -> chan.McfChannelModel:
    cores = tuple(chan.CoreParams(p, e, o) for p, e, o in zip(cfg.mcf_p_ase, cfg.mcf_eta, cfg.mcf_offsets))
    return chan.McfChannelModel(cores, seed=cfg.seed)


# ---------------------------------------------------------------------------
# scheme construction


@lru_cache(maxsize=None)
def _inner_code(kind: str, rate: str, n: int, seed: int) -> fec.LdpcCode:
    if kind == "hamming84":
        return fec.hamming_8_4()
    return fec.ldpc_build(rate, n, seed)


def build_scheme(cfg: SweepConfig):
    """Return the MLC or BICM configuration object described by ``cfg``."""
    mlc = cfg.scheme == "mlc-vc"
    rate = cfg.ldpc_rate or ("1/2" if mlc else "8/9")
    n = cfg.ldpc_n or (4096 if mlc else 4608)
    inner = _inner_code(cfg.inner, rate, n, cfg.ldpc_seed)
    outer = OuterCodeModel(cfg.outer_rate, 1 / cfg.outer_rate - 1, cfg.outer_threshold)
    if mlc:
        vc = vc_preset(cfg.vc)
        if cfg.channel == "mcf" and vc.dim != chan.MD_DIM:
            raise ValueError(f"mcf channel needs a {chan.MD_DIM}D constellation, got {vc.dim}D")
        return pipeline.make_mlc(vc, inner, cfg.interleaver_seed, outer)
    scheme = pipeline.make_bicm(inner, cfg.interleaver_seed, outer)
    if cfg.channel == "mcf" and (scheme.symbols_per_block * 2) % chan.MD_DIM:
        raise ValueError("BICM block does not fill whole 16D channel symbols")
    return scheme


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class PointResult:
    grid: float
    blocks: int
    pre_errors: tuple[int, ...]
    pre_bits: tuple[int, ...]
    post_errors: tuple[int, ...]
    post_bits: tuple[int, ...]
    errors: int
    bits: int
    symbol_errors: int
    symbols: int
    converged_blocks: int
    eff_snr: float
    max_bits_hit: bool
    wall_time: float = field(default=0.0, compare=False)

    @property
    def pre_ber(self) -> float:
        return sum(self.pre_errors) / sum(self.pre_bits)

    @property
    def post_ber(self) -> float:
        return self.errors / self.bits

    @property
    def converged(self) -> float:
        return self.converged_blocks / self.blocks

    def level_ber(self, which: str, level: int) -> float:
        """BER of bit level 0 (uncoded MRBs) or 1 (coded); a single-level scheme is all level 1."""
        e, b = (self.pre_errors, self.pre_bits) if which == "pre" else (self.post_errors, self.post_bits)
        if len(b) == 1:
            return e[0] / b[0] if level == 1 else math.nan
        return e[level] / b[level]


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    points: tuple[PointResult, ...]

    @property
    def grid(self) -> np.ndarray:
        return np.array([p.grid for p in self.points])

    @property
    def post_ber(self) -> np.ndarray:
        return np.array([p.post_ber for p in self.points])

    @property
    def bits(self) -> np.ndarray:
        return np.array([p.bits for p in self.points])


def _transmit(cfg: SweepConfig, points: np.ndarray, value: float, rngs):
    """Noisy copy of ``points`` (B, S, d) and the per-dimension noise variance."""
    if cfg.channel == "awgn":
        s2 = np.full(points.shape, float(chan.sigma2_from_snr(value)))
    else:
        per_dim = mcf_model(cfg).sigma2(value)
        s2 = np.broadcast_to(per_dim, _channel_dims(cfg, points).shape).reshape(points.shape)
    noise = np.stack([r.standard_normal(points.shape[1:]) for r in rngs])
    return points + noise * np.sqrt(s2), s2


def _channel_dims(cfg: SweepConfig, points: np.ndarray) -> np.ndarray:
    d = chan.MD_DIM if cfg.channel == "mcf" else points.shape[-1]
    return points.reshape(points.shape[0], -1, d)


def run_point(cfg: SweepConfig, index: int) -> PointResult:
    """Run one grid point until the stop rule fires."""
    t0 = time.perf_counter()
    scheme = build_scheme(cfg)
    mlc = cfg.scheme == "mlc-vc"
    encode = pipeline.mlc_encode if mlc else pipeline.bicm_encode
    decode = pipeline.mlc_decode if mlc else pipeline.bicm_demap_decode
    value = cfg.grid[index]
    acc = None
    blocks = errors = bits = conv = 0
    sym_err = syms = 0
    sig = err = None
    block = 0
    done = False
    while not done:
        rngs = [chan.substream(cfg.seed, index, block + j) for j in range(cfg.batch_blocks)]
        info = np.stack([r.integers(0, 2, scheme.info_len, dtype=np.uint8) for r in rngs])
        frame = encode(scheme, info)
        y, s2 = _transmit(cfg, frame.points, value, rngs)
        _, results = decode(scheme, y, s2, frame, cfg.max_iters)
        tx_c = _channel_dims(cfg, frame.points)
        e2_c = _channel_dims(cfg, (y - frame.points) ** 2)
        for j, r in enumerate(results):
            if acc is None:
                acc = [np.zeros(len(r.pre_bits), dtype=np.int64) for _ in range(4)]
                sig = np.zeros(tx_c.shape[-1])
                err = np.zeros(tx_c.shape[-1])
            for a, v in zip(acc, (r.pre_errors, r.pre_bits, r.post_errors, r.post_bits)):
                a += v
            errors += r.info_errors
            bits += r.info_bits
            sym_err += r.symbol_errors
            syms += r.symbols
            conv += r.converged
            sig += np.sum(tx_c[j] ** 2, axis=0)
            err += np.sum(e2_c[j], axis=0)
            blocks += 1
            if errors >= cfg.min_bit_errors or bits >= cfg.max_bits:
                done = True
                break
        block += cfg.batch_blocks
    if cfg.channel == "mcf":
        eff = chan.snr_from_energies(sig, err).average_db
    else:
        eff = chan.snr_from_energies(sig, err, np.zeros(sig.size, dtype=int)).average_db
    return PointResult(
        grid=float(value), blocks=blocks,
        pre_errors=tuple(int(x) for x in acc[0]), pre_bits=tuple(int(x) for x in acc[1]),
        post_errors=tuple(int(x) for x in acc[2]), post_bits=tuple(int(x) for x in acc[3]),
        errors=errors, bits=bits, symbol_errors=sym_err, symbols=syms,
        converged_blocks=conv, eff_snr=float(eff),
        max_bits_hit=errors < cfg.min_bit_errors,
        wall_time=time.perf_counter() - t0,
    )


def _run_point_task(args):
    return run_point(*args)


def run_sweep(cfg: SweepConfig, workers: int | None = None) -> SweepResult:
    """Evaluate every grid point; grid points are distributed over processes."""
    workers = cfg.workers if workers is None else workers
    build_scheme(cfg)  # fail early, and warm caches before forking
    tasks = [(cfg, i) for i in range(len(cfg.grid))]
    if workers == 1 or len(tasks) <= 1:
        points = [run_point(*t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_run_point_task, tasks))
    return SweepResult(cfg, tuple(points))


# ---------------------------------------------------------------------------
# thresholds and rates


@dataclass(frozen=True)
class Crossing:
    crossings: tuple[float, ...]
    interval: tuple[float, float] | None  # region where BER <= threshold


def _floored(ber, bits) -> np.ndarray:
    ber = np.asarray(ber, dtype=float)
    if bits is None:
        floor = np.full(ber.shape, 1e-300)
    else:
        floor = 0.5 / np.asarray(bits, dtype=float)
    return np.where(ber > 0, ber, floor)


def threshold_crossing(grid: Sequence[float], ber: Sequence[float], threshold: float,
                       bits: Sequence[int] | None = None) -> Crossing:
    """Log-linear interpolation of the BER-vs-grid curve at ``threshold``.

    Zero BER entries are replaced by ``0.5 / bits`` when bit counts are
    given. The interval runs from the first falling crossing to the last
    rising one, clipped to the grid ends when the curve starts or ends below
    the threshold; it is None if no point reaches the threshold.
    """
    x = np.asarray(grid, dtype=float)
    b = _floored(ber, bits)
    if x.shape != b.shape or x.size == 0:
        raise ValueError("grid and BER lengths differ")
    above = b > threshold
    lt = math.log10(threshold)
    cross = []
    falls, rises = [], []
    for i in range(len(x) - 1):
        if above[i] == above[i + 1]:
            continue
        l0, l1 = math.log10(b[i]), math.log10(b[i + 1])
        xc = x[i] + (lt - l0) / (l1 - l0) * (x[i + 1] - x[i])
        cross.append(float(xc))
        (falls if above[i] else rises).append(float(xc))
    if above.all():
        return Crossing(tuple(cross), None)
    lo = falls[0] if above[0] else float(x[0])
    hi = rises[-1] if above[-1] else float(x[-1])
    return Crossing(tuple(cross), (lo, hi))


def result_crossing(result: SweepResult, threshold: float | None = None) -> Crossing:
    t = result.config.outer_threshold if threshold is None else threshold
    return threshold_crossing(result.grid, result.post_ber, t, result.bits)


def throughput(rate, baud_gbd: float = 20.0, pols: int = 2, cores: int = 4,
               outer_rate: float = 0.9373) -> float:
    """Net bit rate in Gb/s; ``rate`` is bits per 2D after the inner code."""
    r = rate.inner_info_per_2d if isinstance(rate, fec.InfoRate) else float(rate)
    if min(r, baud_gbd, pols, cores, outer_rate) <= 0:
        raise ValueError("inputs must be positive")
    return r * baud_gbd * pols * cores * outer_rate


def scheme_rates(scheme: str, outer_rate: float = 0.9373) -> fec.InfoRate:
    if scheme == "mlc-vc":
        vc = vc_preset("default16")
        return fec.info_rate(vc.se, vc.m, vc.q, 0.5, outer_rate)
    return fec.info_rate(4.0, 4, 4, 8 / 9, outer_rate)


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _rows(result: SweepResult):
    for p in result.points:
        yield [p.grid, p.pre_ber, p.post_ber, p.errors, p.bits, p.eff_snr, p.converged,
               result.config.seed, p.blocks,
               p.level_ber("pre", 0), p.level_ber("pre", 1),
               p.level_ber("post", 0), p.level_ber("post", 1),
               p.symbol_errors, p.symbols, p.max_bits_hit]


def csv_text(result: SweepResult) -> str:
    cfg = result.config
    lines = [f"# config_hash={cfg.hash()} scheme={cfg.scheme} channel={cfg.channel}",
             ",".join(CSV_COLUMNS + EXTRA_COLUMNS)]
    lines += [",".join(_fmt(v) for v in row) for row in _rows(result)]
    return "\n".join(lines) + "\n"


def gnuplot_text(result: SweepResult) -> str:
    cfg = result.config
    head = ["# config_hash=" + cfg.hash(), "# " + " ".join(CSV_COLUMNS + EXTRA_COLUMNS)]
    body = [" ".join(_fmt(v) for v in row) for row in _rows(result)]
    return "\n".join(head + body) + "\n"


def emit(result: SweepResult, path: str, fmt: str = "csv") -> list[str]:
    """Write ``path`` (CSV) and a sibling ``.dat`` gnuplot file; returns the paths."""
    if fmt not in ("csv", "both", "gnuplot"):
        raise ValueError("format must be csv, gnuplot or both")
    written = []
    base, _ = os.path.splitext(path)
    if fmt in ("csv", "both"):
        with open(path, "w") as f:
            f.write(csv_text(result))
        written.append(path)
    if fmt in ("gnuplot", "both"):
        dat = base + ".dat"
        with open(dat, "w") as f:
            f.write(gnuplot_text(result))
        written.append(dat)
    return written


def read_csv(path: str) -> tuple[dict, list[dict]]:
    """Parse a CSV written by :func:`emit`; returns (header fields, rows)."""
    with open(path) as f:
        lines = [ln.rstrip("\n") for ln in f if ln.strip()]
    meta = dict(tok.split("=", 1) for tok in lines[0][1:].split())
    cols = lines[1].split(",")
    rows = [dict(zip(cols, (float(v) for v in ln.split(",")))) for ln in lines[2:]]
    return meta, rows
