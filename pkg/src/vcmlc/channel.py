"""Channel surrogates: AWGN and a four-core fiber whose per-core SNR follows
``P / (p_ase + eta * P^3)``.

Symbols are assumed normalized to unit energy per 2D, so the noise variance
per real dimension is ``10^(-snr_db/10) / 2``. Core ``c`` of the fiber
carries dimensions ``4c .. 4c+3`` of each 16D symbol (two polarizations,
I and Q).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

N_CORES = 4
DIMS_PER_CORE = 4
MD_DIM = N_CORES * DIMS_PER_CORE


def substream(*key: int) -> np.random.Generator:
    """Counter-style generator keyed by integers, e.g. (seed, point, block)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in key])))


def sigma2_from_snr(snr_db) -> np.ndarray:
    return 10.0 ** (-np.asarray(snr_db, dtype=float) / 10.0) / 2.0


@dataclass(frozen=True)
class AwgnChannel:
    snr_db: float
    seed: int = 0

    @property
    def sigma2(self) -> float:
        return float(sigma2_from_snr(self.snr_db))


def awgn_apply(ch: AwgnChannel, symbols, rng: np.random.Generator | None = None) -> np.ndarray:
    """Add white Gaussian noise; ``rng`` defaults to a stream keyed by ``ch.seed``."""
    x = np.asarray(symbols, dtype=float)
    s2 = ch.sigma2
    if s2 == 0.0:
        return x.copy()
    rng = substream(ch.seed) if rng is None else rng
    return x + rng.normal(scale=math.sqrt(s2), size=x.shape)


@dataclass(frozen=True)
class CoreParams:
    p_ase: float            # mW
    eta_nl: float           # 1/mW^2
    snr_offset_db: float = 0.0

    def __post_init__(self):
        if self.p_ase <= 0 or self.eta_nl <= 0:
            raise ValueError("p_ase and eta_nl must be positive")

    @property
    def optimum_mw(self) -> float:
        return (self.p_ase / (2.0 * self.eta_nl)) ** (1.0 / 3.0)


# peak SNR 15 dB at 0 dBm before the per-core offsets
DEFAULT_ETA = 1.0 / (3.0 * 10 ** 1.5)
DEFAULT_P_ASE = 2.0 * DEFAULT_ETA
DEFAULT_OFFSETS = (0.5, 0.2, -0.2, -0.5)


def default_cores() -> tuple[CoreParams, ...]:
    return tuple(CoreParams(DEFAULT_P_ASE, DEFAULT_ETA, o) for o in DEFAULT_OFFSETS)


@dataclass(frozen=True)
class McfChannelModel:
    cores: tuple[CoreParams, ...] = field(default_factory=default_cores)
    dim_to_core: tuple[int, ...] = tuple(i // DIMS_PER_CORE for i in range(MD_DIM))
    seed: int = 0

    def __post_init__(self):
        if len(self.cores) != N_CORES:
            raise ValueError(f"need {N_CORES} cores")
        counts = np.bincount(np.asarray(self.dim_to_core), minlength=N_CORES)
        if len(self.dim_to_core) != MD_DIM or counts.size != N_CORES or np.any(counts != DIMS_PER_CORE):
            raise ValueError("dim_to_core must split 16 dimensions into 4 groups of 4")

    def snr_db(self, p_launch_dbm: float) -> np.ndarray:
        return np.array([launch_to_snr(c, p_launch_dbm) for c in self.cores])

    def sigma2(self, p_launch_dbm: float) -> np.ndarray:
        """Noise variance for each of the 16 dimensions."""
        return sigma2_from_snr(self.snr_db(p_launch_dbm))[np.asarray(self.dim_to_core)]


def launch_to_snr(core: CoreParams, p_launch_dbm) -> np.ndarray | float:
    """SNR in dB of one core at the given launch power (dBm)."""
    p = 10.0 ** (np.asarray(p_launch_dbm, dtype=float) / 10.0)
    if np.any(~(p > 0)):
        raise ValueError("launch power must be positive")
    snr = 10.0 * np.log10(p / (core.p_ase + core.eta_nl * p ** 3)) + core.snr_offset_db
    return float(snr) if snr.ndim == 0 else snr


def mcf_apply(model: McfChannelModel, md_symbols, p_launch_dbm: float,
              rng: np.random.Generator | None = None) -> np.ndarray:
    """Add per-core noise to a sequence of 16D symbols ``(..., 16)``."""
    x = np.asarray(md_symbols, dtype=float)
    if x.shape[-1] != MD_DIM:
        raise ValueError(f"expected {MD_DIM}D symbols, got {x.shape[-1]}")
    rng = substream(model.seed) if rng is None else rng
    return x + rng.normal(size=x.shape) * np.sqrt(model.sigma2(p_launch_dbm))


@dataclass(frozen=True)
class SnrEstimate:
    per_core_db: tuple[float, ...]
    average_db: float


def _db(signal: float, noise: float) -> float:
    return math.inf if noise == 0 else 10.0 * math.log10(signal / noise)


def effective_snr(tx, rx, dim_to_core=None) -> SnrEstimate:
    """Data-aided SNR per core; the average is taken over linear SNRs.

    Returns ``inf`` entries when the error energy is zero.
    """
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    if tx.shape != rx.shape:
        raise ValueError("tx and rx shapes differ")
    if tx.size == 0:
        raise ValueError("empty input")
    sig = np.sum((tx ** 2).reshape(-1, tx.shape[-1]), axis=0)
    err = np.sum(((rx - tx) ** 2).reshape(-1, tx.shape[-1]), axis=0)
    return snr_from_energies(sig, err, dim_to_core)


def snr_from_energies(signal, error, dim_to_core=None) -> SnrEstimate:
    """Per-core SNR from per-dimension signal and error energy sums."""
    if dim_to_core is None:
        dim_to_core = McfChannelModel.dim_to_core
    core = np.asarray(dim_to_core)
    signal = np.asarray(signal, dtype=float)
    error = np.asarray(error, dtype=float)
    if signal.shape != core.shape or error.shape != core.shape:
        raise ValueError("energy vectors must match dim_to_core")
    per = tuple(_db(signal[core == c].sum(), error[core == c].sum()) for c in np.unique(core))
    if any(math.isinf(v) for v in per):
        return SnrEstimate(per, math.inf)
    return SnrEstimate(per, 10 * math.log10(float(np.mean([10 ** (v / 10) for v in per]))))
