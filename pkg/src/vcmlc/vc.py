"""Voronoi constellations and their bit labeling.

A constellation is the set of coset representatives ``(Λc + d) mod Λs`` taken
inside the Voronoi cell of the shaping lattice. Labels are split into

* LRBs: one parity bit per dimension, ``a_i mod 2`` of the coding-lattice
  coordinates ``a``. Requires ``Λs ⊆ 2Λc`` so parity is constant on cosets.
* MRBs: the remaining ``m - q`` bits, a mixed-radix number whose digits live
  in ``Z / (M_i / 2)`` with ``M_i`` the Smith invariants of ``Λc / Λs``.
  Digits are filled dimension-major, little-endian within a digit.

Boundary cosets have several minimum-energy representatives. The quantizer
alone would pick the lexicographically smallest lattice point, which biases
the mean; instead cosets whose first LRB is 1 are reduced through ``-u``.
Negation flips every parity, so ``C`` and ``-C`` get mirrored representatives
and the constellation stays symmetric about the origin.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import intmat
from .lattice import (Lattice, checkerboard, coset_count,
                      integer_lattice, lattice_from_config, lattice_to_config,
                      quantize, shaping_16d, smith_radices)

GRID_TOL = 1e-9
CALIBRATION_SEED = 20240901
CALIBRATION_SAMPLES = 1 << 18


@dataclass(frozen=True, eq=False)
class VcSpec:
    name: str
    lat_c: Lattice
    lat_s: Lattice
    offset: np.ndarray = field(repr=False)
    m: int
    q: int
    radices: tuple[int, ...]
    scale: float
    # label <-> coset transforms derived from the Smith decomposition
    to_coset: np.ndarray = field(repr=False)    # digits -> coding-lattice coordinates
    from_coset: np.ndarray = field(repr=False)  # coordinates -> digits (before reduction)
    calibration_seed: int = CALIBRATION_SEED

    @property
    def dim(self) -> int:
        return self.lat_c.dim

    @property
    def digit_radix(self) -> np.ndarray:
        return np.array(self.radices, dtype=np.int64) // 2

    @property
    def digit_bits(self) -> np.ndarray:
        return np.array([int(r).bit_length() - 1 for r in self.digit_radix])

    @property
    def se(self) -> float:
        """Bits per 2D symbol."""
        return self.m / (self.dim / 2)


@dataclass(frozen=True)
class BitLabel:
    lrb: tuple[int, ...]
    mrb: tuple[int, ...]


@dataclass(frozen=True)
class VcSymbol:
    point: np.ndarray
    integers: np.ndarray


@dataclass(frozen=True)
class ConstellationStats:
    mean: np.ndarray
    energy_per_2d: float
    se: float


def build_spec(name: str, lat_c: Lattice, lat_s: Lattice, m: int, q: int, offset=0.5,
               scale: float | None = None, calibration_samples: int = CALIBRATION_SAMPLES,
               calibration_seed: int = CALIBRATION_SEED) -> VcSpec:
    """Validate a lattice pair and derive the labeling; calibrate ``scale`` if not given."""
    n = lat_c.dim
    if not 0 < q <= m:
        raise ValueError("need 0 < q <= m")
    if q != n:
        raise ValueError("per-dimension parity labeling needs q == dim")
    count = coset_count(lat_c, lat_s)
    if count != 2 ** m:
        raise ValueError(f"coset count {count} != 2^{m}")
    snf = smith_radices(lat_c, lat_s)
    if any(r % 2 for r in snf.radices):
        raise ValueError("shaping lattice must lie in 2 * coding lattice")
    V = snf.V
    Vinv = intmat.inverse(V)
    to_coset = np.array([[int(x) for x in row] for row in Vinv], dtype=np.int64)
    from_coset = np.array(V, dtype=np.int64)
    off = np.broadcast_to(np.asarray(offset, dtype=float), (n,)).copy()
    spec = VcSpec(name, lat_c, lat_s, off, m, q, snf.radices, 1.0, to_coset, from_coset,
                  calibration_seed)
    if scale is None:
        stats = constellation_stats(spec, calibration_samples, seed=calibration_seed)
        scale = 1.0 / np.sqrt(stats.energy_per_2d)
    return _with_scale(spec, scale)


def _with_scale(spec: VcSpec, scale: float) -> VcSpec:
    return dataclasses.replace(spec, scale=float(scale))


@lru_cache(maxsize=None)
def vc_default_16d() -> VcSpec:
    """Z^16 / 2(RM(0,4) + 2RM(2,4) + 4Z^16), m = 36, q = 16, offset 1/2."""
    spec = build_spec("default16", integer_lattice(16), shaping_16d(), m=36, q=16)
    if coset_count(spec.lat_c, spec.lat_s) != 2 ** 36:
        raise RuntimeError("default 16D lattice table is broken")
    return spec


TOY_PRESETS = ("z2_4z2", "z4_4d4")


@lru_cache(maxsize=None)
def vc_toy(name: str) -> VcSpec:
    if name == "z2_4z2":
        return build_spec(name, integer_lattice(2), integer_lattice(2, 4), m=4, q=2)
    if name == "z4_4d4":
        return build_spec(name, integer_lattice(4), checkerboard(4, 4), m=9, q=4)
    raise ValueError(f"unknown toy preset {name!r}")


def vc_preset(name: str) -> VcSpec:
    return vc_default_16d() if name == "default16" else vc_toy(name)


# ---------------------------------------------------------------------------
# mapping


def _digits_from_bits(spec: VcSpec, mrb: np.ndarray) -> np.ndarray:
    widths = spec.digit_bits
    out = np.zeros((mrb.shape[0], spec.dim), dtype=np.int64)
    pos = 0
    for i, w in enumerate(widths):
        for b in range(w):
            out[:, i] |= mrb[:, pos + b].astype(np.int64) << b
        pos += w
    return out


def _bits_from_digits(spec: VcSpec, digits: np.ndarray) -> np.ndarray:
    out = np.zeros((digits.shape[0], spec.m - spec.q), dtype=np.uint8)
    pos = 0
    for i, w in enumerate(spec.digit_bits):
        for b in range(w):
            out[:, pos + b] = (digits[:, i] >> b) & 1
        pos += w
    return out


def encode_bits(spec: VcSpec, lrb: np.ndarray, mrb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batch encoder: ``(N, q)`` LRBs and ``(N, m-q)`` MRBs -> (points, integer labels)."""
    lrb = np.atleast_2d(np.asarray(lrb))
    mrb = np.asarray(mrb).reshape(lrb.shape[0], -1)
    if lrb.shape[1] != spec.q or mrb.shape[1] != spec.m - spec.q:
        raise ValueError("label lengths do not match the spec")
    t = _digits_from_bits(spec, mrb) @ spec.to_coset
    a = lrb.astype(np.int64) + 2 * t
    u = a @ spec.lat_c.basis_f + spec.offset
    return spec.scale * _reduce(spec, u, lrb[:, 0] == 1), a


def _reduce(spec: VcSpec, u: np.ndarray, mirrored: np.ndarray) -> np.ndarray:
    sign = np.where(mirrored, -1.0, 1.0)[:, None]
    v = sign * u
    return sign * (v - quantize(spec.lat_s, v))


def decode_points(spec: VcSpec, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`encode_bits` for points lying on the constellation grid.

    Any representative of the right ``Λs`` coset is accepted, so the
    canonical (minimum-energy) form is not required.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a_real = (pts / spec.scale - spec.offset) @ spec.lat_c.inverse_f
    a = np.rint(a_real)
    if np.any(np.abs(a_real - a) > GRID_TOL * np.maximum(1.0, np.abs(a))):
        raise ValueError("point is not on the constellation grid")
    a = a.astype(np.int64)
    lrb = (a & 1).astype(np.uint8)
    t = (a - lrb) // 2
    digits = np.mod(t @ spec.from_coset, spec.digit_radix)
    return lrb, _bits_from_digits(spec, digits)


def encode(spec: VcSpec, label: BitLabel) -> VcSymbol:
    if len(label.lrb) != spec.q or len(label.mrb) != spec.m - spec.q:
        raise ValueError("label lengths do not match the spec")
    pts, a = encode_bits(spec, np.array([label.lrb]), np.array([label.mrb]))
    return VcSymbol(pts[0], a[0])


def decode(spec: VcSpec, symbol: VcSymbol) -> BitLabel:
    lrb, mrb = decode_points(spec, symbol.point)
    return BitLabel(tuple(int(x) for x in lrb[0]), tuple(int(x) for x in mrb[0]))


def canonical_points(spec: VcSpec, points: np.ndarray) -> np.ndarray:
    """Map grid points to their minimum-energy ``Λs`` representative.

    Inputs are snapped to the exact grid first, so boundary ties are broken
    by the tie rule rather than by rounding noise.
    """
    a = np.rint((np.atleast_2d(points) / spec.scale - spec.offset) @ spec.lat_c.inverse_f)
    u = a @ spec.lat_c.basis_f + spec.offset
    return spec.scale * _reduce(spec, u, (a[:, 0].astype(np.int64) & 1) == 1)


def random_labels(spec: VcSpec, n: int, rng: np.random.Generator):
    lrb = rng.integers(0, 2, size=(n, spec.q), dtype=np.uint8)
    mrb = rng.integers(0, 2, size=(n, spec.m - spec.q), dtype=np.uint8)
    return lrb, mrb


def all_labels(spec: VcSpec):
    """Every label of a small constellation, in integer order (LRBs low)."""
    if spec.m > 20:
        raise ValueError("constellation too large to enumerate")
    idx = np.arange(2 ** spec.m)
    bits = ((idx[:, None] >> np.arange(spec.m)) & 1).astype(np.uint8)
    return bits[:, :spec.q], bits[:, spec.q:]


def constellation_stats(spec: VcSpec, sample_budget: int = 1 << 20, seed: int | None = None,
                        unscaled: bool = False) -> ConstellationStats:
    """Mean and average energy per 2D; exhaustive for constellations up to 2^16 points."""
    if spec.m <= 16:
        lrb, mrb = all_labels(spec)
    else:
        if sample_budget < 1000:
            raise ValueError("sample_budget must be at least 1000")
        rng = np.random.default_rng(spec.calibration_seed if seed is None else seed)
        lrb, mrb = random_labels(spec, sample_budget, rng)
    pts, _ = encode_bits(spec, lrb, mrb)
    if unscaled:
        pts = pts / spec.scale
    mean = pts.mean(axis=0)
    energy = float(np.mean(np.sum(pts ** 2, axis=1))) / (spec.dim / 2)
    return ConstellationStats(mean, energy, spec.se)


# ---------------------------------------------------------------------------
# config text


def spec_to_config(spec: VcSpec) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    preset = spec.name if spec.name in ("default16",) + TOY_PRESETS else "custom"
    cp["vc"] = {
        "preset": preset,
        "m": str(spec.m),
        "q": str(spec.q),
        "offset": " ".join(repr(float(x)) for x in spec.offset),
        "scale": repr(spec.scale),
        "calibration_seed": str(spec.calibration_seed),
    }
    if preset == "custom":
        cp["vc.lat_c"] = lattice_to_config(spec.lat_c)
        cp["vc.lat_s"] = lattice_to_config(spec.lat_s)
    return cp


def spec_from_config(cp: configparser.ConfigParser) -> VcSpec:
    sec = cp["vc"]
    preset = sec.get("preset", "custom")
    if preset != "custom":
        return vc_preset(preset)
    lat_c = lattice_from_config(cp["vc.lat_c"])
    lat_s = lattice_from_config(cp["vc.lat_s"])
    offset = [float(Fraction(x)) for x in sec.get("offset", "0.5").split()]
    scale = sec.get("scale")
    return build_spec("custom", lat_c, lat_s, int(sec["m"]), int(sec["q"]),
                      offset if len(offset) > 1 else offset[0],
                      None if scale is None else float(scale),
                      calibration_seed=sec.getint("calibration_seed", CALIBRATION_SEED))
