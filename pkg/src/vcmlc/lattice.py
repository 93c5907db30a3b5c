"""Lattices, closest-point search and coset arithmetic.

A :class:`Lattice` keeps its row basis as exact rationals. Quantization works
in floating point, with one of four strategies picked by ``decoder_hint``:

``round``
    per-coordinate rounding, for diagonal bases only;
``sphere``
    Schnorr-Euchner enumeration on an LLL-reduced basis;
``brute``
    exhaustive search in an adaptive ball (oracle use, dim <= 6);
``code-formula``
    batched decoder for lattices ``s * (C_0 + 2 C_1 + ... + 2^L Z^n)``
    built from nested binary codes.

Equidistant candidates are resolved towards the lexicographically smallest
point, which makes every strategy agree on boundary inputs independent of the
chosen basis.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from . import intmat
from .codes import even_weight, gf2_rank, reed_muller, trellis_for

HINTS = ("round", "sphere", "brute", "code-formula")
_TIE_TOL = 1e-9
_CHUNK = 2048


@dataclass(frozen=True, eq=False)
class CodeFormula:
    """``scale * (C_0 + 2 C_1 + ... + 2^(L-1) C_(L-1) + 2^L Z^n)``."""

    scale: Fraction
    codes: tuple  # binary generator matrices, outermost level last

    @property
    def n(self) -> int:
        return self.codes[0].shape[1]

    def generators(self) -> list[list[int]]:
        levels = len(self.codes)
        n = self.n
        gens = []
        for j, g in enumerate(self.codes):
            gens += [[int(x) << j for x in row] for row in g]
        gens += [[(1 << levels) * int(i == k) for k in range(n)] for i in range(n)]
        return gens


@dataclass(frozen=True, eq=False)
class Lattice:
    dim: int
    basis: tuple[tuple[Fraction, ...], ...]
    det_abs: Fraction
    decoder_hint: str = "sphere"
    structure: CodeFormula | None = None
    name: str = ""

    def __post_init__(self):
        if self.decoder_hint not in HINTS:
            raise ValueError(f"unknown decoder hint {self.decoder_hint!r}")
        if len(self.basis) != self.dim or any(len(r) != self.dim for r in self.basis):
            raise ValueError("basis must be dim x dim")
        if self.det_abs <= 0:
            raise ValueError("basis is not full rank")
        if self.decoder_hint == "round" and any(
            self.basis[i][j] != 0 for i in range(self.dim) for j in range(self.dim) if i != j
        ):
            raise ValueError("round decoding needs a diagonal basis")
        if self.decoder_hint == "code-formula" and self.structure is None:
            raise ValueError("code-formula decoding needs a structure")

    @cached_property
    def basis_f(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self.basis])

    @cached_property
    def inverse_f(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in intmat.inverse(self.basis)])

    @cached_property
    def _reduced(self):
        red, T = intmat.lll_reduce(self.basis)
        Bf = np.array([[float(x) for x in r] for r in red])
        Q, R = np.linalg.qr(Bf.T)
        return R.T, Q, np.array(T, dtype=np.int64)

    def label_of(self, points: np.ndarray) -> np.ndarray:
        return np.rint(np.asarray(points) @ self.inverse_f).astype(np.int64)


@dataclass(frozen=True)
class LatticePoint:
    coords: tuple[Fraction, ...]
    integer_label: tuple[int, ...]


@dataclass(frozen=True)
class QuantizeResult:
    nearest: LatticePoint
    residual: np.ndarray = field(repr=False)
    dist2: float


# ---------------------------------------------------------------------------
# construction


def make_lattice(basis: Sequence[Sequence], decoder_hint: str = "sphere",
                 structure: CodeFormula | None = None, name: str = "") -> Lattice:
    b = tuple(tuple(Fraction(x) for x in row) for row in basis)
    return Lattice(len(b), b, abs(intmat.det(b)), decoder_hint, structure, name)


def integer_lattice(n: int, scale=1) -> Lattice:
    s = Fraction(scale)
    return make_lattice([[s * (i == j) for j in range(n)] for i in range(n)], "round",
                        name=f"{s}Z{n}" if s != 1 else f"Z{n}")


def _check_schur(codes) -> None:
    """Nesting and Schur-product closure, which make the code formula a lattice."""
    for j, g in enumerate(codes[:-1]):
        nxt = codes[j + 1]
        r = gf2_rank(nxt)
        prods = [g[a] & g[b] for a in range(len(g)) for b in range(a, len(g))]
        if gf2_rank(np.vstack([nxt] + [np.array(prods)])) != r:
            raise ValueError("code formula is not closed under addition")


def code_formula_lattice(codes: Sequence[np.ndarray], scale=1, name: str = "",
                         decoder_hint: str = "code-formula") -> Lattice:
    """Lattice from nested binary codes; checks that the code formula closes."""
    cf = CodeFormula(Fraction(scale), tuple(np.asarray(c, dtype=np.uint8) for c in codes))
    _check_schur(cf.codes)
    basis = intmat.lattice_basis(cf.generators())
    n = cf.n
    if len(basis) != n:
        raise ValueError("code formula does not span a full-rank lattice")
    k_total = sum(gf2_rank(c) for c in cf.codes)
    expected = Fraction(2) ** (n * len(cf.codes) - k_total)
    if abs(intmat.det(basis)) != expected:
        # the span is strictly larger than the code-formula set
        raise ValueError("code formula is not closed under addition")
    scaled = [[cf.scale * x for x in row] for row in basis]
    return make_lattice(scaled, decoder_hint, cf, name)


def checkerboard(n: int, scale=1, decoder_hint: str = "code-formula") -> Lattice:
    """``scale * D_n``."""
    return code_formula_lattice([even_weight(n)], scale, f"{scale}D{n}", decoder_hint)


def shaping_16d() -> Lattice:
    """``2 * (RM(0,4) + 2 RM(2,4) + 4 Z^16)``, the default 16D shaping lattice."""
    return code_formula_lattice([reed_muller(0, 4), reed_muller(2, 4)], 2, "2(RM04+2RM24+4Z16)")


def with_hint(lat: Lattice, hint: str) -> Lattice:
    return dataclasses.replace(lat, decoder_hint=hint)


def lattice_from_config(cfg: Mapping[str, str]) -> Lattice:
    """Build a lattice from key/value config entries.

    Keys: ``type`` (Z | D | explicit | code_formula | shaping16), ``dim``,
    ``scale`` (rational string), ``basis`` (rows separated by ``;``),
    ``codes`` (e.g. ``RM(0,4) RM(2,4)``), optional ``hint``.
    """
    kind = cfg.get("type", "explicit").strip()
    scale = Fraction(cfg.get("scale", "1").strip())
    hint = cfg.get("hint")
    if kind == "Z":
        lat = integer_lattice(int(cfg["dim"]), scale)
    elif kind == "D":
        lat = checkerboard(int(cfg["dim"]), scale)
    elif kind == "shaping16":
        lat = shaping_16d()
    elif kind == "code_formula":
        codes = []
        for tok in cfg["codes"].split():
            tok = tok.strip()
            if tok.startswith("RM(") and tok.endswith(")"):
                r, m = (int(x) for x in tok[3:-1].split(","))
                codes.append(reed_muller(r, m))
            elif tok.startswith("EW(") and tok.endswith(")"):
                codes.append(even_weight(int(tok[3:-1])))
            else:
                raise ValueError(f"unknown code {tok!r}")
        lat = code_formula_lattice(codes, scale)
    elif kind == "explicit":
        rows = [[Fraction(x) * scale for x in row.split()] for row in cfg["basis"].split(";") if row.strip()]
        lat = make_lattice(rows, hint or "sphere")
    else:
        raise ValueError(f"unknown lattice type {kind!r}")
    return with_hint(lat, hint.strip()) if hint else lat


def lattice_to_config(lat: Lattice) -> dict[str, str]:
    rows = "; ".join(" ".join(str(x) for x in row) for row in lat.basis)
    return {"type": "explicit", "basis": rows, "hint": "sphere" if lat.decoder_hint == "code-formula" else lat.decoder_hint}


# ---------------------------------------------------------------------------
# closest point search


def _check_input(lat: Lattice, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != lat.dim:
        raise ValueError(f"expected vectors of length {lat.dim}, got {y.shape[-1]}")
    if not np.all(np.isfinite(y)):
        raise ValueError("input must be finite")
    return y


def _lex_best(cands: list[tuple[float, tuple[int, ...]]], basis: np.ndarray) -> tuple[int, ...]:
    """Among (near-)equidistant candidate labels pick the lexicographically smallest point."""
    best = min(d for d, _ in cands)
    tol = _TIE_TOL * (1.0 + best)
    tied = {lab for d, lab in cands if d <= best + tol}
    return min(tied, key=lambda lab: tuple(np.asarray(lab, dtype=float) @ basis))


def _sphere_labels(lat: Lattice, y: np.ndarray) -> tuple[int, ...]:
    """Schnorr-Euchner search; returns the label (w.r.t. ``lat.basis``) of the nearest point."""
    L, Q, T = lat._reduced
    n = lat.dim
    r = y @ Q
    g = L
    u = [0] * n
    c = [0.0] * n
    step = [0] * n
    d = [0.0] * (n + 1)
    best = math.inf
    found: list[tuple[float, tuple[int, ...]]] = []

    def enter(j):
        s = r[j] - sum(u[i] * g[i, j] for i in range(j + 1, n))
        c[j] = s / g[j, j]
        u[j] = int(round(c[j]))
        step[j] = 1 if c[j] >= u[j] else -1

    def advance(j):
        u[j] += step[j]
        step[j] = -step[j] - (1 if step[j] > 0 else -1)

    j = n - 1
    enter(j)
    while True:
        diff = (u[j] - c[j]) * g[j, j]
        nd = d[j + 1] + diff * diff
        if nd <= best + _TIE_TOL * (1.0 + best):
            if j == 0:
                if nd < best:
                    best = nd
                found.append((nd, tuple(u)))
                advance(0)
            else:
                d[j] = nd
                j -= 1
                enter(j)
        else:
            j += 1
            if j == n:
                break
            advance(j)
    cands = []
    for dist, lab in found:
        orig = tuple(int(x) for x in np.asarray(lab, dtype=np.int64) @ T)
        cands.append((dist, orig))
    return _lex_best(cands, lat.basis_f)


def _brute_labels(lat: Lattice, y: np.ndarray) -> tuple[int, ...]:
    if lat.dim > 6:
        raise ValueError("brute-force search is limited to dim <= 6")
    B = lat.basis_f
    Binv = lat.inverse_f
    centre = y @ Binv
    col_norm = np.linalg.norm(Binv, axis=0)
    radius = 0.5 * math.sqrt(float(np.sum(B * B)))  # covering radius upper bound
    while True:
        lo = np.floor(centre - radius * col_norm).astype(int)
        hi = np.ceil(centre + radius * col_norm).astype(int)
        grid = np.array(list(itertools.product(*[range(a, b + 1) for a, b in zip(lo, hi)])))
        pts = grid @ B
        dist = np.sum((pts - y) ** 2, axis=1)
        inside = dist <= radius * radius
        if inside.any():
            return _lex_best([(float(dd), tuple(int(v) for v in lab))
                              for dd, lab in zip(dist[inside], grid[inside])], B)
        radius *= 2


def _round_points(lat: Lattice, y: np.ndarray) -> np.ndarray:
    diag = np.diag(lat.basis_f)
    return _round_half_down(y / diag) * diag


def _round_half_down(x):
    # the smaller candidate wins exact ties
    return np.ceil(x - 0.5)


def _lex_less(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a != b
    idx = np.argmax(diff, axis=1)
    rows = np.arange(a.shape[0])
    return diff.any(axis=1) & (a[rows, idx] < b[rows, idx])


def _code_formula_points(lat: Lattice, y: np.ndarray) -> np.ndarray:
    """Batched exact decoder for code-formula lattices."""
    cf = lat.structure
    s = float(cf.scale)
    t0 = y / s
    *inner, last = cf.codes
    top = float(1 << (len(cf.codes) - 1))
    trellis = trellis_for(last)
    combos = [np.zeros(cf.n)]
    for j, g in enumerate(inner):
        k = g.shape[0]
        words = (((np.arange(2 ** k)[:, None] >> np.arange(k)) & 1) @ g) % 2
        combos = [c + (1 << j) * w for c in combos for w in words]
    combos = list({tuple(c): c for c in combos}.values())
    best_pts = best_cost = None
    for base in combos:
        t = (t0 - base) / top
        ev = 2.0 * _round_half_down(t / 2.0)
        od = 2.0 * _round_half_down((t - 1.0) / 2.0) + 1.0
        bits, _ = trellis.decode((t - ev) ** 2, (t - od) ** 2, od < ev)
        pts = (np.where(bits == 1, od, ev) * top + base) * s
        cost = np.sum((pts - y) ** 2, axis=1)
        if best_pts is None:
            best_pts, best_cost = pts, cost
            continue
        better = (cost < best_cost) | ((cost == best_cost) & _lex_less(pts, best_pts))
        best_pts = np.where(better[:, None], pts, best_pts)
        best_cost = np.where(better, cost, best_cost)
    return best_pts


def quantize(lat: Lattice, y) -> np.ndarray:
    """Nearest lattice points for a batch ``(N, dim)`` (or a single vector)."""
    y = _check_input(lat, y)
    single = y.ndim == 1
    Y = np.atleast_2d(y)
    hint = lat.decoder_hint
    if hint == "round":
        out = _round_points(lat, Y)
    elif hint == "code-formula":
        out = np.concatenate([_code_formula_points(lat, Y[i:i + _CHUNK])
                              for i in range(0, len(Y), _CHUNK)]) if len(Y) else Y.copy()
    else:
        fn = _sphere_labels if hint == "sphere" else _brute_labels
        out = np.array([np.asarray(fn(lat, row), dtype=float) @ lat.basis_f for row in Y])
    return out[0] if single else out


def closest_point(lat: Lattice, y) -> QuantizeResult:
    y = _check_input(lat, y)
    if y.ndim != 1:
        raise ValueError("closest_point takes a single vector; use quantize for batches")
    if lat.decoder_hint == "brute":
        label = _brute_labels(lat, y)
    elif lat.decoder_hint == "sphere":
        label = _sphere_labels(lat, y)
    else:
        label = tuple(int(v) for v in lat.label_of(quantize(lat, y)))
    coords = tuple(sum((Fraction(l) * lat.basis[i][j] for i, l in enumerate(label)), Fraction(0))
                   for j in range(lat.dim))
    residual = y - np.array([float(c) for c in coords])
    return QuantizeResult(LatticePoint(coords, label), residual, float(residual @ residual))


def mod_lattice(lat_s: Lattice, x) -> np.ndarray:
    """``x - Q(x)``: the representative of ``x`` in the Voronoi cell of ``lat_s``."""
    x = _check_input(lat_s, x)
    return x - quantize(lat_s, x)


# ---------------------------------------------------------------------------
# sublattices and cosets


@dataclass(frozen=True)
class SmithRadices:
    radices: tuple[int, ...]
    relation: tuple[tuple[int, ...], ...]  # lat_s basis in lat_c coordinates
    U: tuple[tuple[int, ...], ...]
    V: tuple[tuple[int, ...], ...]


def relation_matrix(lat_c: Lattice, lat_s: Lattice) -> list[list[int]]:
    """Integer matrix ``S`` with ``lat_s.basis == S @ lat_c.basis``."""
    if lat_c.dim != lat_s.dim:
        raise ValueError("dimension mismatch")
    S = intmat.matmul(lat_s.basis, intmat.inverse(lat_c.basis))
    if any(x.denominator != 1 for row in S for x in row):
        raise ValueError("lat_s is not a sublattice of lat_c")
    return [[int(x) for x in row] for row in S]


def is_sublattice(lat_c: Lattice, lat_s: Lattice) -> bool:
    try:
        relation_matrix(lat_c, lat_s)
    except ValueError:
        return False
    return True


def coset_count(lat_c: Lattice, lat_s: Lattice) -> int:
    relation_matrix(lat_c, lat_s)
    ratio = lat_s.det_abs / lat_c.det_abs
    if ratio.denominator != 1:
        raise ValueError("determinant ratio is not an integer")
    return int(ratio)


def smith_radices(lat_c: Lattice, lat_s: Lattice) -> SmithRadices:
    """Invariant factors of ``lat_c / lat_s`` with transforms ``U @ S @ V = diag``."""
    S = relation_matrix(lat_c, lat_s)
    diag, U, V = intmat.smith_normal_form(S)
    return SmithRadices(tuple(diag), tuple(map(tuple, S)), tuple(map(tuple, U)), tuple(map(tuple, V)))
