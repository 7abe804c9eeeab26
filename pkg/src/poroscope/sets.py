"""Self-similar example sets and their dyadic-cube rasters.

A raster at depth ``j`` is the set of closed dyadic cubes of side ``2**-j`` in
``[0, 1]**n`` that meet an (over-approximation of the) set, stored as a sorted
integer array of cube coordinates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CompositionError, DomainError, InputError, ResourceError

MAX_BOXES = 20_000_000
MAX_DENSE_CELLS = 1 << 27
_EDGE_EPS = 1e-9


@dataclass(frozen=True)
class Similitude:
    """Axis-aligned homothety ``x -> ratio * x + translation`` mapping [0,1]^n into itself."""

    ratio: float
    translation: tuple

    def __post_init__(self):
        if not 0.0 < self.ratio < 1.0:
            raise DomainError(f"contraction ratio must lie in (0, 1), got {self.ratio}")
        t = tuple(float(v) for v in self.translation)
        tol = 1e-12
        if any(v < -tol or v + self.ratio > 1.0 + tol for v in t):
            raise DomainError("similitude image must stay inside the unit cube")
        object.__setattr__(self, "translation", t)

    @property
    def n(self) -> int:
        return len(self.translation)

    def __call__(self, x):
        return self.ratio * np.asarray(x, dtype=float) + np.asarray(self.translation)


@dataclass(frozen=True)
class IfsSystem:
    n: int
    maps: tuple
    osc: bool = True

    def __post_init__(self):
        maps = tuple(self.maps)
        if not maps:
            raise InputError("an IFS needs at least one map")
        if any(f.n != self.n for f in maps):
            raise InputError("all similitudes must act on the same dimension")
        object.__setattr__(self, "maps", maps)

    @property
    def ratios(self) -> list[float]:
        return [f.ratio for f in self.maps]

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array(self.ratios), np.array([f.translation for f in self.maps], dtype=float))


@dataclass(frozen=True, eq=False)
class DyadicCubeSet:
    n: int
    depth: int
    cells: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.cells, dtype=np.int64).reshape(-1, self.n)
        side = 1 << self.depth
        if c.size and (c.min() < 0 or c.max() >= side):
            raise InputError("cell coordinates out of range for this depth")
        c = _canonical(c, self.depth) if len(c) else c
        c.setflags(write=False)
        object.__setattr__(self, "cells", c)

    @property
    def side(self) -> int:
        return 1 << self.depth

    @property
    def h(self) -> float:
        return 2.0 ** -self.depth

    def __len__(self) -> int:
        return len(self.cells)

    def __eq__(self, other):
        return (
            isinstance(other, DyadicCubeSet)
            and self.n == other.n
            and self.depth == other.depth
            and np.array_equal(self.cells, other.cells)
        )

    def __hash__(self):
        return hash((self.n, self.depth, self.cells.tobytes()))

    def centers(self) -> np.ndarray:
        return (self.cells + 0.5) * self.h

    def to_mask(self) -> np.ndarray:
        total = self.side ** self.n
        if total > MAX_DENSE_CELLS:
            raise ResourceError(f"dense grid of {total} cells exceeds the memory budget")
        mask = np.zeros((self.side,) * self.n, dtype=bool)
        if len(self.cells):
            mask[tuple(self.cells.T)] = True
        return mask

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "DyadicCubeSet":
        depth = int(round(math.log2(mask.shape[0])))
        if any(s != 1 << depth for s in mask.shape):
            raise InputError("mask must be a cube with power-of-two side")
        return cls(mask.ndim, depth, np.argwhere(mask))

    def ancestors(self, depth: int) -> np.ndarray:
        if depth > self.depth or depth < 0:
            raise InputError(f"depth {depth} outside [0, {self.depth}]")
        return _canonical(self.cells >> (self.depth - depth), depth)

    def coarsen(self, depth: int) -> "DyadicCubeSet":
        return DyadicCubeSet(self.n, depth, self.ancestors(depth))

    def contains_point(self, x) -> bool:
        idx = np.floor(np.asarray(x, dtype=float) / self.h).astype(np.int64)
        idx = np.clip(idx, 0, self.side - 1)
        return bool(np.any(np.all(self.cells == idx, axis=1)))


def _canonical(cells: np.ndarray, depth: int) -> np.ndarray:
    """Unique rows in lexicographic order."""
    n = cells.shape[1]
    if n * depth > 62:
        return np.unique(cells, axis=0)
    key = np.zeros(len(cells), dtype=np.int64)
    for col in range(n):
        key = (key << depth) | cells[:, col]
    key = np.unique(key)
    out = np.empty((len(key), n), dtype=np.int64)
    mask = (1 << depth) - 1
    for col in range(n - 1, -1, -1):
        out[:, col] = key & mask
        key = key >> depth
    return out


@dataclass(frozen=True, eq=False)
class NaturalMeasure:
    base: DyadicCubeSet
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(self.base),) or np.any(w < 0):
            raise InputError("weights must be nonnegative, one per cell")
        if abs(w.sum() - 1.0) > 1e-9:
            raise InputError("weights must sum to 1")
        object.__setattr__(self, "weights", w)

    def centers(self) -> np.ndarray:
        return self.base.centers()


# --- constructors -------------------------------------------------------------


def cantor_ifs(lam: float) -> IfsSystem:
    if not 0.0 < lam < 0.5:
        raise DomainError(f"lambda must lie in (0, 1/2), got {lam}")
    return IfsSystem(1, (Similitude(lam, (0.0,)), Similitude(lam, (1.0 - lam,))))


def cube_ifs(n: int) -> IfsSystem:
    """2^n half-size maps whose attractor is the full cube [0,1]^n."""
    maps = tuple(Similitude(0.5, v) for v in itertools.product((0.0, 0.5), repeat=n))
    return IfsSystem(n, maps)


def interval_ifs() -> IfsSystem:
    return cube_ifs(1)


def point_ifs(point, ratio: float = 0.5) -> IfsSystem:
    """Two copies of the contraction fixing ``point``; the attractor is that point."""
    p = np.asarray(point, dtype=float)
    f = Similitude(ratio, tuple((1.0 - ratio) * p))
    return IfsSystem(len(p), (f, f), osc=False)


def _common_ratio(F: IfsSystem) -> float:
    r = F.ratios
    if max(r) - min(r) > 1e-12:
        raise CompositionError("product needs a single common ratio per factor")
    return r[0]


def product_ifs(A: IfsSystem, B: IfsSystem) -> IfsSystem:
    """Product system whose attractor is attractor(A) x attractor(B).

    Only defined for factors sharing one common contraction ratio; for anything
    else rasterize the factors and use :func:`raster_product`.
    """
    ra, rb = _common_ratio(A), _common_ratio(B)
    if abs(ra - rb) > 1e-12:
        raise CompositionError(f"factor ratios differ ({ra} vs {rb}); use raster_product")
    maps = []
    seen = set()
    for f in A.maps:
        for g in B.maps:
            t = f.translation + g.translation
            if t in seen:
                continue
            seen.add(t)
            maps.append(Similitude(ra, t))
    return IfsSystem(A.n + B.n, tuple(maps), osc=A.osc and B.osc)


def salli_ifs(n: int, l: int) -> IfsSystem:
    """Corner-removal system: l * (2^n - 1) maps tiling [0,1]^n minus the corner cube [0, 2^-l]^n.

    For each level i the maps have ratio 2^-i and send [0,1]^n onto the
    non-origin half-subcubes of [0, 2^-(i-1)]^n.
    """
    if n < 1 or l < 1:
        raise DomainError("salli_ifs needs n >= 1 and l >= 1")
    maps = []
    for i in range(1, l + 1):
        ratio = 2.0 ** -i
        for v in itertools.product((0, 1), repeat=n):
            if any(v):
                maps.append(Similitude(ratio, tuple(ratio * c for c in v)))
    return IfsSystem(n, tuple(maps))


# --- rasterization ------------------------------------------------------------


def _iterate_boxes(F: IfsSystem, h: float, max_boxes: int):
    ratios, trans = F.arrays()
    lo = np.zeros((1, F.n))
    side = np.ones(1)
    done_lo, done_side = [], []
    while len(side):
        fine = side <= h
        if fine.any():
            done_lo.append(lo[fine])
            done_side.append(side[fine])
        lo, side = lo[~fine], side[~fine]
        if not len(side):
            break
        count = len(side) * len(ratios) + sum(len(s) for s in done_side)
        if count > max_boxes:
            raise ResourceError(f"rasterization needs more than {max_boxes} boxes")
        # refine inside: f_w o f_i, so the stopped words form a cut of the coding tree
        lo = (lo[None] + side[None, :, None] * trans[:, None, :]).reshape(-1, F.n)
        side = (ratios[:, None] * side[None]).reshape(-1)
    return np.concatenate(done_lo), np.concatenate(done_side)


def _boxes_to_cells(lo: np.ndarray, side: np.ndarray, depth: int) -> np.ndarray:
    """Cells whose interiors meet the (nondegenerate) boxes; boxes are at most one cell wide."""
    h = 2.0 ** -depth
    top = (1 << depth) - 1
    first = np.floor(lo / h + _EDGE_EPS).astype(np.int64)
    last = np.ceil((lo + side[:, None]) / h - _EDGE_EPS).astype(np.int64) - 1
    last = np.maximum(last, first)
    first = np.clip(first, 0, top)
    last = np.clip(last, 0, top)
    n = lo.shape[1]
    out = []
    for off in itertools.product((0, 1), repeat=n):
        cand = first + np.array(off)
        ok = np.all(cand <= last, axis=1)
        out.append(cand[ok])
    return np.concatenate(out)


def rasterize(F: IfsSystem, depth: int, max_boxes: int = MAX_BOXES) -> DyadicCubeSet:
    """Depth-``depth`` dyadic cubes covering the attractor of ``F``.

    Maps are iterated on the unit cube until every box has side at most
    ``2**-depth``; each final box marks the cells its interior meets.  The
    union of marked closed cells contains every final box and hence the
    attractor.
    """
    if depth < 1:
        raise DomainError("raster depth must be >= 1")
    lo, side = _iterate_boxes(F, 2.0 ** -depth, max_boxes)
    return DyadicCubeSet(F.n, depth, _boxes_to_cells(lo, side, depth))


def map_image_raster(f: Similitude, depth: int) -> DyadicCubeSet:
    """Raster of f([0,1]^n), used by the open-set-condition audit."""
    lo = np.array([f.translation])
    return DyadicCubeSet(f.n, depth, _image_cells(lo[0], f.ratio, depth))


def _image_cells(lo: np.ndarray, side: float, depth: int) -> np.ndarray:
    h = 2.0 ** -depth
    first = np.floor(lo / h + _EDGE_EPS).astype(np.int64)
    last = np.ceil((lo + side) / h - _EDGE_EPS).astype(np.int64) - 1
    ranges = [np.arange(a, max(a, b) + 1) for a, b in zip(first, last)]
    grid = np.meshgrid(*ranges, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def osc_audit(F: IfsSystem, depth: int) -> bool:
    """True when no two map images share a raster cell (interiors disjoint at this depth)."""
    seen: set = set()
    for f in F.maps:
        cells = {tuple(c) for c in _image_cells(np.array(f.translation), f.ratio, depth)}
        if seen & cells:
            return False
        seen |= cells
    return True


def full_raster(n: int, depth: int) -> DyadicCubeSet:
    side = 1 << depth
    if side ** n > MAX_DENSE_CELLS:
        raise ResourceError("full raster exceeds the memory budget")
    grid = np.indices((side,) * n).reshape(n, -1).T
    return DyadicCubeSet(n, depth, grid)


def segment_raster(depth: int, n: int = 2, height: float = 0.0) -> DyadicCubeSet:
    """Horizontal segment [0,1] x {height} (x {height}...) in [0,1]^n."""
    side = 1 << depth
    row = min(int(math.floor(height * side + _EDGE_EPS)), side - 1)
    cells = np.zeros((side, n), dtype=np.int64)
    cells[:, 0] = np.arange(side)
    cells[:, 1:] = row
    return DyadicCubeSet(n, depth, cells)


def raster_product(A: DyadicCubeSet, B: DyadicCubeSet) -> DyadicCubeSet:
    if A.depth != B.depth:
        raise InputError(f"raster depths differ ({A.depth} vs {B.depth})")
    if len(A) * len(B) > MAX_BOXES * 4:
        raise ResourceError("raster product too large")
    ia = np.repeat(np.arange(len(A)), len(B))
    ib = np.tile(np.arange(len(B)), len(A))
    return DyadicCubeSet(A.n + B.n, A.depth, np.hstack([A.cells[ia], B.cells[ib]]))


def cantor_raster(lam: float, depth: int) -> DyadicCubeSet:
    return rasterize(cantor_ifs(lam), depth)


def cantor_power_raster(lam: float, k: int, depth: int, extra_interval_dims: int = 0) -> DyadicCubeSet:
    """C_lam^k x [0,1]^e as a raster product (the interval factor is rasterized directly)."""
    c = cantor_raster(lam, depth)
    out = c
    for _ in range(k - 1):
        out = raster_product(out, c)
    if extra_interval_dims:
        out = raster_product(out, full_raster(extra_interval_dims, depth))
    return out


def salli_raster(n: int, l: int, depth: int) -> DyadicCubeSet:
    return rasterize(salli_ifs(n, l), depth)


def salli_cylinder(n: int, m: int, l: int, depth: int) -> DyadicCubeSet:
    """E x [0,1]^(n-m) with E the m-dimensional corner-removal attractor."""
    if not 1 <= m <= n:
        raise DomainError(f"need 1 <= m <= n, got m={m}, n={n}")
    E = salli_raster(m, l, depth)
    if m == n:
        return E
    return raster_product(E, full_raster(n - m, depth))


def natural_measure(S: DyadicCubeSet) -> NaturalMeasure:
    if len(S) == 0:
        raise DomainError("natural measure of an empty raster is undefined")
    return NaturalMeasure(S, np.full(len(S), 1.0 / len(S)))


def has_hole_property(S: DyadicCubeSet, l: int, depths) -> bool:
    """Every marked cube of side 2^-j contains an unmarked subcube of side 2^-(j+l)."""
    for j in depths:
        if j + l > S.depth:
            raise InputError(f"depth {j}+{l} exceeds raster depth {S.depth}")
        children = S.ancestors(j + l)
        parents = children >> l
        _, counts = np.unique(parents @ (1 << (j * np.arange(S.n - 1, -1, -1))), return_counts=True)
        if np.any(counts == 1 << (S.n * l)):
            return False
    return True
