"""Box-counting dimension, similarity dimension and the explicit dimension bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InputError, ResolutionError
from .sets import DyadicCubeSet, NaturalMeasure, salli_ifs

# 2 / (5 ln 2): the constant in front of 2^-(ln) in the corner-removal estimate
BOUND_CONSTANT = 2.0 / (5.0 * math.log(2.0))


@dataclass(frozen=True)
class BoxCountSeries:
    n: int
    depths: tuple
    counts: tuple

    def __post_init__(self):
        for j, N in zip(self.depths, self.counts):
            if not 1 <= N <= 2 ** (j * self.n):
                raise InputError(f"count {N} at depth {j} violates 1 <= N_j <= 2^(jn)")


@dataclass(frozen=True)
class DimensionEstimate:
    value: float
    stderr: float
    depths: tuple
    max_residual: float
    convention: str = "closed dyadic cubes meeting the raster"
    counts: tuple = field(default=(), repr=False)


def box_counts(S: DyadicCubeSet, depths) -> BoxCountSeries:
    depths = tuple(int(j) for j in depths)
    if any(j > S.depth or j < 0 for j in depths):
        raise InputError(f"box-count depths must lie in [0, {S.depth}]")
    if len(S) == 0:
        raise DomainError("box counts of an empty raster")
    counts = tuple(len(S.ancestors(j)) for j in depths)
    return BoxCountSeries(S.n, depths, counts)


def fit_dimension(series: BoxCountSeries) -> DimensionEstimate:
    """Least-squares slope of log2 N_j against j."""
    j = np.array(series.depths, dtype=float)
    y = np.log2(np.array(series.counts, dtype=float))
    if len(j) < 2:
        raise InputError("need at least two depths to fit a slope")
    if np.all(y == 0):
        return DimensionEstimate(0.0, 0.0, series.depths, 0.0, counts=series.counts)
    A = np.vstack([j, np.ones_like(j)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * j + icpt)
    dof = len(j) - 2
    if dof > 0:
        s2 = float(resid @ resid) / dof
        stderr = math.sqrt(s2 / float(((j - j.mean()) ** 2).sum()))
    else:
        stderr = 0.0
    return DimensionEstimate(float(slope), stderr, series.depths, float(np.abs(resid).max()), counts=series.counts)


def minkowski_dim(S: DyadicCubeSet, depths=None, window: int = 6) -> DimensionEstimate:
    """Box-counting dimension from the slope over ``depths``.

    Defaults to the deepest ``window`` depths of the raster.
    """
    if depths is None:
        lo = max(1, S.depth - window + 1)
        depths = range(lo, S.depth + 1)
    depths = tuple(depths)
    if len(depths) < 4:
        raise InputError("minkowski_dim needs at least 4 depths")
    return fit_dimension(box_counts(S, depths))


def moran_dimension(ratios, tol: float = 1e-12) -> float:
    """Unique s >= 0 with sum(r_i ** s) == 1, by bisection."""
    r = np.asarray(list(ratios), dtype=float)
    if r.size == 0:
        raise DomainError("moran_dimension needs at least one ratio")
    if np.any((r <= 0) | (r >= 1)):
        raise DomainError("ratios must lie in (0, 1)")
    if r.size == 1:
        raise DomainError("a single contraction has a degenerate similarity dimension")
    logs = np.log(r)

    def excess(s):
        return float(np.exp(s * logs).sum()) - 1.0

    lo, hi = 0.0, 1.0
    while excess(hi) > 0:
        lo, hi = hi, hi * 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def salli_dimension(n: int, l: int) -> float:
    """Root s of (2^n - 1) * sum_{i=1}^{l} 2^(-i s) = 1."""
    if n < 1 or l < 1:
        raise DomainError("salli_dimension needs n >= 1 and l >= 1")
    ratios = salli_ifs(n, l).ratios
    if len(ratios) == 1:
        return 0.0
    return moran_dimension(ratios)


def _check_rho(rho: float):
    if not 0.0 < rho < 0.5:
        raise DomainError(f"porosity must lie in (0, 1/2), got {rho}")


def bound_full(n: int, rho: float) -> float:
    """n - c rho^n with c = (2 / (5 ln 2)) 2^(-3n) n^(-n/2)."""
    _check_rho(rho)
    c = BOUND_CONSTANT * 2.0 ** (-3 * n) * n ** (-n / 2.0)
    return n - c * rho**n


def bound_directed(n: int, m: int, rho: float) -> float:
    """n - c 2^(-3m) n^(-m/2) rho^m, with c fixed to 2 / (5 ln 2)."""
    _check_rho(rho)
    if not 1 <= m <= n:
        raise DomainError(f"need 1 <= m <= n, got m={m}, n={n}")
    return n - BOUND_CONSTANT * 2.0 ** (-3 * m) * n ** (-m / 2.0) * rho**m


def safe_bound(n: int, rho: float, m: int | None = None) -> float:
    """Bound with the trivial value n when the porosity estimate is not positive."""
    if rho <= 0:
        return float(n)
    rho = min(rho, 0.5 - 1e-12)
    return bound_full(n, rho) if m is None else bound_directed(n, m, rho)


def ball_mass(mu: NaturalMeasure, x, r: float) -> float:
    c = mu.centers()
    inside = np.linalg.norm(c - np.asarray(x, dtype=float), axis=1) < r
    return float(mu.weights[inside].sum())


def density_profile(mu: NaturalMeasure, x, s: float, ladder, min_cells: float = 4.0) -> list[tuple[float, float]]:
    """(r, mu(B(x, r)) / r^s) along the ladder."""
    if s <= 0:
        raise DomainError("density exponent must be positive")
    h = mu.base.h
    out = []
    for r in ladder:
        if r < min_cells * h:
            raise ResolutionError(f"radius {r} is below {min_cells} grid cells")
        out.append((float(r), ball_mass(mu, x, r) / r**s))
    return out


def scale_ladder(depth: int, count: int = 8, r_max: float = 0.5, min_cells: float = 16.0) -> list[float]:
    """Geometric ladder from r_max down to ``min_cells`` grid cells, strictly decreasing."""
    r_min = min_cells * 2.0**-depth
    if r_min > r_max:
        raise ResolutionError(f"depth {depth} too shallow for a ladder reaching {min_cells} cells")
    if count == 1:
        return [r_max]
    return [float(v) for v in np.geomspace(r_max, r_min, count)]
