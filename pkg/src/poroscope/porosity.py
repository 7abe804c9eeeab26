"""k-porosity and directed porosity of rasterized sets.

Holes are tested against a Euclidean distance field sampled at cell centers.
For a direction u from x the best hole along the ray is

    g(u) = max_d min(D(x + d u), r - d) / r,

and the k-porosity estimate at (x, r) is the max over orthonormal frames of
min_i max(g(u_i), g(-u_i)).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DomainError, InputError, ResolutionError
from .geometry import ORTHO_TOL, Subspace, as_point, random_frames
from .sets import DyadicCubeSet

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
MAX_RAY_SAMPLES = 256


@dataclass(frozen=True, eq=False)
class DistanceField:
    depth: int
    values: np.ndarray = field(repr=False)  # dense, shape (2^depth,)*n

    @property
    def n(self) -> int:
        return self.values.ndim

    @property
    def h(self) -> float:
        return 2.0**-self.depth

    def __call__(self, p) -> np.ndarray:
        """Distance at arbitrary points by nearest-center lookup.

        Outside [0,1]^n the clamped point c gives sqrt(|p-c|^2 + D(c)^2),
        a lower bound that is exact for convex reasons up to the grid error.
        """
        p = np.asarray(p, dtype=float)
        h = self.h
        c = np.clip(p, 0.5 * h, 1.0 - 0.5 * h)
        idx = np.minimum((c / h).astype(np.int64), (1 << self.depth) - 1)
        d = self.values[tuple(np.moveaxis(idx, -1, 0))]
        out = np.clip(p, 0.0, 1.0) - p
        off = np.einsum("...i,...i->...", out, out)
        return np.sqrt(d * d + off)


def distance_field(S: DyadicCubeSet) -> DistanceField:
    """Exact EDT from every cell center to the nearest marked cell center."""
    if len(S) == 0:
        raise DomainError("distance field of an empty set")
    mask = S.to_mask()
    vals = ndimage.distance_transform_edt(~mask, sampling=S.h)
    vals = np.asarray(vals, dtype=float)
    vals.setflags(write=False)
    return DistanceField(S.depth, vals)


def grid_slack(n: int, depth: int, r: float) -> float:
    return 2.0 * math.sqrt(n) * 2.0**-depth / r


def _check_query(D: DistanceField, x: np.ndarray, r: float):
    if not r >= 4 * D.h:
        raise ResolutionError(f"radius {r} is below 4 grid cells ({4 * D.h})")
    if float(D(x)) > math.sqrt(D.n) * D.h:
        raise DomainError("query point is farther than one cell from the set")


def _ray_grid(D: DistanceField, r: float) -> np.ndarray:
    step = max(D.h, r / MAX_RAY_SAMPLES)
    return np.arange(step, r, step)


def _ray_values(D: DistanceField, x, dirs, r, ds):
    """Best relative hole along each ray; dirs has shape (..., n)."""
    pts = x + ds[:, None] * dirs[..., None, :]
    f = np.minimum(D(pts), r - ds)
    return f.max(axis=-1) / r


def _frame_scores(D, x, frames, r, ds):
    """min_i max(g(u_i), g(-u_i)) for a batch of frames (B, k, n)."""
    g = np.maximum(_ray_values(D, x, frames, r, ds), _ray_values(D, x, -frames, r, ds))
    return g.min(axis=-1)


def _golden_ray(D, x, u, r, d0, width, iters=24):
    """Refine max of min(D(x+du), r-d) near d0 by golden-section search."""

    def f(d):
        return min(float(D(x + d * u)), r - d)

    a, b = max(d0 - width, 0.0), min(d0 + width, r)
    c, e = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fe = f(c), f(e)
    best = max(f(d0), fc, fe)
    for _ in range(iters):
        if fc >= fe:
            b, e, fe = e, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, e, fe
            e = a + GOLDEN * (b - a)
            fe = f(e)
        best = max(best, fc, fe)
    return best / r


def _refine_frame(D, x, frame, r, ds):
    vals = []
    for u in frame:
        per_sign = []
        for s in (1.0, -1.0):
            v = s * u
            f = np.minimum(D(x + ds[:, None] * v), r - ds)
            j = int(np.argmax(f))
            per_sign.append(max(f[j] / r, _golden_ray(D, x, v, r, ds[j], ds[0])))
        vals.append(max(per_sign))
    return min(vals)


def _random_rotations(rng, n, count, scale):
    """Batch of small rotations, each a product of one random Givens turn per plane."""
    R = np.broadcast_to(np.eye(n), (count, n, n)).copy()
    for a in range(n):
        for b in range(a + 1, n):
            phi = rng.normal(0.0, scale, count)
            c, s = np.cos(phi), np.sin(phi)
            G = np.broadcast_to(np.eye(n), (count, n, n)).copy()
            G[:, a, a] = c
            G[:, b, b] = c
            G[:, a, b] = -s
            G[:, b, a] = s
            R = R @ G
    return R


def local_porosity_k(
    S: DyadicCubeSet,
    D: DistanceField,
    x,
    r: float,
    k: int,
    frame_budget: int = 64,
    refine_steps: int = 32,
    seed=0,
    return_frame: bool = False,
):
    """Estimate por_k(A, x, r) by frame search over the distance field."""
    n = S.n
    x = as_point(x, n)
    if not 1 <= k <= n:
        raise InputError(f"k must satisfy 1 <= k <= n, got {k}")
    _check_query(D, x, r)
    ds = _ray_grid(D, r)
    rng = np.random.default_rng(seed)

    if n == 1:
        frames = np.array([[[1.0]]])
    else:
        frames = random_frames(rng, n, k, frame_budget)
    scores = _frame_scores(D, x, frames, r, ds)
    if n > 1:
        scale = 0.3
        for _ in range(refine_steps):
            R = _random_rotations(rng, n, len(frames), scale)
            cand = frames @ R
            cs = _frame_scores(D, x, cand, r, ds)
            better = cs > scores
            frames[better] = cand[better]
            scores[better] = cs[better]
            scale *= 0.9
    best = int(np.argmax(scores))
    frame = frames[best]
    # re-orthonormalize against drift from repeated rotations
    q, rr = np.linalg.qr(frame.T)
    frame = (q * np.sign(np.diag(rr))).T
    value = max(float(scores[best]), _refine_frame(D, x, frame, r, ds))
    if return_frame:
        assert np.max(np.abs(frame @ frame.T - np.eye(k))) <= ORTHO_TOL
        return value, frame
    return value


def _slice_lattice(V: Subspace, r: float, step: float) -> np.ndarray:
    m = V.m
    g = np.arange(-r, r + step / 2, step)
    mesh = np.stack(np.meshgrid(*([g] * m), indexing="ij"), axis=-1).reshape(-1, m)
    return mesh[np.linalg.norm(mesh, axis=1) < r]


def directed_porosity(S: DyadicCubeSet, D: DistanceField, x, r: float, V: Subspace, refine_iters: int = 30) -> float:
    """max over z in (V + x) ∩ B(x, r) of min(D(z), r - |z - x|) / r."""
    x = as_point(x, S.n)
    if V.n != S.n:
        raise InputError("subspace dimension does not match the set")
    _check_query(D, x, r)
    if V.m == 0:
        return 0.0
    step = max(D.h, 2 * r / MAX_RAY_SAMPLES) if V.m == 1 else max(D.h, 2 * r / 64)
    coef = _slice_lattice(V, r, step)

    def objective(c):
        rad = np.linalg.norm(c, axis=-1)
        return np.minimum(D(x + c @ V.basis), r - rad)

    vals = objective(coef)
    j = int(np.argmax(vals))
    c, best = coef[j].copy(), float(vals[j])
    # pattern search around the best lattice point
    s = step / 2
    moves = np.vstack([np.eye(V.m), -np.eye(V.m)])
    for _ in range(refine_iters):
        cand = c + s * moves
        cv = objective(cand)
        i = int(np.argmax(cv))
        if cv[i] > best:
            c, best = cand[i], float(cv[i])
        else:
            s /= 2
    return max(best, 0.0) / r


@dataclass
class PorosityProfile:
    x: tuple
    scales: list
    values: list
    k: int
    frame_budget: int
    refine_steps: int
    seed: int
    slack: list = field(default_factory=list)
    V: list | None = None

    @property
    def liminf(self) -> float:
        """Finite-scale proxy: min over the ladder."""
        return min(self.values)

    def to_dict(self) -> dict:
        return {
            "x": list(self.x),
            "k": self.k,
            "scales": self.scales,
            "values": self.values,
            "slack": self.slack,
            "liminf": self.liminf,
            "frame_budget": self.frame_budget,
            "refine_steps": self.refine_steps,
            "seed": self.seed,
            "V": self.V,
        }


def _check_ladder(ladder, h):
    ladder = [float(r) for r in ladder]
    if not ladder:
        raise InputError("empty scale ladder")
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise InputError("scale ladder must be strictly decreasing")
    if ladder[0] > 0.5 or ladder[-1] < 4 * h:
        raise ResolutionError(f"ladder must lie within [{4 * h}, 0.5]")
    return ladder


def porosity_profile(
    S: DyadicCubeSet,
    x,
    k: int,
    ladder,
    D: DistanceField | None = None,
    frame_budget: int = 64,
    refine_steps: int = 32,
    seed: int = 0,
    V: Subspace | None = None,
) -> PorosityProfile:
    """Per-scale porosity estimates at x.  With ``V`` the directed variant is used."""
    D = distance_field(S) if D is None else D
    ladder = _check_ladder(ladder, S.h)
    x = as_point(x, S.n)
    vals = []
    for i, r in enumerate(ladder):
        if V is None:
            v = local_porosity_k(S, D, x, r, k, frame_budget, refine_steps, seed=(seed, i))
        else:
            v = directed_porosity(S, D, x, r, V)
        vals.append(v)
    return PorosityProfile(
        x=tuple(float(c) for c in x),
        scales=ladder,
        values=vals,
        k=k if V is None else V.m,
        frame_budget=frame_budget,
        refine_steps=refine_steps,
        seed=seed,
        slack=[grid_slack(S.n, S.depth, r) for r in ladder],
        V=None if V is None else V.basis.tolist(),
    )


@dataclass
class SetPorosityReport:
    value: float
    argmin: tuple
    profiles: list
    k: int
    sample_count: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "argmin": list(self.argmin),
            "k": self.k,
            "sample_count": self.sample_count,
            "seed": self.seed,
            "profiles": [p.to_dict() for p in self.profiles],
        }


def sample_points(S: DyadicCubeSet, count: int, seed: int = 0) -> np.ndarray:
    """Centers of ``count`` distinct marked cells, chosen by a seeded draw."""
    if count < 1:
        raise InputError("sample count must be at least 1")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5E7]))
    idx = rng.choice(len(S), size=min(count, len(S)), replace=False)
    return S.centers()[np.sort(idx)]


def set_porosity(
    S: DyadicCubeSet,
    k: int,
    sample_count: int,
    ladder,
    frame_budget: int = 64,
    refine_steps: int = 32,
    seed: int = 0,
    threads: int = 1,
    V: Subspace | None = None,
    points=None,
) -> tuple[float, SetPorosityReport]:
    """inf over sampled points of the per-point ladder minimum."""
    D = distance_field(S)
    pts = sample_points(S, sample_count, seed) if points is None else np.atleast_2d(points)

    def one(i):
        sub = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        return porosity_profile(S, pts[i], k, ladder, D, frame_budget, refine_steps, sub, V)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            profiles = list(ex.map(one, range(len(pts))))
    else:
        profiles = [one(i) for i in range(len(pts))]
    mins = [p.liminf for p in profiles]
    j = int(np.argmin(mins))
    rep = SetPorosityReport(float(mins[j]), profiles[j].x, profiles, k if V is None else V.m, len(pts), seed)
    return rep.value, rep


def porosity_ladder(depth: int, count: int = 6, r_max: float = 0.25, min_cells: float = 16.0) -> list[float]:
    """Default ladder for porosity queries; bottoms out at ``min_cells`` grid cells."""
    r_min = min_cells * 2.0**-depth
    if r_min > r_max:
        raise ResolutionError(f"depth {depth} too shallow for a porosity ladder")
    return [float(v) for v in np.geomspace(r_max, r_min, count)]
