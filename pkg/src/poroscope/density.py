"""Empirical nonsymmetric conical densities of natural measures.

The mass of A ∩ X(x, r, V, alpha) ∖ H(x, theta, eta) is approximated by the
natural measure of cells whose centers lie in the region.  The inf over
(theta, V) is taken over a Grassmannian net and sampled directions refined by
hill climbing, so it overestimates the true inf.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InputError, ResolutionError
from .geometry import Subspace, as_point, grassmannian_net, random_directions
from .sets import NaturalMeasure


def _local(mu: NaturalMeasure, x, r):
    y = mu.centers() - x
    rad = np.linalg.norm(y, axis=1)
    keep = rad < r
    return y[keep], rad[keep], mu.weights[keep]


def _in_cone(y, rad, V: Subspace | None, alpha):
    if V is None or V.m == V.n:
        return rad > 0
    coef = y @ V.basis.T
    dist = np.sqrt(np.maximum(rad**2 - (coef**2).sum(axis=-1), 0.0))
    return dist < alpha * rad


def region_mass(mu: NaturalMeasure, x, r: float, V: Subspace | None, alpha: float, theta, eta: float):
    """(mass, slack) of X(x, r, V, alpha) ∖ H(x, theta, eta) under mu.

    ``V=None`` means the whole space (the ball minus the apex).  The slack
    is the weight of cells within 2 sqrt(n) h of any region boundary.
    """
    n = mu.base.n
    x = as_point(x, n)
    theta = as_point(theta, n)
    if V is not None and V.n != n:
        raise InputError("subspace dimension does not match the measure")
    _check(alpha, eta, r)
    y, rad, w = _local_with_margin(mu, x, r)
    inside = rad < r
    proj = y @ theta
    region = inside & _in_cone(y, rad, V, alpha) & ~(proj > eta * rad)
    eps = 2 * math.sqrt(n) * mu.base.h
    near = np.abs(rad - r) <= eps
    near |= np.abs(proj - eta * rad) <= (1 + eta) * eps
    if V is not None and V.m < n:
        coef = y @ V.basis.T
        dist = np.sqrt(np.maximum(rad**2 - (coef**2).sum(axis=-1), 0.0))
        near |= np.abs(dist - alpha * rad) <= (1 + alpha) * eps
    near &= rad < r + eps
    return float(w[region].sum()), float(w[near].sum())


def _local_with_margin(mu, x, r):
    eps = 2 * math.sqrt(mu.base.n) * mu.base.h
    return _local(mu, x, r + eps)


def _check(alpha, eta, r):
    if not (0 < alpha <= 1 and 0 < eta <= 1):
        raise DomainError("alpha and eta must lie in (0, 1]")
    if not r > 0:
        raise DomainError("radius must be positive")


@dataclass
class DensityExperiment:
    mu: NaturalMeasure
    s: float
    alpha: float
    eta: float
    ladder: list
    m: int = 0
    direction_budget: int = 64
    plane_budget: int = 64
    climb_steps: int = 16
    seed: int = 0

    def __post_init__(self):
        _check(self.alpha, self.eta, 1.0)
        if self.s <= 0:
            raise DomainError("density exponent must be positive")
        n = self.mu.base.n
        if not 0 <= self.m < n:
            raise DomainError(f"need 0 <= m < n, got m={self.m}")
        if self.direction_budget < 1 or self.plane_budget < 1:
            raise InputError("budgets must be at least 1")
        lad = [float(r) for r in self.ladder]
        if any(b >= a for a, b in zip(lad, lad[1:])):
            raise InputError("ladder must be strictly decreasing")
        if lad[-1] < 8 * self.mu.base.h:
            raise ResolutionError("ladder must stay above 8 grid cells")
        self.ladder = lad

    def planes(self, alpha=None) -> list:
        """Net on G(n, n - m) fine enough that every plane's alpha/2 cone is covered."""
        n, dim = self.mu.base.n, self.mu.base.n - self.m
        if dim == n:
            return [None]
        a = self.alpha if alpha is None else alpha
        net = grassmannian_net(n, dim, min(a / 2, 0.999), seed=self.seed)
        return net[: self.plane_budget]


def density_ladder(depth: int, count: int = 8, r_max: float = 0.5, min_cells: float = 8.0) -> list[float]:
    r_min = min_cells * 2.0**-depth
    if r_min > r_max:
        raise ResolutionError(f"depth {depth} too shallow for a density ladder")
    return [float(v) for v in np.geomspace(r_max, r_min, count)]


def _mass_table(y, rad, w, planes, alpha, thetas, eta):
    """mass[p, d] for every plane p and direction d."""
    X = np.array([_in_cone(y, rad, V, alpha) for V in planes], dtype=float)
    notH = ~((y @ thetas.T) > eta * rad[:, None])
    return X @ (w[:, None] * notH)


def _climb(y, rad, w, planes, alpha, eta, thetas, mass, rng, steps):
    """Hill-climb the worst direction of each plane to lower the mass."""
    n = y.shape[1] if y.size else thetas.shape[1]
    found = []
    for p, V in enumerate(planes):
        j = int(np.argmin(mass[p]))
        th, best = thetas[j].copy(), float(mass[p, j])
        scale = 0.3
        for _ in range(steps):
            cand = th + scale * rng.standard_normal((8, n))
            cand /= np.linalg.norm(cand, axis=1, keepdims=True)
            cm = _mass_table(y, rad, w, [V], alpha, cand, eta)[0]
            i = int(np.argmin(cm))
            if cm[i] < best:
                th, best = cand[i], float(cm[i])
            else:
                scale *= 0.5
        found.append(th)
    return np.array(found)


def _candidate_directions(exp: DensityExperiment, x, r, planes, alpha, eta, rng):
    y, rad, w = _local(exp.mu, x, r)
    n = exp.mu.base.n
    thetas = random_directions(rng, n, exp.direction_budget)
    if len(w) == 0:
        return thetas
    mass = _mass_table(y, rad, w, planes, alpha, thetas, eta)
    extra = _climb(y, rad, w, planes, alpha, eta, thetas, mass, rng, exp.climb_steps)
    return np.vstack([thetas, extra])


def scale_values(exp: DensityExperiment, x, thetas_by_scale=None, alpha=None, eta=None, planes=None):
    """Per-scale worst-case ratio min_(theta, V) mass / r^s, with the minimizing pair's slack.

    Directions can be supplied per scale so several (alpha, eta) settings share
    one candidate pool; otherwise they are sampled and refined here.
    """
    x = as_point(x, exp.mu.base.n)
    alpha = exp.alpha if alpha is None else alpha
    eta = exp.eta if eta is None else eta
    planes = exp.planes() if planes is None else planes
    rng = np.random.default_rng(np.random.SeedSequence([exp.seed, 0xC0]))
    out = []
    for i, r in enumerate(exp.ladder):
        if thetas_by_scale is None:
            thetas = _candidate_directions(exp, x, r, planes, alpha, eta, rng)
        else:
            thetas = thetas_by_scale[i]
        y, rad, w = _local(exp.mu, x, r)
        if len(w) == 0:
            out.append((r, 0.0, 0.0))
            continue
        mass = _mass_table(y, rad, w, planes, alpha, thetas, eta)
        p, d = np.unravel_index(int(np.argmin(mass)), mass.shape)
        _, slack = region_mass(exp.mu, x, r, planes[p], alpha, thetas[d], eta)
        out.append((r, float(mass[p, d]) / r**exp.s, slack / r**exp.s))
    return out


def worst_case_density(exp: DensityExperiment, x) -> float:
    """limsup proxy: max over the ladder of the per-scale worst-case ratio."""
    return max(v for _, v, _ in scale_values(exp, x))


@dataclass
class DensityReport:
    points: list
    per_scale: list  # per point: list of (r, ratio, slack)
    limsup: list
    params: dict = field(default_factory=dict)

    @property
    def inf(self) -> float:
        return min(self.limsup)

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "points": [list(map(float, p)) for p in self.points],
            "per_scale": [[list(t) for t in ps] for ps in self.per_scale],
            "limsup": self.limsup,
            "inf": self.inf,
        }


def density_experiment(exp: DensityExperiment, points, threads: int = 1) -> DensityReport:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    planes = exp.planes()

    def one(i):
        sub = DensityExperiment(**{**exp.__dict__, "seed": int(np.random.SeedSequence([exp.seed, i]).generate_state(1)[0])})
        return scale_values(sub, pts[i], planes=planes)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            rows = list(ex.map(one, range(len(pts))))
    else:
        rows = [one(i) for i in range(len(pts))]
    params = {
        "s": exp.s,
        "alpha": exp.alpha,
        "eta": exp.eta,
        "m": exp.m,
        "ladder": exp.ladder,
        "direction_budget": exp.direction_budget,
        "plane_budget": exp.plane_budget,
        "climb_steps": exp.climb_steps,
        "seed": exp.seed,
    }
    return DensityReport(pts.tolist(), rows, [max(v for _, v, _ in r) for r in rows], params)


SWEEP_COLUMNS = ["label", "n", "m", "s", "alpha", "eta"]


def density_sweep(family, grid, points_per_set: int = 8, ladder=None, seed: int = 0, direction_budget: int = 32, plane_budget: int = 64, climb_steps: int = 8):
    """One row per (set, alpha, eta): the inf over points of the worst-case density.

    ``family`` holds (label, NaturalMeasure, s, m); ``grid`` holds (alpha, eta).
    Direction candidates are pooled over the whole grid and planes come from
    the finest net, so rows are exactly monotone under region containment.
    Returns (header, rows).
    """
    grid = [(float(a), float(e)) for a, e in grid]
    nmax = max((mu.base.n for _, mu, _, _ in family), default=1)
    header = SWEEP_COLUMNS + [f"x{i + 1}" for i in range(nmax)] + ["r", "worst_ratio", "slack", "seed"]
    rows = []
    for label, mu, s, m in family:
        if not grid:
            continue
        lad = density_ladder(mu.base.depth, 6) if ladder is None else ladder
        amin = min(a for a, _ in grid)
        base = DensityExperiment(mu, s, amin, min(e for _, e in grid), lad, m, direction_budget, plane_budget, climb_steps, seed)
        planes = base.planes(amin)
        from .porosity import sample_points

        pts = sample_points(mu.base, points_per_set, seed)
        # pooled candidates per (point, scale)
        pools = []
        for i, x in enumerate(pts):
            rng = np.random.default_rng(np.random.SeedSequence([seed, i, 0xD5]))
            per = []
            for r in lad:
                cand = [_candidate_directions(base, x, r, planes, a, e, rng) for a, e in grid]
                per.append(np.vstack(cand))
            pools.append(per)
        for a, e in grid:
            best = None
            for i, x in enumerate(pts):
                vals = scale_values(base, x, pools[i], a, e, planes)
                r, v, sl = max(vals, key=lambda t: t[1])
                if best is None or v < best[1]:
                    best = (x, v, sl, r)
            x, v, sl, r = best
            xs = [f"{c:.10g}" for c in x] + [""] * (nmax - len(x))
            rows.append([label, mu.base.n, m, f"{s:.10g}", f"{a:.10g}", f"{e:.10g}"] + xs + [f"{r:.10g}", f"{v:.10g}", f"{sl:.10g}", seed])
    return header, rows


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()
