"""Cones, half-space cones, balls, Grassmannian subspaces and frames.

Points are plain float64 numpy vectors.  All region predicates accept either a
single point of shape ``(n,)`` or a batch of shape ``(..., n)`` and return a
boolean (array) of matching leading shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError, DomainError, InputError

ORTHO_TOL = 1e-10
UNIT_TOL = 1e-12


def as_point(coords, n: int | None = None) -> np.ndarray:
    p = np.asarray(coords, dtype=float)
    if p.ndim != 1:
        raise InputError(f"point must be a 1-d vector, got shape {p.shape}")
    if n is not None and p.shape[0] != n:
        raise InputError(f"expected a point in R^{n}, got R^{p.shape[0]}")
    if not np.all(np.isfinite(p)):
        raise InputError("point coordinates must be finite")
    return p


def as_direction(coords, n: int | None = None) -> np.ndarray:
    """Validate a unit vector.  Vectors off the sphere by more than 1e-12 are rejected."""
    u = as_point(coords, n)
    if abs(np.linalg.norm(u) - 1.0) > UNIT_TOL:
        raise InputError("direction must have unit norm")
    return u


def _check_dim(y: np.ndarray, n: int) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != n:
        raise InputError(f"dimension mismatch: expected {n}, got {y.shape[-1]}")
    return y


@dataclass(frozen=True, eq=False)
class Subspace:
    """A linear subspace V in G(n, m), stored as an (m, n) orthonormal basis."""

    basis: np.ndarray
    n: int = field(init=False)
    m: int = field(init=False)

    def __post_init__(self):
        b = np.array(self.basis, dtype=float, ndmin=2)
        if b.size == 0:
            raise InputError("use Subspace.zero(n) for the trivial subspace")
        gram = b @ b.T
        if np.max(np.abs(np.diag(gram) - 1.0)) > 2 * UNIT_TOL:
            raise InputError("basis vectors must have unit norm")
        off = gram - np.diag(np.diag(gram))
        if off.size and np.max(np.abs(off)) > ORTHO_TOL:
            raise InputError("basis vectors must be pairwise orthogonal")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "n", b.shape[1])
        object.__setattr__(self, "m", b.shape[0])

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        obj = object.__new__(cls)
        b = np.zeros((0, n))
        b.setflags(write=False)
        object.__setattr__(obj, "basis", b)
        object.__setattr__(obj, "n", n)
        object.__setattr__(obj, "m", 0)
        return obj

    @classmethod
    def span(cls, vectors) -> "Subspace":
        """Orthonormalize arbitrary spanning vectors (rows) via QR."""
        a = np.array(vectors, dtype=float, ndmin=2)
        q, r = np.linalg.qr(a.T)
        rank = int(np.sum(np.abs(np.diag(r)) > 1e-12))
        if rank < a.shape[0]:
            raise InputError("spanning vectors are linearly dependent")
        q = q * np.sign(np.diag(r))
        return cls(q.T)

    @classmethod
    def axes(cls, n: int, indices) -> "Subspace":
        idx = list(indices)
        if not idx:
            return cls.zero(n)
        return cls(np.eye(n)[idx])

    def projector(self) -> np.ndarray:
        return self.basis.T @ self.basis

    def complement(self) -> "Subspace":
        """Orthonormal basis of the orthogonal complement."""
        if self.m == self.n:
            return Subspace.zero(self.n)
        if self.m == 0:
            return Subspace(np.eye(self.n))
        _, _, vt = np.linalg.svd(self.basis, full_matrices=True)
        return Subspace(vt[self.m:])


@dataclass(frozen=True, eq=False)
class HalfSpaceCone:
    """H(x, theta, eta) = {y : (y - x).theta > eta |y - x|}; eta = 0 is the open half-space."""

    apex: np.ndarray
    theta: np.ndarray
    eta: float

    def __post_init__(self):
        apex = as_point(self.apex)
        theta = as_direction(self.theta, apex.shape[0])
        if not 0.0 <= self.eta <= 1.0:
            raise DomainError(f"eta must lie in [0, 1], got {self.eta}")
        object.__setattr__(self, "apex", apex)
        object.__setattr__(self, "theta", theta)


@dataclass(frozen=True, eq=False)
class ConeRegion:
    """X(x, r, V, alpha) = {y : dist(y - x, V) < alpha |y - x|} intersected with B(x, r)."""

    apex: np.ndarray
    V: Subspace
    alpha: float
    r: float = math.inf

    def __post_init__(self):
        apex = as_point(self.apex, self.V.n)
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.r > 0:
            raise DomainError(f"radius must be positive, got {self.r}")
        object.__setattr__(self, "apex", apex)


@dataclass(frozen=True, eq=False)
class Frame:
    origin: np.ndarray
    directions: np.ndarray  # (k, n), orthonormal rows

    def __post_init__(self):
        d = np.array(self.directions, dtype=float, ndmin=2)
        origin = as_point(self.origin, d.shape[1])
        gram = d @ d.T
        if np.max(np.abs(gram - np.eye(d.shape[0]))) > ORTHO_TOL:
            raise InputError("frame directions must be orthonormal")
        d.setflags(write=False)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "directions", d)

    @property
    def k(self) -> int:
        return self.directions.shape[0]


# --- predicates ---------------------------------------------------------------


def dist_to_subspace(y, V: Subspace) -> np.ndarray | float:
    """|y - P_V y| for a point or a batch of points."""
    y = _check_dim(y, V.n)
    if V.m == 0:
        out = np.linalg.norm(y, axis=-1)
    else:
        coef = y @ V.basis.T
        resid = y - coef @ V.basis
        out = np.linalg.norm(resid, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def in_open_ball(y, center, r, slack: float = 0.0):
    y = _check_dim(y, len(center))
    return np.linalg.norm(y - center, axis=-1) < r + slack


def in_closed_ball(y, center, r, slack: float = 0.0):
    y = _check_dim(y, len(center))
    return np.linalg.norm(y - center, axis=-1) <= r + slack


def cone_contains(C: ConeRegion, y, slack: float = 0.0):
    """Membership in X(x, r, V, alpha).  The apex is never contained."""
    y = _check_dim(y, C.V.n)
    v = y - C.apex
    norm = np.linalg.norm(v, axis=-1)
    dist = dist_to_subspace(v, C.V)
    inside = (dist < C.alpha * norm + slack) & (norm < C.r + slack) & (norm > 0)
    return bool(inside) if np.ndim(inside) == 0 else inside


def halfspace_cone_contains(H: HalfSpaceCone, y, slack: float = 0.0):
    y = _check_dim(y, H.apex.shape[0])
    v = y - H.apex
    lhs = v @ H.theta
    rhs = H.eta * np.linalg.norm(v, axis=-1)
    inside = (lhs > rhs - slack) & np.any(v != 0, axis=-1)
    return bool(inside) if np.ndim(inside) == 0 else inside


# --- constants ----------------------------------------------------------------


def eta_constants(eta: float) -> tuple[float, float]:
    """Escape-lemma constants ``(t, gamma)`` with ``t = sqrt((eta^2 + 4) / eta^2)`` and ``gamma = 1 / t``."""
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"eta must lie in (0, 1], got {eta}")
    t = math.sqrt((eta * eta + 4.0) / (eta * eta))
    return t, 1.0 / t


RHO_MIN = math.sqrt(2.0) - 1.0


def rho_constants(rho: float) -> tuple[float, float]:
    """Hole-lemma constants ``(t, delta)`` for ``sqrt(2) - 1 < rho < 1/2``."""
    if not RHO_MIN < rho < 0.5:
        raise DomainError(f"rho must lie in (sqrt(2)-1, 1/2), got {rho}")
    root = math.sqrt(1.0 - 2.0 * rho)
    t = 1.0 / root
    delta = (1.0 - rho - math.sqrt(rho * rho + 2.0 * rho - 1.0)) / root
    return t, delta


# --- Grassmannian -------------------------------------------------------------


def _principal_cosines(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # A: (..., m, n), B: (m, n) or (..., m, n)
    M = A @ np.swapaxes(B, -1, -2)
    return np.linalg.svd(M, compute_uv=False)


def subspace_distance(V: Subspace, W: Subspace) -> float:
    """sup over unit v in V of dist(v, W) = sine of the largest principal angle."""
    if V.n != W.n or V.m != W.m:
        raise InputError("subspaces must share ambient and intrinsic dimension")
    if V.m == 0:
        return 0.0
    s = _principal_cosines(V.basis, W.basis)
    smin = min(float(s.min()), 1.0)
    return math.sqrt(max(0.0, 1.0 - smin * smin))


def _batched_distance(bases: np.ndarray, ref: np.ndarray) -> np.ndarray:
    s = _principal_cosines(bases, ref)
    smin = np.minimum(s.min(axis=-1), 1.0)
    return np.sqrt(np.clip(1.0 - smin * smin, 0.0, None))


def _random_bases(rng: np.random.Generator, n: int, m: int, count: int) -> np.ndarray:
    g = rng.standard_normal((count, n, m))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diagonal(r, axis1=-2, axis2=-1))[:, None, :]
    return np.swapaxes(q, -1, -2)  # (count, m, n)


def random_subspace(n: int, m: int, seed=None) -> Subspace:
    rng = np.random.default_rng(seed)
    if m == 0:
        return Subspace.zero(n)
    return Subspace(_random_bases(rng, n, m, 1)[0])


def grassmannian_net(
    n: int,
    m: int,
    eps: float,
    seed=0,
    audit_size: int = 10_000,
    pool_size: int = 2_000,
    max_rounds: int = 20,
    max_size: int = 5_000,
) -> list[Subspace]:
    """Finite eps-net of G(n, m) by greedy farthest-point insertion.

    Subspaces are inserted from a seeded random pool until every pool member is
    within ``eps``; a fresh random audit then checks the covering radius and any
    uncovered audit subspaces are folded into the pool for another round.
    """
    if not 0.0 < eps <= 1.0:
        raise DomainError(f"eps must lie in (0, 1], got {eps}")
    if not 1 <= m <= n - 1:
        raise DomainError(f"net requires 1 <= m <= n-1, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    pool = _random_bases(rng, n, m, pool_size)
    chosen = [pool[0]]
    nearest = _batched_distance(pool, pool[0])
    worst = float("inf")
    for _ in range(max_rounds):
        while nearest.max() >= eps:
            if len(chosen) >= max_size:
                raise ConstructionError("grassmannian net exceeded its size cap", achieved=float(nearest.max()))
            i = int(np.argmax(nearest))
            chosen.append(pool[i])
            nearest = np.minimum(nearest, _batched_distance(pool, pool[i]))
        audit = _random_bases(rng, n, m, audit_size)
        dist = np.full(audit_size, np.inf)
        for b in chosen:
            dist = np.minimum(dist, _batched_distance(audit, b))
        worst = float(dist.max())
        bad = dist >= eps
        if not bad.any():
            return [Subspace(b) for b in chosen]
        pool = np.concatenate([pool, audit[bad]])
        nearest = np.concatenate([nearest, dist[bad]])
    raise ConstructionError(f"grassmannian net audit failed; covering radius {worst:.4g}", achieved=worst)


# --- frames -------------------------------------------------------------------


def sample_frame(n: int, k: int, seed=None, origin=None) -> Frame:
    """Orthonormal k-frame from QR of a seeded Gaussian matrix."""
    if not 1 <= k <= n:
        raise InputError(f"frame size k must satisfy 1 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    return Frame(np.zeros(n) if origin is None else origin, random_frames(rng, n, k, 1)[0])


def random_frames(rng: np.random.Generator, n: int, k: int, count: int) -> np.ndarray:
    """Batch of ``count`` orthonormal k-frames, shape (count, k, n)."""
    return _random_bases(rng, n, k, count)


def random_directions(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    g = rng.standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def givens(n: int, a: int, b: int, phi: float) -> np.ndarray:
    G = np.eye(n)
    c, s = math.cos(phi), math.sin(phi)
    G[a, a] = c
    G[b, b] = c
    G[a, b] = -s
    G[b, a] = s
    return G
