"""Randomized verifiers for the cone, escape and hole lemmas, plus the angle machinery.

Every verifier draws trials in fixed-size chunks; chunk ``c`` uses the
substream ``SeedSequence([seed, c])`` so results do not depend on scheduling.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConstructionError, DomainError, InputError, SamplingError, SearchError
from .geometry import eta_constants, random_directions, random_frames, rho_constants

CHUNK = 4096
PROBES = 32
MARGIN_TOL = 1e-10


@dataclass
class TrialReport:
    lemma: str
    params: dict
    trials: int
    failures: int
    worst_margin: float
    seed: int
    counterexamples: list = field(default_factory=list)

    def __post_init__(self):
        assert 0 <= self.failures <= self.trials

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class AngleTriple:
    indices: tuple
    angle: float


# --- angle machinery ------------------------------------------------------------


def _vertex_angles(P: np.ndarray, j: int) -> np.ndarray:
    v = P - P[j]
    norms = np.linalg.norm(v, axis=1)
    norms[j] = 1.0
    u = v / norms[:, None]
    return np.arccos(np.clip(u @ u.T, -1.0, 1.0))


def find_angle_triple(points, beta: float, tol: float = 1e-12) -> AngleTriple | None:
    """First triple (by vertex j, then i < k) whose angle at j lies in [beta, pi].

    ``tol`` absorbs rounding in arccos so collinear triples register as pi.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or len(P) < 3:
        raise InputError("need at least 3 points")
    if not 0 < beta <= math.pi:
        raise DomainError("beta must lie in (0, pi]")
    if len(np.unique(P, axis=0)) != len(P):
        raise InputError("points must be pairwise distinct")
    q = len(P)
    for j in range(q):
        A = _vertex_angles(P, j)
        ok = A >= beta - tol
        ok[j, :] = False
        ok[:, j] = False
        ok[np.tril_indices(q)] = False
        hits = np.argwhere(ok)
        if len(hits):
            i, k = (int(v) for v in hits[0])
            return AngleTriple((i, j, k), float(min(A[i, k], math.pi)))
    return None


def erdos_furedi_bounds(n: int, beta: float) -> tuple[float, float]:
    """Lower and upper bounds on the smallest q(n, beta); overflow returns inf."""
    if not 0 < beta < math.pi:
        raise DomainError("beta must lie in (0, pi)")
    if n < 1:
        raise DomainError("n must be positive")
    gap = math.pi - beta

    def pow2(e):
        try:
            return 2.0**e
        except OverflowError:
            return math.inf

    def expo(base):
        try:
            return base ** (n - 1)
        except OverflowError:
            return math.inf

    return pow2(expo(math.pi / gap)), pow2(expo(4 * math.pi / gap)) + 1


def opening_angle_beta(eta: float) -> float:
    """beta = (2 arccos(gamma) + pi) / 2, an angle strictly above the opening of H(x, theta, gamma)."""
    _, gamma = eta_constants(eta)
    return (2.0 * math.acos(gamma) + math.pi) / 2.0


def cone_cover_sphere(
    n: int,
    eta: float,
    seed=0,
    pool_size: int = 20000,
    audit_size: int = 100000,
    max_rounds: int = 20,
    max_size: int = 20000,
    shrink: float = 0.85,
) -> np.ndarray:
    """Directions theta_i with every unit u satisfying u . theta_i > eta for some i.

    Greedy farthest-point insertion over a random pool, using caps whose
    angular radius is ``shrink`` times arccos(eta) so that slivers between
    pool points stay covered.  Audit misses are folded back into the pool and
    the audit itself uses the full cap.
    """
    if not 0 < eta < 1:
        raise DomainError("eta must lie in (0, 1)")
    if n < 1:
        raise DomainError("n must be positive")
    if not 0 < shrink <= 1:
        raise DomainError("shrink must lie in (0, 1]")
    rng = np.random.default_rng(np.random.SeedSequence([seed if isinstance(seed, int) else 0, n]))
    build = math.cos(shrink * math.acos(eta))
    pool = random_directions(rng, n, pool_size)
    centers = [pool[0]]
    best = pool @ pool[0]
    for _ in range(max_rounds):
        while True:
            i = int(np.argmin(best))
            if best[i] > build:
                break
            if len(centers) >= max_size:
                raise ConstructionError("cone cover exceeded its size cap", achieved=float(best.min()))
            centers.append(pool[i])
            best = np.maximum(best, pool @ pool[i])
        C = np.array(centers)
        audit = random_directions(rng, n, audit_size)
        cover = (audit @ C.T).max(axis=1)
        miss = cover <= eta
        if not miss.any():
            return C
        pool = np.vstack([pool, audit[miss]])
        best = (pool @ C.T).max(axis=1)
    raise ConstructionError("cone cover audit failed", achieved=float(cover.min()))


# --- chunked trial runner -------------------------------------------------------


def _run_chunks(fn, trials: int, seed: int, threads: int = 1):
    """fn(rng, size) -> (failures, worst_margin, examples); merged in chunk order."""
    if trials < 1:
        raise InputError("trials must be at least 1")
    sizes = [min(CHUNK, trials - s) for s in range(0, trials, CHUNK)]

    def one(c):
        return fn(np.random.default_rng(np.random.SeedSequence([seed, c])), sizes[c])

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(one, range(len(sizes))))
    else:
        parts = [one(c) for c in range(len(sizes))]
    failures = sum(p[0] for p in parts)
    worst = min(p[1] for p in parts)
    examples = [e for p in parts for e in p[2]][:5]
    return failures, worst, examples


def _perp_unit(rng, v):
    """Random unit vectors orthogonal to each row of v (rows unit)."""
    g = rng.standard_normal(v.shape)
    g -= (g * v).sum(axis=1, keepdims=True) * v
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _summarize(margin, tol, describe):
    per_trial = margin.min(axis=1)
    bad = np.flatnonzero(per_trial < -tol)
    return int(bad.size), float(per_trial.min()), [describe(int(i)) for i in bad[:5]]


# --- escape lemma -----------------------------------------------------------------


def verify_escape_lemma(
    eta: float,
    trials: int,
    seed: int = 0,
    n: int = 3,
    distance_factor: float = 1.0,
    threads: int = 1,
    tol: float = MARGIN_TOL,
) -> TrialReport:
    """B(z, r) misses H(y, theta, eta) whenever |z-y| >= t r and (z-y).theta <= gamma |z-y|.

    ``distance_factor`` < 1 places z closer than t r (a sabotaged hypothesis).
    """
    if not 0 < eta <= 1:
        raise DomainError("eta must lie in (0, 1]")
    if n < 2:
        raise DomainError("escape lemma checks need n >= 2")
    t, gamma = eta_constants(eta)

    def chunk(rng, B):
        y = rng.uniform(-1, 1, (B, n))
        theta = random_directions(rng, n, B)
        r = 10 ** rng.uniform(-3, 0, B)
        # direction of z - y outside H(y, theta, gamma); half exactly on its boundary
        e = _perp_unit(rng, theta)
        v = gamma * theta + math.sqrt(1 - gamma**2) * e
        free = rng.random(B) < 0.5
        cand = random_directions(rng, n, B)
        for _ in range(64):
            redo = free & ((cand * theta).sum(axis=1) > gamma)
            if not redo.any():
                break
            cand[redo] = random_directions(rng, n, int(redo.sum()))
        else:
            raise SamplingError("rejection sampling for z exhausted its budget")
        v[free] = cand[free]
        s = t * np.where(rng.random(B) < 0.5, 1.0, 1.0 + np.abs(rng.normal(0, 0.25, B)))
        s *= distance_factor
        z = y + (s * r)[:, None] * v

        # probes: tangent maximizer, the point z + r theta, then random ball points
        w = np.empty((B, PROBES, n))
        cos0 = np.clip((v * theta).sum(axis=1), -1, 1)
        tp = theta - cos0[:, None] * v
        tn = np.linalg.norm(tp, axis=1, keepdims=True)
        tp = np.where(tn > 1e-15, tp / np.maximum(tn, 1e-300), e)
        far = s > 1
        psi = np.arcsin(np.where(far, 1 / np.maximum(s, 1), 1.0))
        ang = np.minimum(psi, np.arccos(cos0))
        L = np.sqrt(np.maximum(s**2 - 1, 0)) * r
        w[:, 0] = np.where(
            far[:, None], y + L[:, None] * (np.cos(ang)[:, None] * v + np.sin(ang)[:, None] * tp), z + r[:, None] * theta
        )
        w[:, 1] = z + r[:, None] * theta
        k = PROBES - 2
        dirs = rng.standard_normal((B, k, n))
        dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
        rad = np.where(rng.random((B, k)) < 0.5, 1.0, rng.random((B, k)) ** (1 / n))
        w[:, 2:] = z[:, None] + (r[:, None] * rad)[..., None] * dirs
        d = w - y[:, None]
        margin = eta * np.linalg.norm(d, axis=2) - (d * theta[:, None]).sum(axis=2)

        def describe(i):
            j = int(np.argmin(margin[i]))
            return {"y": y[i].tolist(), "theta": theta[i].tolist(), "r": float(r[i]), "z": z[i].tolist(), "w": w[i, j].tolist()}

        return _summarize(margin, tol, describe)

    f, worst, ex = _run_chunks(chunk, trials, seed, threads)
    params = {"eta": eta, "n": n, "distance_factor": distance_factor, "t": t, "gamma": gamma}
    return TrialReport("escape", params, trials, f, worst, seed, ex)


# --- hole / half-space lemma ------------------------------------------------------


def verify_hole_halfspace_lemma(
    rho: float,
    trials: int,
    seed: int = 0,
    n: int = 3,
    delta_factor: float = 1.0,
    threads: int = 1,
    tol: float = MARGIN_TOL,
) -> TrialReport:
    """H(x + delta r theta, theta) ∩ B(x, r) ⊂ B(z, rho t r) when B(z, rho t r) ⊂ B(x, t r).

    ``delta_factor`` < 1 shifts the half-space toward x (a sabotaged hypothesis).
    """
    t, delta = rho_constants(rho)
    delta *= delta_factor
    if delta >= 1:
        raise SamplingError(f"H(x + delta r theta, theta) ∩ B(x, r) is empty for rho={rho}")
    if n < 2:
        raise DomainError("hole lemma checks need n >= 2")

    def chunk(rng, B):
        x = rng.uniform(-1, 1, (B, n))
        r = 10 ** rng.uniform(-3, 0, B)
        theta = random_directions(rng, n, B)
        dmax = t * r * (1 - rho)
        d = np.where(rng.random(B) < 0.5, dmax, dmax * (1 - rng.random(B)))
        z = x + d[:, None] * theta
        # probes y = x + r (a theta + b e); a in [delta, 1], biased toward delta
        a = delta + (1 - delta) * rng.random((B, PROBES)) ** 2
        a[:, 0] = delta
        bmax = np.sqrt(1 - a**2)
        b = np.where(rng.random((B, PROBES)) < 0.5, bmax, bmax * rng.random((B, PROBES)))
        b[:, 0] = bmax[:, 0]
        e = rng.standard_normal((B, PROBES, n))
        e -= (e * theta[:, None]).sum(axis=2, keepdims=True) * theta[:, None]
        e /= np.linalg.norm(e, axis=2, keepdims=True)
        yv = x[:, None] + r[:, None, None] * (a[..., None] * theta[:, None] + b[..., None] * e)
        margin = (rho * t * r)[:, None] - np.linalg.norm(yv - z[:, None], axis=2)

        def describe(i):
            j = int(np.argmin(margin[i]))
            return {"x": x[i].tolist(), "r": float(r[i]), "z": z[i].tolist(), "y": yv[i, j].tolist()}

        return _summarize(margin, tol, describe)

    f, worst, ex = _run_chunks(chunk, trials, seed, threads)
    params = {"rho": rho, "n": n, "delta_factor": delta_factor, "t": t, "delta": delta}
    return TrialReport("hole_halfspace", params, trials, f, worst, seed, ex)


# --- containment in B(x, 2 sqrt(n) delta r) --------------------------------------


def verify_porous_cone_containment(
    n: int,
    k: int,
    rho: float,
    alpha: float,
    eta: float,
    trials: int,
    seed: int = 0,
    threads: int = 1,
    tol: float = MARGIN_TOL,
) -> TrialReport:
    """Points of X(x,r,V,alpha) ∖ H(x,theta,eta) outside every H(x + delta r theta_i, theta_i)
    lie in B(x, 2 sqrt(n) delta r), with theta = -(1/sqrt k) sum theta_i and V = span(theta_i).

    Along a direction u admissible for the cone constraints, the farthest
    admissible point sits at s* = min(r, delta r / max_i (u . theta_i)^+), so
    probes are these ray endpoints plus scaled-in copies.
    """
    if not 1 <= k <= n:
        raise InputError("need 1 <= k <= n")
    if not (0 < alpha <= 1 and 0 < eta <= 1):
        raise DomainError("alpha and eta must lie in (0, 1]")
    _, delta = rho_constants(rho)
    bound = 2 * math.sqrt(n) * delta

    def chunk(rng, B):
        x = rng.uniform(-1, 1, (B, n))
        r = 10 ** rng.uniform(-3, 0, B)
        frames = random_frames(rng, n, n, B)  # first k rows span V, the rest span V-perp
        Th = frames[:, :k]
        theta = -Th.sum(axis=1) / math.sqrt(k)
        P = PROBES
        # V-component: unit vector in V; on half the probes pinned to the H boundary
        cv = rng.standard_normal((B, P, k))
        cv /= np.linalg.norm(cv, axis=2, keepdims=True)
        vv = np.einsum("bpk,bkn->bpn", cv, Th)
        if k < n:
            cw = rng.standard_normal((B, P, n - k))
            cw /= np.linalg.norm(cw, axis=2, keepdims=True)
            ww = np.einsum("bpk,bkn->bpn", cw, frames[:, k:])
            sphi = np.where(rng.random((B, P)) < 0.5, alpha * (1 - 1e-12), alpha * rng.random((B, P)))
            sphi = np.minimum(sphi, 1 - 1e-12)
        else:
            ww = np.zeros_like(vv)
            sphi = np.zeros((B, P))
        cphi = np.sqrt(1 - sphi**2)
        pin = rng.random((B, P)) < 0.5
        a = eta / cphi
        if k > 1:
            # v = a theta + sqrt(1 - a^2) e with e ⊥ theta inside V
            e = rng.standard_normal((B, P, k))
            e = np.einsum("bpk,bkn->bpn", e, Th)
            e -= (e * theta[:, None]).sum(axis=2, keepdims=True) * theta[:, None]
            e /= np.linalg.norm(e, axis=2, keepdims=True)
            ok = pin & (a <= 1)
            vp = a[..., None] * theta[:, None] + np.sqrt(np.maximum(1 - a**2, 0))[..., None] * e
            vv = np.where(ok[..., None], vp, vv)
        u = cphi[..., None] * vv + sphi[..., None] * ww
        admissible = (u * theta[:, None]).sum(axis=2) <= eta * (1 + 1e-15)
        proj = np.einsum("bpn,bkn->bpk", u, Th).max(axis=2)
        s_star = np.where(proj > 0, np.minimum(r[:, None], delta * r[:, None] / np.maximum(proj, 1e-300)), r[:, None])
        s = np.where(rng.random((B, P)) < 0.75, s_star, s_star * rng.random((B, P)))
        s = np.where(admissible, s, 0.0)
        margin = (bound * r)[:, None] - s
        if not admissible.any():
            raise SamplingError("no admissible directions sampled")

        def describe(i):
            j = int(np.argmin(margin[i]))
            return {"x": x[i].tolist(), "r": float(r[i]), "frame": Th[i].tolist(), "y": (x[i] + s[i, j] * u[i, j]).tolist()}

        return _summarize(margin, tol, describe)

    f, worst, ex = _run_chunks(chunk, trials, seed, threads)
    params = {"n": n, "k": k, "rho": rho, "alpha": alpha, "eta": eta, "delta": delta}
    return TrialReport("porous_cone_containment", params, trials, f, worst, seed, ex)


CALIBRATION_RHO = 0.495


def containment_parameters(n: int, k: int, seed: int = 0, trials: int = 10_000, rho: float = CALIBRATION_RHO, floor_exp: int = 20):
    """Largest tied alpha = eta = 2^-i (0 <= i <= floor_exp) passing the containment audit.

    Calibrated at a rho where B(x, 2 sqrt(n) delta r) is a proper sub-ball of B(x, r);
    the containment scales with delta, so the result does not depend on rho.
    """
    if not 1 <= k <= n:
        raise InputError("need 1 <= k <= n")

    def passes(i):
        v = 2.0**-i
        return verify_porous_cone_containment(n, k, rho, v, v, trials, seed).passed

    if not passes(floor_exp):
        raise SearchError(f"no passing alpha, eta above 2^-{floor_exp} for n={n}, k={k}")
    lo, hi = -1, floor_exp  # passes(hi) holds; lo is a known failure or the sentinel
    if passes(0):
        return 1.0, 1.0
    lo = 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if passes(mid):
            hi = mid
        else:
            lo = mid
    return 2.0**-hi, 2.0**-hi


# --- gauge condition -------------------------------------------------------------

GAUGES = {
    "power": lambda r, s: r**s,
    "log_power": lambda r, s: r**s * np.log(1 / r),
    "log_inverse": lambda r, s: r**s / np.log(1 / r),
}


def check_gauge_condition(family: str, s: float, m: float, eps_grid=None, r_grid=None, threshold: float = 0.01):
    """sup_r h(eps r) / (eps^m h(r)) per eps; passes iff it decreases below ``threshold``.

    ``s`` is the exponent of the family (for ``log_inverse`` use s = m).
    Returns (passed, worst ratio at the smallest eps, list of sups).
    """
    if family not in GAUGES:
        raise InputError(f"unknown gauge family {family!r}; choose from {sorted(GAUGES)}")
    h = GAUGES[family]
    eps = np.array([10.0**-i for i in range(1, 9)] if eps_grid is None else eps_grid, dtype=float)
    eps = np.sort(eps)[::-1]
    r = np.geomspace(1e-12, 0.5, 200) if r_grid is None else np.asarray(r_grid, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        hr = h(r, s)
        her = h(eps[:, None] * r[None], s)
    if not (np.all(hr > 0) and np.all(her > 0) and np.all(np.isfinite(hr)) and np.all(np.isfinite(her))):
        raise DomainError("gauge takes nonpositive values on the grid")
    sups = (her / (eps[:, None] ** m * hr[None])).max(axis=1)
    ok = bool(np.all(np.diff(sups) < 0) and sups[-1] < threshold)
    return ok, float(sups[-1]), sups.tolist()
