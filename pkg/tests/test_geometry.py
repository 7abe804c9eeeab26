import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poroscope.errors import ConstructionError, DomainError, InputError
from poroscope.geometry import (
    ConeRegion,
    Frame,
    HalfSpaceCone,
    Subspace,
    cone_contains,
    dist_to_subspace,
    eta_constants,
    grassmannian_net,
    halfspace_cone_contains,
    random_subspace,
    rho_constants,
    sample_frame,
    subspace_distance,
)


def line(phi):
    return Subspace([[math.cos(phi), math.sin(phi)]])


def test_dist_to_subspace_examples():
    assert dist_to_subspace([3.0, 4.0], Subspace.axes(2, [0])) == pytest.approx(4.0)
    assert dist_to_subspace([2.0, 0.0], Subspace.axes(2, [0])) == pytest.approx(0.0, abs=1e-12)
    V = Subspace.axes(3, [0, 1])
    assert dist_to_subspace([1.0, 1.0, 1.0], V) == pytest.approx(1.0)


def test_dist_to_subspace_rotated_plane_matches_hand_projection():
    V = Subspace.span([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    y = np.array([1.0, -1.0, 5.0])
    # y is (1,-1,0) + (0,0,5); (1,-1,0) is orthogonal to V
    assert dist_to_subspace(y, V) == pytest.approx(math.sqrt(2.0))


def test_dimension_mismatch_raises():
    with pytest.raises(InputError):
        dist_to_subspace([1.0, 2.0, 3.0], Subspace.axes(2, [0]))


def test_cone_examples():
    C = ConeRegion(np.zeros(2), Subspace.axes(2, [0]), 0.5, 1.0)
    assert cone_contains(C, [0.5, 0.0])
    assert not cone_contains(C, [0.0, 0.5])
    assert cone_contains(C, [0.6, 0.25])
    assert not cone_contains(C, [0.0, 0.0])
    assert not cone_contains(C, [1.2, 0.0])


def test_halfspace_cone_examples():
    e1 = np.array([1.0, 0.0])
    assert halfspace_cone_contains(HalfSpaceCone(np.zeros(2), e1, 0.0), [1.0, 1.0])
    assert not halfspace_cone_contains(HalfSpaceCone(np.zeros(2), e1, 1.0), [1.0, 1.0])
    assert halfspace_cone_contains(HalfSpaceCone(np.zeros(2), e1, 0.5), [1.0, 1.0])
    assert not halfspace_cone_contains(HalfSpaceCone(np.zeros(2), e1, 0.0), [0.0, 0.0])


def test_halfspace_eta_one_rejects_sampled_points():
    rng = np.random.default_rng(3)
    H = HalfSpaceCone(np.zeros(3), np.array([0.0, 0.0, 1.0]), 1.0)
    y = rng.standard_normal((5000, 3))
    assert not halfspace_cone_contains(H, y).any()


def test_eta_constants():
    t, g = eta_constants(1.0)
    assert t == pytest.approx(math.sqrt(5.0), abs=1e-7)
    assert g == pytest.approx(0.4472136, abs=1e-7)
    eta = 0.01
    _, g = eta_constants(eta)
    assert eta / math.sqrt(5) <= g <= eta / 2
    t, g = eta_constants(2 / math.sqrt(5))
    assert g == 1.0 / t
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(DomainError):
            eta_constants(bad)


def test_escape_inequality_on_grid():
    # eta sqrt(s^2 - 1) >= 1 + gamma s whenever s >= t(eta)
    etas = np.linspace(0.01, 1.0, 100)
    for eta in etas:
        t, g = eta_constants(eta)
        s = t * np.linspace(1.0, 50.0, 100)
        assert np.all(eta * np.sqrt(s * s - 1) >= 1 + g * s - 1e-12)


def test_rho_constants():
    t, d = rho_constants(0.45)
    assert t == pytest.approx(3.16228, abs=1e-5)
    assert d == pytest.approx(0.72683, abs=1e-5)
    # hand evaluation: (0.51 - sqrt(0.2201)) / sqrt(0.02)
    assert rho_constants(0.49)[1] == pytest.approx((0.51 - math.sqrt(0.2201)) / math.sqrt(0.02), abs=1e-12)
    assert rho_constants(0.49)[1] == pytest.approx(0.28890, abs=1e-4)
    ds = [rho_constants(r)[1] for r in (0.49, 0.499, 0.4999)]
    assert ds[0] > ds[1] > ds[2] > 0
    grid = np.linspace(math.sqrt(2) - 1 + 1e-6, 0.5 - 1e-6, 500)
    vals = [rho_constants(r)[1] for r in grid]
    assert np.all(np.diff(vals) < 0) and min(vals) > 0
    for bad in (0.4, 0.5, 0.6):
        with pytest.raises(DomainError):
            rho_constants(bad)


def test_subspace_distance_examples():
    assert subspace_distance(line(0.3), line(0.3)) == pytest.approx(0.0, abs=1e-7)
    assert subspace_distance(line(0.0), line(math.pi / 2)) == pytest.approx(1.0)
    assert subspace_distance(line(0.0), line(math.pi / 6)) == pytest.approx(0.5)


def test_subspace_distance_matches_dense_sampling():
    rng = np.random.default_rng(0)
    for _ in range(10):
        V = random_subspace(4, 2, rng)
        W = random_subspace(4, 2, rng)
        c = rng.standard_normal((20000, 2))
        c /= np.linalg.norm(c, axis=1, keepdims=True)
        pts = c @ V.basis
        sampled = dist_to_subspace(pts, W).max()
        d = subspace_distance(V, W)
        assert sampled <= d + 1e-9
        assert sampled >= d - 1e-3


def test_subspace_distance_rejects_mixed_dimensions():
    with pytest.raises(InputError):
        subspace_distance(Subspace.axes(3, [0]), Subspace.axes(3, [0, 1]))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 5))
def test_subspace_distance_triangle_inequality(seed, n):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, n))
    U, V, W = (random_subspace(n, m, rng) for _ in range(3))
    assert subspace_distance(V, W) <= subspace_distance(V, U) + subspace_distance(U, W) + 1e-8
    assert subspace_distance(V, W) == pytest.approx(subspace_distance(W, V), abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_cone_membership_is_rigid_motion_invariant(seed):
    rng = np.random.default_rng(seed)
    n = 3
    V = random_subspace(n, 1, rng)
    apex = rng.uniform(-1, 1, n)
    C = ConeRegion(apex, V, float(rng.uniform(0.1, 1.0)), 1.5)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    shift = rng.uniform(-2, 2, n)
    C2 = ConeRegion(apex @ Q.T + shift, Subspace(V.basis @ Q.T), C.alpha, C.r)
    y = apex + rng.uniform(-1.5, 1.5, (200, n))
    a = cone_contains(C, y)
    b = cone_contains(C2, y @ Q.T + shift)
    # points essentially on the boundary can flip under rounding
    v = y - apex
    margin = np.abs(dist_to_subspace(v, V) - C.alpha * np.linalg.norm(v, axis=1))
    margin = np.minimum(margin, np.abs(np.linalg.norm(v, axis=1) - C.r))
    assert np.all((a == b) | (margin < 1e-9))


def test_grassmannian_net_trivial_and_audit():
    assert len(grassmannian_net(2, 1, 1.0)) == 1
    net = grassmannian_net(2, 1, 0.3, seed=1)
    assert len(net) >= math.ceil(math.pi / (2 * math.asin(0.3)))
    rng = np.random.default_rng(99)
    for _ in range(2000):
        W = random_subspace(2, 1, rng)
        assert min(subspace_distance(V, W) for V in net) < 0.3


def test_grassmannian_net_cone_inclusion():
    # d(V_i, W) < alpha/2 should give X(0, V_i, alpha/2) inside X(0, W, alpha)
    alpha = 0.4
    net = grassmannian_net(3, 1, alpha / 2, seed=2)
    rng = np.random.default_rng(5)
    for _ in range(50):
        W = random_subspace(3, 1, rng)
        V = min(net, key=lambda P: subspace_distance(P, W))
        inner = ConeRegion(np.zeros(3), V, alpha / 2)
        outer = ConeRegion(np.zeros(3), W, alpha)
        y = rng.standard_normal((4000, 3))
        inside = cone_contains(inner, y)
        assert np.all(cone_contains(outer, y[inside]))


def test_grassmannian_net_cap_reports_radius():
    with pytest.raises(ConstructionError) as err:
        grassmannian_net(3, 1, 0.05, max_size=3)
    assert err.value.achieved is not None


def test_sample_frame():
    F = sample_frame(4, 4, seed=7)
    assert np.allclose(F.directions @ F.directions.T, np.eye(4), atol=1e-10)
    G = sample_frame(4, 4, seed=7)
    assert np.array_equal(F.directions, G.directions)
    F = sample_frame(3, 2, seed=1)
    assert np.allclose(np.linalg.norm(F.directions, axis=1), 1.0)
    assert abs(F.directions[0] @ F.directions[1]) <= 1e-10
    with pytest.raises(InputError):
        sample_frame(2, 3)


def test_frame_rejects_non_orthonormal():
    with pytest.raises(InputError):
        Frame(np.zeros(2), [[1.0, 0.0], [1.0, 0.0]])


def test_subspace_validation_and_complement():
    with pytest.raises((InputError, DomainError)):
        Subspace([[1.0, 1.0]])
    V = Subspace.axes(4, [1, 3])
    W = V.complement()
    assert W.m == 2
    assert np.allclose(V.basis @ W.basis.T, 0.0)
