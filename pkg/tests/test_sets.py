import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poroscope.errors import CompositionError, DomainError, InputError, ParseError
from poroscope.sets import (
    DyadicCubeSet,
    IfsSystem,
    Similitude,
    cantor_ifs,
    cantor_raster,
    cube_ifs,
    full_raster,
    has_hole_property,
    interval_ifs,
    natural_measure,
    osc_audit,
    point_ifs,
    product_ifs,
    raster_product,
    rasterize,
    salli_cylinder,
    salli_ifs,
    salli_raster,
)
from poroscope.setio import dump_binary, dumps_set, load_binary, load_set, loads_set, save_set


def cantor_intervals(lam, level):
    """Exact level-`level` construction intervals of C_lam as Fractions."""
    lam = Fraction(lam).limit_denominator(10**6)
    iv = [(Fraction(0), Fraction(1))]
    for _ in range(level):
        nxt = []
        for a, b in iv:
            w = (b - a) * lam
            nxt += [(a, a + w), (b - w, b)]
        iv = nxt
    return iv


def interval_oracle(intervals, depth):
    """Dyadic cells whose interiors meet some closed interval of positive length."""
    side = 2**depth
    cells = set()
    for a, b in intervals:
        for c in range(side):
            lo, hi = Fraction(c, side), Fraction(c + 1, side)
            if a < hi and b > lo:
                cells.add(c)
    return cells


def test_cantor_ifs_maps():
    F = cantor_ifs(1 / 3)
    assert F.ratios == [pytest.approx(1 / 3)] * 2
    assert [f.translation[0] for f in F.maps] == [0.0, pytest.approx(2 / 3)]
    for bad in (0.0, 0.5, 0.7):
        with pytest.raises(DomainError):
            cantor_ifs(bad)


def test_cantor_third_depth_two_matches_interval_oracle():
    S = rasterize(cantor_ifs(1 / 3), 2)
    assert {int(c[0]) for c in S.cells} == interval_oracle(cantor_intervals(Fraction(1, 3), 2), 2) == {0, 1, 2, 3}


@pytest.mark.parametrize("lam,depth", [(0.3, 6), (0.25, 8), (0.2, 7), (0.4, 5)])
def test_cantor_raster_matches_interval_oracle(lam, depth):
    # deep enough that construction intervals are shorter than a cell
    level = math.ceil(depth * math.log(2) / math.log(1 / lam)) + 1
    want = interval_oracle(cantor_intervals(lam, level), depth)
    got = {int(c[0]) for c in cantor_raster(lam, depth).cells}
    assert got == want


def test_cantor_fixed_points_covered():
    S = cantor_raster(0.3, 9)
    assert S.contains_point([0.0]) and S.contains_point([1.0])


def test_full_cube_system():
    for n, d in ((1, 6), (2, 5), (3, 3)):
        S = rasterize(cube_ifs(n), d)
        assert len(S) == 2 ** (d * n)
        assert S == full_raster(n, d)


def test_nesting_parents_marked():
    for F, d in ((cantor_ifs(0.3), 10), (salli_ifs(2, 3), 8), (salli_ifs(3, 2), 6)):
        fine = rasterize(F, d)
        coarse = rasterize(F, d - 1)
        parents = DyadicCubeSet(F.n, d - 1, fine.cells >> 1)
        assert set(map(tuple, parents.cells)) <= set(map(tuple, coarse.cells))


def test_raster_is_forward_invariant():
    F = salli_ifs(2, 2)
    S = rasterize(F, 7)
    marked = set(map(tuple, S.cells))
    h = S.h
    for f in F.maps:
        lo = S.cells * h * f.ratio + np.array(f.translation)
        hi = lo + h * f.ratio
        first = np.floor(lo / h + 1e-9).astype(int)
        last = np.ceil(hi / h - 1e-9).astype(int) - 1
        for a, b in zip(first, last):
            for c in itertools.product(*[range(x, max(x, y) + 1) for x, y in zip(a, b)]):
                assert c in marked


def test_salli_maps_and_volume():
    F = salli_ifs(2, 3)
    assert sorted(F.ratios) == sorted([0.5] * 3 + [0.25] * 3 + [0.125] * 3)
    assert len(salli_ifs(2, 1).maps) == 3
    for n, l in ((2, 1), (2, 3), (3, 2), (4, 2)):
        vol = sum(f.ratio**n for f in salli_ifs(n, l).maps)
        assert vol == pytest.approx(1 - 2.0 ** (-l * n))


def test_salli_open_set_condition():
    for n, l in ((2, 1), (2, 3), (3, 2)):
        assert osc_audit(salli_ifs(n, l), l + 2)
    overlapping = IfsSystem(1, (Similitude(0.6, (0.0,)), Similitude(0.6, (0.4,))))
    assert not osc_audit(overlapping, 4)


def test_salli_hole_property():
    for n, l, d in ((2, 1, 9), (2, 2, 9), (2, 3, 9), (3, 2, 6)):
        S = salli_raster(n, l, d)
        assert has_hole_property(S, l, range(0, d - l + 1))
    assert not has_hole_property(full_raster(2, 5), 1, range(0, 4))


def test_salli_raster_depth_consistency():
    # coarsening a deeper raster reproduces the shallower one
    assert salli_raster(2, 2, 4).coarsen(3) == salli_raster(2, 2, 3)
    assert salli_raster(2, 3, 9).coarsen(6) == salli_raster(2, 3, 6)


def salli_recursive_cells(n, l, d, memo=None):
    """Independent oracle: R_d = union over maps of R_(d-i) shifted by t * 2^d."""
    memo = {} if memo is None else memo
    if d == 0:
        return {(0,) * n}
    if d in memo:
        return memo[d]
    out = set()
    for i in range(1, l + 1):
        if d - i < 0:
            # the whole piece sits inside the corner cell
            out.add((0,) * n)
            continue
        sub = salli_recursive_cells(n, l, d - i, memo)
        for v in itertools.product((0, 1), repeat=n):
            if any(v):
                off = [c * 2 ** (d - i) for c in v]
                out |= {tuple(a + b for a, b in zip(c, off)) for c in sub}
    memo[d] = out
    return out


@pytest.mark.parametrize("n,l,d", [(2, 1, 6), (2, 2, 7), (2, 3, 8), (3, 2, 5)])
def test_salli_raster_matches_recursion(n, l, d):
    S = salli_raster(n, l, d)
    assert set(map(tuple, S.cells.tolist())) == salli_recursive_cells(n, l, d)


def test_salli_corner_cube_is_empty():
    d, l = 8, 2
    S = salli_raster(2, l, d)
    inner = 2 ** (d - l) - 1
    assert not np.any(np.all(S.cells < inner, axis=1))


def test_product_ifs():
    C = cantor_ifs(0.3)
    P = product_ifs(C, C)
    assert P.n == 2 and len(P.maps) == 4 and set(P.ratios) == {0.3}
    with pytest.raises(CompositionError):
        product_ifs(C, interval_ifs())
    pt = point_ifs([0.25], 0.3)
    Q = product_ifs(C, pt)
    S = rasterize(Q, 7)
    # 0.25 sits on a grid line, so both closed cells meeting it are marked
    assert set(S.cells[:, 1]) == {31, 32}
    assert set(S.cells[:, 0]) == set(cantor_raster(0.3, 7).cells[:, 0])


def test_raster_product_counts_and_dual_construction():
    A = cantor_raster(0.3, 8)
    P = raster_product(A, A)
    assert len(P) == len(A) ** 2
    assert P == rasterize(product_ifs(cantor_ifs(0.3), cantor_ifs(0.3)), 8)
    full = raster_product(full_raster(1, 5), full_raster(1, 5))
    assert full == full_raster(2, 5)
    with pytest.raises(InputError):
        raster_product(A, cantor_raster(0.3, 7))


def test_salli_cylinder():
    d = 7
    assert salli_cylinder(2, 2, 2, d) == salli_raster(2, 2, d)
    cyl = salli_cylinder(2, 1, 1, d)
    E = salli_raster(1, 1, d)
    assert len(cyl) == len(E) * 2**d
    # vertical stripes: membership depends on the first coordinate only
    cols = set(cyl.cells[:, 0])
    assert cols == set(E.cells[:, 0])


def test_natural_measure():
    mu = natural_measure(DyadicCubeSet(2, 3, [[1, 2]]))
    assert mu.weights.tolist() == [1.0]
    S = full_raster(2, 6)
    mu = natural_measure(S)
    assert mu.weights.sum() == pytest.approx(1.0, abs=1e-12)
    half = mu.weights[mu.centers()[:, 0] < 0.5].sum()
    assert abs(half - 0.5) <= 2.0 ** (-6 + 1)
    with pytest.raises(DomainError):
        natural_measure(DyadicCubeSet(2, 3, np.zeros((0, 2), dtype=int)))


def test_dyadic_set_canonical_and_range():
    S = DyadicCubeSet(2, 3, [[3, 1], [0, 2], [3, 1]])
    assert S.cells.tolist() == [[0, 2], [3, 1]]
    with pytest.raises(InputError):
        DyadicCubeSet(2, 3, [[8, 0]])


def test_text_roundtrip(tmp_path):
    S = cantor_raster(0.3, 9)
    assert loads_set(dumps_set(S)) == S
    p = save_set(S, tmp_path / "c.json")
    assert load_set(p) == S


def test_binary_roundtrip(tmp_path):
    S = salli_raster(2, 2, 6)
    assert load_binary(dump_binary(S)) == S
    p = save_set(S, tmp_path / "s.dcs")
    assert p.read_bytes()[:4] == b"DCS1"
    assert load_set(p) == S


def test_version_mismatch_and_malformed():
    text = dumps_set(cantor_raster(0.3, 4)).replace('"format_version": 1', '"format_version": 2')
    with pytest.raises(ParseError):
        loads_set(text)
    with pytest.raises(ParseError) as err:
        loads_set('{"format_version": 1,\n "n": 1,\n "depth": oops}')
    assert "line 3" in str(err.value)
    with pytest.raises(ParseError):
        loads_set('{"format_version": 1, "n": 1, "depth": 2, "cell_count": 1, "cells": [[0]], "extra": 1}')
    with pytest.raises(ParseError):
        load_binary(b"DCS1\x01")


def test_load_enforces_canonical_sort():
    text = '{"format_version": 1, "n": 1, "depth": 3, "cell_count": 3, "cells": [[5], [1], [3]]}'
    assert loads_set(text).cells[:, 0].tolist() == [1, 3, 5]


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 6), st.integers(0, 2**31))
def test_roundtrip_property(n, depth, seed):
    rng = np.random.default_rng(seed)
    cells = rng.integers(0, 2**depth, (int(rng.integers(1, 40)), n))
    S = DyadicCubeSet(n, depth, cells)
    assert loads_set(dumps_set(S)) == S
    assert load_binary(dump_binary(S)) == S
