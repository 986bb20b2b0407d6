import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lpplab.errors import CapacityError, ContractError
from lpplab.lattice import (AntidiagSegment, AxisSegment, Box, LatticePoint,
                            ParallelogramRegion, antidiag_segment, derive_seed, field_key,
                            sample_field, segment_box, slope)

coords = st.integers(-50, 50)


def test_same_seed_same_field():
    a = sample_field(7, Box(0, 0, 9, 9))
    b = sample_field(7, Box(0, 0, 9, 9))
    assert np.array_equal(a.weights, b.weights)


def test_different_seed_different_field():
    a = sample_field(7, Box(0, 0, 9, 9))
    b = sample_field(8, Box(0, 0, 9, 9))
    assert not np.array_equal(a.weights, b.weights)


@settings(max_examples=30, deadline=None)
@given(x0=coords, y0=coords, w=st.integers(1, 8), h=st.integers(1, 8),
       dx=st.integers(0, 7), dy=st.integers(0, 7))
def test_weights_depend_only_on_point(x0, y0, w, h, dx, dy):
    big = sample_field(3, Box(x0, y0, x0 + w + 7, y0 + h + 7))
    sub_box = Box(x0 + dx, y0 + dy, x0 + dx + w - 1, y0 + dy + h - 1)
    assert np.array_equal(big.sub_field(sub_box).weights, sample_field(3, sub_box).weights)


def test_weights_look_exponential():
    w = sample_field(11, Box(0, 0, 299, 299)).weights.ravel()
    assert np.all(w > 0)
    assert abs(w.mean() - 1) < 0.01
    assert abs(w.var() - 1) < 0.03
    # P(w > 1) = e^-1
    assert abs((w > 1).mean() - math.exp(-1)) < 0.005


def test_seed_range_checked():
    with pytest.raises(ContractError):
        field_key(-1)
    with pytest.raises(ContractError):
        field_key(2 ** 64)
    field_key(2 ** 64 - 1)


def test_derive_seed_is_counter_sensitive():
    seeds = {derive_seed(1, a, b) for a in range(10) for b in range(10)}
    assert len(seeds) == 100
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)


def test_capacity_error_names_budget(monkeypatch):
    monkeypatch.setenv("LPPLAB_MAX_CELLS", "100")
    with pytest.raises(CapacityError, match="LPPLAB_MAX_CELLS"):
        sample_field(0, Box(0, 0, 10, 10))


def test_empty_box_rejected():
    with pytest.raises(ContractError):
        sample_field(0, Box(0, 0, -1, 3))


def test_point_order_and_slope():
    assert LatticePoint(1, 2).preceq((1, 5))
    assert not LatticePoint(2, 2).preceq((1, 5))
    assert LatticePoint(1, 2).antidiagonal == 3
    assert slope((0, 0), (2, 1)) == 0.5
    assert slope((0, 0), (0, 3)) == math.inf


def test_antidiagonal_segment_points():
    seg = AntidiagSegment((5, 5), 2)
    pts = seg.points()
    assert len(pts) == seg.size == 5
    assert np.all(pts.sum(axis=1) == 10)
    assert tuple(pts[0]) == (7, 3) and tuple(pts[-1]) == (3, 7)
    assert seg.point(-2) == (7, 3)
    assert seg.index_of((4, 6)) == 1
    assert seg.contains((3, 7)) and not seg.contains((2, 8))
    with pytest.raises(ContractError):
        seg.index_of((2, 8))


def test_antidiag_segment_width_is_floor():
    assert antidiag_segment((0, 0), 1000).half_span == 100
    assert antidiag_segment((0, 0), 30).half_span == math.floor(30 ** (2 / 3))
    with pytest.raises(ContractError):
        antidiag_segment((0, 0), 0)


def test_axis_segment():
    v = AxisSegment.centered((3, 3), 2, vertical=True)
    assert [tuple(p) for p in v.points()] == [(3, 1), (3, 2), (3, 3), (3, 4), (3, 5)]
    h = AxisSegment((0, 4), 3, vertical=False)
    assert h.contains((3, 4)) and not h.contains((4, 4))
    assert segment_box(v, h) == Box(0, 1, 3, 5)


def _inside_convex(corners, p):
    """Point in a convex polygon (corners in order), boundary included."""
    signs = set()
    for (ax, ay), (bx, by) in zip(corners, corners[1:] + corners[:1]):
        c = (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax)
        if c:
            signs.add(c > 0)
    return len(signs) <= 1


@given(bx=st.integers(-5, 5), by=st.integers(-5, 5), k=st.integers(1, 4),
       dx=st.integers(1, 12), dy=st.integers(1, 12), px=st.integers(-20, 25),
       py=st.integers(-20, 25))
def test_parallelogram_membership_matches_polygon(bx, by, k, dx, dy, px, py):
    base = AntidiagSegment((bx, by), k)
    region = ParallelogramRegion(base, (dx, dy))
    lo, hi = base.point(-k), base.point(k)
    corners = [lo, (lo.x + dx, lo.y + dy), (hi.x + dx, hi.y + dy), hi]
    assert region.contains((px, py)) == _inside_convex(corners, (px, py))
    assert region.slope == Fraction(dy, dx)


def test_parallelogram_contains_corners_and_rejects_outside():
    region = ParallelogramRegion(AxisSegment((0, 0), 4, vertical=True), (10, 5))
    for p in [(0, 0), (0, 4), (10, 5), (10, 9), (5, 5)]:
        assert region.contains(p)
    for p in [(-1, 0), (11, 7), (5, 0), (0, 5)]:
        assert not region.contains(p)
    assert region.bounding_box() == Box(0, 0, 10, 9)
    with pytest.raises(ContractError):
        ParallelogramRegion(AxisSegment((0, 0), 4, vertical=True), (0, 3))


def test_with_weight_copies():
    f = sample_field(0, Box(0, 0, 3, 3))
    g = f.with_weight((1, 2), 50.0)
    assert g.weight((1, 2)) == 50.0
    assert f.weight((1, 2)) != 50.0
    with pytest.raises(ContractError):
        f.weight((4, 0))
