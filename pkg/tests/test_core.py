import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lpplab.core import (GridEncoding, GridGeometry, brute_force, constrained_best, geodesic,
                         grid_for_segments, implicit_geodesic, implicit_passage_time,
                         is_up_right, passage_field, passage_time, path_weight,
                         unconstrained_best)
from lpplab.errors import CapacityError, ContractError
from lpplab.geometry import path_encoding
from lpplab.lattice import AntidiagSegment, Box, WeightField, sample_field, segment_box
from lpplab.stats import shape_function

seeds = st.integers(0, 2 ** 64 - 1)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, w=st.integers(1, 6), h=st.integers(1, 6))
def test_dp_equals_enumeration(seed, w, h):
    f = sample_field(seed, Box(0, 0, w - 1, h - 1))
    bf = brute_force(f, (0, 0), (w - 1, h - 1))
    g = geodesic(f, (0, 0), (w - 1, h - 1))
    assert math.isclose(g.value, bf.value, rel_tol=1e-12, abs_tol=1e-12)
    assert bf.n_paths == math.comb(w + h - 2, w - 1)
    assert np.array_equal(g.vertices, bf.path.vertices)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, x0=st.integers(-20, 20), y0=st.integers(-20, 20),
       w=st.integers(1, 30), h=st.integers(1, 30))
def test_geodesic_weight_equals_value(seed, x0, y0, w, h):
    f = sample_field(seed, Box(x0, y0, x0 + w - 1, y0 + h - 1))
    g = geodesic(f, (x0, y0), (x0 + w - 1, y0 + h - 1))
    assert is_up_right(g.vertices)
    assert g.start == (x0, y0) and g.end == (x0 + w - 1, y0 + h - 1)
    assert len(g) == w + h - 1
    # same summation order as the sweep, so equality is exact
    assert path_weight(f, g) == g.value


def test_last_vertex_excluded():
    f = sample_field(1, Box(0, 0, 0, 0))
    assert passage_time(f, (0, 0), (0, 0)) == 0.0
    f = WeightField(None, Box(0, 0, 1, 0), np.array([[2.0, 100.0]]))
    assert passage_time(f, (0, 0), (1, 0)) == 2.0


def test_tie_goes_to_step_from_below_and_is_counted():
    f = WeightField(None, Box(0, 0, 1, 1), np.ones((2, 2)))
    pf = passage_field(f, (0, 0))
    assert pf.ties == 1
    assert [tuple(v) for v in pf.geodesic_to((1, 1)).vertices] == [(0, 0), (1, 0), (1, 1)]


@settings(max_examples=25, deadline=None)
@given(seed=seeds, x0=st.integers(-40, 40), y0=st.integers(-40, 40),
       w=st.integers(1, 40), h=st.integers(1, 40))
def test_implicit_kernels_match_materialized(seed, x0, y0, w, h):
    u, v = (x0, y0), (x0 + w - 1, y0 + h - 1)
    f = sample_field(seed, Box(*u, *v))
    g = geodesic(f, u, v)
    gi = implicit_geodesic(seed, u, v)
    assert gi.value == g.value
    assert np.array_equal(gi.vertices, g.vertices)
    probe = (x0 + w // 2, y0 + h // 3)
    t, tp, _ = implicit_passage_time(seed, u, v, probe)
    assert t == g.value
    assert tp == passage_time(f, u, probe)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, i1=st.integers(0, 6), i2=st.integers(0, 6),
       j1=st.integers(0, 6), j2=st.integers(0, 6))
def test_polymer_ordering(seed, i1, i2, j1, j2):
    A, B = AntidiagSegment((4, 4), 3), AntidiagSegment((20, 20), 3)
    f = sample_field(seed, segment_box(A, B))
    lo_i, hi_i = sorted((i1, i2))
    lo_j, hi_j = sorted((j1, j2))
    g_low = geodesic(f, A.point(lo_i - 3), B.point(lo_j - 3))
    g_high = geodesic(f, A.point(hi_i - 3), B.point(hi_j - 3))
    # larger index means further up-left: x never exceeds the lower geodesic
    assert np.all(g_high.vertices[:, 0] <= g_low.vertices[:, 0])


def test_passage_contracts():
    f = sample_field(0, Box(0, 0, 5, 5))
    with pytest.raises(ContractError):
        passage_time(f, (3, 3), (2, 5))
    with pytest.raises(ContractError):
        geodesic(f, (0, 0), (6, 6))
    with pytest.raises(ContractError):
        implicit_passage_time(0, (0, 0), (5, 5), probe=(6, 1))
    with pytest.raises(ContractError):
        path_weight(f, np.array([[0, 0], [1, 1]]))


def test_brute_force_capacity():
    f = sample_field(0, Box(0, 0, 14, 14))
    with pytest.raises(CapacityError):
        brute_force(f, (0, 0), (14, 14))


def test_planted_weight_attracts_geodesic():
    f = sample_field(5, Box(0, 0, 2, 2)).with_weight((1, 1), 1000.0)
    assert geodesic(f, (0, 0), (2, 2)).contains((1, 1))


def test_shape_function_matches_growth():
    # T/n tends to 4 on the diagonal; with n = 300 the n^(1/3) correction is about -0.16
    vals = [implicit_passage_time(s, (0, 0), (300, 300))[0] / 300 for s in range(40)]
    assert 3.7 < np.mean(vals) < 4.0
    assert shape_function(300, 300) == pytest.approx(1200)


# ------------------------------------------------------------ grid paths

def _grid_case(seed, stages, width, half):
    A = AntidiagSegment((0, 0), 2)
    B = AntidiagSegment((6, 6), 2)
    grid = grid_for_segments(A, B, stages, width, half)
    f = sample_field(seed, Box(-4, -4, 10, 10))
    return A, B, grid, f


def _brute_constrained(f, A, B, grid, enc):
    best = -math.inf
    for u in A.points():
        for v in B.points():
            if u[0] > v[0] or u[1] > v[1]:
                continue
            # enumerate every path from u to v
            n_right, n_up = v[0] - u[0], v[1] - u[1]
            from itertools import combinations
            for rights in combinations(range(n_right + n_up), n_right):
                steps = np.zeros(n_right + n_up, int)
                steps[list(rights)] = 1
                moves = np.where(steps[:, None] == 1, [1, 0], [0, 1])
                verts = np.vstack([[u], u + np.cumsum(moves, axis=0)]) if len(moves) else np.array([u])
                e = path_encoding(verts, grid)
                if e is not None and e.indices == enc.indices:
                    best = max(best, path_weight(f, verts))
    return best


@settings(max_examples=15, deadline=None)
@given(seed=seeds, j=st.lists(st.integers(-2, 1), min_size=4, max_size=4))
def test_constrained_best_matches_enumeration(seed, j):
    A, B, grid, f = _grid_case(seed, 3, 1.5, 2)
    enc = GridEncoding(tuple(j), grid.index_range)
    got = constrained_best(f, A, enc, grid, B)
    want = _brute_constrained(f, A, B, grid, enc)
    if want == -math.inf:
        assert got == -math.inf
    else:
        assert got == pytest.approx(want, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_single_cell_grid_is_unconstrained(seed):
    A, B, _, f = _grid_case(seed, 1, None, 0)
    grid = grid_for_segments(A, B, 1, None, 0)
    enc = GridEncoding((0, 0), grid.index_range)
    assert constrained_best(f, A, enc, grid, B) == pytest.approx(unconstrained_best(f, A, B))


@settings(max_examples=20, deadline=None)
@given(seed=seeds, j=st.lists(st.integers(-2, 1), min_size=3, max_size=3))
def test_constrained_never_beats_unconstrained(seed, j):
    A, B, _, f = _grid_case(seed, 2, 1.5, 2)
    grid = grid_for_segments(A, B, 2, 1.5, 2)
    got = constrained_best(f, A, GridEncoding(tuple(j), grid.index_range), grid, B)
    assert got <= unconstrained_best(f, A, B) + 1e-12


def test_grid_geometry_cells():
    grid = GridGeometry((0, 0), (10, 10), 2, 2.0, 2)
    assert grid.line(1) == 10 and grid.center(1) == (5, 5)
    assert grid.index_range == (-2, 2)
    assert grid.cell_of(1, (5, 5)) == 0
    assert grid.cell_of(1, (6, 4)) == -1
    assert grid.cell_of(1, (1, 9)) is None
    pts = grid.cell_points(1, 0)
    assert [grid.cell_of(1, p) for p in pts] == [0] * len(pts)
    with pytest.raises(ContractError):
        GridEncoding((0, 3), grid.index_range)
    with pytest.raises(ContractError):
        GridGeometry((0, 0), (1, 1), 5, 1.0, 1)
