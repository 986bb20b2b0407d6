"""Point-to-point last-passage values, geodesics and constrained maxima.

Passage time T(u, v) is the maximum weight of an up/right path from u to v
that counts u but not v, so T(u, u) = 0 and the recursion is
T(v) = max(T(v - e1) + w(v - e1), T(v - e2) + w(v - e2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .errors import CapacityError, ContractError
from .lattice import (AntidiagSegment, Box, LatticePoint, WeightField,
                      as_point, check_capacity, field_key)

BRUTE_FORCE_MAX_STEPS = 26


@dataclass
class Geodesic:
    """Up/right lattice path stored as an (L, 2) int array, start first."""

    vertices: np.ndarray
    value: float = math.nan
    ties: int = 0

    @property
    def start(self) -> LatticePoint:
        return LatticePoint(int(self.vertices[0, 0]), int(self.vertices[0, 1]))

    @property
    def end(self) -> LatticePoint:
        return LatticePoint(int(self.vertices[-1, 0]), int(self.vertices[-1, 1]))

    def __len__(self):
        return len(self.vertices)

    def point_set(self) -> set:
        return set(map(tuple, self.vertices.tolist()))

    def contains(self, p) -> bool:
        d = p[0] + p[1] - int(self.vertices[0].sum())
        if d < 0 or d >= len(self.vertices):
            return False
        return tuple(self.vertices[d]) == (p[0], p[1])

    def x_on_antidiagonal(self, line: int) -> int:
        d = line - int(self.vertices[0].sum())
        if d < 0 or d >= len(self.vertices):
            raise ContractError(f"path does not meet antidiagonal {line}")
        return int(self.vertices[d, 0])


def is_up_right(vertices) -> bool:
    v = np.asarray(vertices)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) == 0:
        return False
    steps = np.diff(v, axis=0)
    return bool(np.all((steps.sum(axis=1) == 1) & (steps.min(axis=1) == 0)))


def path_weight(field: WeightField, path) -> float:
    """Sum of weights along the path in path order, excluding the last vertex."""
    v = path.vertices if isinstance(path, Geodesic) else np.asarray(path)
    if not is_up_right(v):
        raise ContractError("path is not an up/right lattice path")
    total = 0.0
    for x, y in v[:-1]:
        total += field.weight((int(x), int(y)))
    return total


@dataclass
class PassageField:
    """Passage times from one source to every cell of a box.

    values[y - y0, x - x0] is T(source, (x, y)); -inf off the forward cone.
    backstep holds 1 (came from the left), 2 (from below) or 0 (source).
    """

    source: LatticePoint
    box: Box
    values: np.ndarray
    backstep: np.ndarray
    ties: int = 0

    def value(self, p) -> float:
        if not self.box.contains(p):
            raise ContractError(f"{p} outside {self.box}")
        return float(self.values[p[1] - self.box.y0, p[0] - self.box.x0])

    def geodesic_to(self, p) -> Geodesic:
        p = as_point(p)
        if not (self.box.contains(p) and self.source.preceq(p)):
            raise ContractError(f"{p} is not in the forward cone of {self.source}")
        local = K.trace_back(self.backstep, p.x - self.box.x0, p.y - self.box.y0)
        local[:, 0] += self.box.x0
        local[:, 1] += self.box.y0
        return Geodesic(local, self.value(p), self.ties)


def _region_box(field: WeightField, source, region):
    if region is None:
        region = Box(source[0], source[1], field.box.x1, field.box.y1)
    region = Box(*map(int, region))
    if not field.box.contains_box(region):
        raise ContractError(f"region {region} is not inside the field box")
    if not region.contains(source):
        raise ContractError(f"source {source} is not inside the region")
    return region


def passage_field(field: WeightField, source, region: Box | None = None) -> PassageField:
    """Single-source sweep over region (defaults to the box above-right of source)."""
    source = as_point(source)
    if not field.box.contains(source):
        raise ContractError(f"source {source} outside the field box")
    region = _region_box(field, source, region)
    check_capacity(2 * region.cells, "passage field")
    sub = field.sub_field(region)
    T, back, ties = K.sweep_box(
        sub.weights,
        np.array([source.y - region.y0]), np.array([source.x - region.x0]),
        np.array([0.0]))
    return PassageField(source, region, T, back, int(ties))


def passage_time(field: WeightField, u, v) -> float:
    u, v = as_point(u), as_point(v)
    if not u.preceq(v):
        raise ContractError(f"{u} does not precede {v}")
    return passage_field(field, u, Box(u.x, u.y, v.x, v.y)).value(v)


def geodesic(field: WeightField, u, v) -> Geodesic:
    """Maximal path from u to v; exact ties go to the step from below."""
    u, v = as_point(u), as_point(v)
    if not u.preceq(v):
        raise ContractError(f"{u} does not precede {v}")
    return passage_field(field, u, Box(u.x, u.y, v.x, v.y)).geodesic_to(v)


def implicit_geodesic(seed: int, u, v) -> Geodesic:
    """Geodesic for the field of a seed without materializing the weights."""
    u, v = as_point(u), as_point(v)
    if not u.preceq(v):
        raise ContractError(f"{u} does not precede {v}")
    check_capacity((v.x - u.x + 1) * (v.y - u.y + 1) // 8, "backstep array")
    path, value, ties = K.implicit_geodesic(field_key(seed), u.x, u.y, v.x, v.y)
    return Geodesic(path, float(value), int(ties))


def implicit_passage_time(seed: int, u, v, probe=None):
    """T(u, v) and T(u, probe) for the field of a seed, streaming one row.

    Returns (T(u, v), T(u, probe), ties); probe defaults to v.
    """
    u, v = as_point(u), as_point(v)
    if not u.preceq(v):
        raise ContractError(f"{u} does not precede {v}")
    p = v if probe is None else as_point(probe)
    if not (u.preceq(p) and p.preceq(v)):
        raise ContractError("probe must lie in the rectangle spanned by u and v")
    t, tp, ties = K.implicit_value(field_key(seed), u.x, u.y, v.x, v.y, p.x, p.y)
    return float(t), float(tp), int(ties)


class BruteForceResult(NamedTuple):
    value: float
    path: Geodesic
    n_best: int
    n_paths: int


def brute_force(field: WeightField, u, v) -> BruteForceResult:
    """Enumerate all up/right paths from u to v (oracle for small rectangles)."""
    u, v = as_point(u), as_point(v)
    if not u.preceq(v):
        raise ContractError(f"{u} does not precede {v}")
    nsteps = (v.x - u.x) + (v.y - u.y)
    if nsteps > BRUTE_FORCE_MAX_STEPS:
        raise CapacityError(f"brute force over {nsteps} steps exceeds "
                            f"the limit of {BRUTE_FORCE_MAX_STEPS}")
    sub = field.sub_field(Box(u.x, u.y, v.x, v.y))
    best, steps, nbest, npaths = K.all_paths_best(
        np.ascontiguousarray(sub.weights), sub.box.width, sub.box.height)
    verts = np.empty((nsteps + 1, 2), np.int64)
    verts[0] = (u.x, u.y)
    for i, s in enumerate(steps):
        verts[i + 1] = verts[i] + ((1, 0) if s == 0 else (0, 1))
    return BruteForceResult(float(best), Geodesic(verts, float(best)), int(nbest), int(npaths))


# ---------------------------------------------------------------- grid paths

@dataclass(frozen=True)
class GridGeometry:
    """Stage lines and transverse cells used to encode paths.

    Stage i (0..stages) is the antidiagonal through
    center_i = start + round(i * displacement / stages). A point on that line
    is center_i + t*(-1, 1); its cell is floor(t / cell_width), admissible in
    [-half_cells, half_cells). With cell_width None there is one cell (index
    0) covering |t| <= half_width.
    """

    start: LatticePoint
    displacement: LatticePoint
    stages: int
    cell_width: float | None
    half_cells: int
    half_width: int = 0

    def __post_init__(self):
        object.__setattr__(self, "start", as_point(self.start))
        object.__setattr__(self, "displacement", as_point(self.displacement))
        if self.stages < 1:
            raise ContractError("a grid needs at least one stage")
        if self.cell_width is not None and self.cell_width <= 0:
            raise ContractError("cell_width must be positive")
        dx, dy = self.displacement
        if dx < 0 or dy < 0:
            raise ContractError("displacement must be up/right")
        lines = [self.line(i) for i in range(self.stages + 1)]
        if any(b <= a for a, b in zip(lines, lines[1:])):
            raise ContractError("stage lines must be strictly increasing")

    def center(self, i: int) -> LatticePoint:
        dx, dy = self.displacement
        # round half up so the geometry is symmetric in numpy/python alike
        fx = math.floor(i * dx / self.stages + 0.5)
        fy = math.floor(i * dy / self.stages + 0.5)
        return LatticePoint(self.start.x + fx, self.start.y + fy)

    def line(self, i: int) -> int:
        return self.center(i).antidiagonal

    @property
    def index_range(self):
        if self.cell_width is None:
            return 0, 1
        return -self.half_cells, self.half_cells

    def offset(self, i: int, p) -> int:
        c = self.center(i)
        if p[0] + p[1] != c.antidiagonal:
            raise ContractError(f"{p} is not on stage line {i}")
        return p[1] - c.y

    def cell_of(self, i: int, p):
        """Cell index of point p on stage line i, or None outside the grid."""
        t = self.offset(i, p)
        if self.cell_width is None:
            return 0 if abs(t) <= self.half_width else None
        j = math.floor(t / self.cell_width)
        lo, hi = self.index_range
        return j if lo <= j < hi else None

    def cell_offsets(self, j: int) -> np.ndarray:
        if self.cell_width is None:
            if j != 0:
                return np.empty(0, np.int64)
            return np.arange(-self.half_width, self.half_width + 1)
        lo = math.ceil(j * self.cell_width)
        hi = math.ceil((j + 1) * self.cell_width) - 1
        return np.arange(lo, hi + 1)

    def cell_points(self, i: int, j: int) -> np.ndarray:
        c = self.center(i)
        t = self.cell_offsets(j)
        return np.stack([c.x - t, c.y + t], axis=1).astype(np.int64)


@dataclass(frozen=True)
class GridEncoding:
    """Cell indices (j_0..j_h) of a path on the stage lines of a grid."""

    indices: tuple
    index_range: tuple = dc_field(default=(None, None))

    def __post_init__(self):
        lo, hi = self.index_range
        if lo is not None and any(not lo <= j < hi for j in self.indices):
            raise ContractError(f"encoding {self.indices} outside [{lo}, {hi})")

    @property
    def stages(self) -> int:
        return len(self.indices) - 1


def constrained_best(field: WeightField, start_segment, encoding: GridEncoding,
                     grid: GridGeometry, end_segment=None) -> float:
    """Best path weight through cell j_i on every stage line i.

    Endpoints are restricted to start_segment / end_segment when given.
    Returns -inf when no path is consistent with the encoding.
    """
    if len(encoding.indices) != grid.stages + 1:
        raise ContractError("encoding length must equal stages + 1")
    pts = grid.cell_points(0, encoding.indices[0])
    if start_segment is not None:
        pts = np.array([p for p in pts if start_segment.contains(p)], np.int64).reshape(-1, 2)
    vals = np.zeros(len(pts))
    for i in range(grid.stages):
        nxt = grid.cell_points(i + 1, encoding.indices[i + 1])
        if i + 1 == grid.stages and end_segment is not None:
            nxt = np.array([p for p in nxt if end_segment.contains(p)], np.int64).reshape(-1, 2)
        if len(pts) == 0 or len(nxt) == 0:
            return -math.inf
        vals = _stage_values(field, pts, vals, nxt)
        pts = nxt
        keep = np.isfinite(vals)
        pts, vals = pts[keep], vals[keep]
        if len(vals) == 0:
            return -math.inf
    return float(vals.max()) if len(vals) else -math.inf


def _stage_values(field, src_pts, src_vals, dst_pts):
    """max over sources s of src_val(s) + T(s, d), for every destination d."""
    allp = np.concatenate([src_pts, dst_pts])
    box = Box(int(allp[:, 0].min()), int(allp[:, 1].min()),
              int(allp[:, 0].max()), int(allp[:, 1].max()))
    if not field.box.contains_box(box):
        raise ContractError("grid cells leave the field box")
    check_capacity(2 * box.cells, "stage sweep")
    sub = field.sub_field(box)
    order = np.lexsort((src_pts[:, 0], src_pts[:, 1]))
    T, _, _ = K.sweep_box(sub.weights,
                          (src_pts[order, 1] - box.y0).astype(np.int64),
                          (src_pts[order, 0] - box.x0).astype(np.int64),
                          np.asarray(src_vals, float)[order])
    return T[dst_pts[:, 1] - box.y0, dst_pts[:, 0] - box.x0]


def unconstrained_best(field: WeightField, start_segment, end_segment) -> float:
    """max over endpoint pairs of T(u, v)."""
    src = start_segment.points()
    dst = end_segment.points()
    return float(np.max(_stage_values(field, src, np.zeros(len(src)), dst)))


def grid_for_segments(start: AntidiagSegment, end: AntidiagSegment, stages: int,
                      cell_width: float | None, half_cells: int) -> GridGeometry:
    return GridGeometry(start.center, end.center - start.center, stages,
                        cell_width, half_cells, max(start.half_span, end.half_span))
