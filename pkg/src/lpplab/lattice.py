"""Lattice points, segments, regions and reproducible Exp(1) weight fields.

Weights are a pure function of (seed, point): every point gets its own
SplitMix64 draw, so two fields with the same seed agree on their overlap
and a sub-box of a field equals a freshly sampled field on that sub-box.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .errors import CapacityError, ContractError

MASK64 = (1 << 64) - 1
COORD_LIMIT = 1 << 30
# default cap on materialized cells; override with LPPLAB_MAX_CELLS
DEFAULT_MAX_CELLS = 60_000_000


def max_cells() -> int:
    raw = os.environ.get("LPPLAB_MAX_CELLS")
    return int(raw) if raw else DEFAULT_MAX_CELLS


def check_capacity(cells: int, what: str = "array") -> None:
    limit = max_cells()
    if cells > limit:
        raise CapacityError(
            f"{what} needs {cells} cells, above the budget of {limit} "
            f"(set LPPLAB_MAX_CELLS to raise it)")


def splitmix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def field_key(seed: int) -> np.uint64:
    """Key used by the weight kernels for a given field seed."""
    if not isinstance(seed, (int, np.integer)) or not 0 <= int(seed) <= MASK64:
        raise ContractError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    return np.uint64(splitmix64(int(seed) ^ 0x6A09E667F3BCC909))


def derive_seed(master: int, *counters: int) -> int:
    """Deterministic child seed from a master seed and integer counters."""
    z = splitmix64(int(master) & MASK64)
    for c in counters:
        z = splitmix64((z + 0x9E3779B97F4A7C15 * ((int(c) & MASK64) + 1)) & MASK64)
    return z


class LatticePoint(NamedTuple):
    x: int
    y: int

    def preceq(self, other) -> bool:
        """Coordinatewise order: self is weakly below-left of other."""
        return self.x <= other[0] and self.y <= other[1]

    def __add__(self, other):
        return LatticePoint(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return LatticePoint(self.x - other[0], self.y - other[1])

    @property
    def antidiagonal(self) -> int:
        return self.x + self.y


def as_point(p) -> LatticePoint:
    return p if isinstance(p, LatticePoint) else LatticePoint(int(p[0]), int(p[1]))


def slope(u, v) -> float:
    """Slope (vy-uy)/(vx-ux); inf for a vertical displacement."""
    dx, dy = v[0] - u[0], v[1] - u[1]
    return math.inf if dx == 0 else dy / dx


class Box(NamedTuple):
    """Inclusive integer rectangle [x0, x1] x [y0, y1]."""

    x0: int
    y0: int
    x1: int
    y1: int

    @classmethod
    def spanning(cls, *points) -> "Box":
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        return cls(min(xs), min(ys), max(xs), max(ys))

    @property
    def width(self) -> int:
        return self.x1 - self.x0 + 1

    @property
    def height(self) -> int:
        return self.y1 - self.y0 + 1

    @property
    def cells(self) -> int:
        return max(self.width, 0) * max(self.height, 0)

    @property
    def lower(self) -> LatticePoint:
        return LatticePoint(self.x0, self.y0)

    @property
    def upper(self) -> LatticePoint:
        return LatticePoint(self.x1, self.y1)

    def contains(self, p) -> bool:
        return self.x0 <= p[0] <= self.x1 and self.y0 <= p[1] <= self.y1

    def contains_box(self, other: "Box") -> bool:
        return (self.x0 <= other.x0 and other.x1 <= self.x1
                and self.y0 <= other.y0 and other.y1 <= self.y1)


@dataclass(frozen=True)
class AntidiagSegment:
    """Points center + i*(-1, 1) for i in [-half_span, half_span].

    Index order runs from the lower-right end to the upper-left end.
    """

    center: LatticePoint
    half_span: int

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if self.half_span < 0:
            raise ContractError("half_span must be non-negative")

    @property
    def size(self) -> int:
        return 2 * self.half_span + 1

    @property
    def line(self) -> int:
        return self.center.x + self.center.y

    def point(self, i: int) -> LatticePoint:
        return LatticePoint(self.center.x - i, self.center.y + i)

    def points(self) -> np.ndarray:
        i = np.arange(-self.half_span, self.half_span + 1)
        return np.stack([self.center.x - i, self.center.y + i], axis=1)

    def index_of(self, p) -> int:
        if p[0] + p[1] != self.line:
            raise ContractError(f"{p} is not on antidiagonal {self.line}")
        i = p[1] - self.center.y
        if abs(i) > self.half_span:
            raise ContractError(f"{p} is outside the segment")
        return i

    def contains(self, p) -> bool:
        return p[0] + p[1] == self.line and abs(p[1] - self.center.y) <= self.half_span

    def translate(self, d) -> "AntidiagSegment":
        return AntidiagSegment(self.center + d, self.half_span)

    @property
    def direction(self):
        return (-1, 1)


@dataclass(frozen=True)
class AxisSegment:
    """Points start + i*direction for i in [0, length], direction (1,0) or (0,1)."""

    start: LatticePoint
    length: int
    vertical: bool = True

    def __post_init__(self):
        object.__setattr__(self, "start", as_point(self.start))
        if self.length < 0:
            raise ContractError("length must be non-negative")

    @classmethod
    def centered(cls, center, half_span: int, vertical: bool = True) -> "AxisSegment":
        c = as_point(center)
        start = (c.x, c.y - half_span) if vertical else (c.x - half_span, c.y)
        return cls(LatticePoint(*start), 2 * half_span, vertical)

    @property
    def direction(self):
        return (0, 1) if self.vertical else (1, 0)

    @property
    def size(self) -> int:
        return self.length + 1

    def point(self, i: int) -> LatticePoint:
        dx, dy = self.direction
        return LatticePoint(self.start.x + i * dx, self.start.y + i * dy)

    def points(self) -> np.ndarray:
        i = np.arange(self.length + 1)
        dx, dy = self.direction
        return np.stack([self.start.x + i * dx, self.start.y + i * dy], axis=1)

    def contains(self, p) -> bool:
        if self.vertical:
            return p[0] == self.start.x and 0 <= p[1] - self.start.y <= self.length
        return p[1] == self.start.y and 0 <= p[0] - self.start.x <= self.length

    def translate(self, d) -> "AxisSegment":
        return AxisSegment(self.start + d, self.length, self.vertical)


def antidiag_segment(center, n: int, width_factor: float = 1.0) -> AntidiagSegment:
    """Segment of half-span floor(width_factor * n^(2/3)) through center."""
    if n < 1:
        raise ContractError("n must be positive")
    if width_factor <= 0:
        raise ContractError("width_factor must be positive")
    return AntidiagSegment(as_point(center), int(math.floor(width_factor * n ** (2 / 3) + 1e-9)))


def segment_box(*segments) -> Box:
    pts = np.concatenate([s.points() for s in segments])
    return Box(int(pts[:, 0].min()), int(pts[:, 1].min()),
               int(pts[:, 0].max()), int(pts[:, 1].max()))


@dataclass(frozen=True)
class ParallelogramRegion:
    """Convex hull of a base segment and its translate by displacement."""

    base: object
    displacement: LatticePoint

    def __post_init__(self):
        object.__setattr__(self, "displacement", as_point(self.displacement))
        ex, ey = self.base.direction
        dx, dy = self.displacement
        if ex * dy - ey * dx == 0:
            raise ContractError("displacement is parallel to the base segment")

    @property
    def far_side(self):
        return self.base.translate(self.displacement)

    @property
    def slope(self) -> Fraction | None:
        dx, dy = self.displacement
        return None if dx == 0 else Fraction(dy, dx)

    def _anchor_and_extent(self):
        if isinstance(self.base, AntidiagSegment):
            return self.base.center, -self.base.half_span, self.base.half_span
        return self.base.start, 0, self.base.length

    def contains(self, p) -> bool:
        # solve p - anchor = t*e + lam*D exactly (Cramer's rule)
        anchor, tlo, thi = self._anchor_and_extent()
        ex, ey = self.base.direction
        dx, dy = self.displacement
        px, py = p[0] - anchor.x, p[1] - anchor.y
        det = ex * dy - ey * dx
        t = Fraction(px * dy - py * dx, det)
        lam = Fraction(ex * py - ey * px, det)
        return 0 <= lam <= 1 and tlo <= t <= thi

    def bounding_box(self) -> Box:
        return segment_box(self.base, self.far_side)


@dataclass
class WeightField:
    """Dense weights on a box; weights[y - y0, x - x0] is the weight at (x, y)."""

    seed: int | None
    box: Box
    weights: np.ndarray

    def __post_init__(self):
        if self.weights.shape != (self.box.height, self.box.width):
            raise ContractError("weights shape does not match box")

    def weight(self, p) -> float:
        if not self.box.contains(p):
            raise ContractError(f"{p} is outside the field box {self.box}")
        return float(self.weights[p[1] - self.box.y0, p[0] - self.box.x0])

    def sub_field(self, box: Box) -> "WeightField":
        if not self.box.contains_box(box):
            raise ContractError(f"{box} is not inside {self.box}")
        w = self.weights[box.y0 - self.box.y0: box.y1 - self.box.y0 + 1,
                         box.x0 - self.box.x0: box.x1 - self.box.x0 + 1]
        return WeightField(self.seed, box, w)

    def with_weight(self, p, value: float) -> "WeightField":
        """Copy of the field with one weight replaced (for planted tests)."""
        w = self.weights.copy()
        w[p[1] - self.box.y0, p[0] - self.box.x0] = value
        return WeightField(None, self.box, w)


def _check_coords(box: Box):
    for c in box:
        if abs(c) >= COORD_LIMIT:
            raise ContractError(f"coordinate {c} outside the supported range")


def sample_field(seed: int, box: Box) -> WeightField:
    """Materialize i.i.d. Exp(1) weights on box from the point-keyed stream."""
    box = Box(*map(int, box))
    if box.width < 1 or box.height < 1:
        raise ContractError(f"empty box {box}")
    _check_coords(box)
    check_capacity(box.cells, "weight field")
    w = K.fill_weights(field_key(seed), box.x0, box.y0, box.width, box.height)
    return WeightField(int(seed), box, w)
