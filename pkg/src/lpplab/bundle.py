"""All geodesics from a set of sources to a set of targets in one field.

One sweep over the region computes passage times from every source at once
and keeps, per cell and source, one bit saying which predecessor the
geodesic came from. Questions about the whole family (does a geodesic touch
a cell set, where does it enter and leave a band) are then answered by
propagating per-source words along those bits.

For two antidiagonal segments the region is the strip between the geodesic
joining the two lower-right ends and the one joining the two upper-left
ends. Geodesics with ordered endpoints do not cross, so every geodesic of
the family lies in that strip and restricting the sweep to it is exact.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels as K
from .core import Geodesic, geodesic
from .errors import ContractError
from .lattice import AntidiagSegment, Box, WeightField, check_capacity


def _as_points(obj) -> np.ndarray:
    if hasattr(obj, "points"):
        return np.asarray(obj.points(), np.int64)
    return np.asarray(obj, np.int64).reshape(-1, 2)


class GeodesicBundle:
    """Geodesics Gamma(u_i, v_j) for all sources u_i and targets v_j.

    Matrices are indexed [source, target]. Pairs with u_i not below-left of
    v_j are not comparable; their entries are meaningless.
    """

    def __init__(self, field: WeightField, sources, targets, d0: int,
                 xlo: np.ndarray, xhi: np.ndarray, store_bits: bool = True):
        self.field = field
        self.sources = _as_points(sources)
        self.targets = _as_points(targets)
        self.d0 = int(d0)
        self.xlo = np.asarray(xlo, np.int64)
        self.xhi = np.asarray(xhi, np.int64)
        widths = np.maximum(self.xhi - self.xlo + 1, 0)
        self.off = np.concatenate([[0], np.cumsum(widths)[:-1]]).astype(np.int64)
        self.ncell = int(widths.sum())
        S = len(self.sources)
        self.nwords = max(1, math.ceil(S / 64))
        check_capacity(self.ncell * self.nwords + int(widths.max()) * self.nwords * 128,
                       "geodesic bundle")

        sd = self.sources.sum(axis=1)
        self.perm = np.lexsort((self.sources[:, 0], sd))
        self.inv_perm = np.empty_like(self.perm)
        self.inv_perm[self.perm] = np.arange(S)
        self.src_k = (sd[self.perm] - self.d0).astype(np.int64)
        self.src_x = self.sources[self.perm, 0].astype(np.int64)
        self.src_cell = self.cell_index(self.sources)
        self.tgt_cell = self.cell_index(self.targets)

        self.comparable = ((self.sources[:, None, 0] <= self.targets[None, :, 0])
                           & (self.sources[:, None, 1] <= self.targets[None, :, 1]))
        tval, bits, ties = K.bundle_values(
            field.weights, field.box.x0, field.box.y0, self.d0, self.xlo, self.xhi,
            self.off, self.src_k, self.src_x, self.nwords, self.tgt_cell, store_bits)
        vals = tval[:, self.inv_perm].T.copy()
        vals[vals < K.UNREACHED_CUT] = -np.inf
        self.values = vals
        self.bits = bits if store_bits else None
        self.ties = int(ties.sum())

    # ------------------------------------------------------------ builders

    @classmethod
    def in_box(cls, field: WeightField, sources, targets, box: Box | None = None,
               store_bits: bool = True) -> "GeodesicBundle":
        box = field.box if box is None else Box(*box)
        if not field.box.contains_box(box):
            raise ContractError("bundle box is not inside the field box")
        d0 = box.x0 + box.y0
        d = np.arange(d0, box.x1 + box.y1 + 1)
        xlo = np.maximum(box.x0, d - box.y1)
        xhi = np.minimum(box.x1, d - box.y0)
        return cls(field, sources, targets, d0, xlo, xhi, store_bits)

    @classmethod
    def between_segments(cls, field: WeightField, A, B,
                         store_bits: bool = True) -> "GeodesicBundle":
        """Bundle from segment A to segment B, on the sandwich strip when possible."""
        if isinstance(A, AntidiagSegment) and isinstance(B, AntidiagSegment):
            lo_a, lo_b = A.point(-A.half_span), B.point(-B.half_span)
            hi_a, hi_b = A.point(A.half_span), B.point(B.half_span)
            if lo_a.preceq(lo_b) and hi_a.preceq(hi_b) and A.line <= B.line:
                bottom = geodesic(field, lo_a, lo_b).vertices
                top = geodesic(field, hi_a, hi_b).vertices
                return cls(field, A, B, A.line, top[:, 0], bottom[:, 0], store_bits)
        pts = np.concatenate([_as_points(A), _as_points(B)])
        box = Box(int(pts[:, 0].min()), int(pts[:, 1].min()),
                  int(pts[:, 0].max()), int(pts[:, 1].max()))
        return cls.in_box(field, A, B, box, store_bits)

    # ------------------------------------------------------------ cells

    def cell_index(self, pts) -> np.ndarray:
        pts = _as_points(pts)
        k = pts.sum(axis=1) - self.d0
        if np.any((k < 0) | (k >= len(self.xlo))):
            raise ContractError("point outside the bundle region")
        x = pts[:, 0]
        if np.any((x < self.xlo[k]) | (x > self.xhi[k])):
            raise ContractError("point outside the bundle region")
        return (self.off[k] + x - self.xlo[k]).astype(np.int64)

    def cell_points(self, cells) -> np.ndarray:
        cells = np.asarray(cells, np.int64)
        # the last run starting at or before the cell is never empty
        k = np.searchsorted(self.off, cells, side="right") - 1
        x = self.xlo[k] + cells - self.off[k]
        return np.stack([x, self.d0 + k - x], axis=1)

    def region_mask(self, predicate) -> np.ndarray:
        """Bool mask over cells of predicate(x, y) evaluated on all cells."""
        pts = self.cell_points(np.arange(self.ncell))
        return np.asarray(predicate(pts[:, 0], pts[:, 1]), bool)

    # ------------------------------------------------------------ queries

    def _need_bits(self):
        if self.bits is None:
            raise ContractError("bundle was built without direction bits")

    def _unpack(self, words: np.ndarray) -> np.ndarray:
        """(ntgt, nwords) words in sweep order -> (S, ntgt) bools in source order."""
        b = np.unpackbits(words.view(np.uint8).reshape(len(words), -1),
                          axis=1, bitorder="little")
        return b[:, :len(self.sources)][:, self.inv_perm].T.astype(bool)

    def path(self, i: int, j: int) -> Geodesic:
        self._need_bits()
        if not self.comparable[i, j]:
            raise ContractError(f"source {i} does not precede target {j}")
        col = int(self.inv_perm[i])
        (sx, sy), (tx, ty) = self.sources[i], self.targets[j]
        verts = K.bundle_trace(self.bits, self.d0, self.xlo, self.off, col,
                               sx, sy, tx, ty, -1)
        return Geodesic(verts, float(self.values[i, j]))

    def touches(self, blocked_mask: np.ndarray, sources=None, xcap=None) -> np.ndarray:
        """(S, B) bools: does Gamma(u_i, v_j) contain a blocked cell.

        With sources given (indices), only rows for those sources are valid.
        xcap (per antidiagonal) skips cells right of it; only geodesics that
        stay weakly left of the cap get valid answers.
        """
        self._need_bits()
        w_lo, w_hi = 0, self.nwords
        if sources is not None:
            cols = self.inv_perm[np.asarray(sources, np.int64)]
            if len(cols) == 0:
                return np.zeros(self.comparable.shape, bool)
            w_lo, w_hi = int(cols.min()) // 64, int(cols.max()) // 64 + 1
        words = K.bundle_flags(self.bits, np.asarray(blocked_mask, np.bool_), self.d0,
                               self.xlo, self.xhi, self.off, self.src_k, self.src_x,
                               self.tgt_cell, w_lo, w_hi,
                               self.xhi if xcap is None else np.asarray(xcap, np.int64))
        return self._unpack(words)

    def touches_points(self, pts) -> np.ndarray:
        mask = np.zeros(self.ncell, np.bool_)
        pts = _as_points(pts)
        if len(pts):
            mask[self.cell_index(pts)] = True
        return self.touches(mask)

    def band_keys(self, lo: float, hi: float, axis: str = "sum"):
        """First and last cell of each geodesic inside the band lo <= phi <= hi.

        phi is x + y ("sum"), x or y. Returns (entry, exit) (S, B) int arrays
        of cell indices, -1 where the geodesic misses the band.
        """
        self._need_bits()
        ax, ay = {"sum": (1, 1), "x": (1, 0), "y": (0, 1)}[axis]
        ent, ext = K.bundle_band_keys(self.bits, self.d0, self.xlo, self.xhi, self.off,
                                      self.src_k, self.src_x, self.tgt_cell,
                                      ax, ay, float(lo), float(hi))
        return ent[:, self.inv_perm].T.copy(), ext[:, self.inv_perm].T.copy()

    def trace_between(self, i: int, j: int, entry_cell: int, exit_cell: int) -> np.ndarray:
        """Vertices of Gamma(u_i, v_j) from entry_cell to exit_cell."""
        self._need_bits()
        col = int(self.inv_perm[i])
        sx, sy = self.sources[i]
        tx, ty = self.cell_points([exit_cell])[0]
        return K.bundle_trace(self.bits, self.d0, self.xlo, self.off, col,
                              sx, sy, int(tx), int(ty), int(entry_cell))
