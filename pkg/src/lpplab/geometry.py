"""Geometric statistics of geodesics and geodesic families.

Functions here take finished geodesics (transversal fluctuation, rightmost
point, disjointness, grid encodings) or a field plus two segments (disjoint
counts, coalescence classes, middle-vertex counts). Family questions are
answered from a GeodesicBundle built once per field.
"""

from __future__ import annotations

import math

import numpy as np

from .bundle import GeodesicBundle
from .core import Geodesic, GridEncoding, GridGeometry
from .errors import ContractError
from .lattice import AntidiagSegment, WeightField


def _verts(g) -> np.ndarray:
    return g.vertices if isinstance(g, Geodesic) else np.asarray(g, np.int64)


def global_tf(g) -> float:
    """Largest Euclidean distance from a vertex to the line through the endpoints."""
    v = _verts(g)
    a, b = v[0], v[-1]
    d = b - a
    norm = math.hypot(float(d[0]), float(d[1]))
    if norm == 0:
        return 0.0
    cross = np.abs((v[:, 0] - a[0]) * d[1] - (v[:, 1] - a[1]) * d[0])
    return float(cross.max()) / norm


def rightmost_at_height(g, height: int) -> int:
    """Largest x with (x, height) on the path."""
    v = _verts(g)
    xs = v[v[:, 1] == height, 0]
    if len(xs) == 0:
        raise ContractError(f"path does not reach height {height}")
    return int(xs.max())


def local_tf(g, height: int, eps: float) -> float:
    """max over path vertices (x, y) with y = height of (x - eps * height)_+.

    The path must start at the origin.
    """
    v = _verts(g)
    if tuple(v[0]) != (0, 0):
        raise ContractError("local transversal fluctuation needs a path from the origin")
    return max(rightmost_at_height(v, height) - eps * height, 0.0)


def _band_part(v: np.ndarray, stretch, axis: str) -> np.ndarray:
    if stretch is None:
        return v
    phi = {"sum": v.sum(axis=1), "x": v[:, 0], "y": v[:, 1]}[axis]
    lo, hi = stretch
    return v[(phi >= lo) & (phi <= hi)]


def are_disjoint(g1, g2, stretch=None, axis: str = "sum") -> bool:
    """No common vertex, optionally only among vertices with lo <= phi <= hi."""
    a = _band_part(_verts(g1), stretch, axis)
    b = _band_part(_verts(g2), stretch, axis)
    if len(a) == 0 or len(b) == 0:
        return True
    ka = a[:, 0] * (1 << 32) + a[:, 1]
    kb = b[:, 0] * (1 << 32) + b[:, 1]
    return not np.intersect1d(ka, kb).size


# ---------------------------------------------------------------- families

def _minimal_elements(S: np.ndarray):
    out = []
    best = S.shape[1]
    for i in range(S.shape[0]):
        js = np.flatnonzero(S[i])
        if len(js) and js[0] < best:
            out.append((i, int(js[0])))
            best = js[0]
    return out


def max_disjoint_count(field: WeightField, A, B, bundle: GeodesicBundle | None = None) -> int:
    """Largest number of pairwise vertex-disjoint geodesics from A to B.

    Exact level-set search: S_1 is every comparable pair, and (i, j) is in
    S_{k+1} when some pair of S_k strictly below-left of it has a geodesic
    disjoint from Gamma(u_i, v_j). Geodesics of ordered pairs are ordered,
    so only the minimal elements of S_k need to be tried.
    """
    bd = bundle if bundle is not None else GeodesicBundle.between_segments(field, A, B)
    comp = bd.comparable
    if not comp.any():
        return 0
    # candidates above a corner stay weakly up-left of its geodesic, so the
    # flag sweep can stop there; only safe with antidiagonal ends and no ties
    capped = (isinstance(A, AntidiagSegment) and isinstance(B, AntidiagSegment)
              and bd.ties == 0)
    level_set = comp.copy()
    level = 1
    while True:
        nxt = np.zeros_like(comp)
        for i, j in _minimal_elements(level_set):
            verts = bd.path(i, j).vertices
            mask = np.zeros(bd.ncell, np.bool_)
            mask[bd.cell_index(verts)] = True
            xcap = None
            if capped:
                xcap = bd.xhi.copy()
                xcap[verts.sum(axis=1) - bd.d0] = verts[:, 0]
            ok = comp & ~bd.touches(mask, sources=np.arange(i + 1, comp.shape[0]), xcap=xcap)
            ok[: i + 1, :] = False
            ok[:, : j + 1] = False
            nxt |= ok
        if not nxt.any():
            return level
        level_set = nxt
        level += 1


def default_band(A, B, axis: str = "sum"):
    """Middle third between the two segments along phi."""
    pa, pb = A.points(), B.points()
    col = {"sum": None, "x": 0, "y": 1}[axis]
    fa = pa.sum(axis=1) if col is None else pa[:, col]
    fb = pb.sum(axis=1) if col is None else pb[:, col]
    lo, hi = float(fa.max()), float(fb.min())
    return lo + (hi - lo) / 3.0, lo + 2.0 * (hi - lo) / 3.0


def _class_keys(bd: GeodesicBundle, band, axis):
    ent, ext = bd.band_keys(band[0], band[1], axis)
    valid = bd.comparable & (ent >= 0) & (ext >= 0)
    keys = ent.astype(np.int64) * (bd.ncell + 1) + ext
    return keys, valid, ent, ext


def coalescence_classes(field: WeightField, A, B, band=None, axis: str = "sum",
                        bundle: GeodesicBundle | None = None):
    """Number of distinct band restrictions among geodesics from A to B.

    Returns (count, labels) with labels[i, j] the class of Gamma(u_i, v_j),
    -1 for incomparable pairs or geodesics missing the band. Two geodesics
    share a class when they enter and leave the band at the same vertices;
    with unique geodesics that fixes the whole restriction.
    """
    bd = bundle if bundle is not None else GeodesicBundle.between_segments(field, A, B)
    band = default_band(A, B, axis) if band is None else band
    keys, valid, _, _ = _class_keys(bd, band, axis)
    labels = np.full(keys.shape, -1, np.int64)
    if valid.any():
        uniq, inv = np.unique(keys[valid], return_inverse=True)
        labels[valid] = inv
        return len(uniq), labels
    return 0, labels


def middle_vertex_count(field: WeightField, A, B, band=None, axis: str = "sum",
                        bundle: GeodesicBundle | None = None) -> int:
    """Number of band vertices lying on at least one geodesic from A to B."""
    bd = bundle if bundle is not None else GeodesicBundle.between_segments(field, A, B)
    band = default_band(A, B, axis) if band is None else band
    keys, valid, ent, ext = _class_keys(bd, band, axis)
    if not valid.any():
        return 0
    seen = set()
    cells = set()
    for i, j in zip(*np.nonzero(valid)):
        k = keys[i, j]
        if k in seen:
            continue
        seen.add(k)
        seg = bd.trace_between(int(i), int(j), int(ent[i, j]), int(ext[i, j]))
        cells.update(bd.cell_index(seg).tolist())
    return len(cells)


# ---------------------------------------------------------------- encodings

def path_encoding(path, grid: GridGeometry):
    """Cell index of the path on each stage line, or None if it leaves the grid."""
    v = _verts(path)
    d0 = int(v[0].sum())
    idx = []
    for i in range(grid.stages + 1):
        k = grid.line(i) - d0
        if k < 0 or k >= len(v):
            raise ContractError(f"path does not cross stage line {i}")
        j = grid.cell_of(i, v[k])
        if j is None:
            return None
        idx.append(j)
    return GridEncoding(tuple(idx), grid.index_range)


def count_monotone_encodings(ell: int, span: int) -> int:
    """Number of non-decreasing sequences of length ell with values in [0, span]."""
    if ell < 0 or span < 0:
        raise ContractError("ell and span must be non-negative")
    return math.comb(span + ell, ell)


def _positions(v: np.ndarray, lo: int, hi: int) -> np.ndarray:
    d0 = int(v[0].sum())
    if lo < d0 or hi - d0 >= len(v):
        raise ContractError(f"path does not span the stretch [{lo}, {hi}]")
    return v[lo - d0: hi - d0 + 1, 0]


def ordered_disjoint_subset(geodesics, stretches):
    """Largest subfamily pairwise disjoint on a single stretch.

    stretches are (lo, hi) antidiagonal bands every geodesic spans. For each
    stretch the family is ordered by position; disjoint geodesics are
    strictly ordered along the whole stretch, so the best subfamily is a
    longest chain in the "strictly above" order. Returns (indices, stretch).
    """
    paths = [_verts(g) for g in geodesics]
    if not paths:
        return [], None
    best, best_s = [0], 0
    for s, (lo, hi) in enumerate(stretches):
        xs = np.stack([_positions(v, int(lo), int(hi)) for v in paths])
        order = np.argsort(-xs[:, 0], kind="stable")
        k = len(paths)
        chain_len = np.ones(k, np.int64)
        prev = np.full(k, -1)
        for a in range(k):
            ia = order[a]
            for b in range(a):
                ib = order[b]
                # ib strictly below-right of ia everywhere on the stretch
                if np.all(xs[ib] > xs[ia]) and chain_len[b] + 1 > chain_len[a]:
                    chain_len[a] = chain_len[b] + 1
                    prev[a] = b
        end = int(np.argmax(chain_len))
        if chain_len[end] > len(best):
            chain = []
            while end >= 0:
                chain.append(int(order[end]))
                end = int(prev[end])
            best, best_s = sorted(chain), s
    for a in best:
        for b in best:
            if a < b and not are_disjoint(paths[a], paths[b], stretches[best_s]):
                raise AssertionError("selected geodesics are not disjoint")
    return best, best_s


def default_stretches(start_line: int, end_line: int):
    """Four bands: first sixth, second sixth, middle third, last third."""
    span = end_line - start_line

    def at(f):
        return start_line + int(round(f * span))

    cuts = [at(0), at(1 / 6), at(1 / 3), at(2 / 3), at(1)]
    return [(cuts[i], cuts[i + 1]) for i in range(4)]
