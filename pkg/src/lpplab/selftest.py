"""Oracle suites: DP against path enumeration, disjoint counts against exhaustive search.

Each case draws its field from derive_seed(seed, suite, case), so a failing
case is reproduced from the printed seed alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels as K
from .core import brute_force, passage_field
from .errors import ContractError
from .geometry import max_disjoint_count
from .lattice import AntidiagSegment, Box, derive_seed, sample_field, segment_box

MAX_SIZE = 7
REL_TOL = 1e-9


@dataclass
class SelftestReport:
    dp_cases: int = 0
    dp_pairs: int = 0
    dp_mismatches: int = 0
    disjoint_cases: int = 0
    disjoint_mismatches: int = 0
    failing_seeds: list = dc_field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.dp_mismatches == 0 and self.disjoint_mismatches == 0

    def lines(self):
        return [f"dp-vs-brute-force: {self.dp_cases} fields, {self.dp_pairs} pairs, "
                f"{self.dp_mismatches} mismatches",
                f"disjoint-vs-exhaustive: {self.disjoint_cases} instances, "
                f"{self.disjoint_mismatches} mismatches"]


def _enumerated(weights, x0, y0, x1, y1):
    """Best value and, when unique, the vertices of the best path."""
    sub = np.ascontiguousarray(weights[y0:y1 + 1, x0:x1 + 1])
    best, steps, nbest, _ = K.all_paths_best(sub, x1 - x0 + 1, y1 - y0 + 1)
    if nbest != 1:
        return best, None
    moves = np.where(steps[:, None] == 0, [1, 0], [0, 1])
    verts = np.vstack([[0, 0], np.cumsum(moves, axis=0)]) + [x0, y0]
    return best, verts


def check_dp_field(seed: int, nx: int, ny: int, inject_bug: bool = False):
    """(pairs checked, mismatches) over all ordered pairs of an nx-by-ny field."""
    field = sample_field(seed, Box(0, 0, nx - 1, ny - 1))
    pairs = bad = 0
    for ux in range(nx):
        for uy in range(ny):
            pf = passage_field(field, (ux, uy))
            for vx in range(ux, nx):
                for vy in range(uy, ny):
                    value = pf.value((vx, vy))
                    if inject_bug:
                        # mutation fixture: count the last vertex too
                        value += field.weights[vy, vx]
                    best, verts = _enumerated(field.weights, ux, uy, vx, vy)
                    pairs += 1
                    if abs(value - best) > REL_TOL * max(1.0, abs(best)):
                        bad += 1
                    elif verts is not None and not np.array_equal(
                            pf.geodesic_to((vx, vy)).vertices, verts):
                        bad += 1
    return pairs, bad


def exhaustive_disjoint(field, A, B) -> int:
    """Largest pairwise vertex-disjoint family among all geodesics A -> B (clique search)."""
    sets = []
    for u in A.points():
        for v in B.points():
            if u[0] <= v[0] and u[1] <= v[1]:
                sets.append(brute_force(field, u, v).path.point_set())
    adj = [[not (a & b) for b in sets] for a in sets]
    best = 0

    def grow(size, cand):
        nonlocal best
        best = max(best, size)
        if size + len(cand) <= best:
            return
        for k, c in enumerate(cand):
            grow(size + 1, [d for d in cand[k + 1:] if adj[c][d]])

    grow(0, list(range(len(sets))))
    return best


def disjoint_instance(seed: int, max_size: int):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(0, 2 * (max_size - 1) + 1))
    kmax = min(2, max_size - 1)
    A = AntidiagSegment((0, 0), int(rng.integers(0, kmax + 1)))
    B = AntidiagSegment((n // 2, n - n // 2), int(rng.integers(0, kmax + 1)))
    return A, B, sample_field(seed, segment_box(A, B))


def oracle_selftest(max_size: int = MAX_SIZE, cases: int = 200, seed: int = 0,
                    inject_bug: bool = False, disjoint_cases: int | None = None,
                    log=None) -> SelftestReport:
    if not 1 <= max_size <= MAX_SIZE:
        raise ContractError(f"max_size must lie in [1, {MAX_SIZE}], got {max_size}")
    rep = SelftestReport()
    for c in range(cases):
        s = derive_seed(seed, 0, c)
        rng = np.random.default_rng(s)
        nx, ny = (int(v) for v in rng.integers(1, max_size + 1, 2))
        pairs, bad = check_dp_field(s, nx, ny, inject_bug)
        rep.dp_cases += 1
        rep.dp_pairs += pairs
        if bad:
            rep.dp_mismatches += bad
            rep.failing_seeds.append(("dp", s))
            if log:
                log(f"dp mismatch: seed={s} size={nx}x{ny} ({bad} pairs)")
    for c in range(cases if disjoint_cases is None else disjoint_cases):
        s = derive_seed(seed, 1, c)
        A, B, field = disjoint_instance(s, max_size)
        got, want = max_disjoint_count(field, A, B), exhaustive_disjoint(field, A, B)
        rep.disjoint_cases += 1
        if got != want:
            rep.disjoint_mismatches += 1
            rep.failing_seeds.append(("disjoint", s))
            if log:
                log(f"disjoint mismatch: seed={s} got {got}, exhaustive {want}")
    return rep
