"""Compiled kernels: point-keyed weights, passage-time sweeps, bundle sweeps.

All sweeps visit cells in a fixed order so results are bitwise reproducible.
Comparisons between the two predecessors prefer the left one only on a
strict win; exact ties go to the predecessor below and are counted.
"""

import math

import numpy as np
from numba import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
COORD_OFFSET = 2147483648
# finite stand-in for -inf inside bundle sweeps (avoids inf-inf NaNs)
UNREACHED = -1e300
UNREACHED_CUT = -1e299

BACK_NONE = 0
BACK_LEFT = 1
BACK_DOWN = 2


@njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def point_weight(key, x, y):
    c = (np.uint64(x + COORD_OFFSET) << np.uint64(32)) | np.uint64(y + COORD_OFFSET)
    z = mix64(key + c * GOLDEN)
    u = (np.float64(z >> np.uint64(11)) + 0.5) * 1.1102230246251565e-16
    return -math.log(u)


@njit(cache=True)
def fill_weights(key, x0, y0, nx, ny):
    out = np.empty((ny, nx))
    for j in range(ny):
        for i in range(nx):
            out[j, i] = point_weight(key, x0 + i, y0 + j)
    return out


# ---------------------------------------------------------------- rectangles

@njit(cache=True)
def sweep_box(weights, init_y, init_x, init_val):
    """Max-plus sweep over a whole array with initial values at given cells.

    init_* must be sorted by (row, column). T(v) is the max of its initial
    value and max(T(pred) + w(pred)); cells never reached stay -inf.
    """
    ny, nx = weights.shape
    T = np.full((ny, nx), -np.inf)
    back = np.zeros((ny, nx), np.int8)
    ties = 0
    p = 0
    npts = init_y.shape[0]
    for y in range(ny):
        for x in range(nx):
            a = -np.inf
            b = -np.inf
            if x > 0:
                a = T[y, x - 1] + weights[y, x - 1]
            if y > 0:
                b = T[y - 1, x] + weights[y - 1, x]
            if a > b:
                best = a
                code = BACK_LEFT
            elif b > -np.inf:
                best = b
                code = BACK_DOWN
                if a == b:
                    ties += 1
            else:
                best = -np.inf
                code = BACK_NONE
            while p < npts and (init_y[p] < y or (init_y[p] == y and init_x[p] < x)):
                p += 1
            if p < npts and init_y[p] == y and init_x[p] == x:
                if init_val[p] > best:
                    best = init_val[p]
                    code = BACK_NONE
            T[y, x] = best
            back[y, x] = code
    return T, back, ties


@njit(cache=True)
def trace_back(back, x, y):
    """Walk backsteps from (x, y) to a cell with no backstep; local coords."""
    n = 1
    cx, cy = x, y
    while back[cy, cx] != BACK_NONE:
        if back[cy, cx] == BACK_LEFT:
            cx -= 1
        else:
            cy -= 1
        n += 1
    out = np.empty((n, 2), np.int64)
    cx, cy = x, y
    for k in range(n - 1, -1, -1):
        out[k, 0] = cx
        out[k, 1] = cy
        if k > 0:
            if back[cy, cx] == BACK_LEFT:
                cx -= 1
            else:
                cy -= 1
    return out


@njit(cache=True)
def implicit_value(key, x0, y0, x1, y1, px, py):
    """Passage time from (x0,y0) to (x1,y1) and to the probe (px,py).

    Weights are generated on the fly, one row in memory. The probe must lie
    in the rectangle. Returns (T_end, T_probe, ties).
    """
    nx = x1 - x0 + 1
    T = np.full(nx, -np.inf)
    wrow = np.empty(nx)
    ties = 0
    tp = -np.inf
    for j in range(y1 - y0 + 1):
        y = y0 + j
        for i in range(nx):
            if j == 0 and i == 0:
                t = 0.0
            else:
                a = -np.inf
                b = -np.inf
                if i > 0:
                    a = T[i - 1] + wrow[i - 1]
                if j > 0:
                    b = T[i] + wrow[i]
                if a > b:
                    t = a
                else:
                    t = b
                    if a == b:
                        ties += 1
            # wrow[i] held the row below; it is not needed past this cell
            T[i] = t
            wrow[i] = point_weight(key, x0 + i, y)
            if x0 + i == px and y == py:
                tp = t
    return T[nx - 1], tp, ties


@njit(cache=True)
def implicit_geodesic(key, x0, y0, x1, y1):
    """Geodesic from (x0,y0) to (x1,y1) with weights generated on the fly."""
    nx = x1 - x0 + 1
    ny = y1 - y0 + 1
    T = np.full(nx, -np.inf)
    wrow = np.empty(nx)
    back = np.zeros((ny, nx), np.int8)
    ties = 0
    for j in range(ny):
        y = y0 + j
        for i in range(nx):
            if j == 0 and i == 0:
                t = 0.0
            else:
                a = -np.inf
                b = -np.inf
                if i > 0:
                    a = T[i - 1] + wrow[i - 1]
                if j > 0:
                    b = T[i] + wrow[i]
                if a > b:
                    t = a
                    back[j, i] = BACK_LEFT
                else:
                    t = b
                    back[j, i] = BACK_DOWN
                    if a == b:
                        ties += 1
            T[i] = t
            wrow[i] = point_weight(key, x0 + i, y)
    path = trace_back(back, nx - 1, ny - 1)
    path[:, 0] += x0
    path[:, 1] += y0
    return path, T[nx - 1], ties


@njit(cache=True)
def all_paths_best(weights, nx, ny):
    """Enumerate every up/right path from (0,0) to (nx-1,ny-1).

    Returns (best value, steps of first best path, number of best paths,
    number of paths). Steps: 0 = right, 1 = up.
    """
    L = nx - 1 + ny - 1
    steps = np.zeros(L, np.int8)
    best_steps = np.zeros(L, np.int8)
    best = -np.inf
    nbest = 0
    npaths = 0
    # iterative DFS over step sequences with running sums
    partial = np.zeros(L + 1)
    xs = np.zeros(L + 1, np.int64)
    ys = np.zeros(L + 1, np.int64)
    choice = np.full(L + 1, -1, np.int64)
    depth = 0
    while depth >= 0:
        if depth == L:
            npaths += 1
            v = partial[L]
            if v > best:
                best = v
                nbest = 1
                best_steps[:] = steps
            elif v == best:
                nbest += 1
            depth -= 1
            continue
        c = choice[depth] + 1
        x = xs[depth]
        y = ys[depth]
        moved = False
        while c <= 1:
            if c == 0 and x < nx - 1:
                xs[depth + 1] = x + 1
                ys[depth + 1] = y
                moved = True
                break
            if c == 1 and y < ny - 1:
                xs[depth + 1] = x
                ys[depth + 1] = y + 1
                moved = True
                break
            c += 1
        if not moved:
            choice[depth] = -1
            depth -= 1
            continue
        choice[depth] = c
        steps[depth] = c
        partial[depth + 1] = partial[depth] + weights[y, x]
        depth += 1
    return best, best_steps, nbest, npaths


# ---------------------------------------------------------------- bundles
#
# A bundle region is a union of antidiagonal runs: for k = 0..D-1 the
# antidiagonal d0 + k holds x in [xlo[k], xhi[k]] (possibly empty), and cell
# (k, x) has flat index off[k] + x - xlo[k]. Per-source data is stored with
# the source dimension innermost, packed into 64-bit words for directions.


@njit(cache=True)
def bundle_values(weights, wx0, wy0, d0, xlo, xhi, off, src_k, src_x, nwords,
                  tgt_cell, store_bits):
    """Passage times from every source to every cell of the region.

    weights is the dense field array with origin (wx0, wy0). Sources must be
    sorted by (k, x). Returns (target values (ntgt, S), direction bits
    (ncell, nwords) with bit 1 meaning "came from the left", ties per source).
    """
    D = xlo.shape[0]
    S = src_k.shape[0]
    SP = nwords * 64
    maxw = 1
    for k in range(D):
        if xhi[k] - xlo[k] + 1 > maxw:
            maxw = xhi[k] - xlo[k] + 1
    ncell = off[D - 1] + max(xhi[D - 1] - xlo[D - 1] + 1, 0)
    if store_bits:
        bits = np.zeros((ncell, nwords), np.uint64)
    else:
        bits = np.zeros((1, nwords), np.uint64)
    prev = np.full((maxw, SP), UNREACHED)
    cur = np.full((maxw, SP), UNREACHED)
    ntgt = tgt_cell.shape[0]
    tval = np.full((ntgt, S), UNREACHED)
    ties = np.zeros(SP, np.int64)
    # targets sorted by cell through an order array
    torder = np.argsort(tgt_cell)
    tp = 0
    sp = 0
    plo = 0
    phi = -1
    for k in range(D):
        lo = xlo[k]
        hi = xhi[k]
        d = d0 + k
        for x in range(lo, hi + 1):
            y = d - x
            r = x - lo
            hasL = x - 1 >= plo and x - 1 <= phi and k > 0
            hasB = x >= plo and x <= phi and k > 0
            wl = UNREACHED
            wb = UNREACHED
            il = 0
            ib = 0
            if hasL:
                wl = weights[y - wy0, x - 1 - wx0]
                il = x - 1 - plo
            if hasB:
                wb = weights[y - 1 - wy0, x - wx0]
                ib = x - plo
            TL = prev[il]
            TB = prev[ib]
            out = cur[r]
            cell = off[k] + r
            for w in range(nwords):
                word = np.uint64(0)
                base = w * 64
                for s in range(64):
                    a = TL[base + s] + wl
                    b = TB[base + s] + wb
                    if a > b:
                        out[base + s] = a
                        word |= np.uint64(1) << np.uint64(s)
                    else:
                        out[base + s] = b
                        if a == b and b > UNREACHED_CUT:
                            ties[base + s] += 1
                if store_bits:
                    bits[cell, w] = word
            while sp < S and src_k[sp] == k and src_x[sp] == x:
                out[sp] = 0.0
                sp += 1
            while tp < ntgt and tgt_cell[torder[tp]] == cell:
                for s in range(S):
                    tval[torder[tp], s] = out[s]
                tp += 1
        prev, cur = cur, prev
        plo = lo
        phi = hi
    return tval, bits, ties[:S]


@njit(cache=True)
def bundle_flags(bits, blocked, d0, xlo, xhi, off, src_k, src_x, tgt_cell, w_lo, w_hi,
                 xcap):
    """For each (source, target) pair: does the geodesic touch a blocked cell.

    blocked is a bool array over region cells. Only words w_lo..w_hi-1 and
    cells with x <= xcap[k] are propagated; lanes whose geodesic leaves that
    part get garbage. Returns (ntgt, nwords) words.
    """
    D = xlo.shape[0]
    nwords = bits.shape[1]
    S = src_k.shape[0]
    maxw = 1
    for k in range(D):
        if xhi[k] - xlo[k] + 1 > maxw:
            maxw = xhi[k] - xlo[k] + 1
    prev = np.zeros((maxw, nwords), np.uint64)
    cur = np.zeros((maxw, nwords), np.uint64)
    ntgt = tgt_cell.shape[0]
    tflag = np.zeros((ntgt, nwords), np.uint64)
    torder = np.argsort(tgt_cell)
    tp = 0
    sp = 0
    plo = 0
    phi = -1
    ones = ~np.uint64(0)
    zero = np.uint64(0)
    for k in range(D):
        lo = xlo[k]
        hi = xhi[k]
        for x in range(lo, min(hi, xcap[k]) + 1):
            r = x - lo
            cell = off[k] + r
            hasL = x - 1 >= plo and x - 1 <= phi and k > 0
            hasB = x >= plo and x <= phi and k > 0
            if blocked[cell]:
                for w in range(w_lo, w_hi):
                    cur[r, w] = ones
            else:
                for w in range(w_lo, w_hi):
                    fl = prev[x - 1 - plo, w] if hasL else zero
                    fb = prev[x - plo, w] if hasB else zero
                    bw = bits[cell, w]
                    cur[r, w] = (bw & fl) | (~bw & fb)
            while sp < S and src_k[sp] == k and src_x[sp] == x:
                w = sp >> 6
                m = np.uint64(1) << np.uint64(sp & 63)
                if w < w_lo or w >= w_hi:
                    sp += 1
                    continue
                if blocked[cell]:
                    cur[r, w] |= m
                else:
                    cur[r, w] &= ~m
                sp += 1
            while tp < ntgt and tgt_cell[torder[tp]] == cell:
                for w in range(w_lo, w_hi):
                    tflag[torder[tp], w] = cur[r, w]
                tp += 1
        while sp < S and src_k[sp] == k:
            sp += 1
        while tp < ntgt and tgt_cell[torder[tp]] <= off[k] + hi - lo:
            tp += 1
        prev, cur = cur, prev
        plo = lo
        phi = hi
    return tflag


@njit(cache=True)
def bundle_band_keys(bits, d0, xlo, xhi, off, src_k, src_x, tgt_cell,
                     ax, ay, lo_band, hi_band):
    """First and last band cell of every geodesic, band = lo <= ax*x+ay*y <= hi.

    Returns (entry, exit) arrays of shape (ntgt, S) holding region cell
    indices, -1 when the geodesic has no vertex in the band.
    """
    D = xlo.shape[0]
    S = src_k.shape[0]
    maxw = 1
    for k in range(D):
        if xhi[k] - xlo[k] + 1 > maxw:
            maxw = xhi[k] - xlo[k] + 1
    pe = np.full((maxw, S), -1, np.int64)
    px = np.full((maxw, S), -1, np.int64)
    ce = np.full((maxw, S), -1, np.int64)
    cx = np.full((maxw, S), -1, np.int64)
    ntgt = tgt_cell.shape[0]
    tent = np.full((ntgt, S), -1, np.int64)
    texit = np.full((ntgt, S), -1, np.int64)
    torder = np.argsort(tgt_cell)
    tp = 0
    sp = 0
    plo = 0
    phi = -1
    for k in range(D):
        lo = xlo[k]
        hi = xhi[k]
        d = d0 + k
        for x in range(lo, hi + 1):
            y = d - x
            r = x - lo
            cell = off[k] + r
            phi_v = ax * x + ay * y
            below = phi_v < lo_band
            inside = (not below) and phi_v <= hi_band
            hasL = x - 1 >= plo and x - 1 <= phi and k > 0
            hasB = x >= plo and x <= phi and k > 0
            il = x - 1 - plo if hasL else 0
            ib = x - plo if hasB else 0
            for s in range(S):
                left = (bits[cell, s >> 6] >> np.uint64(s & 63)) & np.uint64(1)
                if left:
                    ok = hasL
                    q = il
                else:
                    ok = hasB
                    q = ib
                if below:
                    ce[r, s] = -1
                    cx[r, s] = -1
                    continue
                e = pe[q, s] if ok else -1
                ce[r, s] = e if e >= 0 else cell
                if inside:
                    cx[r, s] = cell
                else:
                    cx[r, s] = px[q, s] if ok else -1
            while sp < S and src_k[sp] == k and src_x[sp] == x:
                if below:
                    ce[r, sp] = -1
                    cx[r, sp] = -1
                else:
                    ce[r, sp] = cell
                    cx[r, sp] = cell if inside else -1
                sp += 1
            while tp < ntgt and tgt_cell[torder[tp]] == cell:
                t = torder[tp]
                for s in range(S):
                    tent[t, s] = ce[r, s]
                    texit[t, s] = cx[r, s]
                tp += 1
        pe, ce = ce, pe
        px, cx = cx, px
        plo = lo
        phi = hi
    return tent, texit


@njit(cache=True)
def bundle_trace(bits, d0, xlo, off, source, sx, sy, tx, ty, stop_cell):
    """Backtrace one geodesic of a bundle from (tx, ty) to its source.

    Stops early once the cell index equals stop_cell (pass -1 to trace to
    the source). Returns vertices in forward order.
    """
    buf = np.empty((tx + ty - sx - sy + 1, 2), np.int64)
    n = 0
    x = tx
    y = ty
    w = source >> 6
    m = np.uint64(1) << np.uint64(source & 63)
    while True:
        buf[n, 0] = x
        buf[n, 1] = y
        n += 1
        k = x + y - d0
        cell = off[k] + x - xlo[k]
        if (x == sx and y == sy) or cell == stop_cell:
            break
        if bits[cell, w] & m:
            x -= 1
        else:
            y -= 1
    out = np.empty((n, 2), np.int64)
    for i in range(n):
        out[i] = buf[n - 1 - i]
    return out
