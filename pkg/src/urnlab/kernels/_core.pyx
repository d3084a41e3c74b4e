# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: dense-window law stepping and path building.

Mirrors _fallback.py operation-for-operation (same per-cell arithmetic
order) so both backends produce bit-identical results.
"""

import numpy as np

cimport numpy as cnp

from urnlab.errors import BudgetExceeded, SupportCapExceeded

cnp.import_array()


def dp_advance_1d(object law_in, long lo, long j0, long j1,
                  object offs_in, object probs_in,
                  double step_budget, double budget, double pruned,
                  long max_cells):
    law_arr = np.ascontiguousarray(law_in, dtype=np.float64)
    offs_arr = np.ascontiguousarray(offs_in, dtype=np.int64)
    probs_arr = np.ascontiguousarray(probs_in, dtype=np.float64)
    cdef const cnp.int64_t[::1] offs = offs_arr
    cdef const double[::1] probs = probs_arr
    cdef long n_atoms = offs.shape[0]
    cdef long neg = 0, pos = 0
    cdef long a
    for a in range(n_atoms):
        if -offs[a] > neg:
            neg = -offs[a]
        if offs[a] > pos:
            pos = offs[a]

    cdef long size = law_arr.shape[0]
    cdef long cap_src = 2 * (size + neg + pos) + 64
    cdef long cap_dst = cap_src
    src_buf = np.zeros(cap_src, dtype=np.float64)
    dst_buf = np.zeros(cap_dst, dtype=np.float64)
    src_buf[:size] = law_arr
    cdef double[::1] src = src_buf
    cdef double[::1] dst = dst_buf
    cdef long src_off = 0

    cdef long j, c, s, e, sh, new_size, tmp_cap
    cdef double q, w0, w, v, drop, tau
    for j in range(j0, j1 + 1):
        q = 1.0 / (j + 1)
        w0 = 1.0 - q
        new_size = size + neg + pos
        if new_size > max_cells:
            raise SupportCapExceeded(
                f"law window would need {new_size} cells (cap {max_cells})")
        if new_size > cap_dst:
            cap_dst = 2 * new_size
            dst_buf = np.zeros(cap_dst, dtype=np.float64)
            dst = dst_buf
        for c in range(new_size):
            dst[c] = 0.0
        for c in range(size):
            dst[c + neg] = w0 * src[src_off + c]
        for a in range(n_atoms):
            w = q * probs[a]
            sh = neg + offs[a]
            for c in range(size):
                dst[c + sh] += w * src[src_off + c]
        if step_budget > 0.0:
            tau = step_budget / new_size
            drop = 0.0
            for c in range(new_size):
                v = dst[c]
                if 0.0 < v < tau:
                    drop += v
                    dst[c] = 0.0
            if drop > 0.0:
                pruned += drop
                if pruned > budget:
                    raise BudgetExceeded(
                        f"pruned mass {pruned} exceeds budget {budget} at step {j}")
        s = 0
        while s < new_size and dst[s] == 0.0:
            s += 1
        e = new_size
        while e > s and dst[e - 1] == 0.0:
            e -= 1
        lo = lo - neg + s
        size = e - s
        src_buf, dst_buf = dst_buf, src_buf
        tmp_cap = cap_src
        cap_src = cap_dst
        cap_dst = tmp_cap
        src = src_buf
        dst = dst_buf
        src_off = s

    out = np.array(src_buf[src_off:src_off + size], dtype=np.float64)
    return out, lo, pruned


def dp_advance_2d(object law_in, long lo0, long lo1, long j0, long j1,
                  object offs_in, object probs_in,
                  double step_budget, double budget, double pruned,
                  long max_cells):
    law_arr = np.ascontiguousarray(law_in, dtype=np.float64)
    offs_arr = np.ascontiguousarray(offs_in, dtype=np.int64)
    probs_arr = np.ascontiguousarray(probs_in, dtype=np.float64)
    cdef const cnp.int64_t[:, ::1] offs = offs_arr
    cdef const double[::1] probs = probs_arr
    cdef long n_atoms = offs.shape[0]
    cdef long neg0 = 0, pos0 = 0, neg1 = 0, pos1 = 0
    cdef long a
    for a in range(n_atoms):
        if -offs[a, 0] > neg0:
            neg0 = -offs[a, 0]
        if offs[a, 0] > pos0:
            pos0 = offs[a, 0]
        if -offs[a, 1] > neg1:
            neg1 = -offs[a, 1]
        if offs[a, 1] > pos1:
            pos1 = offs[a, 1]

    cdef long r = law_arr.shape[0], c = law_arr.shape[1]
    cdef long cap_src = 2 * (r + neg0 + pos0) * (c + neg1 + pos1) + 64
    cdef long cap_dst = cap_src
    src_buf = np.zeros(cap_src, dtype=np.float64)
    dst_buf = np.zeros(cap_dst, dtype=np.float64)
    src_buf[:r * c] = law_arr.ravel()
    cdef double[::1] src = src_buf
    cdef double[::1] dst = dst_buf
    # src is the (r, c) sub-rectangle at (sr0, sc0) of a grid with row
    # stride src_nc
    cdef long src_nc = c, sr0 = 0, sc0 = 0

    cdef long j, i, k, nr, nc, s0, e0, s1, e1, sh0, sh1, base, cells, tmp_cap
    cdef double q, w0, w, v, drop, tau
    cdef bint nonzero
    for j in range(j0, j1 + 1):
        q = 1.0 / (j + 1)
        w0 = 1.0 - q
        nr = r + neg0 + pos0
        nc = c + neg1 + pos1
        cells = nr * nc
        if cells > max_cells:
            raise SupportCapExceeded(
                f"law window would need {cells} cells (cap {max_cells})")
        if cells > cap_dst:
            cap_dst = 2 * cells
            dst_buf = np.zeros(cap_dst, dtype=np.float64)
            dst = dst_buf
        for i in range(cells):
            dst[i] = 0.0
        for i in range(r):
            base = (sr0 + i) * src_nc + sc0
            for k in range(c):
                dst[(i + neg0) * nc + (k + neg1)] = w0 * src[base + k]
        for a in range(n_atoms):
            w = q * probs[a]
            sh0 = neg0 + offs[a, 0]
            sh1 = neg1 + offs[a, 1]
            for i in range(r):
                base = (sr0 + i) * src_nc + sc0
                for k in range(c):
                    dst[(i + sh0) * nc + (k + sh1)] += w * src[base + k]
        if step_budget > 0.0:
            tau = step_budget / cells
            drop = 0.0
            for i in range(cells):
                v = dst[i]
                if 0.0 < v < tau:
                    drop += v
                    dst[i] = 0.0
            if drop > 0.0:
                pruned += drop
                if pruned > budget:
                    raise BudgetExceeded(
                        f"pruned mass {pruned} exceeds budget {budget} at step {j}")
        # trim empty boundary rows/columns
        s0 = 0
        while s0 < nr:
            nonzero = False
            for k in range(nc):
                if dst[s0 * nc + k] != 0.0:
                    nonzero = True
                    break
            if nonzero:
                break
            s0 += 1
        e0 = nr
        while e0 > s0:
            nonzero = False
            for k in range(nc):
                if dst[(e0 - 1) * nc + k] != 0.0:
                    nonzero = True
                    break
            if nonzero:
                break
            e0 -= 1
        s1 = 0
        while s1 < nc:
            nonzero = False
            for i in range(s0, e0):
                if dst[i * nc + s1] != 0.0:
                    nonzero = True
                    break
            if nonzero:
                break
            s1 += 1
        e1 = nc
        while e1 > s1:
            nonzero = False
            for i in range(s0, e0):
                if dst[i * nc + e1 - 1] != 0.0:
                    nonzero = True
                    break
            if nonzero:
                break
            e1 -= 1
        lo0 = lo0 - neg0 + s0
        lo1 = lo1 - neg1 + s1
        r = e0 - s0
        c = e1 - s1
        src_buf, dst_buf = dst_buf, src_buf
        tmp_cap = cap_src
        cap_src = cap_dst
        cap_dst = tmp_cap
        src = src_buf
        dst = dst_buf
        src_nc = nc
        sr0 = s0
        sc0 = s1

    out = np.empty((r, c), dtype=np.float64)
    cdef double[:, ::1] out_v = out
    for i in range(r):
        base = (sr0 + i) * src_nc + sc0
        for k in range(c):
            out_v[i, k] = src[base + k]
    return out, lo0, lo1, pruned


def build_paths(object K_in, object xoff_in, object z0_in):
    K_arr = np.ascontiguousarray(K_in, dtype=np.int64)
    xoff_arr = np.ascontiguousarray(xoff_in, dtype=np.int64)
    z0_arr = np.ascontiguousarray(z0_in, dtype=np.int64)
    cdef const cnp.int64_t[:, ::1] K = K_arr
    cdef const cnp.int64_t[:, :, ::1] xoff = xoff_arr
    cdef const cnp.int64_t[:, :, ::1] z0 = z0_arr
    cdef long reps = K.shape[0], n = K.shape[1], d = xoff.shape[2]
    out = np.empty((reps, n, d), dtype=np.int64)
    cdef cnp.int64_t[:, :, ::1] V = out
    cdef long rr, m, i, k
    for rr in range(reps):
        for m in range(n):
            k = K[rr, m]
            if k == 0:
                for i in range(d):
                    V[rr, m, i] = z0[rr, m, i]
            else:
                for i in range(d):
                    V[rr, m, i] = V[rr, k - 1, i] + xoff[rr, m, i]
    return out
