"""Pure-numpy kernels, used when the compiled extension is unavailable.

Kept operation-for-operation identical to the compiled versions so both
backends produce bit-identical law arrays and paths.
"""

import numpy as np

from ..errors import BudgetExceeded, SupportCapExceeded


def dp_advance_1d(law, lo, j0, j1, offs, probs, step_budget, budget, pruned,
                  max_cells):
    """Advance a 1-d law window through mixture-convolution steps j0..j1.

    ``law`` is the dense probability window, ``lo`` the color coefficient of
    its first cell.  Step j convolves with the kernel that keeps the mass in
    place with weight 1 - 1/(j+1) and moves it by an increment atom with
    weight p_atom/(j+1).  Cells below step_budget/window_cells are zeroed
    into the pruned-mass account, so each step drops at most ``step_budget``
    of mass.
    """
    law = np.asarray(law, dtype=np.float64)
    offs = np.asarray(offs, dtype=np.int64)
    probs = np.asarray(probs, dtype=np.float64)
    neg = max(0, int(-offs.min()))
    pos = max(0, int(offs.max()))
    for j in range(j0, j1 + 1):
        q = 1.0 / (j + 1)
        size = law.shape[0]
        new_size = size + neg + pos
        if new_size > max_cells:
            raise SupportCapExceeded(
                f"law window would need {new_size} cells (cap {max_cells})")
        dst = np.zeros(new_size)
        dst[neg:neg + size] = (1.0 - q) * law
        for o, p in zip(offs, probs):
            sh = neg + int(o)
            dst[sh:sh + size] += (q * p) * law
        if step_budget > 0.0:
            tau = step_budget / new_size
            mask = (dst > 0.0) & (dst < tau)
            if mask.any():
                pruned += float(dst[mask].sum())
                if pruned > budget:
                    raise BudgetExceeded(
                        f"pruned mass {pruned} exceeds budget {budget} at step {j}")
                dst[mask] = 0.0
        nz = np.flatnonzero(dst)
        s, e = int(nz[0]), int(nz[-1]) + 1
        law = dst[s:e]
        lo = lo - neg + s
    return law, lo, pruned


def dp_advance_2d(law, lo0, lo1, j0, j1, offs, probs, step_budget, budget,
                  pruned, max_cells):
    """2-d analogue of ``dp_advance_1d`` on a dense rectangular window."""
    law = np.asarray(law, dtype=np.float64)
    offs = np.asarray(offs, dtype=np.int64)
    probs = np.asarray(probs, dtype=np.float64)
    neg0 = max(0, int(-offs[:, 0].min()))
    pos0 = max(0, int(offs[:, 0].max()))
    neg1 = max(0, int(-offs[:, 1].min()))
    pos1 = max(0, int(offs[:, 1].max()))
    for j in range(j0, j1 + 1):
        q = 1.0 / (j + 1)
        r, c = law.shape
        nr, nc = r + neg0 + pos0, c + neg1 + pos1
        if nr * nc > max_cells:
            raise SupportCapExceeded(
                f"law window would need {nr * nc} cells (cap {max_cells})")
        dst = np.zeros((nr, nc))
        dst[neg0:neg0 + r, neg1:neg1 + c] = (1.0 - q) * law
        for (o0, o1), p in zip(offs, probs):
            s0, s1 = neg0 + int(o0), neg1 + int(o1)
            dst[s0:s0 + r, s1:s1 + c] += (q * p) * law
        if step_budget > 0.0:
            tau = step_budget / (nr * nc)
            mask = (dst > 0.0) & (dst < tau)
            if mask.any():
                pruned += float(dst[mask].sum())
                if pruned > budget:
                    raise BudgetExceeded(
                        f"pruned mass {pruned} exceeds budget {budget} at step {j}")
                dst[mask] = 0.0
        rows = np.flatnonzero(dst.any(axis=1))
        cols = np.flatnonzero(dst.any(axis=0))
        law = dst[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]
        lo0 = lo0 - neg0 + int(rows[0])
        lo1 = lo1 - neg1 + int(cols[0])
    return law, lo0, lo1, pruned


def build_paths(K, xoff, z0):
    """Realize urn paths from pre-drawn randomness.

    ``K[r, m]`` picks the ancestor of draw m in replication r: 0 means a
    fresh draw from the initial configuration (coefficients ``z0[r, m]``),
    k >= 1 means color of draw k-1 plus the increment ``xoff[r, m]``.
    """
    K = np.asarray(K, dtype=np.int64)
    xoff = np.asarray(xoff, dtype=np.int64)
    z0 = np.asarray(z0, dtype=np.int64)
    reps, n = K.shape
    V = np.empty_like(xoff)
    rows = np.arange(reps)
    for m in range(n):
        km = K[:, m]
        cand = V[rows, np.maximum(km, 1) - 1] + xoff[:, m]
        V[:, m] = np.where((km == 0)[:, None], z0[:, m], cand)
    return V
