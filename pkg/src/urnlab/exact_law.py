"""Exact probability law of the sampled color.

The color drawn at step n equals (in law) an initial draw plus a sum of
Bernoulli(1/(j+1))-thinned walk increments, so its law is an n-fold sparse
convolution.  A dense-window dynamic program with rigorously budgeted
pruning computes it for n up to 10^6+; an exact-rational enumeration and a
Fourier inversion provide two independent cross-checks.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .colors import ColorPoint, Embedding, IncrementModel, as_color
from .errors import (
    DomainError,
    InvalidSpec,
    SupportCapExceeded,
    TooLarge,
    WindowTooSmall,
)
from .product_formula import log_factor_sum

DEFAULT_MAX_CELLS = 1 << 24
_BRUTE_FORCE_CAP = 14
_CF_TAIL_TOL = 1e-12


@dataclass(frozen=True)
class SparseLaw:
    """Sparse pmf over colors with an explicit pruned-mass account.

    Every retained probability underestimates the true one by at most
    ``pruned_mass`` in total, so reported statistics carry a one-sided,
    quantified error.  Treat instances as immutable.
    """

    entries: dict
    pruned_mass: float
    n: int
    dim: int
    model: IncrementModel | None = None

    @classmethod
    def delta(cls, coeffs, model: IncrementModel | None = None) -> "SparseLaw":
        c = as_color(coeffs)
        return cls(entries={c: 1.0}, pruned_mass=0.0, n=0, dim=len(c), model=model)

    @classmethod
    def from_entries(cls, entries, n: int = 0,
                     model: IncrementModel | None = None) -> "SparseLaw":
        ent = {as_color(c): float(p) for c, p in dict(entries).items()}
        if not ent:
            raise InvalidSpec("law needs at least one entry")
        dim = len(next(iter(ent)))
        return cls(entries=ent, pruned_mass=0.0, n=n, dim=dim, model=model)

    def total_mass(self) -> float:
        return math.fsum(self.entries.values())

    def validate(self, tol: float = 1e-12) -> None:
        for c, p in self.entries.items():
            if len(c) != self.dim:
                raise InvalidSpec(f"entry {c} has wrong dimension")
            if p <= 0.0:
                raise InvalidSpec(f"non-positive probability {p} at {c}")
        if self.pruned_mass < 0.0:
            raise InvalidSpec(f"negative pruned mass {self.pruned_mass}")
        total = self.total_mass() + self.pruned_mass
        if abs(total - 1.0) > tol:
            raise InvalidSpec(f"total mass {total!r} differs from 1 by > {tol}")

    def items_sorted(self) -> list[tuple[ColorPoint, float]]:
        return sorted(self.entries.items())

    def support_and_probs(self) -> tuple[np.ndarray, np.ndarray]:
        """(k, d) int64 coefficient array and matching probabilities, sorted."""
        items = self.items_sorted()
        coeffs = np.array([c for c, _ in items], dtype=np.int64).reshape(len(items), self.dim)
        probs = np.array([p for _, p in items], dtype=float)
        return coeffs, probs

    def _embedding(self, embedding: Embedding | None) -> Embedding:
        if embedding is not None:
            return embedding
        if self.model is not None:
            return self.model.embedding
        return Embedding.identity(self.dim)

    def embedded_points(self, embedding: Embedding | None = None) -> np.ndarray:
        coeffs, _ = self.support_and_probs()
        return self._embedding(embedding).embed_many(coeffs)

    def mgf(self, lam, embedding: Embedding | None = None) -> float:
        lam = np.asarray(lam, dtype=float).reshape(self.dim)
        coeffs, probs = self.support_and_probs()
        pts = self._embedding(embedding).embed_many(coeffs)
        return float(np.exp(pts @ lam) @ probs)

    def cf(self, t, embedding: Embedding | None = None) -> complex:
        t = np.asarray(t, dtype=float).reshape(self.dim)
        coeffs, probs = self.support_and_probs()
        pts = self._embedding(embedding).embed_many(coeffs)
        return complex(np.exp(1j * (pts @ t)) @ probs)


def _check_u0(model: IncrementModel, u0: SparseLaw) -> None:
    if u0.dim != model.dim:
        raise InvalidSpec(f"u0 dimension {u0.dim} != model dimension {model.dim}")
    if u0.n != 0:
        raise InvalidSpec("u0 must be a time-0 law")
    u0.validate()


def _window_1d(u0: SparseLaw) -> tuple[np.ndarray, int]:
    coeffs, probs = u0.support_and_probs()
    lo = int(coeffs[:, 0].min())
    hi = int(coeffs[:, 0].max())
    law = np.zeros(hi - lo + 1)
    law[coeffs[:, 0] - lo] = probs
    return law, lo


def _window_2d(u0: SparseLaw) -> tuple[np.ndarray, int, int]:
    coeffs, probs = u0.support_and_probs()
    lo0, lo1 = int(coeffs[:, 0].min()), int(coeffs[:, 1].min())
    hi0, hi1 = int(coeffs[:, 0].max()), int(coeffs[:, 1].max())
    law = np.zeros((hi0 - lo0 + 1, hi1 - lo1 + 1))
    law[coeffs[:, 0] - lo0, coeffs[:, 1] - lo1] = probs
    return law, lo0, lo1


def _law_from_window_1d(law, lo, pruned, n, model) -> SparseLaw:
    nz = np.flatnonzero(law)
    entries = {(int(lo + i),): float(law[i]) for i in nz}
    return SparseLaw(entries=entries, pruned_mass=pruned, n=n, dim=1, model=model)


def _law_from_window_2d(law, lo0, lo1, pruned, n, model) -> SparseLaw:
    ii, kk = np.nonzero(law)
    entries = {(int(lo0 + i), int(lo1 + k)): float(law[i, k])
               for i, k in zip(ii, kk)}
    return SparseLaw(entries=entries, pruned_mass=pruned, n=n, dim=2, model=model)


def exact_law_ladder(model: IncrementModel, u0: SparseLaw, n_list,
                     prune_eps: float = 0.0,
                     max_cells: int = DEFAULT_MAX_CELLS) -> list[SparseLaw]:
    """Laws at each n in ``n_list`` from a single forward pass.

    Each step may drop at most prune_eps/(2*max(n_list)) of mass (entries
    below that step budget divided by the window size are zeroed), so every
    snapshot's pruned mass stays provably within the overall budget.
    """
    n_list = [int(n) for n in n_list]
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])) or n_list[0] < 0:
        raise InvalidSpec(f"n_list must be strictly increasing and >= 0, got {n_list}")
    if prune_eps < 0.0:
        raise InvalidSpec(f"prune_eps must be >= 0, got {prune_eps}")
    _check_u0(model, u0)
    n_max = n_list[-1]
    step_budget = (prune_eps / (2.0 * n_max)
                   if (prune_eps > 0.0 and n_max > 0) else 0.0)

    out: list[SparseLaw] = []
    pruned = 0.0
    if model.dim == 1:
        law, lo = _window_1d(u0)
        offs = model.coeff_array[:, 0].copy()
        j_prev = 0
        for n in n_list:
            if n > j_prev:
                law, lo, pruned = kernels.dp_advance_1d(
                    law, lo, j_prev + 1, n, offs, model.prob_array,
                    step_budget, prune_eps, pruned, max_cells)
                j_prev = n
            out.append(_law_from_window_1d(law, lo, pruned, n, model))
    elif model.dim == 2:
        law, lo0, lo1 = _window_2d(u0)
        j_prev = 0
        for n in n_list:
            if n > j_prev:
                law, lo0, lo1, pruned = kernels.dp_advance_2d(
                    law, lo0, lo1, j_prev + 1, n, model.coeff_array,
                    model.prob_array, step_budget, prune_eps, pruned, max_cells)
                j_prev = n
            out.append(_law_from_window_2d(law, lo0, lo1, pruned, n, model))
    else:
        out = _ladder_generic(model, u0, n_list, step_budget, prune_eps, max_cells)
    return out


def _ladder_generic(model, u0, n_list, step_budget, budget, max_cells) -> list[SparseLaw]:
    # dict-based reference path for d >= 3; desk-scale n only
    from .errors import BudgetExceeded

    law = {c: float(p) for c, p in u0.entries.items()}
    offsets = [tuple(int(x) for x in row) for row in model.coeff_array]
    probs = [float(p) for p in model.prob_array]
    pruned = 0.0
    out = []
    j_prev = 0
    for n in n_list:
        for j in range(j_prev + 1, n + 1):
            q = 1.0 / (j + 1)
            new: dict = {}
            for v, p in law.items():
                new[v] = (1.0 - q) * p
            for off, pa in zip(offsets, probs):
                w = q * pa
                for v, p in law.items():
                    u = tuple(a + b for a, b in zip(v, off))
                    new[u] = new.get(u, 0.0) + w * p
            if step_budget > 0.0:
                tau = step_budget / len(new)
                drop = [v for v, p in new.items() if p < tau]
                if drop:
                    pruned += math.fsum(new[v] for v in drop)
                    if pruned > budget:
                        raise BudgetExceeded(
                            f"pruned mass {pruned} exceeds budget {budget} at step {j}")
                    for v in drop:
                        del new[v]
            if len(new) > max_cells:
                raise SupportCapExceeded(
                    f"law support would need {len(new)} cells (cap {max_cells})")
            law = new
        j_prev = n
        out.append(SparseLaw(entries=dict(law), pruned_mass=pruned, n=n,
                             dim=model.dim, model=model))
    return out


def exact_law_dp(model: IncrementModel, u0: SparseLaw, n: int,
                 prune_eps: float = 0.0,
                 max_cells: int = DEFAULT_MAX_CELLS) -> SparseLaw:
    """Exact law of the color sampled at step n (dynamic program)."""
    if n < 0:
        raise InvalidSpec(f"n must be >= 0, got {n}")
    if n == 0:
        _check_u0(model, u0)
        return SparseLaw(entries=dict(u0.entries), pruned_mass=u0.pruned_mass,
                         n=0, dim=u0.dim, model=model)
    return exact_law_ladder(model, u0, [n], prune_eps, max_cells)[0]


def brute_force_law(model: IncrementModel, u0: SparseLaw, n: int) -> SparseLaw:
    """Independent oracle: exact-rational enumeration of thinned increments.

    Enumerates the joint outcomes (skip, or move by atom a) of each step with
    probabilities in exact rational arithmetic, merging equal partial sums.
    The inputs' double-precision probabilities are taken as exact rationals,
    so the only rounding is the single final conversion back to double.
    """
    if n > _BRUTE_FORCE_CAP:
        raise TooLarge(f"brute force capped at n = {_BRUTE_FORCE_CAP}, got {n}")
    if n < 0:
        raise InvalidSpec(f"n must be >= 0, got {n}")
    _check_u0(model, u0)
    dist: dict = {as_color(c): Fraction(p) for c, p in u0.entries.items()}
    atoms = [(tuple(int(x) for x in row), Fraction(float(p)))
             for row, p in zip(model.coeff_array, model.prob_array)]
    for j in range(1, n + 1):
        keep = Fraction(j, j + 1)
        move = Fraction(1, j + 1)
        new: dict = {}
        for v, p in dist.items():
            new[v] = new.get(v, Fraction(0)) + keep * p
            for off, pa in atoms:
                u = tuple(a + b for a, b in zip(v, off))
                new[u] = new.get(u, Fraction(0)) + move * pa * p
        dist = new
    entries = {v: float(p) for v, p in dist.items() if p > 0}
    return SparseLaw(entries=entries, pruned_mass=0.0, n=n, dim=model.dim,
                     model=model)


def law_moments(law: SparseLaw, embedding: Embedding | None = None):
    """Embedded mean vector and covariance (about the law's own mean)."""
    coeffs, probs = law.support_and_probs()
    total = math.fsum(probs)
    if total < 1.0 - 1e-6:
        raise DomainError(f"law mass {total} below 1 - 1e-6; too much pruned")
    pts = law._embedding(embedding).embed_many(coeffs)
    w = probs / total
    mean = w @ pts
    centered = pts - mean
    cov = (centered * w[:, None]).T @ centered
    return mean, cov


def _coeff_axis_mgf_log(model: IncrementModel, u0: SparseLaw, axis: int,
                        sign: float, lam: float, n: int) -> float:
    """Log MGF of the chosen coefficient coordinate (times sign) at step n."""
    e_val = float(np.exp(sign * lam * model.coeff_array[:, axis].astype(float))
                  @ model.prob_array)
    coeffs, probs = u0.support_and_probs()
    pref = float(np.exp(sign * lam * coeffs[:, axis].astype(float)) @ probs)
    return math.log(pref) + log_factor_sum(e_val, n)


def _chernoff_window(model: IncrementModel, u0: SparseLaw, n: int) -> list[tuple[int, int]]:
    """Per-axis coefficient bounds with tail mass below 1e-12 (Chernoff)."""
    d = model.dim
    tol = _CF_TAIL_TOL / (2 * d)
    lam_grid = np.geomspace(0.05, 8.0, 30)
    window = []
    for axis in range(d):
        bounds = []
        for sign in (1.0, -1.0):
            best = math.inf
            for lam in lam_grid:
                log_m = _coeff_axis_mgf_log(model, u0, axis, sign, float(lam), n)
                best = min(best, (log_m - math.log(tol)) / lam)
            bounds.append(int(math.ceil(best)))
        hi, lo = bounds[0], -bounds[1]
        window.append((lo, hi))
    return window


def exact_law_cf(model: IncrementModel, u0: SparseLaw, n: int,
                 grid: int) -> SparseLaw:
    """Cross-check law via characteristic-function inversion (d <= 2).

    Samples the product-form CF on a per-axis grid of ``grid`` roots of unity
    and inverts by FFT; exact whenever the support window (Chernoff-bounded)
    fits inside ``grid`` consecutive residues per axis.
    """
    if model.dim > 2:
        raise DomainError("exact_law_cf supports dimensions 1 and 2")
    if n < 0:
        raise InvalidSpec(f"n must be >= 0, got {n}")
    if grid < 1:
        raise InvalidSpec(f"grid must be >= 1, got {grid}")
    _check_u0(model, u0)
    d = model.dim
    window = _chernoff_window(model, u0, n)
    for lo, hi in window:
        if hi - lo + 1 > grid:
            raise WindowTooSmall(
                f"support window {window} needs more than {grid} grid points per axis")

    t_axes = [2.0 * math.pi * np.arange(grid) / grid for _ in range(d)]
    mesh = np.meshgrid(*t_axes, indexing="ij")
    coeffs_u0, probs_u0 = u0.support_and_probs()
    e_grid = np.zeros_like(mesh[0], dtype=complex)
    for row, p in zip(model.coeff_array, model.prob_array):
        phase = sum(mesh[k] * int(row[k]) for k in range(d))
        e_grid += p * np.exp(1j * phase)
    psi = np.zeros_like(mesh[0], dtype=complex)
    for row, p in zip(coeffs_u0, probs_u0):
        phase = sum(mesh[k] * int(row[k]) for k in range(d))
        psi += p * np.exp(1j * phase)
    for j in range(1, n + 1):
        psi *= 1.0 + (e_grid - 1.0) / (j + 1.0)

    pmf = np.fft.fftn(psi).real / grid ** d
    idx = [np.arange(lo, hi + 1) % grid for lo, hi in window]
    sub = pmf[np.ix_(*idx)] if d == 2 else pmf[idx[0]]
    entries = {}
    it = np.ndindex(*sub.shape)
    for pos in it:
        val = float(sub[pos])
        if val > 2e-16:
            coeffs = tuple(int(window[k][0] + pos[k]) for k in range(d))
            entries[coeffs] = val
    total = math.fsum(entries.values())
    return SparseLaw(entries=entries, pruned_mass=max(0.0, 1.0 - total),
                     n=n, dim=d, model=model)


def write_law_csv(law: SparseLaw, fh, embedding: Embedding | None = None) -> None:
    """CSV rows (coefficients, embedded coordinates, probability), sorted."""
    d = law.dim
    emb = law._embedding(embedding)
    header = [f"c{k + 1}" for k in range(d)] + [f"x{k + 1}" for k in range(d)] + ["prob"]
    fh.write(",".join(header) + "\n")
    for coeffs, p in law.items_sorted():
        x = emb.embed(coeffs)
        row = [str(int(c)) for c in coeffs]
        row += [format(float(v), ".17g") for v in x]
        row.append(format(p, ".17g"))
        fh.write(",".join(row) + "\n")
