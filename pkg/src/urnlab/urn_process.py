"""Urn path simulation and the eigenvector martingale.

The primary sampler is O(1) per draw: the color of draw m is, uniformly at
random, either a fresh draw from the initial configuration or the color of
an earlier draw plus a fresh increment.  That recursive rule is exactly the
mixture defining the urn dynamics, because after m draws the configuration
is the initial one plus one replacement row per past draw, each of unit
mass.  A direct configuration-tracking sampler is kept as the slow
cross-validation reference.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .colors import ColorPoint, IncrementModel, mgf as increment_mgf
from .errors import DomainError, InvalidSpec, OverflowGuard, TooLarge
from .exact_law import SparseLaw
from .product_formula import log_factor_sum
from .rng import stream

_NAIVE_CAP = 10**5
_EXP_GUARD = 700.0


@dataclass(frozen=True)
class UrnPath:
    """Realized draw colors V_0..V_{n-1}; V_m is the color of draw m+1."""

    draws: np.ndarray
    z0: ColorPoint | None
    rng_seed: int

    def __post_init__(self):
        arr = np.ascontiguousarray(self.draws, dtype=np.int64)
        arr.setflags(write=False)
        object.__setattr__(self, "draws", arr)

    @property
    def n(self) -> int:
        return self.draws.shape[0]


@dataclass(frozen=True)
class MartingaleTrace:
    """Normalized configuration transform along one path."""

    lam: np.ndarray
    values: np.ndarray
    log_u_x: np.ndarray


def _draw_tables(model: IncrementModel, u0: SparseLaw):
    u0_coeffs, u0_probs = u0.support_and_probs()
    return (model.coeff_array, np.cumsum(model.prob_array),
            u0_coeffs, np.cumsum(u0_probs))


def _one_path_arrays(model, u0, n, gen, tables):
    atom_coeffs, atom_cum, u0_coeffs, u0_cum = tables
    u = gen.random((3, n))
    K = (u[0] * (np.arange(n) + 1.0)).astype(np.int64)
    xidx = np.minimum(np.searchsorted(atom_cum, u[1], side="right"),
                      len(atom_cum) - 1)
    zidx = np.minimum(np.searchsorted(u0_cum, u[2], side="right"),
                      len(u0_cum) - 1)
    return K, atom_coeffs[xidx], u0_coeffs[zidx]


def sample_path(model: IncrementModel, u0: SparseLaw, n: int, seed: int) -> UrnPath:
    """One urn path of n draws; identical seeds give identical paths."""
    if n < 0:
        raise InvalidSpec(f"n must be >= 0, got {n}")
    _validate_u0(model, u0)
    gen = stream(seed, 0)
    tables = _draw_tables(model, u0)
    K, xoff, z0 = _one_path_arrays(model, u0, n, gen, tables)
    V = kernels.build_paths(K[None, :], xoff[None, :, :], z0[None, :, :])[0]
    first = tuple(int(c) for c in V[0]) if n > 0 else None
    return UrnPath(draws=V, z0=first, rng_seed=seed)


def iter_path_chunks(model: IncrementModel, u0: SparseLaw, n: int,
                     base_seed: int, reps: int, chunk_reps: int | None = None):
    """Yield (first_rep_index, paths (c, n, d)) over independent replications.

    Replication r always uses the stream mix(base_seed, r) regardless of the
    chunking, so results are reproducible and order-independent.
    """
    _validate_u0(model, u0)
    if chunk_reps is None:
        chunk_reps = max(1, min(reps, int(4e6) // max(n, 1)))
    tables = _draw_tables(model, u0)
    for start in range(0, reps, chunk_reps):
        count = min(chunk_reps, reps - start)
        K = np.empty((count, n), dtype=np.int64)
        xoff = np.empty((count, n, model.dim), dtype=np.int64)
        z0 = np.empty((count, n, model.dim), dtype=np.int64)
        for i in range(count):
            gen = stream(base_seed, start + i)
            K[i], xoff[i], z0[i] = _one_path_arrays(model, u0, n, gen, tables)
        yield start, kernels.build_paths(K, xoff, z0)


def _validate_u0(model: IncrementModel, u0: SparseLaw) -> None:
    if u0.dim != model.dim:
        raise InvalidSpec(f"u0 dimension {u0.dim} != model dimension {model.dim}")
    if u0.n != 0:
        raise InvalidSpec("u0 must be a time-0 law")
    u0.validate()


def sample_path_naive(model: IncrementModel, u0: SparseLaw, n: int,
                      seed: int) -> UrnPath:
    """Reference sampler that materializes the configuration at every step.

    Linear scan per draw over the sparse configuration; statistically
    identical in law to ``sample_path`` and used to cross-validate it.
    """
    if n > _NAIVE_CAP:
        raise TooLarge(f"naive sampler capped at n = {_NAIVE_CAP}, got {n}")
    if n < 0:
        raise InvalidSpec(f"n must be >= 0, got {n}")
    _validate_u0(model, u0)
    gen = stream(seed, 0)
    config: dict = {c: float(p) for c, p in u0.items_sorted()}
    atoms = [(tuple(int(x) for x in row), float(p))
             for row, p in zip(model.coeff_array, model.prob_array)]
    draws = np.empty((n, model.dim), dtype=np.int64)
    for m in range(n):
        r = gen.random() * (m + 1)
        acc = 0.0
        chosen = None
        for v, mass in config.items():
            acc += mass
            if r < acc:
                chosen = v
                break
        if chosen is None:  # r landed in the float-rounding slack at the top
            chosen = v
        draws[m] = chosen
        for off, pa in atoms:
            u = tuple(a + b for a, b in zip(chosen, off))
            config[u] = config.get(u, 0.0) + pa
    first = tuple(int(c) for c in draws[0]) if n > 0 else None
    return UrnPath(draws=draws, z0=first, rng_seed=seed)


def urn_config(path: UrnPath, model: IncrementModel, u0: SparseLaw,
               m: int | None = None) -> dict:
    """Sparse configuration after m draws (masses sum to m + 1)."""
    if m is None:
        m = path.n
    if not (0 <= m <= path.n):
        raise DomainError(f"m must be in [0, {path.n}], got {m}")
    config: dict = {c: float(p) for c, p in u0.items_sorted()}
    atoms = [(tuple(int(x) for x in row), float(p))
             for row, p in zip(model.coeff_array, model.prob_array)]
    for j in range(m):
        v = tuple(int(c) for c in path.draws[j])
        for off, pa in atoms:
            u = tuple(a + b for a, b in zip(v, off))
            config[u] = config.get(u, 0.0) + pa
    return config


def config_transform(config: dict, model: IncrementModel, lam) -> float:
    """Inner product of a sparse configuration with the transform vector
    exp(<lam, color>)."""
    lam = np.asarray(lam, dtype=float).reshape(model.dim)
    coeffs = np.array(list(config.keys()), dtype=np.int64)
    masses = np.array(list(config.values()))
    pts = model.embedding.embed_many(coeffs)
    expo = pts @ lam
    if np.max(expo) > _EXP_GUARD:
        raise OverflowGuard("configuration transform overflows double range")
    return float(np.exp(expo) @ masses)


def one_step_identity_gap(config: dict, model: IncrementModel, lam) -> float:
    """Relative gap between the explicitly-averaged one-draw expectation of
    the configuration transform and its closed multiplicative form.

    Exact equality is an algebraic identity; the computed gap only measures
    floating-point consistency of the two evaluation routes.
    """
    lam = np.asarray(lam, dtype=float).reshape(model.dim)
    e_val = increment_mgf(model, lam)
    total = math.fsum(config.values())
    ux = config_transform(config, model, lam)
    coeffs = np.array(list(config.keys()), dtype=np.int64)
    masses = np.array(list(config.values()))
    pts = model.embedding.embed_many(coeffs)
    ex = np.exp(pts @ lam)
    lhs = float(np.sum((masses / total) * (ux + e_val * ex)))
    rhs = (1.0 + e_val / total) * ux
    return abs(lhs - rhs) / abs(rhs)


def martingale_trace(path: UrnPath, model: IncrementModel, u0: SparseLaw,
                     lam) -> MartingaleTrace:
    """Values of the normalized transform after each draw along a path.

    The running configuration transform accumulates in log space, so colors
    drifting far from the origin cannot overflow it.
    """
    lam = np.asarray(lam, dtype=float).reshape(model.dim)
    n = path.n
    e_val = increment_mgf(model, lam)
    u0x = u0.mgf(lam, model.embedding)
    pts = model.embedding.embed_many(path.draws)
    terms = np.empty(n + 1)
    terms[0] = math.log(u0x)
    if n:
        terms[1:] = math.log(e_val) + pts @ lam
    log_u_x = np.logaddexp.accumulate(terms)
    log_pi = np.concatenate([[0.0], np.cumsum(np.log1p(e_val / np.arange(1, n + 1)))])
    values = np.exp(log_u_x - log_pi)
    return MartingaleTrace(lam=lam, values=values, log_u_x=log_u_x)


def final_martingale_values(model: IncrementModel, u0: SparseLaw, lam, n: int,
                            reps: int, base_seed: int) -> np.ndarray:
    """Martingale value after n draws, one entry per replication."""
    lam = np.asarray(lam, dtype=float).reshape(model.dim)
    e_val = increment_mgf(model, lam)
    u0x = u0.mgf(lam, model.embedding)
    log_pi_n = log_factor_sum(e_val, n) + math.log(n + 1.0)
    out = np.empty(reps)
    for start, paths in iter_path_chunks(model, u0, n, base_seed, reps):
        pts = paths.astype(float) @ model.embedding.basis
        expo = pts @ lam
        if expo.size and float(np.max(expo)) > _EXP_GUARD:
            raise OverflowGuard("transform exponent overflows double range")
        ux = u0x + e_val * np.exp(expo).sum(axis=1)
        out[start:start + paths.shape[0]] = ux / math.exp(log_pi_n)
    return out


def second_moment_exact(model: IncrementModel, u0: SparseLaw, lam,
                        n: int) -> np.ndarray:
    """Exact second moments of the martingale at every step 0..n.

    Evaluates the closed-form solution of the one-step recursion with all
    partial products carried as cumulative log sums.
    """
    if n < 0:
        raise InvalidSpec(f"n must be >= 0, got {n}")
    lam = np.asarray(lam, dtype=float).reshape(model.dim)
    if not lam.any():
        return np.ones(n + 1)
    e1 = increment_mgf(model, lam)
    e2 = increment_mgf(model, 2.0 * lam)
    m0 = u0.mgf(lam, model.embedding)
    m02 = u0.mgf(2.0 * lam, model.embedding)
    j = np.arange(1, n + 1, dtype=float)
    cum_e1 = np.concatenate([[0.0], np.cumsum(np.log1p(e1 / j))])
    cum_e2 = np.concatenate([[0.0], np.cumsum(np.log1p(e2 / j))])
    cum_2e1 = np.concatenate([[0.0], np.cumsum(np.log1p(2.0 * e1 / j))])
    # homogeneous decay of the recursion from 0 to k
    log_decay = cum_2e1 - 2.0 * cum_e1
    # inhomogeneous source terms, discounted back to step 0
    expo = cum_e2[:-1] - cum_2e1[1:]
    if expo.size and float(np.max(expo)) + 2.0 * math.log(max(e1, 1.0)) > _EXP_GUARD:
        raise OverflowGuard("second-moment source term overflows double range")
    src = (e1 * e1 / j) * np.exp(expo) * m02
    acc = np.concatenate([[0.0], np.cumsum(src)])
    return np.exp(log_decay) * (m0 * m0 + acc)


def l2_bound_scan(model: IncrementModel, u0: SparseLaw, delta: float,
                  n_max: int, grid: int) -> dict:
    """Scan for the positivity region of 2 e(lam) - e(2 lam) and probe the
    martingale's second moment inside it.

    Returns the largest grid-scanned half-width delta_star with the
    positivity margin still positive on the whole grid of the box, plus per-
    lambda second-moment maxima with a heuristic growth flag (doubling ratio
    above 1.05 at the end of the range).
    """
    if delta <= 0 or grid < 3:
        raise InvalidSpec("need delta > 0 and grid >= 3")
    d = model.dim
    axes = [np.linspace(-delta, delta, grid) for _ in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    lam_points = np.stack([m.ravel() for m in mesh], axis=1)
    margin = np.array([2.0 * increment_mgf(model, p) - increment_mgf(model, 2.0 * p)
                       for p in lam_points])
    radius = np.max(np.abs(lam_points), axis=1)
    bad = radius[margin <= 0.0]
    if bad.size:
        ok = radius[radius < float(bad.min())]
        delta_star = float(ok.max()) if ok.size else 0.0
    else:
        delta_star = float(radius.max())
    probes = []
    probe_axes = [np.linspace(-delta_star, delta_star, 5) for _ in range(d)]
    probe_mesh = np.meshgrid(*probe_axes, indexing="ij")
    probe_points = np.unique(np.stack([m.ravel() for m in probe_mesh], axis=1), axis=0)
    for lam in probe_points:
        m2 = second_moment_exact(model, u0, lam, n_max)
        ratio = float(m2[n_max] / m2[n_max // 2]) if n_max >= 2 else 1.0
        probes.append({
            "lambda": [float(x) for x in lam],
            "max_m2": float(np.max(m2)),
            "final_m2": float(m2[n_max]),
            "doubling_ratio": ratio,
            "growth_flag": bool(ratio > 1.05),
        })
    return {"delta_star": delta_star, "n_max": n_max, "probes": probes}


def variance_vanishes(model: IncrementModel, u0: SparseLaw, lam,
                      n_list) -> np.ndarray:
    """Deviation from 1 of the second moment at the shrinking argument
    lam / sqrt(log n), for each n in ``n_list``."""
    lam = np.asarray(lam, dtype=float).reshape(model.dim)
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])) or (n_list and n_list[0] < 3):
        raise InvalidSpec("n_list must be strictly increasing with entries >= 3")
    out = np.empty(len(n_list))
    for i, n in enumerate(n_list):
        lam_n = lam / math.sqrt(math.log(n))
        out[i] = second_moment_exact(model, u0, lam_n, n)[n] - 1.0
    return out
