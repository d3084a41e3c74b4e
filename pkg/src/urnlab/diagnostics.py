"""Gaussian-limit diagnostics for exact laws and simulated configurations.

Centered/scaled exact laws are compared against the standard Gaussian with a
Kolmogorov distance (one dimension), a characteristic-function grid distance
(any dimension), and a lattice local-limit statistic; the random
configuration's convergence in probability is probed by a replication
experiment over a fixed family of bounded test functions.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .colors import IncrementModel, LatticeSpec, MomentSummary
from .colors import moments as model_moments
from .errors import (
    DegenerateSigma,
    DomainError,
    InvalidSpec,
    LatticeMismatch,
)
from .exact_law import SparseLaw
from .urn_process import iter_path_chunks

EULER_GAMMA = float(np.euler_gamma)
_COV_EIG_TOL = 1e-10
_OFF_LATTICE_TOL = 1e-9


def gaussian_density(x) -> float:
    """Standard Gaussian density in len(x) dimensions."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.shape[-1]
    return float((2.0 * math.pi) ** (-d / 2.0) * math.exp(-0.5 * float(x @ x)))


def _phi_rows(pts: np.ndarray) -> np.ndarray:
    d = pts.shape[1]
    return (2.0 * math.pi) ** (-d / 2.0) * np.exp(-0.5 * np.sum(pts * pts, axis=1))


def gaussian_cdf_1d(x: float) -> float:
    """Standard Gaussian distribution function (via erfc, < 1e-12 error)."""
    return 0.5 * math.erfc(-float(x) / math.sqrt(2.0))


@dataclass(frozen=True)
class Standardization:
    """Affine map taking a law at step n onto the Gaussian scale."""

    center: np.ndarray
    scale_inv: np.ndarray
    n: int

    @classmethod
    def for_moments(cls, moms: MomentSummary, n: int,
                    use_gamma: bool = False) -> "Standardization":
        if n < 3:
            raise DomainError(f"standardization needs n >= 3, got {n}")
        log_n = math.log(n)
        shift = log_n + EULER_GAMMA if use_gamma else log_n
        center = moms.mu * shift
        scale_inv = moms.sigma_inv_sqrt() / math.sqrt(log_n)
        return cls(center=center, scale_inv=scale_inv, n=n)

    def apply(self, pts: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(pts) - self.center) @ self.scale_inv

    def invert(self, pts: np.ndarray) -> np.ndarray:
        return np.atleast_2d(pts) @ np.linalg.inv(self.scale_inv) + self.center


@dataclass(frozen=True)
class StandardizedLaw:
    points: np.ndarray
    probs: np.ndarray
    pruned_mass: float
    standardization: Standardization


@dataclass(frozen=True)
class LLTStatistic:
    n: int
    sup_value: float
    argmax_point: np.ndarray
    normalizer: float


def standardize(law: SparseLaw, moms: MomentSummary,
                use_gamma: bool = False) -> StandardizedLaw:
    """Push the law through the centering/scaling map; masses unchanged."""
    std = Standardization.for_moments(moms, law.n, use_gamma)
    pts = std.apply(law.embedded_points())
    _, probs = law.support_and_probs()
    return StandardizedLaw(points=pts, probs=probs,
                           pruned_mass=law.pruned_mass, standardization=std)


def ks_distance_1d(slaw: StandardizedLaw) -> float:
    """Kolmogorov distance to the standard Gaussian (upper bound).

    Evaluates both one-sided limits at every atom; the pruned mass is added
    so the result bounds the distance of the untruncated law.
    """
    if slaw.points.shape[1] != 1:
        raise DomainError("ks_distance_1d needs a one-dimensional law")
    order = np.argsort(slaw.points[:, 0], kind="stable")
    x = slaw.points[order, 0]
    p = slaw.probs[order]
    f_after = np.cumsum(p)
    f_before = f_after - p
    phi = np.array([gaussian_cdf_1d(v) for v in x])
    d = max(float(np.max(np.abs(f_after - phi))),
            float(np.max(np.abs(f_before - phi))))
    return d + slaw.pruned_mass


def default_cf_grid(dim: int, per_axis: int = 9, extent: float = 3.0) -> np.ndarray:
    """Cartesian grid of frequency vectors in [-extent, extent]^dim."""
    axes = [np.linspace(-extent, extent, per_axis) for _ in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def cf_distance(slaw: StandardizedLaw, t_grid: np.ndarray | None = None) -> float:
    """Max over a frequency grid of |empirical CF - Gaussian CF|."""
    d = slaw.points.shape[1]
    grid = default_cf_grid(d) if t_grid is None else np.atleast_2d(t_grid)
    phases = slaw.points @ grid.T
    emp = (slaw.probs[:, None] * np.exp(1j * phases)).sum(axis=0)
    target = np.exp(-0.5 * np.sum(grid * grid, axis=1))
    return float(np.max(np.abs(emp - target)))


def _check_nondegenerate_cov(moms: MomentSummary) -> None:
    cov = moms.sigma - np.outer(moms.mu, moms.mu)
    if float(np.min(np.linalg.eigvalsh(cov))) <= _COV_EIG_TOL:
        raise DegenerateSigma(
            "increment covariance is singular; the lattice statistic needs a "
            "genuinely random increment")


def _lattice_ball(lattice: LatticeSpec, std: Standardization,
                  radius: float):
    """Integer lattice coordinates and standardized positions of all lattice
    points whose standardized norm is at most ``radius``."""
    d = lattice.dim
    l_inv = np.linalg.inv(lattice.basis)
    k_center = (std.center - lattice.offset) @ l_inv
    # k = k_center + x @ (sqrt(log n) * Sigma^(1/2) @ L^-1) over the ball |x| <= radius
    m_map = np.linalg.inv(std.scale_inv) @ l_inv
    extents = radius * np.linalg.norm(m_map, axis=0)
    los = np.floor(k_center - extents).astype(np.int64)
    his = np.ceil(k_center + extents).astype(np.int64)
    axes = [np.arange(los[i], his[i] + 1) for i in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    ks = np.stack([m.ravel() for m in mesh], axis=1)
    ys = lattice.offset + ks.astype(float) @ lattice.basis
    xs = std.apply(ys)
    mask = np.sum(xs * xs, axis=1) <= radius * radius
    return ks[mask], ys[mask], xs[mask]


def llt_statistic(law: SparseLaw, moms: MomentSummary,
                  lattice: LatticeSpec, phi_floor: float = 1e-12) -> LLTStatistic:
    """Sup over lattice points of |normalizer * P(point) - Gaussian density|.

    The lattice must be the one carrying the thinned increment.  The sup runs
    over the law's support plus every unvisited lattice point inside the ball
    where the Gaussian density exceeds ``phi_floor``; unvisited points
    contribute the density itself.
    """
    if law.model is None:
        raise InvalidSpec("law must carry its model for lattice diagnostics")
    d = law.dim
    _check_nondegenerate_cov(moms)
    std = Standardization.for_moments(moms, law.n, use_gamma=False)
    log_n = math.log(law.n)

    coeffs, probs = law.support_and_probs()
    pts = law.embedded_points()
    on_lattice = lattice.contains(pts, tol=_OFF_LATTICE_TOL)
    off_mass = float(probs[~on_lattice].sum())
    if off_mass > _OFF_LATTICE_TOL:
        raise LatticeMismatch(
            f"{off_mass} of the law mass lies off the declared lattice")

    if d == 1:
        sigma = math.sqrt(moms.sigma[0, 0])
        normalizer = sigma * math.sqrt(log_n) / lattice.det_abs
    else:
        normalizer = (float(np.linalg.det(moms.sigma_sqrt))
                      * log_n ** (d / 2.0) / lattice.det_abs)

    xs = std.apply(pts)
    dens = _phi_rows(xs)
    gaps = np.abs(normalizer * probs - dens)
    best = int(np.argmax(gaps))
    sup_value = float(gaps[best])
    argmax = xs[best].copy()

    radius_sq = -2.0 * math.log(phi_floor * (2.0 * math.pi) ** (d / 2.0))
    if radius_sq > 0:
        radius = math.sqrt(radius_sq)
        seen = {tuple(c) for c in coeffs}
        b_inv = np.linalg.inv(law.model.embedding.basis)
        ks, ys, xs_ball = _lattice_ball(lattice, std, radius)
        ball_coeffs = np.round(ys @ b_inv).astype(np.int64)
        dens_ball = _phi_rows(xs_ball)
        for i in range(ks.shape[0]):
            if tuple(ball_coeffs[i]) in seen:
                continue
            if dens_ball[i] > sup_value:
                sup_value = float(dens_ball[i])
                argmax = xs_ball[i].copy()
    return LLTStatistic(n=law.n, sup_value=sup_value, argmax_point=argmax,
                        normalizer=normalizer)


def lattice_gaussian_law(model: IncrementModel, lattice: LatticeSpec, n: int,
                         moms: MomentSummary | None = None,
                         phi_floor: float = 1e-16) -> SparseLaw:
    """Substitute law whose point masses are the lattice-discretized Gaussian.

    Feeding it to ``llt_statistic`` checks the normalization constants: the
    statistic must come out near zero.
    """
    moms = model_moments(model) if moms is None else moms
    std = Standardization.for_moments(moms, n, use_gamma=False)
    d = model.dim
    if d == 1:
        normalizer = math.sqrt(moms.sigma[0, 0]) * math.sqrt(math.log(n)) / lattice.det_abs
    else:
        normalizer = (float(np.linalg.det(moms.sigma_sqrt))
                      * math.log(n) ** (d / 2.0) / lattice.det_abs)
    radius = math.sqrt(-2.0 * math.log(phi_floor * (2.0 * math.pi) ** (d / 2.0)))
    ks, ys, xs = _lattice_ball(lattice, std, radius)
    vals = _phi_rows(xs) / normalizer
    b_inv = np.linalg.inv(model.embedding.basis)
    coeffs = np.round(ys @ b_inv).astype(np.int64)
    total = float(vals.sum())
    entries = {tuple(int(c) for c in coeffs[i]): float(vals[i] / total)
               for i in range(len(vals)) if vals[i] > 0.0}
    return SparseLaw(entries=entries, pruned_mass=0.0, n=n, dim=d, model=model)


# ---------------------------------------------------------------------------
# random-configuration replication experiment


def _trapezoid(x: np.ndarray, a: float, b: float, w: float) -> np.ndarray:
    return np.clip(np.minimum((x - a) / w, (b - x) / w), 0.0, 1.0)


def _phi_trapezoid_mean(a: float, b: float, w: float) -> float:
    """E[g(Z)] for the trapezoid ramp g and standard Gaussian Z."""
    phi = gaussian_density
    cdf = gaussian_cdf_1d
    core = cdf(b - w) - cdf(a + w)
    up = ((phi([a]) - phi([a + w])) - a * (cdf(a + w) - cdf(a))) / w
    down = (b * (cdf(b) - cdf(b - w)) - (phi([b - w]) - phi([b]))) / w
    return core + up + down


@dataclass(frozen=True)
class BoxFunction:
    """Product of per-axis trapezoid ramps on the standardized scale."""

    a: np.ndarray
    b: np.ndarray
    w: float

    def values(self, x: np.ndarray) -> np.ndarray:
        out = np.ones(x.shape[:-1])
        for k in range(x.shape[-1]):
            out *= _trapezoid(x[..., k], float(self.a[k]), float(self.b[k]), self.w)
        return out

    def gaussian_mean(self) -> float:
        out = 1.0
        for k in range(len(self.a)):
            out *= _phi_trapezoid_mean(float(self.a[k]), float(self.b[k]), self.w)
        return out


def default_test_family(dim: int) -> dict:
    """Bounded test functions: CF grid plus smoothed boxes."""
    spans = [(-1.0, 1.0), (-2.0, 0.0), (0.0, 2.0)]
    boxes = [BoxFunction(a=np.full(dim, a), b=np.full(dim, b), w=0.25)
             for a, b in spans]
    return {"cf_grid": default_cf_grid(dim), "boxes": boxes}


def _chunk_distances(paths, model, u0, std, family) -> np.ndarray:
    n = paths.shape[1]
    pts = paths.astype(float) @ model.embedding.basis
    u0_coeffs, u0_probs = u0.support_and_probs()
    u0_pts = model.embedding.embed_many(u0_coeffs)
    dist = np.zeros(paths.shape[0])

    for t in family["cf_grid"]:
        tp = std.scale_inv @ t
        phase_off = float(std.center @ tp)
        e_t = complex(np.exp(1j * (model.embedded_support @ tp)) @ model.prob_array)
        u0_hat = complex(np.exp(1j * (u0_pts @ tp)) @ u0_probs)
        s = np.exp(1j * (pts @ tp)).sum(axis=1)
        val = np.exp(-1j * phase_off) * (u0_hat + e_t * s) / (n + 1)
        target = math.exp(-0.5 * float(t @ t))
        np.maximum(dist, np.abs(val - target), out=dist)

    for box in family["boxes"]:
        u0_term = float(box.values(std.apply(u0_pts)) @ u0_probs)
        acc = np.zeros(paths.shape[0])
        for off, pa in zip(model.embedded_support, model.prob_array):
            x = (pts + off - std.center) @ std.scale_inv
            acc += pa * box.values(x).sum(axis=1)
        val = (u0_term + acc) / (n + 1)
        np.maximum(dist, np.abs(val - box.gaussian_mean()), out=dist)
    return dist


def random_config_convergence(model: IncrementModel, u0: SparseLaw, n_list,
                              reps: int, eps, base_seed: int = 0,
                              test_family: dict | None = None,
                              use_gamma: bool = False) -> dict:
    """Replication experiment for convergence of the random configuration.

    For each n, simulates ``reps`` independent urn paths, measures each
    realized configuration's distance to the Gaussian over a fixed family of
    bounded test functions, and reports the fraction of replications whose
    distance exceeds each threshold in ``eps``.  The reported distance is a
    lower bound on any full bounded-Lipschitz metric, which suffices for a
    convergence-in-probability trend.

    URNLAB_THREADS caps the worker threads fanned out over path chunks.
    """
    if reps < 1:
        raise InvalidSpec(f"reps must be >= 1, got {reps}")
    eps_list = [float(e) for e in (eps if np.iterable(eps) else [eps])]
    n_list = [int(n) for n in n_list]
    moms = model_moments(model)
    family = default_test_family(model.dim) if test_family is None else test_family
    threads = max(1, int(os.environ.get("URNLAB_THREADS", "1")))

    exceedance = np.zeros((len(n_list), len(eps_list)))
    for i, n in enumerate(n_list):
        std = Standardization.for_moments(moms, n, use_gamma)
        distances = np.empty(reps)

        def work(item):
            start, paths = item
            return start, _chunk_distances(paths, model, u0, std, family)

        chunks = iter_path_chunks(model, u0, n, base_seed, reps)
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(work, chunks))
        else:
            results = [work(item) for item in chunks]
        for start, vals in results:
            distances[start:start + len(vals)] = vals
        for k, e in enumerate(eps_list):
            exceedance[i, k] = float(np.mean(distances > e))
    return {
        "n_list": n_list,
        "eps": eps_list,
        "reps": reps,
        "seed": base_seed,
        "exceedance": exceedance,
    }
