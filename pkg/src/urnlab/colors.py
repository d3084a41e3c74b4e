"""Color index sets, increment distributions, and their lattice structure.

Colors are integer coefficient vectors in a generating basis; a separate
embedding matrix maps them into R^d.  Keeping coefficients integral makes
color identity exact even for bases with irrational entries (the triangular
lattice), while all statistics are computed on the embedded points.
"""

import json
import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import (
    InvalidSpec,
    NotLatticeValued,
    RankDeficient,
    SigmaNotPositiveDefinite,
)

# A color: fixed-length tuple of signed integer coefficients.
ColorPoint = tuple[int, ...]

_PROB_SUM_TOL = 1e-12
_EIG_TOL = 1e-10
_LATTICE_TOL = 1e-9
_SPAN_DENOM_BOUND = 10**6


def as_color(coeffs) -> ColorPoint:
    """Normalize an iterable of integers to a ColorPoint tuple."""
    out = tuple(int(c) for c in coeffs)
    for c, raw in zip(out, coeffs):
        if c != raw:
            raise InvalidSpec(f"non-integer color coefficient {raw!r}")
    return out


@dataclass(frozen=True)
class Embedding:
    """Generating basis for the color set; rows are the generators in R^d."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise InvalidSpec(f"embedding basis must be square, got shape {b.shape}")
        if abs(np.linalg.det(b)) <= 1e-12:
            raise InvalidSpec("embedding basis is singular")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "Embedding":
        return cls(np.eye(dim))

    def embed(self, coeffs) -> np.ndarray:
        """Map one coefficient vector to its point in R^d."""
        return np.asarray(coeffs, dtype=float) @ self.basis

    def embed_many(self, coeff_matrix: np.ndarray) -> np.ndarray:
        """Map a (k, d) array of coefficient vectors to embedded points."""
        return np.asarray(coeff_matrix, dtype=float) @ self.basis


@dataclass(frozen=True)
class IncrementModel:
    """Finite-support step distribution of the driving walk.

    ``atoms`` holds (coefficient vector, probability) pairs; probabilities
    must sum to one and the coefficient vectors must be distinct.
    """

    dim: int
    atoms: tuple[tuple[ColorPoint, float], ...]
    embedding: Embedding
    name: str = ""

    def __post_init__(self):
        atoms = tuple((as_color(c), float(p)) for c, p in self.atoms)
        if not atoms:
            raise InvalidSpec("increment support must be non-empty")
        if self.embedding.dim != self.dim:
            raise InvalidSpec("embedding dimension does not match model dimension")
        seen = set()
        for c, p in atoms:
            if len(c) != self.dim:
                raise InvalidSpec(f"atom {c} has wrong dimension (expected {self.dim})")
            if not (0.0 < p <= 1.0):
                raise InvalidSpec(f"atom probability {p} outside (0, 1]")
            if c in seen:
                raise InvalidSpec(f"duplicate atom {c}")
            seen.add(c)
        total = math.fsum(p for _, p in atoms)
        if abs(total - 1.0) > _PROB_SUM_TOL:
            raise InvalidSpec(f"atom probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "atoms", atoms)

    @cached_property
    def coeff_array(self) -> np.ndarray:
        """(k, d) int64 array of atom coefficient vectors."""
        arr = np.array([c for c, _ in self.atoms], dtype=np.int64)
        arr.setflags(write=False)
        return arr

    @cached_property
    def prob_array(self) -> np.ndarray:
        arr = np.array([p for _, p in self.atoms], dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def embedded_support(self) -> np.ndarray:
        """(k, d) array of atom locations in R^d."""
        arr = self.embedding.embed_many(self.coeff_array)
        arr.setflags(write=False)
        return arr

    def has_zero_atom(self) -> bool:
        return (0,) * self.dim in {c for c, _ in self.atoms}


@dataclass(frozen=True)
class MomentSummary:
    """Mean vector, second-moment matrix, and its positive-definite root."""

    mu: np.ndarray
    sigma: np.ndarray
    sigma_sqrt: np.ndarray

    def sigma_inv_sqrt(self) -> np.ndarray:
        return np.linalg.inv(self.sigma_sqrt)


@dataclass(frozen=True)
class LatticeSpec:
    """Affine lattice offset + basis carrying a variable's support.

    ``det_abs`` is the covolume: the span h in one dimension, |det| of the
    minimal-lattice basis in higher dimensions.
    """

    dim: int
    offset: np.ndarray
    basis: np.ndarray
    det_abs: float

    def __post_init__(self):
        off = np.array(self.offset, dtype=float).reshape(self.dim)
        b = np.array(self.basis, dtype=float).reshape(self.dim, self.dim)
        d = abs(np.linalg.det(b))
        if abs(d - self.det_abs) > 1e-10 * max(1.0, d):
            raise InvalidSpec(f"det_abs {self.det_abs} inconsistent with basis (|det|={d})")
        off.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "offset", off)
        object.__setattr__(self, "basis", b)

    def contains(self, points: np.ndarray, tol: float = _LATTICE_TOL) -> np.ndarray:
        """Boolean mask: which embedded points lie on offset + Z-span(basis)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        k = (pts - self.offset) @ np.linalg.inv(self.basis)
        return np.max(np.abs(k - np.round(k)), axis=1) <= tol

    def integer_coords(self, points: np.ndarray) -> np.ndarray:
        """Nearest integer lattice coordinates of embedded points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        k = (pts - self.offset) @ np.linalg.inv(self.basis)
        return np.round(k).astype(np.int64)


def moments(model: IncrementModel) -> MomentSummary:
    """Mean and second-moment matrix E[X^T X] of the embedded increment.

    Raises SigmaNotPositiveDefinite when the second-moment matrix has an
    eigenvalue at or below 1e-10: such degenerate walks are unsupported.
    """
    pts = model.embedded_support
    p = model.prob_array
    mu = p @ pts
    sigma = (pts * p[:, None]).T @ pts
    sigma = 0.5 * (sigma + sigma.T)
    w, v = np.linalg.eigh(sigma)
    if np.min(w) <= _EIG_TOL:
        raise SigmaNotPositiveDefinite(
            f"second-moment matrix eigenvalues {w} not all > {_EIG_TOL}")
    sigma_sqrt = (v * np.sqrt(w)) @ v.T
    return MomentSummary(mu=mu, sigma=sigma, sigma_sqrt=sigma_sqrt)


def mgf(model: IncrementModel, lam) -> float:
    """Moment generating function of the embedded increment at ``lam``."""
    lam = np.asarray(lam, dtype=float).reshape(model.dim)
    return float(np.exp(model.embedded_support @ lam) @ model.prob_array)


def cf(model: IncrementModel, t) -> complex:
    """Characteristic function of the embedded increment at ``t``."""
    t = np.asarray(t, dtype=float).reshape(model.dim)
    return complex(np.exp(1j * (model.embedded_support @ t)) @ model.prob_array)


def _rational_gcd(values: list[Fraction]) -> Fraction:
    nums = [f.numerator for f in values]
    dens = [f.denominator for f in values]
    lcm = 1
    for d in dens:
        lcm = lcm * d // math.gcd(lcm, d)
    g = 0
    for f in values:
        g = math.gcd(g, f.numerator * (lcm // f.denominator))
    return Fraction(g, lcm)


def detect_span_1d(support, include_zero: bool = False) -> LatticeSpec:
    """Span detection for a one-dimensional lattice variable.

    Finds the largest h > 0 with support contained in a + hZ.  Differences of
    support values are reconstructed as rationals with denominators up to
    10^6, which covers small-rational desk-scale inputs exactly.

    ``include_zero`` adjoins 0 to the support first, which models the
    Bernoulli-thinned increment whose lattice governs the sampled color.
    """
    vals = sorted({float(x) for x in support})
    if include_zero:
        vals = sorted(set(vals) | {0.0})
    if not vals:
        raise NotLatticeValued("empty support")
    if len(vals) == 1:
        raise NotLatticeValued(
            f"support {{{vals[0]}}} is a single point; its span is undefined")
    base = vals[0]
    diffs = []
    for x in vals[1:]:
        frac = Fraction(x - base).limit_denominator(_SPAN_DENOM_BOUND)
        if abs(float(frac) - (x - base)) > _LATTICE_TOL:
            raise NotLatticeValued(
                f"difference {x - base} has no small-denominator rational form")
        diffs.append(frac)
    h = float(_rational_gcd(diffs))
    if h <= 0:
        raise NotLatticeValued("support differences have zero span")
    a = base - h * math.floor(base / h)
    if abs(a - h) < _LATTICE_TOL:
        a = 0.0
    for x in vals:
        if abs((x - a) / h - round((x - a) / h)) > _LATTICE_TOL:
            raise NotLatticeValued(f"support point {x} off the lattice {a} + {h}Z")
    return LatticeSpec(dim=1, offset=np.array([a]), basis=np.array([[h]]), det_abs=h)


def hermite_normal_form(rows) -> tuple[np.ndarray, int]:
    """Row-style Hermite normal form of the integer row span.

    Returns (H, rank): H has ``rank`` nonzero rows, pivots in increasing
    columns with positive pivot entries, and entries above each pivot reduced
    into [0, pivot).  Exact integer arithmetic throughout.
    """
    work = [list(map(int, r)) for r in np.atleast_2d(np.asarray(rows, dtype=object))]
    if not work:
        return np.zeros((0, 0), dtype=np.int64), 0
    ncols = len(work[0])
    pivots: list[list[int]] = []
    for col in range(ncols):
        live = [r for r in work if r[col] != 0]
        if not live:
            continue
        while len(live) > 1:
            live.sort(key=lambda r: abs(r[col]))
            base = live[0]
            for r in live[1:]:
                q = r[col] // base[col]
                for i in range(ncols):
                    r[i] -= q * base[i]
            live = [r for r in live if r[col] != 0]
        pivot = live[0]
        if pivot[col] < 0:
            pivot = [-x for x in pivot]
        work = [r for r in work if any(r) and r is not live[0]]
        pivots.append(pivot)
    # reduce entries above each pivot into [0, pivot)
    for j in range(len(pivots)):
        pcol = next(i for i, x in enumerate(pivots[j]) if x != 0)
        for i in range(j):
            q = pivots[i][pcol] // pivots[j][pcol]
            if q:
                for k in range(ncols):
                    pivots[i][k] -= q * pivots[j][k]
    H = np.array(pivots, dtype=np.int64) if pivots else np.zeros((0, ncols), np.int64)
    return H, len(pivots)


def detect_minimal_lattice(model: IncrementModel, include_zero: bool = False) -> LatticeSpec:
    """Minimal lattice carrying the increment (d >= 2).

    Works in exact coefficient coordinates: the Hermite normal form of the
    integer span of support differences gives a canonical basis, which is
    then mapped through the embedding.  The offset is the lexicographically
    smallest support point.
    """
    if model.dim < 2:
        raise InvalidSpec("detect_minimal_lattice requires dimension >= 2; "
                          "use detect_span_1d for scalar models")
    support = [c for c, _ in model.atoms]
    if include_zero:
        zero = (0,) * model.dim
        if zero not in support:
            support = support + [zero]
    support = sorted(support)
    v0 = support[0]
    diffs = [tuple(c - z for c, z in zip(v, v0)) for v in support[1:]]
    if not diffs:
        raise RankDeficient("single-point support spans no lattice")
    H, rank = hermite_normal_form(diffs)
    if rank < model.dim:
        raise RankDeficient(
            f"support differences span rank {rank} < {model.dim}")
    basis = H.astype(float) @ model.embedding.basis
    det_h = 1
    for j in range(model.dim):
        det_h *= H[j][np.flatnonzero(H[j])[0]]
    det_abs = abs(int(det_h)) * abs(np.linalg.det(model.embedding.basis))
    return LatticeSpec(dim=model.dim, offset=model.embedding.embed(v0),
                       basis=basis, det_abs=det_abs)


def thinned_lattice(model: IncrementModel) -> LatticeSpec:
    """Lattice of the Bernoulli-thinned increment (zero atom adjoined)."""
    if model.dim == 1:
        return detect_span_1d(model.embedded_support[:, 0], include_zero=True)
    return detect_minimal_lattice(model, include_zero=True)


# ---------------------------------------------------------------------------
# builders


def right_shift_model() -> IncrementModel:
    """Deterministic one-step-right walk on Z."""
    return IncrementModel(dim=1, atoms=(((1,), 1.0),),
                          embedding=Embedding.identity(1), name="right-shift")


def ssrw_model(dim: int) -> IncrementModel:
    """Simple symmetric walk on Z^d: uniform on the 2d unit steps."""
    if dim < 1:
        raise InvalidSpec(f"ssrw dimension must be >= 1, got {dim}")
    atoms = []
    for i in range(dim):
        for sign in (1, -1):
            c = [0] * dim
            c[i] = sign
            atoms.append((tuple(c), 1.0 / (2 * dim)))
    return IncrementModel(dim=dim, atoms=tuple(atoms),
                          embedding=Embedding.identity(dim), name=f"ssrw{dim}")


def triangular_model() -> IncrementModel:
    """Uniform step on the six unit vectors of the planar triangular lattice.

    Generators (1, 0) and (1/2, sqrt(3)/2); the six steps are the integer
    coefficient pairs whose embeddings are the unit vectors at 60-degree
    spacing.
    """
    basis = np.array([[1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]])
    coeffs = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)]
    atoms = tuple((c, 1.0 / 6.0) for c in coeffs)
    return IncrementModel(dim=2, atoms=atoms, embedding=Embedding(basis),
                          name="triangular")


def custom_model(atoms, embedding: Embedding | None = None,
                 name: str = "custom") -> IncrementModel:
    """Model from explicit (coeffs, prob) atoms; identity embedding default."""
    atoms = tuple((as_color(c), float(p)) for c, p in atoms)
    if not atoms:
        raise InvalidSpec("custom model needs at least one atom")
    dim = len(atoms[0][0])
    if embedding is None:
        embedding = Embedding.identity(dim)
    return IncrementModel(dim=dim, atoms=atoms, embedding=embedding, name=name)


def _parse_prob(value) -> float:
    if isinstance(value, str):
        try:
            return float(Decimal(value))
        except InvalidOperation as exc:
            raise InvalidSpec(f"bad probability string {value!r}") from exc
    if isinstance(value, (int, float)):
        return float(value)
    raise InvalidSpec(f"bad probability {value!r}")


def model_from_json(obj: dict, name: str = "file") -> IncrementModel:
    """Model from the JSON schema {dim, embedding?, atoms:[{coeffs, prob}]}.

    Probabilities may be decimal strings, which are parsed exactly before
    rounding once to double precision.
    """
    if not isinstance(obj, dict):
        raise InvalidSpec("model JSON must be an object")
    try:
        dim = int(obj["dim"])
        raw_atoms = obj["atoms"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidSpec(f"model JSON missing/invalid field: {exc}") from exc
    if dim < 1:
        raise InvalidSpec(f"model dimension must be >= 1, got {dim}")
    embedding = (Embedding(np.array(obj["embedding"], dtype=float))
                 if "embedding" in obj else Embedding.identity(dim))
    atoms = []
    for entry in raw_atoms:
        try:
            atoms.append((as_color(entry["coeffs"]), _parse_prob(entry["prob"])))
        except (KeyError, TypeError) as exc:
            raise InvalidSpec(f"bad atom entry {entry!r}") from exc
    return IncrementModel(dim=dim, atoms=tuple(atoms), embedding=embedding, name=name)


def model_from_file(path: str) -> IncrementModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidSpec(f"model file {path} is not valid JSON: {exc}") from exc
    return model_from_json(obj, name=f"file:{path}")


_BUILDERS = {
    "right-shift": right_shift_model,
    "right_shift": right_shift_model,
    "triangular": triangular_model,
}


def build_model(spec: str) -> IncrementModel:
    """Model from a CLI-style name: ssrw<d>, right-shift, triangular, file:<path>."""
    spec = spec.strip()
    if spec in _BUILDERS:
        return _BUILDERS[spec]()
    if spec.startswith("ssrw"):
        try:
            return ssrw_model(int(spec[4:]))
        except ValueError as exc:
            raise InvalidSpec(f"bad ssrw dimension in {spec!r}") from exc
    if spec.startswith("file:"):
        return model_from_file(spec[5:])
    raise InvalidSpec(f"unknown model spec {spec!r}")
