"""Constructive realizations of polygons with prescribed edge lengths."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .core import (
    DEFAULT_TOL,
    EdgeLengths,
    FeasibilityClass,
    Polygon,
    PreconditionError,
    ToleranceConfig,
    ValidationError,
    classify_feasibility,
    dimension,
    embed,
    random_rotation,
)

MAX_ENUMERATION_N = 24


def _as_lengths(ell) -> EdgeLengths:
    return ell if isinstance(ell, EdgeLengths) else EdgeLengths(ell)


def _require_interior(ell: EdgeLengths, what: str):
    cls = classify_feasibility(ell)
    if cls is not FeasibilityClass.INTERIOR:
        raise PreconditionError(f"{what} needs edge lengths in the interior of the cone, got {cls}")


@dataclass(frozen=True)
class SignPattern:
    """Directions (+1 / -1) of the edges of a collinear polygon along one line."""

    signs: tuple[int, ...]

    def __post_init__(self):
        signs = tuple(int(s) for s in self.signs)
        if any(s not in (1, -1) for s in signs):
            raise ValidationError(f"sign pattern entries must be +1 or -1, got {self.signs!r}")
        object.__setattr__(self, "signs", signs)

    @classmethod
    def parse(cls, text: str) -> "SignPattern":
        table = {"+": 1, "-": -1}
        try:
            return cls(tuple(table[c] for c in text.strip()))
        except KeyError:
            raise ValidationError(f"sign pattern must be a string of '+' and '-', got {text!r}") from None

    def __str__(self):
        return "".join("+" if s > 0 else "-" for s in self.signs)

    def __len__(self):
        return len(self.signs)

    def negated(self) -> "SignPattern":
        return SignPattern(tuple(-s for s in self.signs))

    def canonical(self) -> "SignPattern":
        """Representative of {pattern, -pattern} whose first sign is +."""
        return self if self.signs[0] > 0 else self.negated()

    def closes(self, ell: EdgeLengths, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
        """True when the signed edge sum vanishes for ``ell``."""
        if len(self.signs) != ell.n:
            return False
        if sum(s * Fraction(x) for s, x in zip(self.signs, ell.lengths)) == 0:
            return True
        signed = math.fsum(s * x for s, x in zip(self.signs, ell.lengths))
        return abs(signed) <= tol.eps_root * ell.total


def _integer_lengths(ell: EdgeLengths) -> list[int]:
    fracs = [Fraction(x) for x in ell.lengths]
    denom = 1
    for f in fracs:
        denom = denom * f.denominator // math.gcd(denom, f.denominator)
    return [int(f * denom) for f in fracs]


def enumerate_degenerate_classes(ell) -> list[SignPattern]:
    """All collinear realizations of ``ell`` up to rotation.

    Returns every sign vector with vanishing signed sum, one representative
    per pair {eps, -eps} (first sign +), in lexicographic order of the
    ``'+'/'-'`` strings.
    """
    ell = _as_lengths(ell)
    n = ell.n
    if n > MAX_ENUMERATION_N:
        raise PreconditionError(
            f"degenerate-class enumeration is exponential; n={n} exceeds the cap {MAX_ENUMERATION_N}"
        )
    ints = _integer_lengths(ell)
    dtype = np.int64 if sum(ints) < 2**62 else object
    sums = np.array([ints[0]], dtype=dtype)
    for a in ints[1:]:
        step = np.array([a, -a], dtype=dtype)
        sums = (sums[:, None] + step[None, :]).ravel()
    hits = np.flatnonzero(sums == 0)
    patterns = []
    for idx in hits:
        idx = int(idx)
        signs = [1]
        for j in range(1, n):
            bit = (idx >> (n - 1 - j)) & 1
            signs.append(-1 if bit else 1)
        patterns.append(SignPattern(tuple(signs)))
    return sorted(patterns, key=lambda p: str(p).replace("+", "0").replace("-", "1"))


def build_degenerate(ell, pattern: SignPattern, d: int = 2,
                     tol: ToleranceConfig = DEFAULT_TOL) -> Polygon:
    """Collinear polygon along the first axis with edge directions ``pattern``."""
    ell = _as_lengths(ell)
    if isinstance(pattern, str):
        pattern = SignPattern.parse(pattern)
    if d < 2:
        raise PreconditionError(f"ambient dimension must be at least 2, got {d}")
    if len(pattern) != ell.n:
        raise ValidationError(f"pattern has {len(pattern)} signs but there are {ell.n} edges")
    if not pattern.closes(ell, tol):
        raise ValidationError(f"pattern {pattern} does not close up for edge lengths {ell.lengths}")
    steps = np.array(pattern.signs[:-1], dtype=float) * ell.as_array()[:-1]
    verts = np.zeros((ell.n - 1, d))
    verts[:, 0] = np.cumsum(steps)
    return Polygon(d, verts, ell).validate(tol)


def _central_angles(lengths: np.ndarray, R: float) -> np.ndarray:
    return 2.0 * np.arcsin(np.minimum(1.0, lengths / (2.0 * R)))


def circumradius(ell, tol: ToleranceConfig = DEFAULT_TOL) -> tuple[float, bool]:
    """Radius of the convex cyclic realization of ``ell``.

    Returns ``(R, center_inside)``.  When the center lies outside the polygon
    it sits beyond the longest edge, whose arc then balances all the others.
    """
    ell = _as_lengths(ell)
    _require_interior(ell, "the cyclic construction")
    L = ell.as_array()
    jmax = int(np.argmax(L))
    others = np.delete(L, jmax)
    lo = L[jmax] / 2.0

    def excess(R):
        return float(np.sum(_central_angles(L, R)) - 2.0 * math.pi)

    def imbalance(R):
        return float(_central_angles(L[jmax:jmax + 1], R)[0] - np.sum(_central_angles(others, R)))

    center_inside = excess(lo) >= 0.0
    func = excess if center_inside else imbalance
    if func(lo) == 0.0:
        return float(lo), center_inside
    hi = ell.total
    for _ in range(2000):
        if func(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise RuntimeError(f"could not bracket the circumradius for {ell.lengths}")
    R = brentq(func, lo, hi, xtol=tol.eps_root * lo, rtol=tol.eps_root, maxiter=500)
    return float(R), center_inside


@functools.lru_cache(maxsize=256)
def _planar_cached(ell: EdgeLengths, tol: ToleranceConfig) -> Polygon:
    R, center_inside = circumradius(ell, tol)
    L = ell.as_array()
    turns = _central_angles(L, R)
    if not center_inside:
        turns[int(np.argmax(L))] *= -1.0
    alpha = np.cumsum(turns)[:-1]
    points = R * np.column_stack([np.cos(alpha), np.sin(alpha)])
    verts = points - np.array([R, 0.0])
    P = Polygon(2, verts, ell)
    bound = tol.eps_align * ell.total
    if not P.length_residual() <= bound:
        raise RuntimeError(
            f"cyclic construction failed to close: residual {P.length_residual():.3e} for {ell.lengths}"
        )
    return P


def build_planar(ell, tol: ToleranceConfig = DEFAULT_TOL) -> Polygon:
    """Convex polygon in R^2 with all vertices on one circle.

    The circumradius is the root of a monotone angle-sum equation, found by
    a bracketing solver to relative width ``tol.eps_root``.
    """
    return _planar_cached(_as_lengths(ell), tol)


@dataclass(frozen=True, eq=False)
class BendSite:
    """A vertex that can be swung out of the span of the others.

    ``line_dir`` is None when both neighbours coincide, in which case the
    hinge degenerates to the single point ``foot``.  ``span_basis`` holds an
    orthonormal basis (rows) of the span of the other vertices.
    """

    index: int
    foot: np.ndarray
    radius: float
    line_dir: Optional[np.ndarray]
    span_basis: np.ndarray


def _hinge(closed: np.ndarray, i: int, tol: ToleranceConfig, perimeter: float):
    """Foot of v_i on the line through its neighbours, and that line's direction."""
    a, v, b = closed[i - 1], closed[i], closed[i + 1]
    ab = b - a
    span = np.linalg.norm(ab)
    if span <= tol.eps_rank * perimeter:
        return a.copy(), None
    direction = ab / span
    foot = a + np.dot(v - a, direction) * direction
    return foot, direction


def _span_basis(vectors: np.ndarray, eps_rank: float) -> np.ndarray:
    if vectors.size == 0:
        return np.zeros((0, vectors.shape[1] if vectors.ndim == 2 else 0))
    _, s, Vt = np.linalg.svd(vectors, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((0, vectors.shape[1]))
    return Vt[s > eps_rank * s[0]]


def _residual(x: np.ndarray, basis: np.ndarray) -> float:
    if basis.shape[0] == 0:
        return float(np.linalg.norm(x))
    return float(np.linalg.norm(x - basis.T @ (basis @ x)))


def _check_bend_preconditions(P: Polygon, tol: ToleranceConfig) -> int:
    k = dimension(P, tol)
    if k < 2:
        raise PreconditionError(f"polygon is {k}-dimensional; bending needs dimension at least 2")
    if k >= P.n - 1:
        raise PreconditionError(
            f"polygon already has the maximal dimension n-1 = {P.n - 1}; no vertex lies in the span of the others"
        )
    if k >= P.ambient_dim:
        raise PreconditionError(
            f"polygon dimension {k} equals the ambient dimension {P.ambient_dim}; no room to bend into"
        )
    return k


def bend_sites(P: Polygon, tol: ToleranceConfig = DEFAULT_TOL) -> list[BendSite]:
    """Every vertex that lies in the span of the others but off its hinge line."""
    _check_bend_preconditions(P, tol)
    closed = P.closed_vertices()
    perimeter = P.edge_lengths.total
    sites = []
    for i in range(1, P.n):
        v = closed[i]
        others = np.delete(P.vertices, i - 1, axis=0)
        basis = _span_basis(others, tol.eps_rank)
        if _residual(v, basis) > tol.eps_rank * np.linalg.norm(v):
            continue
        foot, direction = _hinge(closed, i, tol, perimeter)
        radius = float(np.linalg.norm(v - foot))
        if radius <= tol.eps_rank * perimeter:
            continue
        sites.append(BendSite(i, foot, radius, direction, basis))
    return sites


def find_bend_site(P: Polygon, tol: ToleranceConfig = DEFAULT_TOL) -> BendSite:
    """Smallest index ``i`` with ``v_i`` in the span of the other vertices and off
    the line through ``v_{i-1}`` and ``v_{i+1}``."""
    sites = bend_sites(P, tol)
    if not sites:
        # cannot happen for 2 <= dim < n-1 in exact arithmetic
        raise RuntimeError("no bendable vertex found; polygon is numerically ill-conditioned")
    return sites[0]


def bend(P: Polygon, site: BendSite, u, tol: ToleranceConfig = DEFAULT_TOL) -> Polygon:
    """Replace ``v_i`` by ``c + |v_i - c| u``, raising the dimension by one.

    ``u`` must be a unit vector outside the span of the other vertices and
    orthogonal to the hinge line, otherwise the two edges at ``v_i`` would
    change length.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (P.ambient_dim,):
        raise ValidationError(f"direction must have length {P.ambient_dim}, got shape {u.shape}")
    if abs(np.linalg.norm(u) - 1.0) > tol.eps_rank:
        raise ValidationError(f"direction must be a unit vector, got norm {np.linalg.norm(u):.17g}")
    k = dimension(P, tol)
    if k >= P.ambient_dim:
        raise PreconditionError(
            f"polygon dimension {k} equals the ambient dimension {P.ambient_dim}; no room to bend into"
        )
    if not 1 <= site.index <= P.n - 1:
        raise ValidationError(f"bend index {site.index} out of range 1..{P.n - 1}")
    if _residual(u, site.span_basis) <= tol.eps_rank:
        raise ValidationError("direction lies in the span of the other vertices")
    if site.line_dir is not None and abs(np.dot(u, site.line_dir)) > tol.eps_rank:
        raise ValidationError("direction has a component along the hinge line")
    verts = np.array(P.vertices)
    verts[site.index - 1] = site.foot + site.radius * u
    return Polygon(P.ambient_dim, verts, P.edge_lengths).validate(tol)


def random_complement_direction(basis: np.ndarray, d: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform unit vector in the orthogonal complement of ``span(basis)``."""
    for _ in range(100):
        z = rng.standard_normal(d)
        if basis.shape[0]:
            z = z - basis.T @ (basis @ z)
        norm = np.linalg.norm(z)
        if norm > 1e-6:
            return z / norm
    raise PreconditionError("orthogonal complement is empty")


def raise_to_dimension(ell, k: int, d: int, tol: ToleranceConfig = DEFAULT_TOL,
                       rng_seed=0) -> Polygon:
    """A ``k``-dimensional polygon in R^d obtained by repeatedly bending the
    cyclic planar realization."""
    ell = _as_lengths(ell)
    _require_interior(ell, "raise_to_dimension")
    top = min(d, ell.n - 1)
    if not 2 <= k <= top:
        raise PreconditionError(f"k={k} outside the realizable range 2..{top} (n={ell.n}, d={d})")
    rng = np.random.default_rng(rng_seed)
    P = embed(build_planar(ell, tol), d)
    current = dimension(P, tol)
    while current < k:
        site = find_bend_site(P, tol)
        for _ in range(20):
            u = random_complement_direction(site.span_basis, d, rng)
            Q = bend(P, site, u, tol)
            if dimension(Q, tol) == current + 1:
                break
        else:
            raise RuntimeError(f"bending at vertex {site.index} failed to raise the dimension")
        P, current = Q, current + 1
    return P


def _swing(verts: np.ndarray, rng: np.random.Generator, eps: float, perimeter: float):
    """Rotate one random vertex (in place) about the line through its neighbours.

    The vertex is drawn uniformly among those off their hinge line, by
    rejection.
    """
    m, d = verts.shape
    zero = np.zeros(d)
    for _ in range(8 * m):
        i = int(rng.integers(m))
        a = verts[i - 1] if i > 0 else zero
        b = verts[i + 1] if i < m - 1 else zero
        ab = b - a
        span = math.sqrt(ab @ ab)
        if span <= eps * perimeter:
            direction = None
            foot = a
        else:
            direction = ab / span
            foot = a + ((verts[i] - a) @ direction) * direction
        offset = verts[i] - foot
        radius = math.sqrt(offset @ offset)
        if radius > eps * perimeter:
            break
    else:
        return
    while True:
        u = rng.standard_normal(d)
        if direction is not None:
            u -= (u @ direction) * direction
        norm = math.sqrt(u @ u)
        if norm > 1e-6:
            break
    verts[i] = foot + (radius / norm) * u


def sample(ell, d: int, rng_seed=0, tol: ToleranceConfig = DEFAULT_TOL) -> Polygon:
    """Random polygon in R^d with edge lengths ``ell``.

    Starts from the cyclic planar realization, swings a geometric number of
    random vertices (mean n) about their hinge lines in random directions and
    finishes with a Haar-random rotation.  Not uniform on the polygon space.
    """
    ell = _as_lengths(ell)
    _require_interior(ell, "sample")
    if d < 2:
        raise PreconditionError(f"ambient dimension must be at least 2, got {d}")
    rng = np.random.default_rng(rng_seed)
    verts = np.array(embed(build_planar(ell, tol), d).vertices)
    moves = int(rng.geometric(1.0 / (ell.n + 1))) - 1
    for _ in range(moves):
        _swing(verts, rng, tol.eps_rank, ell.total)
    rotation = random_rotation(d, rng)
    return Polygon(d, verts @ rotation.T, ell).validate(tol)


def sub_seed(seed: int, index: int) -> int:
    """Independent 63-bit seed for trial ``index`` of a run seeded with ``seed``."""
    return int(np.random.SeedSequence([int(seed) & (2**64 - 1), int(index)]).generate_state(1, np.uint64)[0] >> 1)


def random_interior_lengths(n: int, rng: np.random.Generator, low: float = 0.5,
                            high: float = 1.5) -> EdgeLengths:
    """Uniform draw from [low, high]^n rejected until strictly interior."""
    while True:
        ell = EdgeLengths(rng.uniform(low, high, n))
        if classify_feasibility(ell) is FeasibilityClass.INTERIOR:
            return ell


__all__: Sequence[str] = [
    "BendSite",
    "SignPattern",
    "bend",
    "bend_sites",
    "build_degenerate",
    "build_planar",
    "circumradius",
    "enumerate_degenerate_classes",
    "find_bend_site",
    "raise_to_dimension",
    "random_complement_direction",
    "random_interior_lengths",
    "sample",
    "sub_seed",
]
