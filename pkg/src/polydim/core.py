"""Edge-length vectors, polygons, the Gram invariant and embeddings.

A polygon with ``n`` edges in R^d is stored as its ``n - 1`` free vertices
``v_1 .. v_{n-1}``; the closing vertex ``v_0 = v_n`` is the origin and is never
stored.  Vertices are kept as the rows of an ``(n - 1, d)`` array.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np


class ValidationError(ValueError):
    """Malformed input data (edge lengths, polygons, JSON payloads)."""


class PreconditionError(ValueError):
    """An operation was called outside the domain where it is defined."""


@dataclass(frozen=True)
class ToleranceConfig:
    """Named numerical thresholds shared by every module.

    eps_rank   relative singular-value cutoff for numerical rank
    eps_gram   relative tolerance for Gram-entry comparison
    eps_align  alignment/closure residual, relative to the perimeter
    eps_root   relative bracket width for root finding
    cond_floor minimum sigma_k / sigma_1 for a sample to count as well-conditioned
    """

    eps_rank: float = 1e-8
    eps_gram: float = 1e-7
    eps_align: float = 1e-6
    eps_root: float = 1e-12
    cond_floor: float = 1e-3

    def __post_init__(self):
        for name in ("eps_rank", "eps_gram", "eps_align", "eps_root", "cond_floor"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be a positive finite number, got {value!r}")
        if not self.eps_root < self.eps_rank:
            raise ValidationError("eps_root must be smaller than eps_rank")


DEFAULT_TOL = ToleranceConfig()


@dataclass(frozen=True)
class EdgeLengths:
    lengths: tuple[float, ...]

    def __init__(self, lengths: Sequence[float]):
        try:
            values = tuple(float(x) for x in lengths)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"edge lengths must be numbers: {exc}") from None
        if len(values) < 3:
            raise ValidationError(f"need at least 3 edge lengths, got {len(values)}")
        for x in values:
            if not (math.isfinite(x) and x > 0):
                raise ValidationError(f"edge lengths must be positive and finite, got {x!r}")
        object.__setattr__(self, "lengths", values)

    @property
    def n(self) -> int:
        return len(self.lengths)

    @property
    def total(self) -> float:
        return math.fsum(self.lengths)

    def as_array(self) -> np.ndarray:
        return np.array(self.lengths, dtype=float)

    def scaled(self, c: float) -> "EdgeLengths":
        return EdgeLengths([c * x for x in self.lengths])

    def __iter__(self):
        return iter(self.lengths)

    def __len__(self):
        return len(self.lengths)


class FeasibilityClass(enum.Enum):
    INFEASIBLE = "Infeasible"
    BORDER = "Border"
    INTERIOR = "Interior"

    def __str__(self):
        return self.value


def classify_feasibility(ell: EdgeLengths) -> FeasibilityClass:
    """Place ``ell`` relative to the cone of realizable edge-length vectors.

    Comparisons are exact on the given doubles.  Only the longest edge can
    violate ``l_i <= sum_{j != i} l_j``, i.e. ``2 * l_max <= sum(l)``.
    """
    if not isinstance(ell, EdgeLengths):
        ell = EdgeLengths(ell)
    largest = max(ell.lengths)
    total = math.fsum(ell.lengths)
    margin = total - 2.0 * largest
    if abs(margin) <= 4.0 * math.ulp(total):
        exact = sum(Fraction(x) for x in ell.lengths) - 2 * Fraction(largest)
        sign = (exact > 0) - (exact < 0)
    else:
        sign = 1 if margin > 0 else -1
    if sign < 0:
        return FeasibilityClass.INFEASIBLE
    if sign == 0:
        return FeasibilityClass.BORDER
    return FeasibilityClass.INTERIOR


def numerical_rank(matrix: np.ndarray, eps_rank: float) -> int:
    """Count singular values above ``eps_rank * sigma_1``."""
    s = np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > eps_rank * s[0]))


@dataclass(frozen=True, eq=False)
class Polygon:
    """A closed chain of ``n`` edges from the origin back to the origin in R^d."""

    ambient_dim: int
    vertices: np.ndarray
    edge_lengths: EdgeLengths

    def __post_init__(self):
        if not isinstance(self.edge_lengths, EdgeLengths):
            object.__setattr__(self, "edge_lengths", EdgeLengths(self.edge_lengths))
        d = int(self.ambient_dim)
        if d < 2:
            raise ValidationError(f"ambient dimension must be at least 2, got {d}")
        verts = np.array(self.vertices, dtype=float)
        m = self.edge_lengths.n - 1
        if verts.shape != (m, d):
            raise ValidationError(
                f"expected {m} vertices of dimension {d}, got array of shape {verts.shape}"
            )
        if not np.all(np.isfinite(verts)):
            raise ValidationError("vertex coordinates must be finite")
        verts.setflags(write=False)
        object.__setattr__(self, "ambient_dim", d)
        object.__setattr__(self, "vertices", verts)

    @property
    def n(self) -> int:
        return self.edge_lengths.n

    def closed_vertices(self) -> np.ndarray:
        """Vertices ``v_0 .. v_n`` including both copies of the origin."""
        zero = np.zeros((1, self.ambient_dim))
        return np.vstack([zero, self.vertices, zero])

    def edge_vectors(self) -> np.ndarray:
        return np.diff(self.closed_vertices(), axis=0)

    def realized_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.edge_vectors(), axis=1)

    def length_residual(self) -> float:
        """Largest absolute deviation of an edge from its prescribed length."""
        return float(np.max(np.abs(self.realized_lengths() - self.edge_lengths.as_array())))

    def validate(self, tol: ToleranceConfig = DEFAULT_TOL) -> "Polygon":
        bound = tol.eps_align * self.edge_lengths.total
        err = self.length_residual()
        if not err <= bound:
            raise ValidationError(
                f"edge lengths violated by {err:.3e} (allowed {bound:.3e})"
            )
        return self

    def transformed(self, T: np.ndarray) -> "Polygon":
        """Apply the linear map ``T`` (d x d) to every vertex."""
        return Polygon(self.ambient_dim, self.vertices @ np.asarray(T).T, self.edge_lengths)

    def to_dict(self) -> dict[str, Any]:
        return {
            "edge_lengths": list(self.edge_lengths.lengths),
            "ambient_dim": self.ambient_dim,
            "vertices": self.vertices.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict[str, Any], tol: ToleranceConfig = DEFAULT_TOL) -> "Polygon":
        try:
            ell = EdgeLengths(data["edge_lengths"])
            d = data["ambient_dim"]
            verts = data["vertices"]
        except KeyError as exc:
            raise ValidationError(f"polygon JSON is missing key {exc}") from None
        if not isinstance(d, int) or isinstance(d, bool):
            raise ValidationError(f"ambient_dim must be an integer, got {d!r}")
        if len(verts) != ell.n - 1 or any(len(v) != d for v in verts):
            raise ValidationError(f"expected {ell.n - 1} vertex arrays of length {d}")
        try:
            arr = np.array(verts, dtype=float).reshape(ell.n - 1, d)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"bad vertex coordinates: {exc}") from None
        return cls(d, arr, ell).validate(tol)

    @classmethod
    def from_json(cls, text: str, tol: ToleranceConfig = DEFAULT_TOL) -> "Polygon":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ValidationError("polygon JSON must be an object")
        return cls.from_dict(data, tol)


def dimension(P: Polygon, tol: ToleranceConfig = DEFAULT_TOL) -> int:
    """Dimension of the linear span of the vertices (numerical rank)."""
    return numerical_rank(P.vertices, tol.eps_rank)


def singular_values(P: Polygon) -> np.ndarray:
    return np.linalg.svd(P.vertices, compute_uv=False)


def gram(P: Polygon) -> np.ndarray:
    """Matrix of vertex inner products ``G[i, j] = <v_i, v_j>``."""
    G = P.vertices @ P.vertices.T
    return 0.5 * (G + G.T)


def embed(P: Polygon, d_target: int) -> Polygon:
    """Zero-pad every vertex into R^d_target."""
    if d_target < P.ambient_dim:
        raise PreconditionError(
            f"cannot embed a polygon in R^{P.ambient_dim} into R^{d_target}"
        )
    if d_target == P.ambient_dim:
        return P
    pad = np.zeros((P.n - 1, d_target - P.ambient_dim))
    return Polygon(d_target, np.hstack([P.vertices, pad]), P.edge_lengths)


def project_to_span(P: Polygon, tol: ToleranceConfig = DEFAULT_TOL) -> Polygon:
    """Rewrite ``P`` in an orthonormal basis of its own span.

    The result lives in R^k with ``k = dimension(P)``, or in R^2 (zero padded)
    when the polygon is collinear.
    """
    U, s, _ = np.linalg.svd(P.vertices, full_matrices=False)
    k = int(np.count_nonzero(s > tol.eps_rank * s[0])) if s[0] > 0 else 0
    coords = U[:, :k] * s[:k]
    target = max(2, k)
    if k < target:
        coords = np.hstack([coords, np.zeros((P.n - 1, target - k))])
    return Polygon(target, coords, P.edge_lengths)


def reflect(P: Polygon) -> Polygon:
    """Mirror ``P`` through the hyperplane orthogonal to the last axis."""
    verts = np.array(P.vertices)
    verts[:, -1] *= -1.0
    return Polygon(P.ambient_dim, verts, P.edge_lengths)


def random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed element of SO(d)."""
    Z = rng.standard_normal((d, d))
    Q, R = np.linalg.qr(Z)
    Q = Q * np.where(np.diag(R) < 0, -1.0, 1.0)
    if np.linalg.det(Q) < 0:
        Q[:, 0] *= -1.0
    return Q
