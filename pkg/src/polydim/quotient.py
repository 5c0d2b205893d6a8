"""Rotation classes of polygons and the maps between ambient dimensions.

Two polygons in R^d are related by an orthogonal map exactly when their Gram
matrices agree.  Within one O(d) class the rotation classes are told apart by
an orientation sign, which only exists for full-dimensional polygons.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from .core import (
    DEFAULT_TOL,
    EdgeLengths,
    Polygon,
    ToleranceConfig,
    ValidationError,
    dimension,
    gram,
)


def _check_compatible(P: Polygon, Q: Polygon):
    if P.edge_lengths != Q.edge_lengths:
        raise ValidationError(
            f"polygons have different edge lengths {P.edge_lengths.lengths} and {Q.edge_lengths.lengths}"
        )
    if P.ambient_dim != Q.ambient_dim:
        raise ValidationError(
            f"polygons live in different ambient dimensions {P.ambient_dim} and {Q.ambient_dim}"
        )


def _gram_close(G: np.ndarray, H: np.ndarray, tol: ToleranceConfig) -> bool:
    scale = max(1.0, float(np.max(np.abs(G))), float(np.max(np.abs(H))))
    return float(np.max(np.abs(G - H))) <= tol.eps_gram * scale


def orientation_pivots(P: Polygon, tol: ToleranceConfig = DEFAULT_TOL) -> list[int]:
    """Greedy 0-based vertex indices forming a basis of the span.

    Index ``j`` is taken when its distance to the span of the already chosen
    vertices exceeds ``eps_rank * sigma_1``.  That distance is a function of
    the Gram matrix alone, so orthogonally related polygons choose the same
    pivots.
    """
    V = P.vertices
    s1 = float(np.linalg.norm(V, 2))
    basis: list[np.ndarray] = []
    pivots: list[int] = []
    for j, v in enumerate(V):
        r = v.copy()
        for q in basis:
            r -= np.dot(q, r) * q
        for q in basis:
            r -= np.dot(q, r) * q
        norm = float(np.linalg.norm(r))
        if norm > tol.eps_rank * s1:
            basis.append(r / norm)
            pivots.append(j)
    return pivots


def orientation_sign(P: Polygon, tol: ToleranceConfig = DEFAULT_TOL) -> Optional[int]:
    """+1 / -1 for full-dimensional polygons, None otherwise."""
    d = P.ambient_dim
    if dimension(P, tol) < d:
        return None
    pivots = orientation_pivots(P, tol)[:d]
    if len(pivots) < d:
        # borderline conditioning: the SVD saw full rank, the greedy scan did not
        scores = np.linalg.norm(P.vertices, axis=1)
        extra = [j for j in np.argsort(-scores, kind="stable") if j not in pivots]
        pivots = sorted(pivots + extra[: d - len(pivots)])
    det = np.linalg.det(P.vertices[pivots])
    return 1 if det > 0 else -1


def o_equivalent(P: Polygon, Q: Polygon, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
    """True when ``Q`` is a rotation or reflection of ``P``."""
    _check_compatible(P, Q)
    return _gram_close(gram(P), gram(Q), tol)


def so_equivalent(P: Polygon, Q: Polygon, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
    """True when ``Q`` is a proper rotation of ``P``."""
    if not o_equivalent(P, Q, tol):
        return False
    if dimension(P, tol) < P.ambient_dim:
        return True
    return orientation_sign(P, tol) == orientation_sign(Q, tol)


def align(P: Polygon, Q: Polygon, proper_only: bool = True,
          tol: ToleranceConfig = DEFAULT_TOL) -> tuple[float, np.ndarray]:
    """Orthogonal Procrustes: the ``T`` minimizing ``||V_P T^T - V_Q||_F``.

    With ``proper_only`` the minimizer is restricted to det(T) = +1 by
    flipping the direction of the smallest singular value.
    """
    _check_compatible(P, Q)
    X, Y = P.vertices, Q.vertices
    U, _, Wt = np.linalg.svd(Y.T @ X)
    if proper_only and np.linalg.det(U) * np.linalg.det(Wt) < 0:
        U[:, -1] *= -1.0
    T = U @ Wt
    residual = float(np.linalg.norm(X @ T.T - Y))
    return residual, T


@dataclass(frozen=True, eq=False)
class ModuliPoint:
    """Canonical description of the rotation class of a polygon in R^d."""

    gram: np.ndarray
    rank: int
    orientation: Optional[int]
    ambient_dim: int
    edge_lengths: EdgeLengths

    def __post_init__(self):
        G = np.array(self.gram, dtype=float)
        G.setflags(write=False)
        object.__setattr__(self, "gram", G)
        if (self.orientation is not None) != (self.rank == self.ambient_dim):
            raise ValidationError("orientation is defined exactly when rank equals the ambient dimension")
        if self.orientation not in (None, 1, -1):
            raise ValidationError(f"orientation must be +1, -1 or null, got {self.orientation!r}")

    def same_as(self, other: "ModuliPoint", tol: ToleranceConfig = DEFAULT_TOL) -> bool:
        return (
            self.ambient_dim == other.ambient_dim
            and self.edge_lengths == other.edge_lengths
            and self.rank == other.rank
            and self.orientation == other.orientation
            and self.gram.shape == other.gram.shape
            and _gram_close(self.gram, other.gram, tol)
        )

    def __eq__(self, other):
        if not isinstance(other, ModuliPoint):
            return NotImplemented
        return self.same_as(other)

    __hash__ = None  # tolerance-based equality is not transitive

    def to_dict(self) -> dict[str, Any]:
        return {
            "edge_lengths": list(self.edge_lengths.lengths),
            "ambient_dim": self.ambient_dim,
            "rank": self.rank,
            "orientation": self.orientation,
            "gram": self.gram.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ModuliPoint":
        try:
            return cls(
                gram=np.array(data["gram"], dtype=float),
                rank=int(data["rank"]),
                orientation=data["orientation"],
                ambient_dim=int(data["ambient_dim"]),
                edge_lengths=EdgeLengths(data["edge_lengths"]),
            )
        except KeyError as exc:
            raise ValidationError(f"moduli point JSON is missing key {exc}") from None


def moduli_point(P: Polygon, tol: ToleranceConfig = DEFAULT_TOL) -> ModuliPoint:
    G = gram(P)
    rank = dimension(P, tol)
    sign = orientation_sign(P, tol) if rank == P.ambient_dim else None
    return ModuliPoint(G, rank, sign, P.ambient_dim, P.edge_lengths)


def phi(mp: ModuliPoint) -> ModuliPoint:
    """Image of a class under the embedding R^d -> R^(d+1)."""
    return ModuliPoint(mp.gram, mp.rank, None, mp.ambient_dim + 1, mp.edge_lengths)


def phi_fiber(image: ModuliPoint, tol: ToleranceConfig = DEFAULT_TOL) -> list[ModuliPoint]:
    """Classes in dimension ``image.ambient_dim - 1`` that map onto ``image``.

    Empty when the image has full rank in its own dimension: such a polygon
    does not fit into the smaller space.
    """
    d = image.ambient_dim - 1
    if image.rank > d:
        return []
    if image.rank < d:
        return [ModuliPoint(image.gram, image.rank, None, d, image.edge_lengths)]
    return [ModuliPoint(image.gram, image.rank, sign, d, image.edge_lengths) for sign in (1, -1)]


def equivalence_matrix(polygons: list[Polygon], tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Boolean matrix of pairwise ``so_equivalent``, computed from cached invariants."""
    points = [moduli_point(P, tol) for P in polygons]
    m = len(points)
    out = np.eye(m, dtype=bool)
    for a in range(m):
        for b in range(a + 1, m):
            same = points[a].same_as(points[b], tol)
            out[a, b] = out[b, a] = same
    return out

