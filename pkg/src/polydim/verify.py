"""Randomized experiments that check the structural facts about polygon
dimension, chirality and the maps between moduli spaces.

Every experiment is a pure function of its arguments (plus wall-clock time,
which is reported separately in ``elapsed_ms``): trial ``i`` draws its
randomness from ``sub_seed(seed, i)``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from .construct import (
    build_degenerate,
    enumerate_degenerate_classes,
    raise_to_dimension,
    sample,
    sub_seed,
)
from .core import (
    DEFAULT_TOL,
    EdgeLengths,
    FeasibilityClass,
    Polygon,
    PreconditionError,
    ToleranceConfig,
    classify_feasibility,
    dimension,
    embed,
    project_to_span,
    random_rotation,
    reflect,
    singular_values,
)
from .quotient import (
    align,
    equivalence_matrix,
    moduli_point,
    o_equivalent,
    phi,
    phi_fiber,
    so_equivalent,
)

MAX_STABILIZATION_N = 8


@dataclass
class ExperimentReport:
    name: str
    ell: EdgeLengths
    d: Optional[int]
    trials: int
    seed: int
    failures: int = 0
    failure_payloads: list[dict[str, Any]] = field(default_factory=list)
    elapsed_ms: int = 0
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def fail(self, reason: str, **polygons: Polygon):
        payload: dict[str, Any] = {"reason": reason}
        payload.update({k: P.to_dict() for k, P in polygons.items()})
        self.failure_payloads.append(payload)
        self.failures = len(self.failure_payloads)

    def to_dict(self, include_elapsed: bool = True) -> dict[str, Any]:
        out = {
            "name": self.name,
            "ell": list(self.ell.lengths),
            "d": self.d,
            "trials": self.trials,
            "seed": self.seed,
            "failures": self.failures,
            "passed": self.passed,
            "failure_payloads": self.failure_payloads,
            "metadata": self.metadata,
        }
        if include_elapsed:
            out["elapsed_ms"] = self.elapsed_ms
        return out

    def to_json(self, include_elapsed: bool = True) -> str:
        return json.dumps(self.to_dict(include_elapsed), sort_keys=True)

    def csv_row(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerow([
            self.name,
            " ".join(repr(x) for x in self.ell.lengths),
            "" if self.d is None else self.d,
            self.trials,
            self.seed,
            self.failures,
            "pass" if self.passed else "fail",
            self.elapsed_ms,
        ])
        return buf.getvalue()


CSV_HEADER = "name,ell,d,trials,seed,failures,status,elapsed_ms\n"


def _timed(fn: Callable[..., ExperimentReport]):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        report = fn(*args, **kwargs)
        report.elapsed_ms = int(round(1000 * (time.perf_counter() - start)))
        return report

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    wrapper.__wrapped__ = fn
    return wrapper


def _lengths(ell) -> EdgeLengths:
    return ell if isinstance(ell, EdgeLengths) else EdgeLengths(ell)


def _interior(ell: EdgeLengths, name: str):
    cls = classify_feasibility(ell)
    if cls is not FeasibilityClass.INTERIOR:
        raise PreconditionError(f"{name}: edge lengths {list(ell.lengths)} are {cls}, not Interior")


def condition_ratio(P: Polygon, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """sigma_k / sigma_1 where k is the polygon's dimension."""
    s = singular_values(P)
    k = dimension(P, tol)
    return float(s[k - 1] / s[0])


def _well_conditioned(P: Polygon, tol: ToleranceConfig) -> bool:
    return condition_ratio(P, tol) >= tol.cond_floor


@_timed
def verify_dimension_bound(ell, d: int, trials: int, seed: int = 0,
                           tol: ToleranceConfig = DEFAULT_TOL) -> ExperimentReport:
    """No sampled polygon has dimension above min(n - 1, d)."""
    ell = _lengths(ell)
    _interior(ell, "dimension-bound")
    report = ExperimentReport("dimension-bound", ell, d, trials, seed)
    bound = min(ell.n - 1, d)
    seen: dict[int, int] = {}
    for i in range(trials):
        P = sample(ell, d, sub_seed(seed, i), tol)
        k = dimension(P, tol)
        seen[k] = seen.get(k, 0) + 1
        if k > bound:
            report.fail(f"dimension {k} exceeds bound {bound}", polygon=P)
    report.metadata = {"bound": bound, "dimension_counts": {str(k): seen[k] for k in sorted(seen)}}
    return report


@_timed
def verify_dimension_range(ell, d: int, seed: int = 0,
                           tol: ToleranceConfig = DEFAULT_TOL) -> ExperimentReport:
    """Every dimension 2..min(d, n - 1) is realized by the bending construction."""
    ell = _lengths(ell)
    _interior(ell, "dimension-range")
    top = min(d, ell.n - 1)
    ks = list(range(2, top + 1))
    report = ExperimentReport("dimension-range", ell, d, len(ks), seed)
    realized = []
    for k in ks:
        P = raise_to_dimension(ell, k, d, tol, sub_seed(seed, k))
        got = dimension(P, tol)
        if got != k:
            report.fail(f"asked for dimension {k}, got {got}", polygon=P)
        elif P.length_residual() > tol.eps_align * ell.total:
            report.fail("edge lengths not preserved", polygon=P)
        else:
            realized.append(k)
    report.metadata = {"realized": realized}
    return report


@_timed
def verify_chirality(ell, d: int, trials: int, seed: int = 0,
                     tol: ToleranceConfig = DEFAULT_TOL) -> ExperimentReport:
    """A polygon is rotation-equivalent to its mirror image iff it is not
    full-dimensional; the Gram/sign test is cross-checked by Procrustes.

    ``trials`` counts well-conditioned samples; ill-conditioned draws are
    skipped and tallied in the metadata.
    """
    ell = _lengths(ell)
    _interior(ell, "chirality")
    report = ExperimentReport("chirality", ell, d, trials, seed)
    bound = tol.eps_align * ell.total
    excluded = 0
    full = 0
    drawn = 0
    max_draws = 20 * trials + 100
    done = 0
    while done < trials and drawn < max_draws:
        P = sample(ell, d, sub_seed(seed, drawn), tol)
        drawn += 1
        if not _well_conditioned(P, tol):
            excluded += 1
            continue
        done += 1
        M = reflect(P)
        k = dimension(P, tol)
        same = so_equivalent(P, M, tol)
        residual, _ = align(P, M, proper_only=True, tol=tol)
        if k < d:
            if not same:
                report.fail(f"dimension {k} < {d} but mirror image not rotation-equivalent", polygon=P)
            elif residual > bound:
                report.fail(f"dimension {k} < {d} but proper alignment residual {residual:.3e}", polygon=P)
        else:
            full += 1
            if same:
                report.fail(f"full-dimensional polygon equivalent to its mirror image", polygon=P)
            elif residual <= 10 * bound:
                report.fail(f"full-dimensional polygon aligns to its mirror with residual {residual:.3e}", polygon=P)
    if done < trials:
        report.fail(f"only {done} well-conditioned samples in {drawn} draws")
    report.metadata = {"drawn": drawn, "excluded_ill_conditioned": excluded, "full_dimensional": full}
    return report


def _fiber_matches(P: Polygon, tol: ToleranceConfig) -> Optional[str]:
    """Check the fibre of phi over phi([P]) against P and its mirror image."""
    d = P.ambient_dim
    mp = moduli_point(P, tol)
    fiber = phi_fiber(phi(mp), tol)
    mirror = moduli_point(reflect(P), tol)
    if not any(mp.same_as(f, tol) for f in fiber):
        return "class not contained in the fibre over its own image"
    if not any(mirror.same_as(f, tol) for f in fiber):
        return "mirror class not contained in the fibre"
    if not phi(mirror).same_as(phi(mp), tol):
        return "mirror classes have different images"
    expected = 2 if mp.rank == d else 1
    if len(fiber) != expected:
        return f"rank {mp.rank} in R^{d}: fibre has {len(fiber)} points, expected {expected}"
    if expected == 2 and mirror.same_as(mp, tol):
        return "full-dimensional class coincides with its mirror class"
    return None


@_timed
def verify_fiber_and_surjectivity(ell, d: int, trials: int, seed: int = 0,
                                  tol: ToleranceConfig = DEFAULT_TOL) -> ExperimentReport:
    """Preimages of phi_d and fibre sizes.

    (a) every sample in R^(d+1) of dimension <= d has an explicit preimage;
        when d >= n - 1 that must be every sample, otherwise a constructed
        (d+1)-dimensional polygon must have an empty fibre.
    (b) the fibre over phi([P]) for P in R^d has two points iff dim P = d.
    """
    ell = _lengths(ell)
    _interior(ell, "fiber")
    report = ExperimentReport("fiber", ell, d, trials, seed)
    surjective = d >= ell.n - 1
    preimages = 0
    without = 0
    fiber_sizes = {"1": 0, "2": 0}
    for i in range(trials):
        Q = sample(ell, d + 1, sub_seed(seed, 2 * i), tol)
        target = moduli_point(Q, tol)
        if dimension(Q, tol) <= d:
            pre = embed(project_to_span(Q, tol), d)
            if phi(moduli_point(pre, tol)).same_as(target, tol):
                preimages += 1
            else:
                report.fail("projected preimage does not map to the sampled class", polygon=Q)
        else:
            without += 1
            if surjective:
                report.fail(f"dimension {dimension(Q, tol)} sample while d >= n-1", polygon=Q)
            elif phi_fiber(target, tol):
                report.fail("full-rank class has a non-empty fibre", polygon=Q)

        P = sample(ell, d, sub_seed(seed, 2 * i + 1), tol)
        problem = _fiber_matches(P, tol)
        if problem:
            report.fail(problem, polygon=P)
        else:
            fiber_sizes["2" if dimension(P, tol) == d else "1"] += 1

    if d <= ell.n - 1:
        # a full-dimensional polygon in R^d always has a two-point fibre
        W = raise_to_dimension(ell, d, d, tol, sub_seed(seed, 10**6))
        problem = _fiber_matches(W, tol)
        if problem:
            report.fail(problem, polygon=W)
        elif len(phi_fiber(phi(moduli_point(W, tol)), tol)) != 2:
            report.fail("full-dimensional witness does not have a two-point fibre", polygon=W)
        else:
            fiber_sizes["2"] += 1
    if not surjective:
        witness = raise_to_dimension(ell, d + 1, d + 1, tol, sub_seed(seed, 10**6 + 1))
        if phi_fiber(moduli_point(witness, tol), tol):
            report.fail("constructed (d+1)-dimensional polygon has a preimage", polygon=witness)
    report.metadata = {
        "surjective_expected": surjective,
        "preimages_constructed": preimages,
        "samples_without_preimage": without,
        "fiber_sizes": fiber_sizes,
    }
    return report


def _stabilization_set(ell: EdgeLengths, size: int, seed: int, tol: ToleranceConfig) -> list[Polygon]:
    """Polygons in R^n of every dimension, plus rotated and mirrored copies."""
    n = ell.n
    rng = np.random.default_rng(sub_seed(seed, 0))
    polys = [raise_to_dimension(ell, k, n, tol, sub_seed(seed, 1000 + k)) for k in range(2, n)]
    polys = polys[:size]
    i = 0
    while len(polys) < size:
        kind = rng.integers(3)
        if kind == 0 or not polys:
            polys.append(sample(ell, n, sub_seed(seed, 2000 + i), tol))
        else:
            base = polys[int(rng.integers(len(polys)))]
            if kind == 2:
                base = reflect(base)
            polys.append(base.transformed(random_rotation(n, rng)))
        i += 1
    return polys


def _border_stabilization(ell: EdgeLengths, trials: int, seed: int, tol: ToleranceConfig,
                          report: ExperimentReport):
    rng = np.random.default_rng(sub_seed(seed, 0))
    patterns = enumerate_degenerate_classes(ell)
    dims = sorted({2, 3, 4, ell.n, ell.n + 1, ell.n + 2})
    for d in dims:
        polys = []
        for i in range(trials):
            base = build_degenerate(ell, patterns[i % len(patterns)], d, tol)
            polys.append(base.transformed(random_rotation(d, rng)))
        for P in polys:
            if dimension(P, tol) != 1:
                report.fail(f"border polygon of dimension {dimension(P, tol)}", polygon=P)
        mat = equivalence_matrix(polys, tol)
        for a, b in zip(*np.nonzero(~mat)):
            if a < b:
                report.fail(f"border polygons not equivalent in R^{d}", a=polys[a], b=polys[b])
    report.metadata = {"border": True, "classes": len(patterns), "dims_checked": dims}


@_timed
def verify_stabilization(ell, trials: int, seed: int = 0,
                         tol: ToleranceConfig = DEFAULT_TOL) -> ExperimentReport:
    """The rotation-equivalence relation on a fixed polygon set is the same in
    R^n, R^(n+1) and R^(n+2), and strictly coarser in R^n than in R^(n-1)."""
    ell = _lengths(ell)
    cls = classify_feasibility(ell)
    if cls is FeasibilityClass.INFEASIBLE:
        raise PreconditionError(f"stabilization: edge lengths {list(ell.lengths)} are Infeasible")
    if ell.n > MAX_STABILIZATION_N:
        raise PreconditionError(f"stabilization: n={ell.n} exceeds the supported maximum {MAX_STABILIZATION_N}")
    report = ExperimentReport("stabilization", ell, None, trials, seed)
    if cls is FeasibilityClass.BORDER:
        _border_stabilization(ell, max(trials, 2), seed, tol, report)
        return report

    n = ell.n
    polys = _stabilization_set(ell, trials, seed, tol)
    base = equivalence_matrix(polys, tol)
    for extra in (1, 2):
        mat = equivalence_matrix([embed(P, n + extra) for P in polys], tol)
        for a, b in zip(*np.nonzero(mat != base)):
            if a < b:
                report.fail(
                    f"equivalence of pair ({a}, {b}) changes from R^{n} to R^{n + extra}",
                    a=polys[a], b=polys[b],
                )

    # R^(n-1): every polygon fits (dimension <= n-1); equivalence there must
    # imply equivalence in R^n, and any new identification is a mirror pair
    lower = [embed(project_to_span(P, tol), n - 1) for P in polys]
    low = equivalence_matrix(lower, tol)
    newly = 0
    for a, b in zip(*np.nonzero(low != base)):
        if a >= b:
            continue
        if low[a, b]:
            report.fail(f"pair ({a}, {b}) equivalent in R^{n - 1} but not in R^{n}", a=polys[a], b=polys[b])
        elif not (o_equivalent(lower[a], lower[b], tol) and dimension(lower[a], tol) == n - 1):
            report.fail(f"pair ({a}, {b}) newly identified without being a full-dimensional mirror pair",
                        a=polys[a], b=polys[b])
        else:
            newly += 1

    def separated_then_identified(P: Polygon) -> bool:
        M = reflect(P)
        return (not so_equivalent(P, M, tol)) and so_equivalent(embed(P, n), embed(M, n), tol)

    mirror_pairs = 0
    for P in lower:
        if dimension(P, tol) == n - 1 and _well_conditioned(P, tol):
            if separated_then_identified(P):
                mirror_pairs += 1
            else:
                report.fail(f"mirror pair not separated in R^{n - 1} and identified in R^{n}", polygon=P)

    W = raise_to_dimension(ell, n - 1, n - 1, tol, sub_seed(seed, 3000))
    strict = separated_then_identified(W)
    if not strict:
        report.fail(f"mirror pair of an (n-1)-dimensional polygon not separated in R^{n - 1} "
                    f"and identified in R^{n}", polygon=W)
    dims: dict[str, int] = {}
    for P in polys:
        key = str(dimension(P, tol))
        dims[key] = dims.get(key, 0) + 1
    report.metadata = {
        "border": False,
        "ambient_dims": [n - 1, n, n + 1, n + 2],
        "dimension_counts": dict(sorted(dims.items())),
        "equivalent_pairs": int((np.count_nonzero(base) - len(polys)) // 2),
        "pairs_identified_from_below": newly,
        "mirror_pairs_identified": mirror_pairs,
        "strictness_witness": strict,
    }
    return report


@_timed
def verify_degenerate_classes(ell, seed: int = 0,
                              tol: ToleranceConfig = DEFAULT_TOL) -> ExperimentReport:
    """Collinear classes are 1-dimensional and pairwise distinct in R^2..R^4."""
    ell = _lengths(ell)
    patterns = enumerate_degenerate_classes(ell)
    report = ExperimentReport("degenerate", ell, None, len(patterns), seed)
    if tuple(ell.lengths) == (1.0, 1.0, 1.0, 1.0) and len(patterns) != 3:
        report.fail(f"expected 3 collinear classes for the equilateral 4-gon, found {len(patterns)}")
    for d in (2, 3, 4):
        polys = [build_degenerate(ell, p, d, tol) for p in patterns]
        for P in polys:
            if dimension(P, tol) != 1:
                report.fail(f"collinear polygon of dimension {dimension(P, tol)}", polygon=P)
        mat = equivalence_matrix(polys, tol)
        for a, b in zip(*np.nonzero(mat)):
            if a < b:
                report.fail(f"classes {patterns[a]} and {patterns[b]} equivalent in R^{d}",
                            a=polys[a], b=polys[b])
    report.metadata = {"classes": [str(p) for p in patterns], "count": len(patterns)}
    return report


EXPERIMENTS = {
    "dimension-bound": verify_dimension_bound,
    "dimension-range": verify_dimension_range,
    "chirality": verify_chirality,
    "fiber": verify_fiber_and_surjectivity,
    "stabilization": verify_stabilization,
    "degenerate": verify_degenerate_classes,
}
