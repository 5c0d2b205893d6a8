"""Polygon spaces with prescribed edge lengths, polygon dimension, and the
directed system of moduli spaces obtained by raising the ambient dimension."""
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
    gram,
    project_to_span,
    reflect,
)
from .construct import (
    BendSite,
    SignPattern,
    bend,
    build_degenerate,
    build_planar,
    enumerate_degenerate_classes,
    find_bend_site,
    raise_to_dimension,
    sample,
)
from .quotient import (
    ModuliPoint,
    align,
    moduli_point,
    o_equivalent,
    orientation_sign,
    phi,
    phi_fiber,
    so_equivalent,
)
from .verify import (
    ExperimentReport,
    verify_chirality,
    verify_degenerate_classes,
    verify_dimension_bound,
    verify_dimension_range,
    verify_fiber_and_surjectivity,
    verify_stabilization,
)

__version__ = "0.1.0"
