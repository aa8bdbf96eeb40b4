"""Billiards in polygons with holes: first-return map, codings, unfolding and phase-space partition."""

from .billiard import Orbit, OrbitStep, Termination, encode_orbit, first_return, iterate
from .coding import BSymbol, Coding
from .geometry import (
    Edge,
    Grazing,
    Polygon,
    VertexHit,
    hole_min_width,
    parse_polygon,
    ray_cast,
    reflect_direction,
    square_with_hole,
    unit_square,
    validate_polygon,
)
from .partition import (
    CellIndex,
    ComponentAtlas,
    build_atlas,
    check_commutation,
    closed_form_image,
    continuity_bound,
    in_U,
    same_component,
)
from .phase import (
    PhasePoint,
    SeparationScale,
    from_ambient,
    in_F,
    parallel_separation,
    phase_metric,
    tau,
    tau_inverse,
    to_ambient,
)
from .symbolic import (
    PrefixSet,
    alternating_coding,
    approximate_limit_points,
    detect_period,
    prefix_set,
    project_coding,
    recurrence_gaps,
    shift,
)
from .svg import corridor_svg, orbit_svg
from .unfolding import Corridor, Isometry, build_corridor, fold_back, reflect_polygon

__version__ = "0.1.0"

__all__ = [
    "Edge",
    "Grazing",
    "Polygon",
    "VertexHit",
    "hole_min_width",
    "parse_polygon",
    "ray_cast",
    "reflect_direction",
    "square_with_hole",
    "unit_square",
    "validate_polygon",
    "CellIndex",
    "ComponentAtlas",
    "build_atlas",
    "check_commutation",
    "closed_form_image",
    "continuity_bound",
    "in_U",
    "same_component",
    "PhasePoint",
    "SeparationScale",
    "from_ambient",
    "in_F",
    "parallel_separation",
    "phase_metric",
    "tau",
    "tau_inverse",
    "to_ambient",
    "PrefixSet",
    "alternating_coding",
    "approximate_limit_points",
    "detect_period",
    "prefix_set",
    "project_coding",
    "recurrence_gaps",
    "shift",
    "Orbit",
    "OrbitStep",
    "Termination",
    "encode_orbit",
    "first_return",
    "iterate",
    "BSymbol",
    "Coding",
    "corridor_svg",
    "orbit_svg",
    "Corridor",
    "Isometry",
    "build_corridor",
    "fold_back",
    "reflect_polygon",
]
