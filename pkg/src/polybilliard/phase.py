"""Boundary phase space: edge-local (offset, theta) chart, metric and the translation map.

A phase point sits on the open edge ``edge`` at distance ``offset`` from the
edge's start (its left endpoint, with the table on the left) and points into
the table at angle ``theta`` from the edge direction, ``0 < theta < pi``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .geometry import GeometryError, Point, Polygon, cross

ANGLE_TOL = 1e-12
PARALLEL_TOL = 1e-12


class PhaseError(ValueError):
    pass


class DifferentEdges(PhaseError):
    pass


class NotParallel(PhaseError):
    pass


class OutsideF(PhaseError):
    """The left translate of the phase point leaves its edge."""


class OutsideEdge(PhaseError):
    pass


@dataclass(frozen=True)
class PhasePoint:
    edge: str
    offset: float
    theta: float

    def __post_init__(self):
        if not ANGLE_TOL < self.theta < math.pi - ANGLE_TOL:
            raise PhaseError(f"theta={self.theta!r} not strictly inside (0, pi)")
        if not self.offset > 0:
            raise OutsideEdge(f"offset={self.offset!r} not positive")

    def __str__(self) -> str:
        return format_phase_point(self)


@dataclass(frozen=True)
class SeparationScale:
    """Perpendicular distance ``L`` by which the translation map shifts trajectories."""

    L: float

    def __post_init__(self):
        if not self.L > 0:
            raise PhaseError(f"L must be positive, got {self.L!r}")

    def check(self, polygon: Polygon) -> "SeparationScale":
        if self.L >= float(polygon.lengths.max()):
            raise PhaseError("L at least the longest edge: the translation domain is empty")
        return self

    def shift(self, theta: float) -> float:
        return self.L / math.sin(theta)


def check_on_edge(p: PhasePoint, polygon: Polygon) -> PhasePoint:
    length = polygon.edge(p.edge).length
    if not p.offset < length:
        raise OutsideEdge(f"offset {p.offset!r} beyond edge {p.edge!r} of length {length!r}")
    return p


def phase_metric(p: PhasePoint, q: PhasePoint) -> float:
    """Sum of offset and angle differences, defined on a single edge."""
    if p.edge != q.edge:
        raise DifferentEdges(f"{p.edge!r} != {q.edge!r}")
    return abs(p.offset - q.offset) + abs(p.theta - q.theta)


def parallel_separation(p: PhasePoint, q: PhasePoint) -> float:
    """Perpendicular distance between the trajectories of two parallel phase points."""
    if p.edge != q.edge:
        raise DifferentEdges(f"{p.edge!r} != {q.edge!r}")
    if abs(p.theta - q.theta) >= PARALLEL_TOL:
        raise NotParallel(f"theta {p.theta!r} vs {q.theta!r}")
    return math.sin(p.theta) * abs(p.offset - q.offset)


def in_F(p: PhasePoint, scale: SeparationScale) -> bool:
    # the translate cannot pass the right end of the edge since L > 0
    return p.offset - scale.shift(p.theta) > 0


def tau(p: PhasePoint, scale: SeparationScale) -> PhasePoint:
    """Translate ``p`` to the left along its edge by ``L / sin(theta)``."""
    x = p.offset - scale.shift(p.theta)
    if not x > 0:
        raise OutsideF(f"{p} translated to offset {x!r}")
    return PhasePoint(p.edge, x, p.theta)


def tau_inverse(p: PhasePoint, scale: SeparationScale, polygon: Polygon) -> PhasePoint:
    x = p.offset + scale.shift(p.theta)
    length = polygon.edge(p.edge).length
    if not x < length:
        raise OutsideEdge(f"{p} translated to offset {x!r} past edge length {length!r}")
    return PhasePoint(p.edge, x, p.theta)


def to_ambient(p: PhasePoint, polygon: Polygon) -> tuple[Point, Point]:
    """Base point and unit direction of ``p`` in the plane."""
    e = polygon.edge(p.edge)
    ux, uy = e.unit
    c, s = math.cos(p.theta), math.sin(p.theta)
    base = (e.start[0] + p.offset * ux, e.start[1] + p.offset * uy)
    return base, (c * ux - s * uy, s * ux + c * uy)


def from_ambient(point: Point, direction: Point, polygon: Polygon, edge: str | None = None) -> PhasePoint:
    """Inverse chart of :func:`to_ambient`.

    Without ``edge`` the nearest edge to ``point`` is used.
    """
    if edge is None:
        from .geometry import _point_segment_distance

        dists = [_point_segment_distance(point, e.start, e.end) for e in polygon.edges]
        k = min(range(len(dists)), key=dists.__getitem__)
        if dists[k] > 1e3 * polygon.vertex_tol:
            raise GeometryError(f"{point} is not on the boundary")
        edge = polygon.edges[k].label
    e = polygon.edge(edge)
    ux, uy = e.unit
    offset = (point[0] - e.start[0]) * ux + (point[1] - e.start[1]) * uy
    theta = math.atan2(cross(ux, uy, direction[0], direction[1]), direction[0] * ux + direction[1] * uy)
    return PhasePoint(edge, offset, theta)


def boundary_coordinate(p: PhasePoint, polygon: Polygon) -> tuple[int, float]:
    """(boundary component, arclength from the component's first vertex), for display."""
    k = polygon.index(p.edge)
    chain = polygon.chain_of_edge[k]
    first = polygon.chain_of_edge.index(chain)
    return chain, float(polygon.lengths[first:k].sum()) + p.offset


_PHASE = re.compile(r"^\s*edge=(\S+)\s+offset=(\S+)\s+theta=(\S+)\s*$")


def format_phase_point(p: PhasePoint) -> str:
    return f"edge={p.edge} offset={p.offset!r} theta={p.theta!r}"


def parse_phase_point(text: str) -> PhasePoint:
    m = _PHASE.match(text)
    if m is None:
        raise PhaseError(f"cannot parse phase point {text!r}")
    return PhasePoint(m.group(1), float(m.group(2)), float(m.group(3)))
