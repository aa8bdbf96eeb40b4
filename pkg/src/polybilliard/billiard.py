"""First-return map on the boundary, orbits and edge codings."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import RAY_OK, RAY_VERTEX, Polygon, VertexHit, cast_rays, cross, ray_cast, reflect_direction
from .phase import PhasePoint, check_on_edge, to_ambient
from .coding import Coding


class Termination(enum.Enum):
    HORIZON = "horizon"
    VERTEX_HIT = "vertex-hit"


@dataclass(frozen=True)
class OrbitStep:
    """``phase`` is reached after flying ``chord_length`` from the previous base point."""

    phase: PhasePoint
    chord_length: float


@dataclass
class Orbit:
    initial: PhasePoint
    steps: list[OrbitStep] = field(default_factory=list)
    terminated: Termination = Termination.HORIZON
    vertex: tuple[float, float] | None = None

    @property
    def phases(self) -> list[PhasePoint]:
        return [self.initial] + [s.phase for s in self.steps]

    @property
    def edges(self) -> list[str]:
        return [s.phase.edge for s in self.steps]

    def __len__(self) -> int:
        return len(self.steps)


def first_return_with_chord(p: PhasePoint, polygon: Polygon) -> tuple[PhasePoint, float]:
    base, d = to_ambient(p, polygon)
    hit = ray_cast(polygon, base, d, from_edge=p.edge)
    e = polygon.edge(hit.label)
    w = reflect_direction(d, e)
    ux, uy = e.unit
    theta = math.atan2(cross(ux, uy, w[0], w[1]), w[0] * ux + w[1] * uy)
    offset = (hit.point[0] - e.start[0]) * ux + (hit.point[1] - e.start[1]) * uy
    return PhasePoint(hit.label, offset, theta), hit.distance


def first_return(p: PhasePoint, polygon: Polygon) -> PhasePoint:
    """Next boundary phase point of the billiard trajectory of ``p``.

    Raises ``VertexHit`` if the trajectory runs into a vertex and ``Grazing``
    for directions parallel to an edge.
    """
    check_on_edge(p, polygon)
    return first_return_with_chord(p, polygon)[0]


def iterate(p: PhasePoint, polygon: Polygon, n: int) -> Orbit:
    if n < 0:
        raise ValueError("n must be nonnegative")
    check_on_edge(p, polygon)
    orbit = Orbit(p)
    cur = p
    for _ in range(n):
        try:
            cur, chord = first_return_with_chord(cur, polygon)
        except VertexHit as exc:
            orbit.terminated = Termination.VERTEX_HIT
            orbit.vertex = exc.vertex
            break
        orbit.steps.append(OrbitStep(cur, chord))
    return orbit


def encode_orbit(p: PhasePoint, polygon: Polygon, n: int) -> Coding:
    """Labels of the edges carrying ``p, f(p), ..., f^(n-1)(p)``.

    A vertex hit truncates the coding and sets ``terminated``.
    """
    if n == 0:
        return Coding(())
    orbit = iterate(p, polygon, n - 1)
    truncated = orbit.terminated is Termination.VERTEX_HIT
    return Coding(tuple([p.edge] + orbit.edges), terminated=truncated)


def reversed_phase(p: PhasePoint) -> PhasePoint:
    """Phase point at the same base whose trajectory retraces the one arriving at ``p``."""
    return PhasePoint(p.edge, p.offset, math.pi - p.theta)


def time_reversed_points(orbit: Orbit, polygon: Polygon) -> list[tuple[float, float]]:
    """Reflection points obtained by running the final phase point backwards."""
    back = iterate(reversed_phase(orbit.phases[-1]), polygon, len(orbit.steps))
    return [to_ambient(q, polygon)[0] for q in back.phases]


def first_return_batch(polygon: Polygon, edge_idx, offsets, thetas):
    """Vectorized first-return map on arrays of edge-local coordinates.

    Returns ``(edge_idx, offsets, thetas, chords, status)`` with the ray
    statuses of :func:`~polybilliard.geometry.cast_rays`; entries whose
    status is not ``RAY_OK`` carry meaningless coordinates.
    """
    offsets = np.asarray(offsets, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    edge_idx = np.broadcast_to(np.asarray(edge_idx, dtype=int), offsets.shape)
    u = polygon.units[edge_idx]
    c, s = np.cos(thetas), np.sin(thetas)
    base = polygon.starts[edge_idx] + offsets[:, None] * u
    d = np.stack([c * u[:, 0] - s * u[:, 1], s * u[:, 0] + c * u[:, 1]], axis=1)
    idx, dist, status = cast_rays(polygon, base, d, edge_idx)
    safe = np.where(np.isfinite(dist), dist, 0.0)
    hit = base + safe[:, None] * d
    ub = polygon.units[idx]
    dot = d[:, 0] * ub[:, 0] + d[:, 1] * ub[:, 1]
    w = 2 * dot[:, None] * ub - d
    new_theta = np.arctan2(ub[:, 0] * w[:, 1] - ub[:, 1] * w[:, 0], w[:, 0] * ub[:, 0] + w[:, 1] * ub[:, 1])
    new_offset = ((hit - polygon.starts[idx]) * ub).sum(axis=1)
    return idx, new_offset, new_theta, dist, status


def format_orbit(orbit: Orbit) -> str:
    """One ``k edge offset theta chord`` line per step, then an ``end`` line."""
    lines = [f"{k} {s.phase.edge} {s.phase.offset!r} {s.phase.theta!r} {s.chord_length!r}"
             for k, s in enumerate(orbit.steps, start=1)]
    if orbit.terminated is Termination.VERTEX_HIT:
        x, y = orbit.vertex
        lines.append(f"end vertex-hit {x!r} {y!r}")
    else:
        lines.append("end horizon")
    return "\n".join(lines) + "\n"


__all__ = [
    "Orbit", "OrbitStep", "Termination", "first_return", "iterate", "encode_orbit",
    "first_return_batch", "format_orbit", "reversed_phase", "time_reversed_points",
    "RAY_OK", "RAY_VERTEX",
]
