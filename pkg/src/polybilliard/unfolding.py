"""Unfolding billiard orbits into straight lines through chains of mirrored tables."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .billiard import Orbit, Termination, iterate
from .geometry import GeometryError, Point, Polygon, contains_point
from .phase import PhasePoint, to_ambient


class PointOutsideCopy(GeometryError):
    pass


class Parity(enum.Enum):
    PRESERVING = 1
    REVERSING = -1


@dataclass(frozen=True, eq=False)
class Isometry:
    """Affine map ``x -> matrix @ x + translation`` with orthogonal ``matrix``."""

    matrix: np.ndarray = field(default_factory=lambda: np.eye(2))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(2))

    @classmethod
    def identity(cls) -> "Isometry":
        return cls()

    @classmethod
    def reflection(cls, a: Point, b: Point) -> "Isometry":
        """Mirror across the line through ``a`` and ``b``."""
        a = np.asarray(a, dtype=float)
        u = np.asarray(b, dtype=float) - a
        u /= np.linalg.norm(u)
        m = 2.0 * np.outer(u, u) - np.eye(2)
        return cls(m, a - m @ a)

    @property
    def parity(self) -> Parity:
        return Parity.PRESERVING if np.linalg.det(self.matrix) > 0 else Parity.REVERSING

    def orthogonality_error(self) -> float:
        return float(np.abs(self.matrix.T @ self.matrix - np.eye(2)).max())

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        return pts @ self.matrix.T + self.translation

    def point(self, p: Point) -> Point:
        x, y = self(p)
        return (float(x), float(y))

    def __matmul__(self, other: "Isometry") -> "Isometry":
        """Composition ``self o other`` (apply ``other`` first)."""
        return Isometry(self.matrix @ other.matrix, self.matrix @ other.translation + self.translation)

    def inverse(self) -> "Isometry":
        mt = self.matrix.T
        return Isometry(mt, -mt @ self.translation)

    def distance(self, other: "Isometry") -> float:
        return float(max(np.abs(self.matrix - other.matrix).max(),
                         np.abs(self.translation - other.translation).max()))


def reflect_polygon(polygon: Polygon, label: str) -> tuple[Polygon, Isometry]:
    e = polygon.edge(label)
    g = Isometry.reflection(e.start, e.end)
    return polygon.transformed(g.point), g


@dataclass
class Corridor:
    """Finite chain of mirrored copies ``Q_0 ... Q_n`` along an orbit.

    ``isometries[k]`` maps the table onto copy ``k``; copies ``k`` and
    ``k + 1`` are glued along the image of edge ``gluing_edges[k]``.
    ``straight_segments[k]`` is the image in copy ``k`` of the chord leaving
    the ``k``-th reflection point.
    """

    polygon: Polygon
    initial: PhasePoint
    isometries: list[Isometry]
    gluing_edges: list[str]
    straight_segments: list[tuple[Point, Point]]
    orbit: Orbit
    truncated: bool = False

    @property
    def copies(self) -> list[tuple[int, Isometry]]:
        return list(enumerate(self.isometries))

    def copy_polygon(self, k: int) -> Polygon:
        return self.polygon.transformed(self.isometries[k].point)

    @property
    def unfolded_points(self) -> list[Point]:
        """Images of the reflection points, starting with the initial base point."""
        return [seg[0] for seg in self.straight_segments]

    @property
    def polyline(self) -> list[Point]:
        if not self.straight_segments:
            return []
        return self.unfolded_points + [self.straight_segments[-1][1]]

    def path_length(self) -> float:
        return float(sum(np.hypot(b[0] - a[0], b[1] - a[1]) for a, b in self.straight_segments))


def build_corridor(p: PhasePoint, polygon: Polygon, n: int) -> Corridor:
    """Unfold the orbit of ``p`` through ``n`` reflections.

    The corridor holds copies ``Q_0 .. Q_n`` and the ``n + 1`` chords
    leaving the initial point and each of the ``n`` reflection points. If
    the orbit runs into a vertex the corridor stops there and ``truncated``
    is set.
    """
    orbit = iterate(p, polygon, n + 1)
    pts = [to_ambient(q, polygon)[0] for q in orbit.phases]
    if orbit.terminated is Termination.VERTEX_HIT:
        pts.append(orbit.vertex)
    isos = [Isometry.identity()]
    glue: list[str] = []
    segments = []
    for k in range(len(pts) - 1):
        g = isos[k]
        segments.append((g.point(pts[k]), g.point(pts[k + 1])))
        if k == n or k + 1 >= len(orbit.phases):
            break
        e = polygon.edge(orbit.phases[k + 1].edge)
        glue.append(e.label)
        isos.append(g @ Isometry.reflection(e.start, e.end))
    return Corridor(polygon, p, isos, glue, segments, orbit,
                    truncated=orbit.terminated is Termination.VERTEX_HIT)


def straight_line_points(corridor: Corridor) -> list[Point]:
    """Where the straight ray from the initial phase point crosses each gluing edge.

    Computed from the isometries alone, by intersecting one fixed ray with
    the glued edge images, so it is independent of the reflection law.
    """
    polygon = corridor.polygon
    base, d = to_ambient(corridor.initial, polygon)
    o = np.asarray(base)
    d = np.asarray(d)
    out = [base]
    for k, label in enumerate(corridor.gluing_edges):
        e = polygon.edge(label)
        a, b = corridor.isometries[k](np.array([e.start, e.end]))
        ab = b - a
        w = a - o
        t = (w[0] * ab[1] - w[1] * ab[0]) / (d[0] * ab[1] - d[1] * ab[0])
        x = o + t * d
        out.append((float(x[0]), float(x[1])))
    return out


def fold_back(corridor: Corridor, points, indices=None, tol: float | None = None) -> list[Point]:
    """Map each point back into the table.

    ``points[k]`` is taken to lie in copy ``indices[k]``, or in copy ``k``
    when no indices are given.
    """
    polygon = corridor.polygon
    tol = 1e-9 * max(1.0, polygon.diameter) if tol is None else tol
    indices = range(len(points)) if indices is None else list(indices)
    if len(indices) != len(points):
        raise ValueError("one copy index per point")
    out = []
    for k, pt in zip(indices, points):
        if not 0 <= k < len(corridor.isometries):
            raise PointOutsideCopy(f"no copy {k}; corridor has {len(corridor.isometries)}")
        q = corridor.isometries[k].inverse().point(pt)
        if not contains_point(polygon, q, tol):
            raise PointOutsideCopy(f"point {tuple(pt)} is not in copy {k}")
        out.append(q)
    return out


def collinearity_residual(points) -> float:
    """Largest distance of ``points`` from their total-least-squares line."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 3:
        return 0.0
    c = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(c, full_matrices=False)
    return float(np.abs(c @ vt[1]).max())
