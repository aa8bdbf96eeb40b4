"""Planar primitives and the polygon-with-holes model.

Edges are oriented so that the billiard table is always on their left:
the outer chain runs counter-clockwise and every hole chain clockwise.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

Point = tuple[float, float]

#: relative vertex tolerance, scaled by the polygon diameter
VERTEX_RTOL = 1e-9
#: |sin| below which a direction counts as parallel to an edge
GRAZING_TOL = 1e-12

RAY_OK = 0
RAY_VERTEX = 1
RAY_MISS = 2


class GeometryError(ValueError):
    pass


class InvalidPolygon(GeometryError):
    pass


class NotSimple(InvalidPolygon):
    pass


class HoleOutsideOrTouching(InvalidPolygon):
    pass


class SlitHole(InvalidPolygon):
    pass


class DuplicateLabel(InvalidPolygon):
    pass


class UnknownLabel(GeometryError, LookupError):
    pass


class Grazing(GeometryError):
    pass


class VertexHit(GeometryError):
    """The straight-line flow runs into a vertex of the table."""

    def __init__(self, vertex: Point, label: str | None = None):
        self.vertex = (float(vertex[0]), float(vertex[1]))
        self.label = label
        super().__init__(f"flow reaches vertex ({self.vertex[0]!r}, {self.vertex[1]!r})")


class Edge(NamedTuple):
    label: str
    start: Point
    end: Point

    @property
    def length(self) -> float:
        return math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1])

    @property
    def unit(self) -> Point:
        n = self.length
        return ((self.end[0] - self.start[0]) / n, (self.end[1] - self.start[1]) / n)

    def point_at(self, offset: float) -> Point:
        ux, uy = self.unit
        return (self.start[0] + offset * ux, self.start[1] + offset * uy)


class RayHit(NamedTuple):
    label: str
    point: Point
    distance: float


def cross(ax: float, ay: float, bx: float, by: float) -> float:
    return ax * by - ay * bx


def signed_area(chain: Sequence[Point]) -> float:
    s = 0.0
    n = len(chain)
    for k in range(n):
        x0, y0 = chain[k]
        x1, y1 = chain[(k + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


@dataclass(frozen=True)
class Polygon:
    """A validated billiard table. Build instances with :func:`validate_polygon`."""

    outer: tuple[Point, ...]
    holes: tuple[tuple[Point, ...], ...] = ()
    labels: tuple[str, ...] = ()
    anchor: int = 0
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {lab: k for k, lab in enumerate(self.labels)})

    @property
    def chains(self) -> tuple[tuple[Point, ...], ...]:
        return (self.outer,) + self.holes

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        out = []
        k = 0
        for chain in self.chains:
            n = len(chain)
            for i in range(n):
                out.append(Edge(self.labels[k], chain[i], chain[(i + 1) % n]))
                k += 1
        return tuple(out)

    @cached_property
    def chain_of_edge(self) -> tuple[int, ...]:
        return tuple(c for c, chain in enumerate(self.chains) for _ in chain)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownLabel(f"no edge labeled {label!r}") from None

    def edge(self, label: str) -> Edge:
        return self.edges[self.index(label)]

    @cached_property
    def starts(self) -> np.ndarray:
        return np.array([e.start for e in self.edges], dtype=float)

    @cached_property
    def ends(self) -> np.ndarray:
        return np.array([e.end for e in self.edges], dtype=float)

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.hypot(*(self.ends - self.starts).T)

    @cached_property
    def units(self) -> np.ndarray:
        return (self.ends - self.starts) / self.lengths[:, None]

    @cached_property
    def vertices(self) -> np.ndarray:
        return np.array([p for chain in self.chains for p in chain], dtype=float)

    @cached_property
    def diameter(self) -> float:
        v = self.vertices
        d = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((d**2).sum(-1)).max())

    @property
    def vertex_tol(self) -> float:
        return VERTEX_RTOL * self.diameter

    @property
    def area(self) -> float:
        return sum(signed_area(c) for c in self.chains)

    def transformed(self, fn) -> "Polygon":
        """Apply a point map to every vertex, keeping labels and storage order.

        The result is not re-validated: an orientation-reversing map yields
        chains with flipped orientation, which is what unfolded copies need.
        """
        outer = tuple(fn(p) for p in self.outer)
        holes = tuple(tuple(fn(p) for p in h) for h in self.holes)
        return Polygon(outer, holes, self.labels, self.anchor)


def _segments_intersect(p, q, r, s, tol) -> bool:
    """Closed segments pq and rs intersect or come within ``tol`` of each other."""
    return _segment_distance(p, q, r, s) <= tol


def _point_segment_distance(p, a, b) -> float:
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    den = dx * dx + dy * dy
    t = 0.0 if den == 0 else max(0.0, min(1.0, ((p[0] - ax) * dx + (p[1] - ay) * dy) / den))
    return math.hypot(p[0] - ax - t * dx, p[1] - ay - t * dy)


def _segment_distance(p, q, r, s) -> float:
    d1 = cross(q[0] - p[0], q[1] - p[1], r[0] - p[0], r[1] - p[1])
    d2 = cross(q[0] - p[0], q[1] - p[1], s[0] - p[0], s[1] - p[1])
    d3 = cross(s[0] - r[0], s[1] - r[1], p[0] - r[0], p[1] - r[1])
    d4 = cross(s[0] - r[0], s[1] - r[1], q[0] - r[0], q[1] - r[1])
    if d1 * d2 < 0 and d3 * d4 < 0:
        return 0.0
    return min(
        _point_segment_distance(p, r, s),
        _point_segment_distance(q, r, s),
        _point_segment_distance(r, p, q),
        _point_segment_distance(s, p, q),
    )


def point_in_chain(p: Point, chain: Sequence[Point]) -> bool:
    """Even-odd test; points on the boundary give an arbitrary answer."""
    x, y = p
    inside = False
    n = len(chain)
    for k in range(n):
        x0, y0 = chain[k]
        x1, y1 = chain[(k + 1) % n]
        if (y0 > y) != (y1 > y):
            xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            if xc > x:
                inside = not inside
    return inside


def contains_point(polygon: Polygon, p: Point, tol: float | None = None) -> bool:
    """True if ``p`` is in the closed table (boundary included within ``tol``)."""
    tol = polygon.vertex_tol if tol is None else tol
    for e in polygon.edges:
        if _point_segment_distance(p, e.start, e.end) <= tol:
            return True
    if not point_in_chain(p, polygon.outer):
        return False
    return not any(point_in_chain(p, h) for h in polygon.holes)


def _check_simple(chain: Sequence[Point], tol: float, what: str) -> None:
    n = len(chain)
    if n < 3:
        raise NotSimple(f"{what}: needs at least 3 vertices")
    for k in range(n):
        if math.hypot(chain[k][0] - chain[(k + 1) % n][0], chain[k][1] - chain[(k + 1) % n][1]) <= tol:
            raise NotSimple(f"{what}: consecutive vertices {k} and {(k + 1) % n} coincide")
    for i in range(n):
        p, q = chain[i], chain[(i + 1) % n]
        for j in range(i + 1, n):
            r, s = chain[j], chain[(j + 1) % n]
            if j == i + 1 or (i == 0 and j == n - 1):
                # adjacent edges share a vertex; reject only folding back
                shared, a, b = (q, p, s) if j == i + 1 else (p, q, r)
                c = cross(a[0] - shared[0], a[1] - shared[1], b[0] - shared[0], b[1] - shared[1])
                dot = (a[0] - shared[0]) * (b[0] - shared[0]) + (a[1] - shared[1]) * (b[1] - shared[1])
                if abs(c) <= tol * max(1.0, math.dist(a, shared)) and dot > 0:
                    raise NotSimple(f"{what}: edges {i} and {j} overlap")
                continue
            if _segments_intersect(p, q, r, s, tol):
                raise NotSimple(f"{what}: edges {i} and {j} intersect")
    if abs(signed_area(chain)) <= tol * tol:
        raise NotSimple(f"{what}: zero area")


def convex_hull(points: Iterable[Point]) -> list[Point]:
    pts = sorted(set((float(x), float(y)) for x, y in points))
    if len(pts) <= 2:
        return pts

    def half(seq):
        out: list[Point] = []
        for p in seq:
            while len(out) >= 2 and cross(out[-1][0] - out[-2][0], out[-1][1] - out[-2][1],
                                          p[0] - out[-2][0], p[1] - out[-2][1]) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    return lower[:-1] + upper[:-1]


def chain_width(chain: Sequence[Point]) -> float:
    """Minimal width of the convex hull of ``chain`` (0 for collinear input)."""
    hull = convex_hull(chain)
    if len(hull) < 3:
        return 0.0
    best = math.inf
    n = len(hull)
    for k in range(n):
        a, b = hull[k], hull[(k + 1) % n]
        ln = math.dist(a, b)
        far = max(abs(cross(b[0] - a[0], b[1] - a[1], p[0] - a[0], p[1] - a[1])) / ln for p in hull)
        best = min(best, far)
    return best


def hole_min_width(polygon: Polygon) -> float:
    """Smallest convex-hull width over the holes; ``math.inf`` for a simply connected table."""
    if not polygon.holes:
        return math.inf
    return min(chain_width(h) for h in polygon.holes)


def _diameter(points: Sequence[Point]) -> float:
    return max(math.dist(p, q) for p in points for q in points)


def validate_polygon(
    outer: Sequence[Point],
    holes: Sequence[Sequence[Point]] = (),
    labels: Sequence[str] | None = None,
    anchor: int = 0,
    width_tol: float | None = None,
) -> Polygon:
    """Check a raw table description and return it with normalized orientations.

    ``labels`` follow storage order: outer edges first, then each hole's
    edges, edge ``k`` of a chain running from vertex ``k`` to ``k + 1``.
    Chains given with the wrong orientation are reversed and their labels
    carried along with the edges.
    """
    outer = [(float(x), float(y)) for x, y in outer]
    holes = [[(float(x), float(y)) for x, y in h] for h in holes]
    n_edges = len(outer) + sum(len(h) for h in holes)
    if labels is None:
        labels = [f"E{k}" for k in range(n_edges)]
    labels = [str(lab) for lab in labels]
    if len(labels) != n_edges:
        raise InvalidPolygon(f"expected {n_edges} labels, got {len(labels)}")
    seen = set()
    for lab in labels:
        if lab in seen:
            raise DuplicateLabel(f"label {lab!r} used twice")
        if not lab or re.search(r"[\s>:,]", lab):
            raise InvalidPolygon(f"label {lab!r} must be nonempty without whitespace or '>:,'")
        seen.add(lab)
    if len(outer) < 3:
        raise NotSimple("outer: needs at least 3 vertices")

    tol = VERTEX_RTOL * _diameter(outer)
    wtol = tol if width_tol is None else width_tol

    chunks = []
    pos = 0
    for chain in [outer] + holes:
        chunks.append(labels[pos:pos + len(chain)])
        pos += len(chain)

    def oriented(chain, labs, ccw):
        if (signed_area(chain) > 0) == ccw:
            return tuple(chain), list(labs)
        n = len(chain)
        rev = [chain[0]] + [chain[n - k] for k in range(1, n)]
        return tuple(rev), [labs[n - 1 - k] for k in range(n)]

    _check_simple(outer, tol, "outer")
    outer_t, out_labels = oriented(outer, chunks[0], True)

    hole_t = []
    for h_idx, (h, labs) in enumerate(zip(holes, chunks[1:])):
        what = f"hole {h_idx}"
        if len(h) < 3 or chain_width(h) <= wtol:
            raise SlitHole(f"{what}: minimal width is not positive")
        _check_simple(h, tol, what)
        ht, hl = oriented(h, labs, False)
        for p in ht:
            if not point_in_chain(p, outer_t):
                raise HoleOutsideOrTouching(f"{what}: vertex {p} outside the outer boundary")
        for i in range(len(ht)):
            p, q = ht[i], ht[(i + 1) % len(ht)]
            for j in range(len(outer_t)):
                if _segments_intersect(p, q, outer_t[j], outer_t[(j + 1) % len(outer_t)], tol):
                    raise HoleOutsideOrTouching(f"{what}: touches the outer boundary")
        for o_idx, (other, _) in enumerate(hole_t):
            if any(point_in_chain(p, other) for p in ht) or any(point_in_chain(p, ht) for p in other):
                raise HoleOutsideOrTouching(f"{what} overlaps hole {o_idx}")
            for i in range(len(ht)):
                for j in range(len(other)):
                    if _segments_intersect(ht[i], ht[(i + 1) % len(ht)],
                                           other[j], other[(j + 1) % len(other)], tol):
                        raise HoleOutsideOrTouching(f"{what} touches hole {o_idx}")
        hole_t.append((ht, hl))

    all_labels = out_labels + [lab for _, hl in hole_t for lab in hl]
    n_vertices = len(outer_t) + sum(len(h) for h, _ in hole_t)
    if not 0 <= anchor < n_vertices:
        raise InvalidPolygon(f"anchor {anchor} out of range")
    return Polygon(outer_t, tuple(h for h, _ in hole_t), tuple(all_labels), int(anchor))


def revalidate(polygon: Polygon) -> Polygon:
    return validate_polygon(polygon.outer, polygon.holes, polygon.labels, polygon.anchor)


# ---------------------------------------------------------------------------
# ray casting


def cast_rays(polygon: Polygon, origins, directions, skip=None):
    """Vectorized first boundary hit for a batch of rays.

    Returns ``(edge_index, distance, status)`` arrays. ``status`` is
    ``RAY_OK``, ``RAY_VERTEX`` (nearest hit within the vertex tolerance of an
    edge endpoint) or ``RAY_MISS``. ``skip`` holds, per ray, the index of
    the edge the ray starts on (or -1).
    """
    o = np.atleast_2d(np.asarray(origins, dtype=float))
    d = np.atleast_2d(np.asarray(directions, dtype=float))
    s = polygon.starts
    seg = polygon.ends - s
    lengths = polygon.lengths
    tol = polygon.vertex_tol

    w = s[None, :, :] - o[:, None, :]
    denom = d[:, None, 0] * seg[None, :, 1] - d[:, None, 1] * seg[None, :, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (w[..., 0] * seg[None, :, 1] - w[..., 1] * seg[None, :, 0]) / denom
        u = (w[..., 0] * d[:, None, 1] - w[..., 1] * d[:, None, 0]) / denom
    utol = tol / lengths[None, :]
    ok = (np.abs(denom) > 1e-300) & (t > 1e-12 * polygon.diameter) & (u >= -utol) & (u <= 1 + utol)
    if skip is not None:
        skip = np.broadcast_to(np.asarray(skip), (o.shape[0],))
        ok &= np.arange(len(lengths))[None, :] != skip[:, None]
    t = np.where(ok, t, np.inf)
    idx = np.argmin(t, axis=1)
    rows = np.arange(o.shape[0])
    dist = t[rows, idx]
    uu = u[rows, idx]
    along = np.minimum(uu, 1 - uu) * lengths[idx]
    status = np.where(np.isfinite(dist), np.where(along < tol, RAY_VERTEX, RAY_OK), RAY_MISS)
    return idx, dist, status


def ray_cast(polygon: Polygon, origin: Point, direction: Point, from_edge: str | None = None) -> RayHit:
    """First boundary point strictly ahead of ``origin`` along ``direction``.

    Raises :class:`VertexHit` when that point is within the vertex tolerance
    of a vertex, and :class:`Grazing` when ``direction`` does not point into
    the table from ``from_edge``.
    """
    skip = -1
    if from_edge is not None:
        skip = polygon.index(from_edge)
        ux, uy = polygon.units[skip]
        if cross(ux, uy, direction[0], direction[1]) <= GRAZING_TOL:
            raise Grazing(f"direction does not point into the table from edge {from_edge!r}")
    idx, dist, status = cast_rays(polygon, [origin], [direction], [skip])
    k, t, st = int(idx[0]), float(dist[0]), int(status[0])
    if st == RAY_MISS:
        raise GeometryError("ray leaves the table without hitting the boundary")
    e = polygon.edges[k]
    hit = (origin[0] + t * direction[0], origin[1] + t * direction[1])
    if st == RAY_VERTEX:
        vertex = e.start if math.dist(hit, e.start) <= math.dist(hit, e.end) else e.end
        raise VertexHit(vertex, e.label)
    return RayHit(e.label, hit, t)


def reflect_direction(incoming: Point, edge: Edge) -> Point:
    """Specular reflection ``2 (v.e) e - v`` across the line of ``edge``."""
    ux, uy = edge.unit
    vx, vy = incoming
    if abs(cross(ux, uy, vx, vy)) < GRAZING_TOL:
        raise Grazing(f"direction parallel to edge {edge.label!r}")
    dot = vx * ux + vy * uy
    rx, ry = 2 * dot * ux - vx, 2 * dot * uy - vy
    n = math.hypot(rx, ry)
    return (rx / n, ry / n)


# ---------------------------------------------------------------------------
# text format

_POINT = re.compile(r"\(\s*([^,()\s]+)\s*,\s*([^,()\s]+)\s*\)")


def parse_polygon(text: str) -> Polygon:
    """Parse the ``outer:`` / ``hole:`` / ``labels:`` / ``anchor:`` record format."""
    outer = None
    holes = []
    labels = None
    anchor = 0
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(":")
        key = key.strip().lower()
        if key in ("outer", "hole"):
            pts = [(float(x), float(y)) for x, y in _POINT.findall(rest)]
            leftover = _POINT.sub("", rest).strip()
            if leftover:
                raise InvalidPolygon(f"cannot parse {leftover!r}")
            if key == "outer":
                if outer is not None:
                    raise InvalidPolygon("more than one outer record")
                outer = pts
            else:
                holes.append(pts)
        elif key == "labels":
            labels = rest.split()
        elif key == "anchor":
            anchor = int(rest)
        else:
            raise InvalidPolygon(f"unknown record {key!r}")
    if outer is None:
        raise InvalidPolygon("missing outer record")
    return validate_polygon(outer, holes, labels, anchor)


def format_polygon(polygon: Polygon) -> str:
    def pts(chain):
        return " ".join(f"({x!r},{y!r})" for x, y in chain)

    lines = [f"outer: {pts(polygon.outer)}"]
    lines += [f"hole: {pts(h)}" for h in polygon.holes]
    lines.append("labels: " + " ".join(polygon.labels))
    lines.append(f"anchor: {polygon.anchor}")
    return "\n".join(lines) + "\n"


def unit_square() -> Polygon:
    return validate_polygon([(0, 0), (1, 0), (1, 1), (0, 1)], labels="B R T L".split())


def square_with_hole(side: float = 4.0, hole: float = 1.0) -> Polygon:
    """``side`` x ``side`` square with a centered square hole of side ``hole``."""
    lo, hi = (side - hole) / 2, (side + hole) / 2
    return validate_polygon(
        [(0, 0), (side, 0), (side, side), (0, side)],
        [[(lo, lo), (lo, hi), (hi, hi), (hi, lo)]],
        labels="B R T L HL HT HR HB".split(),
    )
