import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polybilliard.experiments import random_polygon
from polybilliard.geometry import (
    DuplicateLabel,
    Grazing,
    HoleOutsideOrTouching,
    InvalidPolygon,
    NotSimple,
    SlitHole,
    UnknownLabel,
    VertexHit,
    format_polygon,
    hole_min_width,
    parse_polygon,
    ray_cast,
    reflect_direction,
    revalidate,
    validate_polygon,
)

SQ = [(0, 0), (1, 0), (1, 1), (0, 1)]
BIG = [(0, 0), (4, 0), (4, 4), (0, 4)]


def test_unit_square_valid(square):
    assert square.area == pytest.approx(1.0)
    assert [e.label for e in square.edges] == ["B", "R", "T", "L"]
    assert all(e.length == pytest.approx(1.0) for e in square.edges)


def test_clockwise_input_is_reoriented():
    p = validate_polygon(list(reversed(SQ)))
    assert p.area == pytest.approx(1.0)


@pytest.mark.parametrize("hole", [
    [(0.4, 0.4), (0.6, 0.4), (0.6, 0.4)],
    [(1, 2), (2, 2), (3, 2)],
])
def test_zero_width_hole_rejected(hole):
    with pytest.raises((SlitHole, NotSimple)):
        validate_polygon(BIG, [hole])


def test_holed_square_has_eight_edges(holed):
    assert len(holed.edges) == 8
    assert holed.area == pytest.approx(15.0)


def test_hole_touching_outer_rejected():
    with pytest.raises(HoleOutsideOrTouching):
        validate_polygon(BIG, [[(0, 1), (1, 1), (1, 2), (0, 2)]])


def test_self_intersecting_outer_rejected():
    with pytest.raises(NotSimple):
        validate_polygon([(0, 0), (1, 1), (1, 0), (0, 1)])


def test_duplicate_label_rejected():
    with pytest.raises(DuplicateLabel):
        validate_polygon(SQ, labels=["B", "B", "T", "L"])


def test_unknown_label(square):
    with pytest.raises(UnknownLabel):
        square.edge("Z")


def test_ray_cast_vertical(square):
    hit = ray_cast(square, (0.5, 0.0), (0.0, 1.0), from_edge="B")
    assert hit.label == "T"
    assert hit.point == pytest.approx((0.5, 1.0))
    assert hit.distance == pytest.approx(1.0)


def test_ray_cast_vertex(square):
    d = np.array([0.5, 1.0]) / math.hypot(0.5, 1.0)
    with pytest.raises(VertexHit) as info:
        ray_cast(square, (0.5, 0.0), tuple(d), from_edge="B")
    assert info.value.vertex == pytest.approx((1.0, 1.0))


def _brute_force_hit(polygon, origin, direction, skip):
    # independent oracle: parametric intersection with every edge
    best = None
    ox, oy = origin
    dx, dy = direction
    for e in polygon.edges:
        if e.label == skip:
            continue
        (ax, ay), (bx, by) = e.start, e.end
        ex, ey = bx - ax, by - ay
        den = dx * ey - dy * ex
        if abs(den) < 1e-15:
            continue
        t = ((ax - ox) * ey - (ay - oy) * ex) / den
        s = ((ax - ox) * dy - (ay - oy) * dx) / den
        if t > 1e-12 and -1e-12 <= s <= 1 + 1e-12 and (best is None or t < best[0]):
            best = (t, e.label)
    return best


def test_ray_cast_hits_hole_bottom(holed):
    hit = ray_cast(holed, (2.0, 0.0), (0.0, 1.0), from_edge="B")
    t, label = _brute_force_hit(holed, (2.0, 0.0), (0.0, 1.0), "B")
    assert hit.label == label == "HB"
    assert hit.point == pytest.approx((2.0, 1.5))
    assert hit.distance == pytest.approx(1.5) == pytest.approx(t)


@pytest.mark.parametrize("v,expected", [
    ((0.0, -1.0), (0.0, 1.0)),
    ((math.sqrt(0.5), -math.sqrt(0.5)), (math.sqrt(0.5), math.sqrt(0.5))),
])
def test_reflect_direction(square, v, expected):
    assert reflect_direction(v, square.edge("B")) == pytest.approx(expected, abs=1e-12)


def test_reflect_grazing(square):
    with pytest.raises(Grazing):
        reflect_direction((1.0, 0.0), square.edge("B"))


def test_hole_min_width(square, holed):
    assert hole_min_width(square) == math.inf
    assert hole_min_width(holed) == pytest.approx(1.0)
    rect = validate_polygon(BIG, [[(1, 1), (3, 1), (3, 1.5), (1, 1.5)]])
    assert hole_min_width(rect) == pytest.approx(0.5)


def test_parse_format_roundtrip(holed):
    again = parse_polygon(format_polygon(holed))
    assert again.labels == holed.labels
    assert np.allclose(again.vertices, holed.vertices)


def test_parse_rejects_garbage():
    with pytest.raises(InvalidPolygon):
        parse_polygon("outer: (0,0) (1,0) nonsense")


@given(st.floats(0.05, math.pi - 0.05), st.sampled_from(["B", "R", "T", "L", "HL", "HT", "HR", "HB"]))
def test_reflect_is_involution(phi, label):
    from polybilliard import square_with_hole

    e = square_with_hole().edge(label)
    ux, uy = e.unit
    c, s = math.cos(phi), math.sin(phi)
    v = (c * ux + s * uy, s * ux - c * uy)  # pointing out of the interior
    w = reflect_direction(reflect_direction(v, e), e)
    assert w == pytest.approx(v, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_validate_idempotent(seed):
    p = random_polygon(np.random.default_rng(seed))
    q = revalidate(p)
    assert q.labels == p.labels
    assert np.array_equal(q.vertices, p.vertices)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 0.99), st.floats(0.05, math.pi - 0.05))
def test_ray_cast_matches_brute_force(seed, frac, phi):
    p = random_polygon(np.random.default_rng(seed))
    e = p.edges[0]
    origin = e.point_at(frac * e.length)
    ux, uy = e.unit
    d = (math.cos(phi) * ux - math.sin(phi) * uy, math.sin(phi) * ux + math.cos(phi) * uy)
    try:
        hit = ray_cast(p, origin, d, from_edge=e.label)
    except VertexHit:
        return
    t, label = _brute_force_hit(p, origin, d, e.label)
    assert hit.label == label
    assert hit.distance == pytest.approx(t, rel=1e-9, abs=1e-12)
