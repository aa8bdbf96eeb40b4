import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from polybilliard.billiard import (
    Termination,
    encode_orbit,
    first_return,
    first_return_batch,
    format_orbit,
    iterate,
    time_reversed_points,
)
from polybilliard.experiments import random_polygon, surviving_phase_point
from polybilliard.geometry import VertexHit
from polybilliard.phase import PhasePoint, parallel_separation, to_ambient
from polybilliard.unfolding import build_corridor

H = math.pi / 2
CORNER = math.atan2(1, 0.5)


def test_first_return_examples(square):
    q = first_return(PhasePoint("B", 0.5, H), square)
    assert (q.edge, q.offset, q.theta) == ("T", pytest.approx(0.5), pytest.approx(H))
    q = first_return(PhasePoint("B", 0.5, math.pi / 4), square)
    assert (q.edge, q.offset, q.theta) == ("R", pytest.approx(0.5), pytest.approx(math.pi / 4))
    with pytest.raises(VertexHit):
        first_return(PhasePoint("B", 0.5, CORNER), square)


def test_iterate_examples(square):
    o = iterate(PhasePoint("B", 0.5, H), square, 4)
    assert o.edges == ["T", "B", "T", "B"]
    assert all(p.offset == pytest.approx(0.5) for p in o.phases)
    o = iterate(PhasePoint("B", 0.5, math.pi / 4), square, 3)
    assert o.edges == ["R", "T", "L"]
    pts = [to_ambient(p, square)[0] for p in o.phases[1:]]
    assert np.allclose(pts, [(1, 0.5), (0.5, 1), (0, 0.5)])
    o = iterate(PhasePoint("B", 0.5, CORNER), square, 5)
    assert o.terminated is Termination.VERTEX_HIT and not o.steps
    assert o.vertex == pytest.approx((1.0, 1.0))


def test_encode_examples(square):
    assert encode_orbit(PhasePoint("B", 0.5, H), square, 5).symbols == tuple("BTBTB")
    assert encode_orbit(PhasePoint("B", 0.5, math.pi / 4), square, 4).symbols == tuple("BRTL")
    c = encode_orbit(PhasePoint("B", 0.5, math.atan(math.pi)), square, 10)
    assert len(c) == 10 and not c.terminated


def test_format_orbit_zero_bounces(square):
    assert format_orbit(iterate(PhasePoint("B", 0.5, 1.0), square, 0)) == "end horizon\n"


def test_batch_agrees_with_scalar(holed):
    rng = np.random.default_rng(3)
    offs = rng.uniform(0.05, 3.95, 200)
    ths = rng.uniform(0.1, math.pi - 0.1, 200)
    idx, o2, t2, ch, status = first_return_batch(holed, holed.index("B"), offs, ths)
    for k in range(200):
        try:
            q = first_return(PhasePoint("B", offs[k], ths[k]), holed)
        except VertexHit:
            continue
        assert holed.labels[idx[k]] == q.edge
        assert o2[k] == pytest.approx(q.offset, abs=1e-12)
        assert t2[k] == pytest.approx(q.theta, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.9), st.floats(1e-4, 0.05), st.floats(0.1, math.pi - 0.1))
def test_separation_preserved_and_orientation_reversed(seed, x, dx, t):
    poly = random_polygon(np.random.default_rng(seed))
    e = poly.edges[0]
    p = PhasePoint(e.label, x * e.length, t)
    q = PhasePoint(e.label, (x + dx) * e.length, t)
    try:
        fp, fq = first_return(p, poly), first_return(q, poly)
    except VertexHit:
        return
    assume(fp.edge == fq.edge)
    assert parallel_separation(fp, fq) == pytest.approx(parallel_separation(p, q), rel=1e-9, abs=1e-12)
    assert fp.offset > fq.offset


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_time_reversal(seed):
    rng = np.random.default_rng(seed)
    poly = random_polygon(rng)
    p = surviving_phase_point(rng, poly, 30)
    orbit = iterate(p, poly, 30)
    forward = [to_ambient(q, poly)[0] for q in orbit.phases]
    backward = time_reversed_points(orbit, poly)
    assert np.allclose(backward, forward[::-1], atol=1e-9 * poly.diameter)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_chord_lengths_sum_to_unfolded_length(seed):
    rng = np.random.default_rng(seed)
    poly = random_polygon(rng)
    p = surviving_phase_point(rng, poly, 40)
    c = build_corridor(p, poly, 40)
    total = sum(s.chord_length for s in iterate(p, poly, 41).steps)
    a, b = np.array(c.polyline[0]), np.array(c.polyline[-1])
    assert total == pytest.approx(float(np.linalg.norm(b - a)), rel=1e-9)
