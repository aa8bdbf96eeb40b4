import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polybilliard.billiard import encode_orbit
from polybilliard.coding import BSymbol, Coding, parse_coding
from polybilliard.phase import NotParallel, PhasePoint
from polybilliard.symbolic import (
    BlockNotRecurrent,
    KTooLarge,
    alternating_coding,
    approximate_limit_points,
    detect_period,
    divergence_profile,
    prefix_set,
    project_coding,
    recurrence_gaps,
    shift,
)

H = math.pi / 2
IRR = math.atan(math.pi)


def A(word):
    return Coding(tuple(word))


def test_shift():
    assert shift(A("BTBT"), 1).symbols == tuple("TBT")
    assert shift(A("BRT"), 0) == A("BRT")
    with pytest.raises(KTooLarge):
        shift(A("B"), 2)


@pytest.mark.parametrize("word,period", [("BTBTBT", 2), ("BRTLBRTLBRTL", 4), ("BTBTB", None)])
def test_detect_period(word, period):
    assert detect_period(A(word)) == period


def test_project_coding(square):
    beta = Coding((BSymbol("B", "T", 0, 0), BSymbol("T", "B", 0, 0)), "B")
    assert project_coding(beta).symbols == ("B", "T")
    assert len(project_coding(Coding((), "B"))) == 0


def test_b_coding_text_roundtrip():
    beta = Coding((BSymbol("B", "T", 0, 1), BSymbol("T", "HB", 1, 0)), "B")
    assert parse_coding(str(beta), "B") == beta


def test_recurrence_gaps():
    assert recurrence_gaps(A("BT" * 5), 2) == ([0, 2, 4, 6, 8], 2)
    assert recurrence_gaps(A("RBTBTBT"), 1) == ([0], None)
    assert recurrence_gaps(A("BTBBTB"), 3) == ([0, 3], 3)


def test_alternating_square_vertical(square):
    alt = alternating_coding(PhasePoint("B", 0.4, H), PhasePoint("B", 0.5, H), square, 6)
    assert [(b.i, b.j) for b in alt.beta] == [(0, 0)] * 6
    assert alt.residual < 1e-12
    assert [round(z.offset, 12) for z in alt.points] == [0.4, 0.5] * 3
    assert project_coding(alt.beta) == encode_orbit(PhasePoint("B", 0.4, H), square, 6)


def test_alternating_irrational_pair(square):
    alt = alternating_coding(PhasePoint("B", 0.3, IRR), PhasePoint("B", 0.3 + 1e-5, IRR), square, 20)
    assert alt.residual < 1e-9
    assert project_coding(alt.beta).symbols == encode_orbit(PhasePoint("B", 0.3, IRR), square, 20).symbols


def test_alternating_requires_parallel(square):
    with pytest.raises(NotParallel):
        alternating_coding(PhasePoint("B", 0.4, H), PhasePoint("B", 0.5, 1.0), square, 4)


def test_limit_points(square):
    alt = alternating_coding(PhasePoint("B", 0.4, H), PhasePoint("B", 0.5, H), square, 12)
    est, cauchy = approximate_limit_points(alt, 2)
    assert all(c == pytest.approx(0.0, abs=1e-12) for c in cauchy)
    alt = alternating_coding(PhasePoint("B", 0.3, IRR), PhasePoint("B", 0.3 + 1e-5, IRR), square, 200)
    est, cauchy = approximate_limit_points(alt, 3, max_occurrences=5)
    assert len(cauchy) == 4 and all(np.isfinite(cauchy))
    with pytest.raises(BlockNotRecurrent):
        approximate_limit_points(alt, 150)


def test_prefix_periodic(square):
    ps = prefix_set(square, A("BT" * 10), "B", theta=H)
    assert len(ps.boxes) == 1 and ps.measure() >= 0.99


def test_prefix_aperiodic_shrinks(square):
    word = encode_orbit(PhasePoint("B", 0.3, IRR), square, 20)
    d = [prefix_set(square, word[:n], "B", theta=IRR, resolution=20000).diameter_at(0.3) for n in (5, 10, 20)]
    assert d[0] >= d[1] >= d[2] and d[2] < d[0]


def test_prefix_empty_is_full_edge(holed):
    ps = prefix_set(holed, A(""), "B", theta=1.0, resolution=100)
    assert ps.measure() == pytest.approx(4.0)


def test_prefix_2d(square):
    word = encode_orbit(PhasePoint("B", 0.3, IRR), square, 6)
    small = prefix_set(square, word, "B", mode="2d", resolution=60)
    big = prefix_set(square, word[:3], "B", mode="2d", resolution=60)
    assert small.within(big) and small.measure() <= big.measure()


@pytest.mark.parametrize("n", [1, 3, 7, 15])
def test_prefix_nesting(holed, n):
    word = encode_orbit(PhasePoint("B", 1.3, 1.1), holed, n + 1)
    inner = prefix_set(holed, word[: n + 1], "B", theta=1.1, resolution=4000)
    outer = prefix_set(holed, word[:n], "B", theta=1.1, resolution=4000)
    assert inner.within(outer)


@given(st.lists(st.sampled_from("BRTL"), min_size=1, max_size=4), st.integers(3, 8), st.integers(0, 3))
def test_detect_period_shift_invariant(block, reps, k):
    c = A(block * reps)
    p = detect_period(c)
    if p is not None and len(c) - k >= 3 * p:
        assert detect_period(shift(c, k)) == p


def test_divergence_linear(square):
    prof = divergence_profile(PhasePoint("B", 0.3, IRR), 1e-3, square, range(10, 101, 10))
    r = np.array(prof.ratios)
    assert np.all(np.abs(r - np.median(r)) <= 0.2 * np.median(r))


def _lattice_diameter(n, x=0.3, slope=math.pi):
    # the unfolded line from (x, 0) changes its first n symbols only where it meets a
    # lattice point (a, b), i.e. at x = -b/slope mod 1 for the b it reaches
    reach = int(n * slope / (1 + slope)) + 1
    cuts = sorted({(-b / slope) % 1 for b in range(1, reach + 1)} | {0.0, 1.0})
    return next(hi - lo for lo, hi in zip(cuts, cuts[1:]) if lo <= x < hi)


FROZEN_DIAMETERS = {5: 0.31831, 10: 0.27324, 20: 0.13803, 40: 0.04507, 160: 0.0338}


@pytest.mark.parametrize("n", sorted(FROZEN_DIAMETERS))
def test_prefix_diameter_matches_lattice_oracle(square, n):
    assert _lattice_diameter(n) == pytest.approx(FROZEN_DIAMETERS[n], abs=1e-5)
    word = encode_orbit(PhasePoint("B", 0.3, IRR), square, n)
    d = prefix_set(square, word, "B", theta=IRR, resolution=100_000).diameter_at(0.3)
    assert d == pytest.approx(FROZEN_DIAMETERS[n], abs=3e-5)
