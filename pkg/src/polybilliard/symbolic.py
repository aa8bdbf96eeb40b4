"""Symbolic dynamics on finite codings: shifts, periods, recurrence, prefix sets and alternating orbits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .billiard import RAY_OK, Termination, first_return_batch, first_return_with_chord, iterate
from .coding import Coding, as_symbols
from .geometry import Polygon, VertexHit
from .partition import ComponentAtlas, PartitionError
from .phase import PhaseError, PhasePoint, SeparationScale, parallel_separation, phase_metric, tau
from .unfolding import build_corridor


class KTooLarge(ValueError):
    pass


class CodingsDiverge(ValueError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"edge codings differ at position {index}")


class BlockNotRecurrent(ValueError):
    pass


def shift(c: Coding, k: int = 1) -> Coding:
    if k < 0 or k > len(c):
        raise KTooLarge(f"cannot shift a coding of length {len(c)} by {k}")
    return Coding(c.symbols[k:], c.alphabet, c.terminated)


def detect_period(c: Coding | Sequence, min_repeats: int = 3) -> int | None:
    """Smallest candidate period witnessed at least ``min_repeats`` times, else ``None``.

    A finite word can only be consistent with a period; it never proves one.
    """
    s = as_symbols(c)
    n = len(s)
    for p in range(1, n // min_repeats + 1):
        if all(s[k + p] == s[k] for k in range(n - p)):
            return p
    return None


def project_coding(beta: Coding) -> Coding:
    """Edge coding recovered from a cell coding by keeping each source edge."""
    return Coding(tuple(b.a for b in beta.symbols), "A")


def recurrence_gaps(c: Coding | Sequence, block_length: int) -> tuple[list[int], int | None]:
    """Start positions of the initial block of length ``block_length`` and the largest gap.

    The gap is ``None`` when the block occurs only once.
    """
    s = as_symbols(c)
    if not 0 < block_length <= len(s):
        raise ValueError(f"block length {block_length} not in 1..{len(s)}")
    block = s[:block_length]
    pos = [k for k in range(len(s) - block_length + 1) if s[k:k + block_length] == block]
    gaps = [b - a for a, b in zip(pos, pos[1:])]
    return pos, (max(gaps) if gaps else None)


# ---------------------------------------------------------------------------
# prefix sets


@dataclass(frozen=True)
class PrefixSet:
    """Sampled set of initial conditions on ``edge`` whose codings start with a given prefix.

    In 1D mode boxes are offset intervals ``(lo, hi)`` at the fixed angle
    ``theta``; in 2D mode they are ``(lo, hi, theta_lo, theta_hi)``
    rectangles. Each box is the union of the grid cells of matching samples.
    """

    edge: str
    theta: float | None
    boxes: tuple
    horizon: int
    resolution: int
    mode: str = "1d"

    @property
    def empty(self) -> bool:
        return not self.boxes

    def measure(self) -> float:
        if self.mode == "1d":
            return float(sum(hi - lo for lo, hi in self.boxes))
        return float(sum((hi - lo) * (t1 - t0) for lo, hi, t0, t1 in self.boxes))

    def box_containing(self, offset: float, theta: float | None = None):
        for b in self.boxes:
            if b[0] <= offset <= b[1] and (self.mode == "1d" or b[2] <= theta <= b[3]):
                return b
        return None

    def diameter_at(self, offset: float, theta: float | None = None) -> float:
        """Width of the box holding ``offset`` (0 when no box holds it)."""
        b = self.box_containing(offset, theta)
        if b is None:
            return 0.0
        if self.mode == "1d":
            return b[1] - b[0]
        return (b[1] - b[0]) + (b[3] - b[2])

    def within(self, other: "PrefixSet") -> bool:
        """Every box of ``self`` is inside some box of ``other``."""
        eps = 1e-12
        for b in self.boxes:
            if self.mode == "1d":
                ok = any(o[0] - eps <= b[0] and b[1] <= o[1] + eps for o in other.boxes)
            else:
                ok = any(o[0] - eps <= b[0] and b[1] <= o[1] + eps and o[2] - eps <= b[2] and b[3] <= o[3] + eps
                         for o in other.boxes)
            if not ok:
                return False
        return True


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    if not mask.any():
        return []
    m = np.concatenate([[False], mask, [False]]).astype(np.int8)
    d = np.diff(m)
    return list(zip(np.nonzero(d == 1)[0].tolist(), (np.nonzero(d == -1)[0] - 1).tolist()))


def _matching(polygon: Polygon, prefix, a_idx: int, offs: np.ndarray, ths: np.ndarray) -> np.ndarray:
    alive = np.ones(offs.size, dtype=bool)
    cur_e = np.full(offs.size, a_idx)
    cur_o = offs.copy()
    cur_t = ths.copy()
    live = np.arange(offs.size)
    for sym in prefix[1:]:
        target = polygon.index(sym)
        e, o, t, _, st = first_return_batch(polygon, cur_e, cur_o, cur_t)
        keep = (st == RAY_OK) & (e == target)
        alive[live[~keep]] = False
        live = live[keep]
        cur_e, cur_o, cur_t = e[keep], o[keep], t[keep]
        if live.size == 0:
            break
    return alive


def prefix_set(polygon: Polygon, prefix: Coding | Sequence[str], edge: str, mode: str = "1d",
               resolution: int = 1000, theta: float | None = None) -> PrefixSet:
    """Grid-sample the initial conditions on ``edge`` realizing ``prefix``.

    ``prefix[0]`` is the starting edge itself, so a prefix of length ``n``
    constrains ``n - 1`` bounces. A sample whose trajectory meets a vertex
    before the horizon does not match.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    prefix = as_symbols(prefix)
    a_idx = polygon.index(edge)
    length = float(polygon.lengths[a_idx])
    if mode == "1d":
        if theta is None:
            raise ValueError("1d mode needs a fixed theta")
        if not prefix:
            return PrefixSet(edge, theta, ((0.0, length),), 0, resolution, mode)
        if prefix[0] != edge:
            return PrefixSet(edge, theta, (), len(prefix), resolution, mode)
        offs = (np.arange(resolution) + 0.5) / resolution * length
        ok = _matching(polygon, prefix, a_idx, offs, np.full(resolution, float(theta)))
        boxes = tuple((i / resolution * length, (j + 1) / resolution * length) for i, j in _runs(ok))
        return PrefixSet(edge, theta, boxes, len(prefix), resolution, mode)
    if mode != "2d":
        raise ValueError(f"unknown mode {mode!r}")
    if not prefix:
        return PrefixSet(edge, None, ((0.0, length, 0.0, math.pi),), 0, resolution, mode)
    if prefix[0] != edge:
        return PrefixSet(edge, None, (), len(prefix), resolution, mode)
    offs = (np.arange(resolution) + 0.5) / resolution * length
    ths = (np.arange(resolution) + 0.5) / resolution * math.pi
    oo, tt = np.meshgrid(offs, ths, indexing="ij")
    ok = _matching(polygon, prefix, a_idx, oo.ravel(), tt.ravel()).reshape(resolution, resolution)
    boxes = []
    dth = math.pi / resolution
    for jt in range(resolution):
        for i, j in _runs(ok[:, jt]):
            boxes.append((i / resolution * length, (j + 1) / resolution * length, jt * dth, (jt + 1) * dth))
    boxes.sort()
    return PrefixSet(edge, None, tuple(boxes), len(prefix), resolution, mode)


# ---------------------------------------------------------------------------
# alternating orbits


@dataclass
class AlternatingOrbit:
    """Orbit of ``rho1`` under ``tau o f`` together with its cell coding."""

    rho1: PhasePoint
    rho2: PhasePoint
    scale: SeparationScale
    points: list[PhasePoint]
    alpha: Coding
    beta: Coding
    even_residual: float
    odd_residual: float
    atlas: ComponentAtlas = field(repr=False)

    @property
    def residual(self) -> float:
        return max(self.even_residual, self.odd_residual)


def alternating_coding(rho1: PhasePoint, rho2: PhasePoint, polygon: Polygon, n: int,
                       atlas: ComponentAtlas | None = None, atlas_resolution: int = 24) -> AlternatingOrbit:
    """Interleave the orbits of two parallel phase points with a common edge coding.

    With the translation length set to their separation, ``(tau o f)^k rho1``
    equals ``f^k rho1`` for even ``k`` and ``f^k rho2`` for odd ``k``; the
    largest deviations are returned as ``even_residual`` and ``odd_residual``.
    ``beta[k]`` is the cell of ``(tau o f)^k rho1``.
    """
    L = parallel_separation(rho1, rho2)
    if not rho1.offset < rho2.offset:
        raise PhaseError("rho1 must lie left of rho2 (smaller offset)")
    scale = SeparationScale(L)
    o1 = iterate(rho1, polygon, n)
    o2 = iterate(rho2, polygon, n)
    e1 = [rho1.edge] + o1.edges
    e2 = [rho2.edge] + o2.edges
    for k, (x, y) in enumerate(zip(e1, e2)):
        if x != y:
            raise CodingsDiverge(k)
    for o in (o1, o2):
        if o.terminated is Termination.VERTEX_HIT:
            raise VertexHit(o.vertex)
    pairs = sorted({(e1[k], e1[k + 1]) for k in range(n)})
    if atlas is None:
        atlas = ComponentAtlas(resolution=atlas_resolution, check_stability=False)
    atlas.partial_fit(polygon, pairs)

    ph1, ph2 = o1.phases, o2.phases
    z = [rho1]
    for _ in range(n - 1):
        z.append(tau(first_return_with_chord(z[-1], polygon)[0], scale))
    even = max((phase_metric(z[k], ph1[k]) for k in range(0, n, 2)), default=0.0)
    odd = max((phase_metric(z[k], ph2[k]) for k in range(1, n, 2)), default=0.0)

    beta = []
    for k, zk in enumerate(z):
        cell = atlas.cell_of(zk, scale, extend=True)
        if cell is None or (cell.a, cell.b) != (e1[k], e1[k + 1]):
            raise PartitionError(f"step {k}: {zk} is in no cell of {e1[k]}>{e1[k + 1]}")
        beta.append(cell)
    return AlternatingOrbit(rho1, rho2, scale, z, Coding(tuple(e1[:n]), "A"), Coding(tuple(beta), "B"),
                            even, odd, atlas)


@dataclass(frozen=True)
class LimitPointEstimate:
    k: int
    point: PhasePoint
    residual: float


def approximate_limit_points(orbit: AlternatingOrbit, block_length: int,
                             max_occurrences: int | None = None) -> tuple[list[LimitPointEstimate], list[float]]:
    """Follow the recurrences of the initial cell block along the alternating orbit.

    For occurrence positions ``i_m`` of the block, ``p_m = (tau o f)^(i_m) rho1``
    and ``(tau o f)^k p_m`` is read off the orbit for ``k`` below the block
    length. Returns per-``k`` estimates (from the last occurrence, with the
    distance to the previous one) and, per consecutive pair of occurrences,
    the largest distance over ``k``.
    """
    pos, _ = recurrence_gaps(orbit.beta, block_length)
    if max_occurrences is not None:
        pos = pos[:max_occurrences]
    if len(pos) < 2:
        raise BlockNotRecurrent(f"block of length {block_length} occurs {len(pos)} time(s)")
    z = orbit.points
    estimates = []
    for k in range(block_length):
        last, prev = z[pos[-1] + k], z[pos[-2] + k]
        estimates.append(LimitPointEstimate(k, last, phase_metric(prev, last)))
    cauchy = [max(phase_metric(z[a + k], z[b + k]) for k in range(block_length))
              for a, b in zip(pos, pos[1:])]
    return estimates, cauchy


# ---------------------------------------------------------------------------
# divergence of non-parallel trajectories


def _position_at(corridor, t: float):
    s = 0.0
    for a, b in corridor.straight_segments:
        ln = math.dist(a, b)
        if s + ln >= t:
            r = (t - s) / ln
            return (a[0] + r * (b[0] - a[0]), a[1] + r * (b[1] - a[1]))
        s += ln
    raise ValueError(f"corridor shorter than path length {t!r}")


def _corridor_covering(p: PhasePoint, polygon: Polygon, length: float, max_bounces: int):
    n = 8
    while True:
        c = build_corridor(p, polygon, n)
        if c.path_length() >= length or c.truncated or n >= max_bounces:
            return c
        n = min(2 * n, max_bounces)


@dataclass(frozen=True)
class DivergenceProfile:
    path_lengths: tuple
    distances: tuple
    common_length: float

    @property
    def ratios(self) -> tuple:
        return tuple(d / t for d, t in zip(self.distances, self.path_lengths))


def divergence_profile(p: PhasePoint, delta: float, polygon: Polygon, path_lengths: Sequence[float],
                       max_bounces: int = 20000) -> DivergenceProfile:
    """Distance at equal path length between the unfolded trajectories of ``p`` and ``p`` turned by ``delta``.

    ``common_length`` is the path length of ``p`` up to the first reflection
    where the two edge codings differ.
    """
    q = PhasePoint(p.edge, p.offset, p.theta + delta)
    tmax = max(path_lengths)
    c1 = _corridor_covering(p, polygon, tmax, max_bounces)
    c2 = _corridor_covering(q, polygon, tmax, max_bounces)
    dist = []
    for t in path_lengths:
        a = _position_at(c1, t)
        b = _position_at(c2, t)
        dist.append(math.dist(a, b))
    e1, e2 = c1.gluing_edges, c2.gluing_edges
    k = next((i for i, (x, y) in enumerate(zip(e1, e2)) if x != y), min(len(e1), len(e2)))
    common = sum(math.dist(a, b) for a, b in c1.straight_segments[:k + 1])
    return DivergenceProfile(tuple(path_lengths), tuple(dist), common)
