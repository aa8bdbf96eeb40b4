"""Partition of phase space by (source edge, target edge) and its connected components.

Components of ``V_ab`` (phase points sent from edge ``a`` to edge ``b``) are
told apart by sweeping the chord of one point onto the chord of the other:
both chord endpoints slide linearly along their edges, and the two points
are connected when every intermediate chord still runs from ``a`` to ``b``
unobstructed. :class:`ComponentAtlas` clusters a sampling grid with that
test and keeps one representative per component.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .billiard import first_return_batch, first_return_with_chord
from .coding import BSymbol
from .geometry import RAY_OK, RAY_VERTEX, GeometryError, Polygon, VertexHit, cast_rays, hole_min_width, parse_polygon
from .phase import (
    OutsideEdge,
    PhaseError,
    PhasePoint,
    SeparationScale,
    check_on_edge,
    format_phase_point,
    phase_metric,
    tau,
    tau_inverse,
    to_ambient,
)

CellIndex = BSymbol

CHORD_OK = 0
CHORD_BLOCKED = 1
CHORD_TANGENT = 2


class PartitionError(ValueError):
    pass


class NotInSameVab(PartitionError):
    pass


class ResolutionInconclusive(PartitionError):
    pass


class UnknownCell(PartitionError, LookupError):
    pass


class NotInCell(PartitionError):
    pass


class DegenerateAngle(PartitionError):
    pass


# ---------------------------------------------------------------------------
# input validation


def check_polygon(X) -> Polygon:
    """Accept a :class:`Polygon` or its text serialization."""
    if isinstance(X, Polygon):
        return X
    if isinstance(X, str):
        return parse_polygon(X)
    raise TypeError(f"expected a Polygon or polygon text, got {type(X).__name__}")


def check_phase_points(X, polygon: Polygon) -> list[PhasePoint]:
    if isinstance(X, PhasePoint):
        X = [X]
    out = []
    for p in X:
        if not isinstance(p, PhasePoint):
            p = PhasePoint(*p)
        out.append(check_on_edge(p, polygon))
    return out


# ---------------------------------------------------------------------------
# chord homotopy


def default_step(polygon: Polygon) -> float:
    return min(hole_min_width(polygon), polygon.diameter) / 10.0


def chord(p: PhasePoint, polygon: Polygon) -> tuple[str, np.ndarray, np.ndarray]:
    """Target edge and chord endpoints of ``p``."""
    q, length = first_return_with_chord(p, polygon)
    base, d = to_ambient(p, polygon)
    a = np.asarray(base)
    return q.edge, a, a + length * np.asarray(d)


def chord_status(polygon: Polygon, a_idx: int, b_idx, starts, ends) -> np.ndarray:
    """Classify chords ``starts[k] -> ends[k]`` leaving edge ``a_idx`` for edge ``b_idx``."""
    starts = np.asarray(starts, dtype=float)
    ends = np.asarray(ends, dtype=float)
    vec = ends - starts
    length = np.hypot(vec[:, 0], vec[:, 1])
    d = vec / length[:, None]
    idx, dist, status = cast_rays(polygon, starts, d, np.full(len(starts), a_idx))
    slack = 1e-9 * polygon.diameter
    u = polygon.units[a_idx]
    inward = u[0] * d[:, 1] - u[1] * d[:, 0] > 0
    reached = (idx == b_idx) & (np.abs(dist - length) <= slack) & inward
    out = np.full(len(starts), CHORD_BLOCKED)
    out[reached & (status == RAY_OK)] = CHORD_OK
    out[status == RAY_VERTEX] = CHORD_TANGENT
    return out


def _sweep(polygon, a_idx, b_idx, ap, bp, aq, bq, ts) -> np.ndarray:
    ts = np.asarray(ts)[:, None]
    return chord_status(polygon, a_idx, b_idx, (1 - ts) * ap + ts * aq, (1 - ts) * bp + ts * bq)


def _homotopy_connected(polygon, a_idx, b_idx, ap, bp, aq, bq, step) -> bool:
    disp = max(float(np.hypot(*(aq - ap))), float(np.hypot(*(bq - bp))))
    k = max(2, int(math.ceil(disp / step)) + 1)
    ts = np.linspace(0.0, 1.0, k + 1)
    st = _sweep(polygon, a_idx, b_idx, ap, bp, aq, bq, ts)
    if (st == CHORD_BLOCKED).any():
        return False
    for t0 in ts[st == CHORD_TANGENT]:
        fine = np.clip(np.linspace(t0 - 1.0 / k, t0 + 1.0 / k, 21), 0.0, 1.0)
        fine = fine[fine != t0]
        st_fine = _sweep(polygon, a_idx, b_idx, ap, bp, aq, bq, fine)
        if (st_fine == CHORD_BLOCKED).any():
            return False
        if (st_fine == CHORD_TANGENT).any():
            raise ResolutionInconclusive(f"chord sweep stays tangent to the boundary near t={t0!r}")
    return True


def same_component(p: PhasePoint, q: PhasePoint, polygon: Polygon, step: float | None = None) -> bool:
    """Whether ``p`` and ``q`` lie in one connected component of the same ``V_ab``."""
    check_on_edge(p, polygon)
    check_on_edge(q, polygon)
    if p.edge != q.edge:
        raise NotInSameVab(f"source edges {p.edge!r} and {q.edge!r} differ")
    try:
        bp, ap0, bp0 = chord(p, polygon)
        bq, aq0, bq0 = chord(q, polygon)
    except VertexHit as exc:
        raise NotInSameVab(str(exc)) from exc
    if bp != bq:
        raise NotInSameVab(f"target edges {bp!r} and {bq!r} differ")
    if p == q:
        return True
    step = default_step(polygon) if step is None else step
    return _homotopy_connected(polygon, polygon.index(p.edge), polygon.index(bp), ap0, bp0, aq0, bq0, step)


# ---------------------------------------------------------------------------
# atlas


def _grid(polygon: Polygon, a_idx: int, n: int):
    length = float(polygon.lengths[a_idx])
    offs = (np.arange(n) + 0.5) / n * length
    ths = (np.arange(n) + 0.5) / n * math.pi
    oo, tt = np.meshgrid(offs, ths, indexing="ij")
    return oo.ravel(), tt.ravel()


class ComponentAtlas(BaseEstimator):
    """Sampled connected components of every ``V_ab`` of a table.

    ``fit`` takes the table (a :class:`Polygon` or its text form) in place
    of a data matrix. ``predict`` maps phase points to component indices,
    with -1 for points that match no known component.

    Parameters
    ----------
    resolution : int
        Grid cells per axis in (offset, theta) for every source edge.
    pairs : list of (a, b) or None
        Restrict fitting to these edge pairs.
    check_stability : bool
        Refit at twice the resolution and record whether component counts agree.
    step : float or None
        Sweep step of the chord homotopy; defaults to a tenth of the
        narrowest hole width.
    """

    def __init__(self, resolution=40, pairs=None, check_stability=True, step=None, max_link_steps=32):
        self.resolution = resolution
        self.pairs = pairs
        self.check_stability = check_stability
        self.step = step
        self.max_link_steps = max_link_steps

    def fit(self, X, y=None):
        polygon = check_polygon(X)
        if int(self.resolution) < 1:
            raise ValueError("resolution must be at least 1")
        self.polygon_ = polygon
        self.step_ = default_step(polygon) if self.step is None else float(self.step)
        self.representatives_ = {}
        self.sample_counts_ = {}
        self.stable_ = {}
        self._fit_pairs(self._requested_pairs(self.pairs))
        return self

    def partial_fit(self, X, pairs: Iterable[tuple[str, str]] | None = None):
        """Add the given pairs (all if ``None``) to an existing atlas of the same table."""
        polygon = check_polygon(X)
        if not hasattr(self, "polygon_"):
            self.polygon_ = polygon
            self.step_ = default_step(polygon) if self.step is None else float(self.step)
            self.representatives_ = {}
            self.sample_counts_ = {}
            self.stable_ = {}
        elif polygon != self.polygon_:
            raise ValueError("partial_fit called with a different table")
        todo = [pr for pr in self._requested_pairs(pairs) if pr not in self.representatives_]
        self._fit_pairs(todo)
        return self

    def _requested_pairs(self, pairs):
        labels = self.polygon_.labels
        if pairs is None:
            return [(a, b) for a in labels for b in labels if a != b]
        out = []
        for a, b in pairs:
            self.polygon_.index(a)
            self.polygon_.index(b)
            out.append((a, b))
        return out

    def _fit_pairs(self, pairs):
        if not pairs:
            return
        n = int(self.resolution)
        reps, counts = self._cluster(pairs, n)
        self.representatives_.update(reps)
        self.sample_counts_.update(counts)
        if self.check_stability:
            fine, _ = self._cluster(pairs, 2 * n)
            for pr in pairs:
                self.stable_[pr] = len(fine[pr]) == len(reps[pr])
        else:
            for pr in pairs:
                self.stable_[pr] = None

    def _cluster(self, pairs, n):
        polygon = self.polygon_
        by_source: dict[str, list[str]] = {}
        for a, b in pairs:
            by_source.setdefault(a, []).append(b)
        reps, counts = {}, {}
        for a, targets in by_source.items():
            a_idx = polygon.index(a)
            offs, ths = _grid(polygon, a_idx, n)
            idx, _, _, dist, status = first_return_batch(polygon, np.full(offs.size, a_idx), offs, ths)
            u = polygon.units[a_idx]
            starts = polygon.starts[a_idx] + offs[:, None] * u
            d = np.stack([np.cos(ths) * u[0] - np.sin(ths) * u[1], np.sin(ths) * u[0] + np.cos(ths) * u[1]], 1)
            ends = starts + np.where(np.isfinite(dist), dist, 0.0)[:, None] * d
            for b in targets:
                b_idx = polygon.index(b)
                member = (idx == b_idx) & (status == RAY_OK)
                counts[(a, b)] = int(member.sum())
                reps[(a, b)] = self._components(a_idx, b_idx, n, member, offs, ths, starts, ends)
        return reps, counts

    def _components(self, a_idx, b_idx, n, member, offs, ths, starts, ends):
        polygon = self.polygon_
        if not member.any():
            return []
        grid = member.reshape(n, n)
        links = []
        for di, dj in ((1, 0), (0, 1)):
            both = grid[: n - di, : n - dj] & grid[di:, dj:]
            ii, jj = np.nonzero(both)
            links.append(np.stack([ii * n + jj, (ii + di) * n + (jj + dj)], 1))
        links = np.concatenate(links)
        ok = np.zeros(len(links), dtype=bool)
        if len(links):
            p0, p1 = links[:, 0], links[:, 1]
            disp = np.maximum(np.hypot(*(starts[p1] - starts[p0]).T), np.hypot(*(ends[p1] - ends[p0]).T))
            ks = np.maximum(2, np.ceil(disp / self.step_).astype(int) + 1)
            feasible = ks <= self.max_link_steps
            lk = np.nonzero(feasible)[0]
            reps_k = ks[lk] + 1
            owner = np.repeat(lk, reps_k)
            t = np.concatenate([np.linspace(0.0, 1.0, r) for r in reps_k])[:, None] if len(lk) else np.zeros((0, 1))
            s0, s1 = starts[p0[owner]], starts[p1[owner]]
            e0, e1 = ends[p0[owner]], ends[p1[owner]]
            st = chord_status(polygon, a_idx, b_idx, (1 - t) * s0 + t * s1, (1 - t) * e0 + t * e1) if len(owner) else np.zeros(0)
            bad = np.zeros(len(links), dtype=bool)
            np.logical_or.at(bad, owner, st != CHORD_OK)
            ok = feasible & ~bad
        size = n * n
        good = links[ok]
        graph = coo_matrix((np.ones(len(good)), (good[:, 0], good[:, 1])), shape=(size, size))
        _, lab = connected_components(graph, directed=False)
        members = np.nonzero(member)[0]
        clusters: dict[int, list[int]] = {}
        for m in members:
            clusters.setdefault(int(lab[m]), []).append(int(m))
        ordered = sorted(clusters.values(), key=lambda c: c[0])
        a = polygon.labels[a_idx]
        length = float(polygon.lengths[a_idx])

        def central(cluster):
            c = np.asarray(cluster)
            x = np.stack([offs[c] / length, ths[c] / math.pi], 1)
            k = int(np.argmin(((x - x.mean(0)) ** 2).sum(1)))
            return PhasePoint(a, float(offs[c[k]]), float(ths[c[k]]))

        cand = [central(c) for c in ordered]
        parent = list(range(len(ordered)))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i in range(len(ordered)):
            for j in range(i + 1, len(ordered)):
                ri, rj = find(i), find(j)
                if ri == rj:
                    continue
                try:
                    joined = same_component(cand[i], cand[j], polygon, self.step_)
                except (ResolutionInconclusive, NotInSameVab):
                    joined = False
                if joined:
                    parent[rj] = ri
        groups: dict[int, list[int]] = {}
        for i in range(len(ordered)):
            groups.setdefault(find(i), []).append(i)
        out = []
        for root in sorted(groups, key=lambda r: ordered[groups[r][0]][0]):
            biggest = max(groups[root], key=lambda i: (len(ordered[i]), -i))
            out.append(cand[biggest])
        return out

    # -- queries ---------------------------------------------------------

    def index_set(self, a: str, b: str) -> range:
        check_is_fitted(self, "representatives_")
        try:
            return range(len(self.representatives_[(a, b)]))
        except KeyError:
            raise UnknownCell(f"pair {a}>{b} not in the atlas") from None

    def component_count(self, a: str, b: str) -> int:
        return len(self.index_set(a, b))

    def classify(self, p: PhasePoint, extend: bool = False) -> tuple[str, str, int]:
        """``(a, b, i)`` for a phase point, ``i = -1`` when no component matches.

        With ``extend`` an unmatched point becomes the representative of a
        new component.
        """
        check_is_fitted(self, "representatives_")
        polygon = self.polygon_
        try:
            b, _, _ = chord(p, polygon)
        except VertexHit:
            return p.edge, "", -1
        pair = (p.edge, b)
        if pair not in self.representatives_:
            if not extend:
                return p.edge, b, -1
            self.representatives_[pair] = []
            self.stable_[pair] = None
            self.sample_counts_[pair] = 0
        reps = self.representatives_[pair]
        for i, r in enumerate(reps):
            try:
                if same_component(p, r, polygon, self.step_):
                    return p.edge, b, i
            except ResolutionInconclusive:
                continue
        if extend:
            reps.append(p)
            return p.edge, b, len(reps) - 1
        return p.edge, b, -1

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "representatives_")
        pts = check_phase_points(X, self.polygon_)
        return np.array([self.classify(p)[2] for p in pts], dtype=int)

    def cell_of(self, p: PhasePoint, scale: SeparationScale, extend: bool = False) -> CellIndex | None:
        """The ``U`` cell containing ``p``, or ``None`` if ``p`` is in none."""
        try:
            q = tau_inverse(p, scale, self.polygon_)
        except OutsideEdge:
            return None
        a, b, i = self.classify(p, extend)
        if i < 0:
            return None
        a2, b2, j = self.classify(q, extend)
        if b2 != b or j < 0:
            return None
        return CellIndex(a, b, i, j)


def build_atlas(polygon: Polygon, samples: int = 40, pairs=None, check_stability: bool = True) -> ComponentAtlas:
    return ComponentAtlas(resolution=samples, pairs=pairs, check_stability=check_stability).fit(polygon)


def format_atlas(atlas: ComponentAtlas) -> str:
    check_is_fitted(atlas, "representatives_")
    lines = []
    for a, b in sorted(atlas.representatives_):
        reps = atlas.representatives_[(a, b)]
        stable = atlas.stable_.get((a, b))
        flag = "unknown" if stable is None else str(stable).lower()
        lines.append(f"pair={a}>{b} components={len(reps)} stable={flag} samples={atlas.sample_counts_[(a, b)]}")
        for i, r in enumerate(reps):
            lines.append(f"component={i} {format_phase_point(r)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# cells and the commutation identity


def _check_cell(cell: Sequence, atlas: ComponentAtlas) -> CellIndex:
    cell = CellIndex(*cell)
    try:
        rng = atlas.index_set(cell.a, cell.b)
    except UnknownCell:
        raise
    if cell.i not in rng or cell.j not in rng:
        raise UnknownCell(f"cell {cell} outside the component indices {list(rng)}")
    return cell


def in_U(p: PhasePoint, cell: Sequence, scale: SeparationScale, atlas: ComponentAtlas) -> bool:
    """``p`` lies in component ``i`` and its right-translate in component ``j`` of ``V_ab``."""
    cell = _check_cell(cell, atlas)
    if p.edge != cell.a:
        return False
    found = atlas.cell_of(p, scale)
    return found is not None and found == cell


def check_commutation(p: PhasePoint, cell: Sequence, scale: SeparationScale, polygon: Polygon,
                      atlas: ComponentAtlas) -> float:
    """Distance between ``tau(f(p))`` and ``f(tau^-1(p))`` for ``p`` in the given cell."""
    if not in_U(p, cell, scale, atlas):
        raise NotInCell(f"{p} is not in cell {CellIndex(*cell)}")
    lhs = tau(first_return_with_chord(p, polygon)[0], scale)
    rhs = first_return_with_chord(tau_inverse(p, scale, polygon), polygon)[0]
    return phase_metric(lhs, rhs)


def commutation_residual(p: PhasePoint, scale: SeparationScale, polygon: Polygon) -> float:
    """Same residual without cell bookkeeping; caller guarantees the precondition."""
    lhs = tau(first_return_with_chord(p, polygon)[0], scale)
    rhs = first_return_with_chord(tau_inverse(p, scale, polygon), polygon)[0]
    return phase_metric(lhs, rhs)


# ---------------------------------------------------------------------------
# closed-form image of perturbed points


def closed_form_image(p: PhasePoint, eps1: float, eps2: float, polygon: Polygon) -> PhasePoint:
    """Image of ``(offset + eps1, theta + eps2)`` predicted from ``f(p)`` and the chord length.

    Valid while the perturbed trajectory still reaches the same edge.
    """
    image, d = first_return_with_chord(p, polygon)
    s = math.sin(image.theta - eps2)
    if abs(s) < 1e-12:
        raise DegenerateAngle(f"sin(phi - eps2) = {s!r}")
    y = image.offset - eps1 * math.sin(p.theta + eps2) / s + d * math.sin(eps2) / s
    return PhasePoint(image.edge, y, image.theta - eps2)


def continuity_terms(p: PhasePoint, eps1: float, eps2: float, polygon: Polygon) -> tuple[float, float]:
    """Exact image distance and ``sin(phi - eps2)`` for a perturbation of ``p``."""
    image, d = first_return_with_chord(p, polygon)
    s = math.sin(image.theta - eps2)
    if abs(s) < 1e-12:
        raise DegenerateAngle(f"sin(phi - eps2) = {s!r}")
    actual = abs(eps1 * math.sin(p.theta + eps2) / s - d * math.sin(eps2) / s) + abs(eps2)
    return actual, s


def estimate_lipschitz(polygon: Polygon, sample: Iterable[PhasePoint]) -> float:
    """``2 (diameter + 1) / min sin(phi)`` over the images of a cell sample."""
    worst = math.inf
    for p in sample:
        phi = first_return_with_chord(p, polygon)[0].theta
        worst = min(worst, math.sin(phi))
    if not math.isfinite(worst) or worst <= 0:
        raise DegenerateAngle("empty or degenerate cell sample")
    return 2.0 * (polygon.diameter + 1.0) / worst


def continuity_bound(p: PhasePoint, eps1: float, eps2: float, polygon: Polygon,
                     lipschitz: float | None = None) -> tuple[float, float]:
    """(image distance, linear bound ``(M + 1)|eps2| + M|eps1|``).

    ``lipschitz`` is the constant ``M``; by default it is estimated from
    ``p`` alone.
    """
    actual, _ = continuity_terms(p, eps1, eps2, polygon)
    m = estimate_lipschitz(polygon, [p]) if lipschitz is None else lipschitz
    return actual, (m + 1.0) * abs(eps2) + m * abs(eps1)


def sample_cell_points(atlas: ComponentAtlas, scale: SeparationScale, n: int, rng: np.random.Generator,
                       pairs: Sequence[tuple[str, str]] | None = None, max_tries: int = 200) -> list[tuple[PhasePoint, CellIndex]]:
    """Draw ``n`` random phase points lying in some ``U`` cell, with their cells."""
    polygon = atlas.polygon_
    pairs = list(atlas.representatives_) if pairs is None else list(pairs)
    sources = sorted({a for a, _ in pairs})
    wanted = set(pairs)
    out: list[tuple[PhasePoint, CellIndex]] = []
    for _ in range(max_tries):
        m = 4 * n
        a_idx = rng.choice([polygon.index(a) for a in sources], size=m)
        lengths = polygon.lengths[a_idx]
        offs = rng.uniform(0.0, 1.0, m) * lengths
        ths = rng.uniform(0.0, math.pi, m)
        shift = scale.L / np.sin(ths)
        keep = (offs + shift < lengths) & (ths > 1e-6) & (ths < math.pi - 1e-6) & (offs > 0)
        b1, _, _, _, s1 = first_return_batch(polygon, a_idx, offs, ths)
        b2, _, _, _, s2 = first_return_batch(polygon, a_idx, np.where(keep, offs + shift, offs), ths)
        keep &= (s1 == RAY_OK) & (s2 == RAY_OK) & (b1 == b2)
        for k in np.nonzero(keep)[0]:
            pair = (polygon.labels[a_idx[k]], polygon.labels[b1[k]])
            if pair not in wanted:
                continue
            p = PhasePoint(pair[0], float(offs[k]), float(ths[k]))
            try:
                cell = atlas.cell_of(p, scale)
            except (GeometryError, PhaseError):
                continue
            if cell is None:
                continue
            out.append((p, cell))
            if len(out) == n:
                return out
    raise PartitionError(f"found only {len(out)} of {n} cell points")
