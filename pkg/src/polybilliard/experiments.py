"""Seeded verification suites producing line-oriented reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import billiard, geometry
from .billiard import Termination, encode_orbit, iterate
from .geometry import InvalidPolygon, Polygon, validate_polygon
from .partition import (
    ComponentAtlas,
    closed_form_image,
    commutation_residual,
    continuity_terms,
    estimate_lipschitz,
    sample_cell_points,
)
from .phase import PhaseError, PhasePoint, SeparationScale, phase_metric, to_ambient
from .symbolic import CodingsDiverge, alternating_coding, divergence_profile, prefix_set, project_coding
from .unfolding import build_corridor, collinearity_residual, fold_back, straight_line_points

SUITES = ("commutation", "continuity", "unfolding", "alternating", "uniqueness", "divergence")
APERIODIC_THETA = math.atan(math.pi)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    return str(v).replace(" ", "_")


@dataclass
class ExperimentReport:
    name: str
    params: dict
    records: list[dict] = field(default_factory=list)
    verdicts: dict[str, bool] = field(default_factory=dict)
    summary: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def render(self) -> str:
        lines = [f"experiment={self.name}"]
        lines += [f"param.{k}={_fmt(self.params[k])}" for k in sorted(self.params)]
        for i, rec in enumerate(self.records):
            lines.append(f"case={i} " + " ".join(f"{k}={_fmt(v)}" for k, v in rec.items()))
        lines += [f"verdict.{k}={'pass' if v else 'fail'}" for k, v in self.verdicts.items()]
        lines.append(f"result={'pass' if self.passed else 'fail'}")
        lines += [f"# {s}" for s in self.summary]
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# random tables and initial conditions


def _star_chain(rng, n, center, r_lo, r_hi, max_gap):
    while True:
        ang = np.sort(rng.uniform(0.0, 2 * math.pi, n))
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
        if gaps.max() < max_gap and gaps.min() > 0.15:
            break
    r = rng.uniform(r_lo, r_hi, n)
    return [(float(center[0] + ri * math.cos(a)), float(center[1] + ri * math.sin(a))) for ri, a in zip(r, ang)]


def random_polygon(rng: np.random.Generator, n_outer: int | None = None, n_holes: int | None = None,
                   clearance: float = 0.04, max_tries: int = 1000) -> Polygon:
    """Star-shaped table with ``n_outer`` vertices (5-10) and ``n_holes`` small holes (0-2)."""
    n_outer = int(rng.integers(5, 11)) if n_outer is None else n_outer
    n_holes = int(rng.integers(0, 3)) if n_holes is None else n_holes
    for _ in range(max_tries):
        outer = _star_chain(rng, n_outer, (0.0, 0.0), 0.55, 1.0, 2 * math.pi / 3)
        holes = []
        for _ in range(n_holes):
            for _ in range(100):
                c = rng.uniform(-0.3, 0.3, 2)
                h = _star_chain(rng, int(rng.integers(3, 6)), c, 0.05, 0.12, 0.9 * math.pi)
                hh = [list(reversed(h))]
                far_outer = all(
                    geometry._point_segment_distance(p, outer[k], outer[(k + 1) % len(outer)]) > clearance
                    for p in h for k in range(len(outer))
                )
                inside = all(geometry.point_in_chain(p, outer) for p in h)
                apart = all(min(math.dist(p, q) for p in h for q in o) > 0.12 + clearance for o in holes)
                if far_outer and inside and apart:
                    holes += hh
                    break
        if len(holes) != n_holes:
            continue
        try:
            return validate_polygon(outer, holes)
        except InvalidPolygon:
            continue
    raise RuntimeError("could not generate a random table")


def random_phase_point(rng: np.random.Generator, polygon: Polygon, margin: float = 1e-3) -> PhasePoint:
    k = int(rng.integers(len(polygon.labels)))
    length = float(polygon.lengths[k])
    return PhasePoint(polygon.labels[k], float(rng.uniform(margin, 1 - margin) * length),
                      float(rng.uniform(0.05, math.pi - 0.05)))


def surviving_phase_point(rng, polygon, bounces, max_tries=1000) -> PhasePoint:
    for _ in range(max_tries):
        p = random_phase_point(rng, polygon)
        if iterate(p, polygon, bounces + 1).terminated is Termination.HORIZON:
            return p
    raise RuntimeError("no initial condition survived")


# ---------------------------------------------------------------------------
# suites


def default_scale(polygon: Polygon) -> SeparationScale:
    return SeparationScale(0.1 * float(polygon.lengths.min()))


def run_commutation(polygon: Polygon, seed: int = 0, samples: int = 1000, tol: float = 1e-9,
                    scale: SeparationScale | None = None, atlas_resolution: int = 30) -> ExperimentReport:
    rng = np.random.default_rng(seed)
    scale = default_scale(polygon) if scale is None else scale
    atlas = ComponentAtlas(resolution=atlas_resolution, check_stability=False).fit(polygon)
    pts = sample_cell_points(atlas, scale, samples, rng)
    report = ExperimentReport("commutation", dict(seed=seed, samples=samples, tolerance=tol, L=scale.L,
                                                  atlas_resolution=atlas_resolution))
    worst = 0.0
    for p, cell in pts:
        r = commutation_residual(p, scale, polygon)
        worst = max(worst, r)
        report.records.append(dict(cell=str(cell), edge=p.edge, offset=p.offset, theta=p.theta, residual=r))
    report.verdicts["residual_below_tolerance"] = worst < tol
    cells = sorted({str(c) for _, c in pts})
    report.summary += [f"{len(pts)} points in {len(cells)} cells, max residual {worst:.3e}"]
    return report


def _perturbation(rng, eps):
    total = rng.uniform(0.0, eps)
    share = rng.uniform(0.0, 1.0)
    s1, s2 = rng.choice([-1.0, 1.0], 2)
    return float(s1 * share * total), float(s2 * (1 - share) * total)


def run_continuity(polygon: Polygon, seed: int = 0, samples: int = 1000, draws: int = 10000,
                   eps: float = 1e-4, tol: float = 1e-9, scale: SeparationScale | None = None,
                   atlas_resolution: int = 30) -> ExperimentReport:
    rng = np.random.default_rng(seed)
    scale = default_scale(polygon) if scale is None else scale
    atlas = ComponentAtlas(resolution=atlas_resolution, check_stability=False).fit(polygon)
    pts = sample_cell_points(atlas, scale, samples, rng)
    by_cell: dict = {}
    for p, c in pts:
        by_cell.setdefault(c, []).append(p)
    lipschitz = {c: estimate_lipschitz(polygon, ps) for c, ps in by_cell.items()}
    report = ExperimentReport("continuity", dict(seed=seed, samples=samples, draws=draws, eps=eps,
                                                 tolerance=tol, L=scale.L))
    worst = 0.0
    agreed = 0
    while agreed < samples:
        p, cell = pts[int(rng.integers(len(pts)))]
        e1, e2 = _perturbation(rng, eps)
        try:
            q = PhasePoint(p.edge, p.offset + e1, p.theta + e2)
            if atlas.cell_of(q, scale) != cell:
                continue
            err = phase_metric(closed_form_image(p, e1, e2, polygon), billiard.first_return(q, polygon))
        except (geometry.GeometryError, PhaseError):
            continue
        worst = max(worst, err)
        agreed += 1
        report.records.append(dict(kind="image", cell=str(cell), offset=p.offset, theta=p.theta,
                                   eps1=e1, eps2=e2, error=err))
    violations = 0
    slack = 0.0
    for _ in range(draws):
        p, cell = pts[int(rng.integers(len(pts)))]
        e1, e2 = _perturbation(rng, eps)
        actual, _ = continuity_terms(p, e1, e2, polygon)
        m = lipschitz[cell]
        bound = (m + 1) * abs(e2) + m * abs(e1)
        if actual > bound:
            violations += 1
        slack = max(slack, actual / bound if bound > 0 else 0.0)
    report.verdicts["closed_form_matches_simulation"] = worst < tol
    report.verdicts["distance_within_linear_bound"] = violations == 0
    report.summary += [
        f"closed form vs simulation: max error {worst:.3e} over {agreed} perturbations",
        f"linear bound: {violations} violations in {draws} draws, max actual/bound {slack:.3f}",
    ]
    return report


def run_unfolding(polygons: Sequence[Polygon], seed: int = 0, initial: int = 10, bounces: int = 100,
                  tol: float = 1e-9) -> ExperimentReport:
    rng = np.random.default_rng(seed)
    report = ExperimentReport("unfolding", dict(seed=seed, polygons=len(polygons), initial=initial,
                                                bounces=bounces, tolerance=tol))
    worst_fold = worst_line = worst_chord = 0.0
    parity_ok = True
    for pi, poly in enumerate(polygons):
        diam = poly.diameter
        for _ in range(initial):
            p = surviving_phase_point(rng, poly, bounces)
            c = build_corridor(p, poly, bounces)
            line = straight_line_points(c)
            folded = fold_back(c, line)
            base = [to_ambient(q, poly)[0] for q in c.orbit.phases[: bounces + 1]]
            fold_err = max(math.dist(a, b) for a, b in zip(folded, base)) / diam
            length = c.path_length()
            line_err = collinearity_residual(c.polyline) / length
            chord_err = abs(math.dist(c.polyline[0], c.polyline[-1]) - length) / length
            parity_ok &= all(g.parity.value == (-1) ** k for k, g in c.copies)
            worst_fold = max(worst_fold, fold_err)
            worst_line = max(worst_line, line_err)
            worst_chord = max(worst_chord, chord_err)
            report.records.append(dict(polygon=pi, edge=p.edge, offset=p.offset, theta=p.theta,
                                       fold_error=fold_err, collinearity=line_err, chord_error=chord_err))
    report.verdicts["fold_back_matches_orbit"] = worst_fold < tol
    report.verdicts["unfolded_points_collinear"] = worst_line < tol
    report.verdicts["chord_lengths_add_up"] = worst_chord < tol
    report.verdicts["parity_alternates"] = parity_ok
    report.summary.append(f"max relative fold-back error {worst_fold:.3e}, collinearity {worst_line:.3e}")
    return report


def random_parallel_pair(rng, polygon, horizon, rel_sep=1e-4, max_tries=1000):
    for _ in range(max_tries):
        p = random_phase_point(rng, polygon, margin=0.01)
        length = polygon.edge(p.edge).length
        x2 = p.offset + rel_sep * polygon.diameter * float(rng.uniform(0.2, 1.0))
        if x2 >= length:
            continue
        q = PhasePoint(p.edge, x2, p.theta)
        c1 = encode_orbit(p, polygon, horizon + 1)
        c2 = encode_orbit(q, polygon, horizon + 1)
        if c1.terminated or c2.terminated or c1.symbols != c2.symbols:
            continue
        return p, q
    raise RuntimeError("no parallel pair shares its coding")


def run_alternating(polygons: Sequence[Polygon], seed: int = 0, pairs: int = 100, horizon: int = 50,
                    tol: float = 1e-9, atlas_resolution: int = 16) -> ExperimentReport:
    rng = np.random.default_rng(seed)
    report = ExperimentReport("alternating", dict(seed=seed, polygons=len(polygons), pairs=pairs,
                                                  horizon=horizon, tolerance=tol))
    atlases = {}
    worst = 0.0
    projections_ok = True
    for k in range(pairs):
        pi = k % len(polygons)
        poly = polygons[pi]
        atlas = atlases.setdefault(pi, ComponentAtlas(resolution=atlas_resolution, check_stability=False))
        while True:
            r1, r2 = random_parallel_pair(rng, poly, horizon)
            try:
                alt = alternating_coding(r1, r2, poly, horizon, atlas=atlas)
                break
            except (CodingsDiverge, geometry.VertexHit):
                continue
        proj = project_coding(alt.beta).symbols == encode_orbit(r1, poly, horizon).symbols
        projections_ok &= proj
        worst = max(worst, alt.residual)
        report.records.append(dict(polygon=pi, edge=r1.edge, offset1=r1.offset, offset2=r2.offset,
                                   theta=r1.theta, even=alt.even_residual, odd=alt.odd_residual,
                                   projection=proj))
    report.verdicts["identity_residual_below_tolerance"] = worst < tol
    report.verdicts["projection_equals_edge_coding"] = projections_ok
    report.summary.append(f"max alternating-identity residual {worst:.3e}")
    return report


def doubling_horizons(first: int, last: int) -> list[int]:
    out = [first]
    while out[-1] * 2 <= last:
        out.append(out[-1] * 2)
    return out


def prefix_diameters(polygon: Polygon, p: PhasePoint, horizons: Sequence[int], resolution: int) -> list[float]:
    coding = encode_orbit(p, polygon, max(horizons))
    if coding.terminated:
        raise geometry.VertexHit((math.nan, math.nan))
    return [prefix_set(polygon, coding[:n], p.edge, "1d", resolution, p.theta).diameter_at(p.offset)
            for n in horizons]


def run_uniqueness(polygon: Polygon, seed: int = 0, p: PhasePoint | None = None,
                   horizons: Sequence[int] = (5, 10, 20, 40), resolution: int = 100000,
                   final_tol: float = 1e-3) -> ExperimentReport:
    if p is None:
        e = polygon.edges[0]
        p = PhasePoint(e.label, 0.3 * e.length, APERIODIC_THETA)
    diam = prefix_diameters(polygon, p, horizons, resolution)
    report = ExperimentReport("uniqueness", dict(seed=seed, edge=p.edge, offset=p.offset, theta=p.theta,
                                                 horizons=list(horizons), resolution=resolution,
                                                 final_tolerance=final_tol))
    for n, d in zip(horizons, diam):
        report.records.append(dict(horizon=n, diameter=d))
    report.verdicts["diameters_nonincreasing"] = all(b <= a for a, b in zip(diam, diam[1:]))
    report.verdicts["final_diameter_below_tolerance"] = diam[-1] < final_tol
    report.summary.append(f"prefix-set diameters {', '.join(f'{d:.3e}' for d in diam)}")
    return report


def run_divergence(polygon: Polygon, seed: int = 0, p: PhasePoint | None = None, delta: float = 1e-3,
                   lengths: Sequence[float] = tuple(range(10, 101, 10)), rel_tol: float = 0.2) -> ExperimentReport:
    if p is None:
        e = polygon.edges[0]
        p = PhasePoint(e.label, 0.3 * e.length, APERIODIC_THETA)
    prof = divergence_profile(p, delta, polygon, lengths)
    ratios = prof.ratios
    ref = float(np.median(ratios))
    report = ExperimentReport("divergence", dict(seed=seed, edge=p.edge, offset=p.offset, theta=p.theta,
                                                 delta=delta, rel_tolerance=rel_tol))
    for t, d, r in zip(prof.path_lengths, prof.distances, ratios):
        report.records.append(dict(path_length=float(t), distance=d, ratio=r))
    report.verdicts["ratio_positive"] = ref > 0
    report.verdicts["ratio_constant_within_tolerance"] = all(abs(r - ref) <= rel_tol * ref for r in ratios)
    report.summary.append(f"distance/length ratio ~ {ref:.6e}; codings agree up to path length "
                          f"{prof.common_length:.3f}")
    return report


def random_polygons(seed: int, count: int, n_holes: int | None = None, n_outer: int | None = None) -> list[Polygon]:
    rng = np.random.default_rng(seed)
    return [random_polygon(rng, n_outer=n_outer, n_holes=n_holes) for _ in range(count)]


RUNNERS: dict[str, Callable[..., ExperimentReport]] = {
    "commutation": run_commutation,
    "continuity": run_continuity,
    "unfolding": run_unfolding,
    "alternating": run_alternating,
    "uniqueness": run_uniqueness,
    "divergence": run_divergence,
}
