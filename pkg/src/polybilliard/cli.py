"""Command-line front end: ``polybilliard <command> ...``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .billiard import encode_orbit, format_orbit, iterate
from .coding import format_coding
from .geometry import GeometryError, Polygon, chain_width, hole_min_width, parse_polygon
from .partition import ComponentAtlas, PartitionError, format_atlas
from .phase import PhaseError, PhasePoint, check_on_edge
from .svg import corridor_svg, orbit_svg
from .symbolic import CodingsDiverge, alternating_coding
from .unfolding import build_corridor

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load_polygon(path: str | None) -> Polygon:
    if path is None:
        raise UsageError("--polygon is required")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return parse_polygon(text)
    except (GeometryError, ValueError) as exc:
        raise UsageError(f"invalid polygon {path}: {type(exc).__name__}: {exc}") from exc


def _phase_point(args, polygon: Polygon) -> PhasePoint:
    try:
        return check_on_edge(PhasePoint(args.edge, args.offset, args.theta), polygon)
    except (GeometryError, PhaseError) as exc:
        raise UsageError(f"bad initial condition: {type(exc).__name__}: {exc}") from exc


def _write(path: str, text: str) -> None:
    Path(path).write_text(text)


# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    if args.polygon is None:
        raise UsageError("--polygon is required")
    try:
        text = Path(args.polygon).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {args.polygon}: {exc.strerror}") from exc
    try:
        polygon = parse_polygon(text)
    except (GeometryError, ValueError) as exc:
        print(f"invalid {type(exc).__name__}: {exc}")
        return EXIT_FAIL
    for e in polygon.edges:
        (x0, y0), (x1, y1) = e.start, e.end
        print(f"edge {e.label} ({x0!r}, {y0!r}) ({x1!r}, {y1!r}) length={e.length!r}")
    if not polygon.holes:
        print("no holes")
    for k, hole in enumerate(polygon.holes):
        print(f"hole {k} width={chain_width(hole)!r}")
    if polygon.holes:
        print(f"min hole width={hole_min_width(polygon)!r}")
    print("valid")
    return EXIT_OK


def cmd_simulate(args) -> int:
    polygon = _load_polygon(args.polygon)
    p = _phase_point(args, polygon)
    orbit = iterate(p, polygon, args.bounces)
    sys.stdout.write(format_orbit(orbit))
    if args.svg:
        _write(args.svg, orbit_svg(polygon, orbit))
    return EXIT_OK


def cmd_code(args) -> int:
    polygon = _load_polygon(args.polygon)
    p = _phase_point(args, polygon)
    if args.partner_offset is None:
        coding = encode_orbit(p, polygon, args.length)
        print(format_coding(coding))
        if coding.terminated:
            print("# terminated at a vertex")
        return EXIT_OK
    q = _phase_point(argparse.Namespace(edge=args.edge, offset=args.partner_offset, theta=args.theta), polygon)
    try:
        alt = alternating_coding(p, q, polygon, args.length, atlas_resolution=args.resolution)
    except CodingsDiverge as exc:
        print(f"codings diverge at index {exc.index}")
        return EXIT_FAIL
    print(format_coding(alt.beta))
    print(f"# residual={alt.residual!r}")
    return EXIT_OK


def cmd_unfold(args) -> int:
    if not args.svg:
        raise UsageError("unfold needs --svg OUT")
    polygon = _load_polygon(args.polygon)
    p = _phase_point(args, polygon)
    corridor = build_corridor(p, polygon, args.bounces)
    _write(args.svg, corridor_svg(corridor))
    print(f"copies={len(corridor.isometries)} length={corridor.path_length()!r} truncated={corridor.truncated}")
    return EXIT_OK


def cmd_atlas(args) -> int:
    polygon = _load_polygon(args.polygon)
    pairs = None
    if args.pair:
        pairs = []
        for token in args.pair:
            a, sep, b = token.partition(">")
            if not sep:
                raise UsageError(f"pair must look like A>B, got {token!r}")
            pairs.append((a, b))
    try:
        atlas = ComponentAtlas(resolution=args.resolution, pairs=pairs).fit(polygon)
    except (PartitionError, GeometryError) as exc:
        print(f"error {type(exc).__name__}: {exc}")
        return EXIT_FAIL
    sys.stdout.write(format_atlas(atlas))
    return EXIT_OK


def _suite_point(args, polygon: Polygon) -> PhasePoint | None:
    if args.edge is None:
        return None
    e = polygon.edge(args.edge)
    offset = 0.3 * e.length if args.offset is None else args.offset
    theta = experiments.APERIODIC_THETA if args.theta is None else args.theta
    return _phase_point(argparse.Namespace(edge=args.edge, offset=offset, theta=theta), polygon)


def cmd_verify(args) -> int:
    suite = args.suite
    if suite not in experiments.SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from {', '.join(experiments.SUITES)}")
    tol = args.tolerance
    if suite in ("unfolding", "alternating"):
        if args.polygon:
            tables = [_load_polygon(args.polygon)]
        else:
            tables = experiments.random_polygons(args.seed, args.random)
        if suite == "unfolding":
            report = experiments.run_unfolding(tables, args.seed, args.samples or 10, args.horizon or 100, tol)
        else:
            report = experiments.run_alternating(tables, args.seed, args.samples or 100, args.horizon or 50, tol)
    else:
        polygon = _load_polygon(args.polygon)
        if suite == "commutation":
            report = experiments.run_commutation(polygon, args.seed, args.samples or 1000, tol)
        elif suite == "continuity":
            n = args.samples or 1000
            report = experiments.run_continuity(polygon, args.seed, n, 10 * n, tol=tol)
        elif suite == "uniqueness":
            horizons = experiments.doubling_horizons(5, args.horizon or 40)
            report = experiments.run_uniqueness(polygon, args.seed, _suite_point(args, polygon), horizons,
                                                args.resolution, args.final_tolerance)
        else:
            last = args.horizon or 100
            lengths = [float(t) for t in np.arange(10, last + 1, 10)]
            report = experiments.run_divergence(polygon, args.seed, _suite_point(args, polygon),
                                                args.delta, lengths)
    sys.stdout.write(report.render())
    return EXIT_OK if report.passed else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--polygon", help="polygon file (outer:/hole:/labels:/anchor: records)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tolerance", type=float, default=1e-9)
    common.add_argument("--svg", help="write an SVG picture to this path")

    start = argparse.ArgumentParser(add_help=False)
    start.add_argument("--edge", required=True)
    start.add_argument("--offset", type=float, required=True, help="distance from the edge start")
    start.add_argument("--theta", type=float, required=True, help="angle to the edge, radians")

    parser = argparse.ArgumentParser(prog="polybilliard", description="Billiards in polygons with holes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check a polygon file and list its edges")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", parents=[common, start], help="iterate the first-return map")
    p.add_argument("--bounces", type=int, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("code", parents=[common, start], help="edge coding, or cell coding of a parallel pair")
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--partner-offset", type=float, help="second start offset for the alternating coding")
    p.add_argument("--resolution", type=int, default=24, help="atlas grid for cell labels")
    p.set_defaults(func=cmd_code)

    p = sub.add_parser("unfold", parents=[common, start], help="render the unfolded corridor")
    p.add_argument("--bounces", type=int, required=True)
    p.set_defaults(func=cmd_unfold)

    p = sub.add_parser("atlas", parents=[common], help="connected components of each edge-pair region")
    p.add_argument("--resolution", type=int, default=40)
    p.add_argument("--pair", action="append", help="restrict to A>B (repeatable)")
    p.set_defaults(func=cmd_atlas)

    p = sub.add_parser("verify", parents=[common], help="run a seeded property suite")
    p.add_argument("--suite", required=True)
    p.add_argument("--horizon", type=int, help="bounces, coding length or largest path length")
    p.add_argument("--samples", type=int, help="sampled points, pairs or initial conditions")
    p.add_argument("--random", type=int, default=50, help="random tables when --polygon is absent")
    p.add_argument("--edge")
    p.add_argument("--offset", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--resolution", type=int, default=100000)
    p.add_argument("--final-tolerance", type=float, default=1e-3)
    p.add_argument("--delta", type=float, default=1e-3)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("bounces", "length"):
        if getattr(args, name, 0) is not None and getattr(args, name, 0) < 0:
            parser.error(f"--{name} must be nonnegative")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
