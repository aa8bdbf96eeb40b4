"""Plain SVG renders of tables, orbits and unfolded corridors.

Coordinates are written unchanged (six decimals); a ``scale(1,-1)`` group
flips the picture so that y points up.
"""

from __future__ import annotations

from typing import Iterable, Sequence
from xml.sax.saxutils import quoteattr

from .billiard import Orbit, Termination
from .geometry import Point, Polygon
from .phase import to_ambient
from .unfolding import Corridor

STYLE = (
    ".copy{fill:#f4f4f4;stroke:#444;stroke-width:0.01}"
    ".hole{fill:#bbb;stroke:#444;stroke-width:0.01}"
    ".trajectory{fill:none;stroke:#c03;stroke-width:0.01}"
    ".vertex{fill:#222}"
)


def _num(v: float) -> str:
    return f"{round(float(v), 6) + 0.0:.6f}"


def _pts(chain: Iterable[Point]) -> str:
    return " ".join(f"{_num(x)},{_num(y)}" for x, y in chain)


def _frame(points: Sequence[Point], body: list[str], margin: float = 0.05) -> str:
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    w, h = max(xs) - min(xs), max(ys) - min(ys)
    pad = margin * max(w, h, 1e-9)
    box = (min(xs) - pad, -(max(ys) + pad), w + 2 * pad, h + 2 * pad)
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="' + " ".join(_num(v) for v in box) + '">',
        f"<style>{STYLE}</style>",
        '<g transform="scale(1,-1)">',
    ]
    return "\n".join(head + body + ["</g>", "</svg>"]) + "\n"


def _table(polygon: Polygon, copy: int | None = None) -> list[str]:
    tag = "" if copy is None else f' data-copy="{copy}"'
    out = [f'<polygon class="copy"{tag} points="{_pts(polygon.outer)}"/>']
    out += [f'<polygon class="hole"{tag} points="{_pts(h)}"/>' for h in polygon.holes]
    return out


def _dots(points: Iterable[Point], r: float) -> list[str]:
    return [f'<circle class="vertex" cx="{_num(x)}" cy="{_num(y)}" r="{_num(r)}"/>' for x, y in points]


def corridor_svg(corridor: Corridor) -> str:
    """One ``copy`` polygon per corridor copy, holes filled, a single trajectory polyline."""
    body: list[str] = []
    every: list[Point] = []
    copies = [corridor.copy_polygon(k) for k, _ in corridor.copies]
    for k, q in enumerate(copies):
        body += _table(q, k)
        every += list(q.vertices)
    line = corridor.polyline
    every += line
    if line:
        body.append(f'<polyline class="trajectory" points="{_pts(line)}"/>')
    r = 0.004 * max(1.0, corridor.polygon.diameter)
    for q in copies:
        body += _dots(q.vertices, r)
    return _frame(every, body)


def orbit_svg(polygon: Polygon, orbit: Orbit, title: str | None = None) -> str:
    """The folded trajectory inside the table."""
    pts = [to_ambient(p, polygon)[0] for p in orbit.phases]
    if orbit.terminated is Termination.VERTEX_HIT:
        pts.append(orbit.vertex)
    body = _table(polygon)
    if title is not None:
        body.insert(0, f"<title>{quoteattr(title)[1:-1]}</title>")
    if len(pts) > 1:
        body.append(f'<polyline class="trajectory" points="{_pts(pts)}"/>')
    body += _dots(polygon.vertices, 0.004 * max(1.0, polygon.diameter))
    return _frame(list(polygon.vertices) + pts, body)


__all__ = ["corridor_svg", "orbit_svg"]
