"""Deterministic SVG rendering of diagrams.

Cells are drawn as their convex pieces, sites as dots.  Optional modes:

* ``j2_balance`` / ``j3_balance``: shade each cell by how many sweep values
  of the balance tolerance it violates (5 blue tones, darker = more
  unbalanced),
* ``j4_segments``: draw the segment between the midpoints of each Voronoi
  edge and its Delaunay edge in blue.

Output bytes depend only on the diagram (fixed float formatting), so equal
inputs give byte-identical files.
"""

from __future__ import annotations

from .diagram import Diagram, cell_edges
from .errors import MeritError

# light to dark blues; index 0 is used for "no violation"
_BLUES = ["#deebf7", "#9ecae1", "#6baed6", "#3182bd", "#08519c"]

_J2_SWEEP = (0.1, 0.2, 0.3, 0.4, 0.5)
_J3_SWEEP = (0.3, 0.4, 0.5, 0.6, 0.7)

COLOR_MODES = ("none", "j2_balance", "j3_balance", "j4_segments")


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _cell_violation_tones(diagram: Diagram, which: str):
    """Per cell, how many sweep tolerances the cell violates (0..5)."""
    from .merit import _cell_angles  # local import to avoid a cycle

    tones = []
    for i in range(diagram.kappa):
        edges = cell_edges(diagram, i)
        if not edges:
            tones.append(0)
            continue
        if which == "j2":
            per = sum(e.length for e in edges)
            ebar = per / len(edges)
            ratios = [e.length / ebar for e in edges]
            sweep = _J2_SWEEP
        else:
            _taus, thetas = _cell_angles(edges, i)
            vals = [t for t in thetas if t is not None]
            if not vals:
                tones.append(0)
                continue
            tbar = sum(vals) / len(vals)
            ratios = [t / tbar for t in vals]
            sweep = _J3_SWEEP
        rmin = min(ratios)
        tones.append(sum(1 for c in sweep if rmin < c))
    return tones


def render_svg(diagram: Diagram, color: str = "none", width: int = 720) -> str:
    """Render the diagram to an SVG string."""
    if color not in COLOR_MODES:
        raise MeritError(f"unknown color mode {color!r}; pick from {COLOR_MODES}")
    x0, y0, x1, y1 = diagram.region.bbox
    pad = 0.02 * max(x1 - x0, y1 - y0)
    x0 -= pad
    y0 -= pad
    x1 += pad
    y1 += pad
    w = x1 - x0
    h = y1 - y0
    height = int(round(width * h / w))
    stroke = 0.0015 * max(w, h)
    dot = 0.003 * max(w, h)

    tones = None
    if color in ("j2_balance", "j3_balance"):
        tones = _cell_violation_tones(diagram, color[:2])

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="{_fmt(x0)} {_fmt(-y1)} {_fmt(w)} {_fmt(h)}">',
        # flip y so the math orientation (y up) renders upright
        '<g transform="scale(1,-1)">',
    ]
    for i, pieces in enumerate(diagram.cells):
        if tones is not None and tones[i] > 0:
            fill = _BLUES[tones[i] - 1]
        else:
            fill = "#ffffff"
        for piece in pieces:
            pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in piece.verts)
            lines.append(
                f'<polygon points="{pts}" fill="{fill}" stroke="#000000" '
                f'stroke-width="{_fmt(stroke)}"/>'
            )
    if color == "j4_segments":
        for i in range(diagram.kappa):
            for e in cell_edges(diagram, i):
                if e.kind[0] != "int" or e.kind[1] < i:
                    continue
                lines.append(
                    f'<line x1="{_fmt(e.p_mid[0])}" y1="{_fmt(e.p_mid[1])}" '
                    f'x2="{_fmt(e.q_mid[0])}" y2="{_fmt(e.q_mid[1])}" '
                    f'stroke="#1f4fff" stroke-width="{_fmt(2.0 * stroke)}"/>'
                )
    for x, y in diagram.sites:
        lines.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(dot)}" fill="#000000"/>'
        )
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_dump(diagram: Diagram) -> str:
    """Text dump of the diagram: per cell, CCW pieces with vertex class and
    edge kind tags, 17-significant-digit coordinates."""
    out = [
        "# voronoi-tailor diagram dump",
        f"kappa {diagram.kappa}",
        f"parts {diagram.region.p}",
        f"region_area {diagram.region.area:.17g}",
    ]
    for i, pieces in enumerate(diagram.cells):
        out.append(f"cell {i} pieces {len(pieces)} area {float(diagram.areas[i]):.17g}")
        for piece in pieces:
            out.append(f"piece part {piece.part} nverts {len(piece.verts)} area {piece.area:.17g}")
            for v, cls, kind in zip(piece.verts, piece.vclasses, piece.ekinds):
                out.append(f"v {v[0]:.17g} {v[1]:.17g} " + " ".join(str(t) for t in cls))
                out.append("e " + " ".join(str(t) for t in kind))
    return "\n".join(out) + "\n"
