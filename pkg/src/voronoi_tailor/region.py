"""Regions: unions of disjoint convex polygons with a classified boundary.

A region A is a list of convex CCW parts A_1..A_p.  Edges shared between two
parts (seams) are interior to A and excluded from the exterior boundary; the
exterior boundary is split into maximal straight pieces, each carrying a unit
outward normal.  Built-in shapes come with the scaling factors used for the
reference experiment tables.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .errors import RegionError
from .geom import (
    EPS_GEOM,
    ConvexPolygon,
    Vec,
    centroid,
    cross,
    dist,
    dot,
    shoelace,
)

SEAM = ("seam",)


@dataclass(frozen=True)
class BoundaryEdge:
    """A maximal straight piece of the exterior boundary of A."""

    p0: Vec
    p1: Vec
    normal: Vec  # unit, outward
    id: int


class Region:
    """Union of disjoint convex polygons, with derived boundary structure."""

    def __init__(self, parts, name="custom", preset_factors=None):
        parts = tuple(
            p if isinstance(p, ConvexPolygon) else ConvexPolygon(tuple(map(tuple, p)))
            for p in parts
        )
        if not parts:
            raise RegionError("region needs at least one polygon")
        self.parts = parts
        self.name = name
        self.preset_factors = dict(preset_factors) if preset_factors else {}
        self.area = sum(shoelace(p.vertices) for p in parts)
        xs0 = min(p.bbox()[0] for p in parts)
        ys0 = min(p.bbox()[1] for p in parts)
        xs1 = max(p.bbox()[2] for p in parts)
        ys1 = max(p.bbox()[3] for p in parts)
        self.bbox = (xs0, ys0, xs1, ys1)
        self._check_disjoint_interiors()
        self._build_boundary()

    @property
    def p(self) -> int:
        return len(self.parts)

    def contains(self, pt: Vec) -> bool:
        return any(part.contains(pt) for part in self.parts)

    def _check_disjoint_interiors(self):
        """Cheap pairwise overlap test on sampled interior points."""
        samples = []
        for j, part in enumerate(self.parts):
            c = centroid(part.vertices)
            pts = [c]
            for v in part.vertices:
                pts.append((0.5 * (v[0] + c[0]), 0.5 * (v[1] + c[1])))
            samples.append(pts)
        for j in range(len(self.parts)):
            bj = self.parts[j].bbox()
            for k in range(j + 1, len(self.parts)):
                bk = self.parts[k].bbox()
                if bj[2] < bk[0] or bk[2] < bj[0] or bj[3] < bk[1] or bk[3] < bj[1]:
                    continue
                for pt in samples[j]:
                    if self.parts[k].contains(pt, tol=-EPS_GEOM):
                        raise RegionError(
                            f"parts {j} and {k} have overlapping interiors near {pt}"
                        )
                for pt in samples[k]:
                    if self.parts[j].contains(pt, tol=-EPS_GEOM):
                        raise RegionError(
                            f"parts {j} and {k} have overlapping interiors near {pt}"
                        )

    def _build_boundary(self):
        """Split part edges at vertices of other parts, then classify each
        sub-segment as seam (shared by two parts) or exterior boundary."""
        parts = self.parts
        all_verts = [v for part in parts for v in part.vertices]

        # interior breakpoints per (part, edge): list of (t, exact position)
        self._breakpoints = []
        segs = []  # (j, e, seg_idx, mid, t0, t1, pt0, pt1)
        for j, part in enumerate(parts):
            verts = part.vertices
            n = len(verts)
            per_edge = []
            for e in range(n):
                p0 = verts[e]
                p1 = verts[(e + 1) % n]
                ex, ey = p1[0] - p0[0], p1[1] - p0[1]
                L = math.hypot(ex, ey)
                ux, uy = ex / L, ey / L
                bps = []
                for v in all_verts:
                    wx, wy = v[0] - p0[0], v[1] - p0[1]
                    if abs(ux * wy - uy * wx) > EPS_GEOM:
                        continue
                    t = (ux * wx + uy * wy) / L
                    if EPS_GEOM / L < t < 1.0 - EPS_GEOM / L:
                        if all(abs(t - tb) * L > EPS_GEOM for tb, _ in bps):
                            bps.append((t, v))
                bps.sort(key=lambda item: item[0])
                per_edge.append(bps)
                knots = [(0.0, p0)] + bps + [(1.0, p1)]
                for s in range(len(knots) - 1):
                    t0, q0 = knots[s]
                    t1, q1 = knots[s + 1]
                    mid = (0.5 * (q0[0] + q1[0]), 0.5 * (q0[1] + q1[1]))
                    segs.append((j, e, s, mid, t0, t1, q0, q1))
            self._breakpoints.append(per_edge)

        # pair up sub-segments whose midpoints coincide: those are seams
        paired = [0] * len(segs)
        order = sorted(range(len(segs)), key=lambda i: (segs[i][3][0], segs[i][3][1]))
        for a in range(len(order)):
            ia = order[a]
            for b in range(a + 1, len(order)):
                ib = order[b]
                if segs[ib][3][0] - segs[ia][3][0] > EPS_GEOM:
                    break
                if dist(segs[ia][3], segs[ib][3]) <= EPS_GEOM:
                    if segs[ia][0] == segs[ib][0]:
                        raise RegionError(
                            f"part {segs[ia][0]} touches itself near {segs[ia][3]}"
                        )
                    paired[ia] += 1
                    paired[ib] += 1

        if any(c > 1 for c in paired):
            i = paired.index(max(paired))
            raise RegionError(f"more than two parts share a segment near {segs[i][3]}")

        self.boundary_edges = []
        intervals = [
            [[] for _ in range(len(part.vertices))] for part in parts
        ]
        corner_count = {}
        for idx, (j, e, _s, _mid, t0, t1, q0, q1) in enumerate(segs):
            if paired[idx]:
                intervals[j][e].append((t0, t1, SEAM))
                continue
            bid = len(self.boundary_edges)
            ex, ey = q1[0] - q0[0], q1[1] - q0[1]
            L = math.hypot(ex, ey)
            normal = (ey / L, -ex / L)
            self.boundary_edges.append(BoundaryEdge(q0, q1, normal, bid))
            intervals[j][e].append((t0, t1, ("bd", bid)))
            for q in (q0, q1):
                key = (round(q[0] / (4 * EPS_GEOM)), round(q[1] / (4 * EPS_GEOM)))
                corner_count.setdefault(key, [q, 0])[1] += 1
        self._edge_intervals = intervals

        bad = [v for v, c in corner_count.values() if c % 2]
        if bad:
            raise RegionError(f"exterior boundary is not closed near {bad[0]}")
        self.corners = [v for v, _c in corner_count.values()]

    def edge_intervals(self, j: int, e: int):
        """Sub-segments of part j's edge e as (t0, t1, label) with label
        ('bd', id) for exterior boundary or ('seam',)."""
        return self._edge_intervals[j][e]

    def edge_breakpoints(self, j: int, e: int):
        """Interior split points of part j's edge e as (t, position)."""
        return self._breakpoints[j][e]


def scale(region: Region, factor: float) -> Region:
    """Return the region with all coordinates multiplied by ``factor``."""
    if not (factor > 0.0) or not math.isfinite(factor):
        raise RegionError(f"scale factor must be positive, got {factor!r}")
    parts = [
        [(factor * x, factor * y) for x, y in part.vertices] for part in region.parts
    ]
    return Region(parts, name=region.name, preset_factors=region.preset_factors)


def suggest_scale(region: Region, kappa: int) -> float:
    """Factor making |A| approximately kappa, rounded to a multiple of 1/64."""
    if kappa < 1:
        raise RegionError("kappa must be >= 1")
    if region.area <= 0.0:
        raise RegionError("region has no area")
    return round(math.sqrt(kappa / region.area) * 64.0) / 64.0


# ---------------------------------------------------------------------------
# built-in regions

_LETTER_A = [
    # first vertex aligns vertically with the last, mirroring the right serif
    [(-0.1, 0), (8.2, 0), (8.2, 0.62), (6.92, 0.76), (1, 0.8), (-0.1, 0.6)],
    [(1, 0.8), (6.92, 0.76), (5.86, 1.32), (2, 1.5)],
    [(2, 1.5), (5.86, 1.32), (5.24, 2.65), (3.5, 4.36)],
    [(5.24, 2.65), (5.58, 4.36), (3.5, 4.36)],
    [(3.5, 4.36), (5.58, 4.36), (7.58, 9), (5.5, 9)],
    [(5.5, 9), (7.58, 9), (8.4, 10.91), (6.32, 10.91)],
    [(6.32, 10.91), (8.4, 10.91), (14.02, 23.95), (11.94, 23.95)],
    [(11.94, 23.95), (18.72, 23.95), (15.89, 30.56), (14.79, 30.56)],
    [(19.6, 10.91), (24.3, 10.91), (18.72, 23.95), (14.02, 23.95)],
    [(7.58, 9), (20.42, 9), (19.6, 10.91), (8.4, 10.91)],
    [(20.42, 9), (25.12, 9), (24.3, 10.91), (19.6, 10.91)],
    [(22.06, 5.15), (26.54, 6), (25.12, 9), (20.42, 9)],
    [(22.46, 2.26), (28.53, 2.3), (26.54, 6), (22.06, 5.15)],
    [(22.05, 1.2), (29.6, 1.22), (28.53, 2.3), (22.46, 2.26)],
    [(21.24, 0.82), (30.79, 0.74), (29.6, 1.22), (22.05, 1.2)],
    [(19.13, 0), (32.15, 0), (32.15, 0.6), (30.79, 0.74), (21.24, 0.82), (19.13, 0.6)],
]

_KEY = [
    [(0, 0), (0, -3.44), (2.49, -3.44), (3, -3), (3, 0)],
    [(0, -3.44), (0, -4.5), (1.58, -4.5), (2.49, -3.74), (2.49, -3.44)],
    [(0, -4.5), (0, -4.79), (1.58, -4.79), (1.58, -4.5)],
    [(0, -4.79), (0, -5.48), (1.87, -5.48), (2, -5.4), (2, -5.14), (1.58, -4.79)],
    [(0, -5.48), (0, -5.86), (1.87, -5.86), (1.87, -5.48)],
    [(0, -5.86), (0, -6.9), (2.26, -6.9), (2.42, -6.76), (2.42, -6.51), (1.87, -5.86)],
    [(0, -6.9), (0, -7.22), (2.26, -7.22), (2.26, -6.9)],
    [(0, -7.22), (0, -7.98), (2.1, -7.98), (2.43, -7.65), (2.43, -7.4), (2.26, -7.22)],
    [(0, -7.98), (0, -8.2), (2.1, -8.2), (2.1, -7.98)],
    [(0, -8.2), (0, -8.87), (2.26, -8.87), (2.43, -8.74), (2.43, -8.49), (2.1, -8.2)],
    [(0, -8.87), (0, -9.17), (2.26, -9.17), (2.26, -8.87)],
    [(0, -9.17), (0, -10.15), (1.87, -10.15), (2.43, -9.62), (2.43, -9.28), (2.26, -9.17)],
    [(0, -10.15), (0, -10.5), (0.37, -10.9), (0.94, -10.9), (1.87, -10.35), (1.87, -10.15)],
    [(0.94, -10.9), (1.29, -11.35), (1.86, -11.12), (2.26, -10.7), (1.87, -10.35)],
    [(0.85, 6.06), (0.58, 6.68), (-0.51, 6.53), (-3, 6), (-3.6, 3.5), (-3, 0.7), (0, 0)],
    [(1.5, 5.86), (0.85, 6.06), (0, 0), (3, 0)],
    [(1.5, 5.86), (3, 0), (2.15, 6.06)],
    [(2.15, 6.06), (3, 0), (6, 0.7), (6.6, 3.35), (6, 6), (3.51, 6.53), (2.42, 6.68)],
    [(0.58, 6.68), (0.85, 7.3), (0.69, 8.16), (0, 7.62), (-0.51, 6.53)],
    [(0.85, 7.3), (1.5, 7.5), (1.5, 8.5), (0.69, 8.16)],
    [(1.5, 7.5), (2.15, 7.3), (2.31, 8.16), (1.5, 8.5)],
    [(2.42, 6.68), (3.51, 6.53), (3, 7.62), (2.31, 8.16), (2.15, 7.3)],
]

_HEXAGON = [
    [(0.65, 2.31), (-1.98, 2.71), (-3.35, 1.64), (-2.59, -0.34), (-0.22, -1.07), (0.54, 0.72)],
]


def _regular_polygon_verts(n=20):
    return [
        (math.cos(2.0 * math.pi * i / n), math.sin(2.0 * math.pi * i / n))
        for i in range(n)
    ]


@dataclass(frozen=True)
class RegionPreset:
    name: str
    parts: tuple
    paper_scaling_factors: dict = field(default_factory=dict)


PRESETS = {
    "letter_a": RegionPreset(
        "letter_a",
        tuple(map(tuple, _LETTER_A)),
        {100: 0.65625, 1000: 2.07812},
    ),
    "key": RegionPreset(
        "key",
        tuple(map(tuple, _KEY)),
        {100: 1.0625, 1000: 3.36719},
    ),
    "regular_polygon": RegionPreset(
        "regular_polygon",
        (tuple(_regular_polygon_verts()),),
        {
            100: 5.70312,
            500: 12.7188,
            1000: 17.9531,
            5000: 40.375,
            10000: 57.1094,
            20000: 80.375,
            30000: 98.2344,
            40000: 114.109,
            50000: 127.008,
        },
    ),
    "convex_hexagon": RegionPreset(
        "convex_hexagon",
        tuple(map(tuple, _HEXAGON)),
        {100: 3.0625, 1000: 9.67188},
    ),
}


def builtin(name: str) -> Region:
    """One of the built-in regions: letter_a, key, regular_polygon,
    convex_hexagon."""
    try:
        preset = PRESETS[name]
    except KeyError:
        raise RegionError(
            f"unknown region preset {name!r}; available: {sorted(PRESETS)}"
        ) from None
    return Region(preset.parts, name=preset.name, preset_factors=preset.paper_scaling_factors)


# ---------------------------------------------------------------------------
# region text files

def load(path) -> Region:
    """Read a region file.

    Format: first a line with the polygon count p; then, for each polygon,
    a line with its vertex count m followed by m lines "x y" in CCW order.
    '#' starts a comment; tokens may be split across lines arbitrarily.
    """
    tokens = []  # (line_number, token)
    with open(path, "r", encoding="ascii") as fh:
        for ln, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0]
            for tok in body.split():
                tokens.append((ln, tok))

    pos = 0

    def next_token(what):
        nonlocal pos
        if pos >= len(tokens):
            last = tokens[-1][0] if tokens else 1
            raise RegionError(f"{path}: line {last}: unexpected end of file, expected {what}")
        ln, tok = tokens[pos]
        pos += 1
        return ln, tok

    def next_int(what):
        ln, tok = next_token(what)
        try:
            return ln, int(tok)
        except ValueError:
            raise RegionError(f"{path}: line {ln}: expected {what}, got {tok!r}") from None

    def next_float(what):
        ln, tok = next_token(what)
        try:
            return ln, float(tok)
        except ValueError:
            raise RegionError(f"{path}: line {ln}: expected {what}, got {tok!r}") from None

    _, p = next_int("polygon count")
    if p < 1:
        raise RegionError(f"{path}: polygon count must be >= 1, got {p}")
    parts = []
    for j in range(p):
        ln, m = next_int(f"vertex count of polygon {j}")
        if m < 3:
            raise RegionError(f"{path}: line {ln}: polygon {j} needs >= 3 vertices, got {m}")
        verts = []
        for _ in range(m):
            _, x = next_float(f"x coordinate (polygon {j})")
            _, y = next_float(f"y coordinate (polygon {j})")
            verts.append((x, y))
        if shoelace(verts) < 0.0:
            warnings.warn(
                f"{path}: polygon {j} is clockwise, reversing", stacklevel=2
            )
            verts.reverse()
        try:
            parts.append(ConvexPolygon(tuple(verts)))
        except Exception as exc:
            raise RegionError(f"{path}: polygon {j}: {exc}") from exc
    if pos != len(tokens):
        ln, tok = tokens[pos]
        raise RegionError(f"{path}: line {ln}: trailing data {tok!r}")
    return Region(parts, name=str(path))
