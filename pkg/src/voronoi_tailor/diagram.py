"""Clipped Voronoi diagrams with classified vertices and edges.

Each cell V_i = W_i cap A is assembled piece by piece: every convex part A_j
of the region is clipped by the dominance half-planes of site i's Delaunay
neighbors (validated afterwards against all sites, with a full re-clip as
fallback).  Clip provenance tags let us classify every piece vertex:

* ``('Y', l1, l2)`` interior vertex where cells i, l1, l2 meet (the
  circumcenter of the three sites; l1 across the incoming edge, l2 across
  the outgoing edge, which is the CCW order of the cells around it),
* ``('X', l, b)`` boundary vertex where cells i and l meet on boundary
  edge b,
* ``('T',)`` a fixed point of the region (corner of the boundary or of an
  internal seam) that does not move with the sites,
* ``('S', k)`` the point where the bisector with cell k crosses an internal
  seam (an interior point of the true cell edge, not a diagram vertex).

Edge kinds are ``('int', k)``, ``('bd', b)`` and ``('seam',)``; seam edges
separate two pieces of the same cell and never enter merit sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .delaunay import Delaunay, build_delaunay
from .errors import RegularityError
from .geom import EPS_GEOM, clip_tagged, dist, shoelace
from .region import Region

# Regularity margin: gradient formulas divide by determinants; below this
# margin finite-difference validation is meaningless.
EPS_REG = 1e-7

_CUT = ("cut",)


@dataclass
class Piece:
    """One convex piece V_ij = W_i cap A_j of a cell, CCW."""

    part: int
    verts: list
    vclasses: list
    ekinds: list
    area: float


@dataclass
class Diagram:
    sites: np.ndarray
    region: Region
    delaunay: Delaunay
    cells: list  # cells[i] = list of Piece
    areas: np.ndarray = field(init=False)

    def __post_init__(self):
        self.areas = np.array(
            [sum(p.area for p in pieces) for pieces in self.cells]
        )

    @property
    def kappa(self) -> int:
        return len(self.sites)


def _halfplanes(sites_list, i, nbrs):
    """Unit-normal dominance half-planes {x : n.x <= c} of cell i."""
    ax, ay = sites_list[i]
    hps = []
    for k in nbrs:
        bx, by = sites_list[k]
        dx = bx - ax
        dy = by - ay
        d = math.hypot(dx, dy)
        nx = dx / d
        ny = dy / d
        c = (nx * (ax + bx) + ny * (ay + by)) * 0.5
        hps.append((nx, ny, c, k))
    return hps


def _clip_piece(base_verts, base_srcs, hps):
    """Clip one region part by the given half-planes; returns (verts, esrcs)
    or None when empty."""
    verts = base_verts
    srcs = base_srcs
    tags = base_srcs  # vertex tags are unused here; any aligned list works
    for nx, ny, c, k in hps:
        res = clip_tagged(verts, tags, srcs, nx, ny, c, _CUT, ("bis", k))
        if res is None:
            return None
        verts, tags, srcs = res
    return verts, srcs


def _finalize_piece(region, j, verts, srcs):
    """Split region-edge runs at seam/boundary breakpoints and classify."""
    out_v = []
    out_k = []
    fixed = []
    m = len(verts)
    part = region.parts[j].vertices
    npart = len(part)
    for idx in range(m):
        va = verts[idx]
        vb = verts[(idx + 1) % m]
        src = srcs[idx]
        if src[0] == "bis":
            out_v.append(va)
            out_k.append(("int", src[1]))
            fixed.append(False)
            continue
        e = src[1]
        intervals = region.edge_intervals(j, e)
        if len(intervals) == 1:
            out_v.append(va)
            kind = intervals[0][2]
            out_k.append(kind if kind[0] == "bd" else ("seam",))
            fixed.append(False)
            continue
        p0 = part[e]
        p1 = part[(e + 1) % npart]
        ex = p1[0] - p0[0]
        ey = p1[1] - p0[1]
        L2 = ex * ex + ey * ey
        ta = ((va[0] - p0[0]) * ex + (va[1] - p0[1]) * ey) / L2
        tb = ((vb[0] - p0[0]) * ex + (vb[1] - p0[1]) * ey) / L2
        eps_t = EPS_GEOM / math.sqrt(L2)
        cur = va
        cur_t = ta
        first = True
        for tbp, pos in region.edge_breakpoints(j, e):
            if tbp <= ta + eps_t or tbp >= tb - eps_t:
                continue
            label = _interval_label(intervals, 0.5 * (cur_t + tbp))
            out_v.append(cur)
            out_k.append(label)
            fixed.append(not first)
            cur = pos
            cur_t = tbp
            first = False
        label = _interval_label(intervals, 0.5 * (cur_t + tb))
        out_v.append(cur)
        out_k.append(label)
        fixed.append(not first)

    vclasses = []
    mm = len(out_v)
    for idx in range(mm):
        if fixed[idx]:
            vclasses.append(("T",))
            continue
        kin = out_k[idx - 1]
        kout = out_k[idx]
        a = kin[0]
        b = kout[0]
        if a == "int":
            if b == "int":
                vclasses.append(("Y", kin[1], kout[1]))
            elif b == "bd":
                vclasses.append(("X", kin[1], kout[1]))
            else:
                vclasses.append(("S", kin[1]))
        elif b == "int":
            if a == "bd":
                vclasses.append(("X", kout[1], kin[1]))
            else:
                vclasses.append(("S", kout[1]))
        else:
            vclasses.append(("T",))

    return Piece(j, out_v, vclasses, out_k, shoelace(out_v))


def _interval_label(intervals, t):
    for t0, t1, label in intervals:
        if t0 <= t <= t1:
            return label if label[0] == "bd" else ("seam",)
    # t outside due to rounding at the ends: clamp to nearest interval
    label = intervals[0][2] if t < intervals[0][0] else intervals[-1][2]
    return label if label[0] == "bd" else ("seam",)


def _whole_part_piece(region, j):
    part = region.parts[j].vertices
    verts = list(part)
    srcs = [("reg", e) for e in range(len(part))]
    return _finalize_piece(region, j, verts, srcs)


def _build_cell(region, sites_list, i, nbrs, part_data, use_prefilter):
    """All pieces of cell i, clipping each region part by i's half-planes."""
    hps = _halfplanes(sites_list, i, nbrs)
    pieces = []
    if use_prefilter and hps:
        # clip a box around the whole region to bound W_i, then skip parts
        # whose bounding box cannot meet it
        x0, y0, x1, y1 = region.bbox
        mx = 1.0 + 0.125 * (x1 - x0 + y1 - y0)
        box = [(x0 - mx, y0 - mx), (x1 + mx, y0 - mx), (x1 + mx, y1 + mx), (x0 - mx, y1 + mx)]
        srcs = [("box", e) for e in range(4)]
        res = _clip_piece(box, srcs, hps)
        if res is None:
            return pieces
        wverts = res[0]
        wx0 = min(v[0] for v in wverts) - EPS_GEOM
        wy0 = min(v[1] for v in wverts) - EPS_GEOM
        wx1 = max(v[0] for v in wverts) + EPS_GEOM
        wy1 = max(v[1] for v in wverts) + EPS_GEOM
        for j, (verts, srcs, bb) in enumerate(part_data):
            if bb[0] > wx1 or bb[2] < wx0 or bb[1] > wy1 or bb[3] < wy0:
                continue
            res = _clip_piece(verts, srcs, hps)
            if res is not None:
                pieces.append(_finalize_piece(region, j, res[0], res[1]))
    else:
        for j, (verts, srcs, _bb) in enumerate(part_data):
            if not hps:
                pieces.append(_whole_part_piece(region, j))
                continue
            res = _clip_piece(verts, srcs, hps)
            if res is not None:
                pieces.append(_finalize_piece(region, j, res[0], res[1]))
    return pieces


def build_diagram(sites, region: Region, delaunay: Delaunay | None = None) -> Diagram:
    """Clip the Voronoi diagram of ``sites`` to ``region``.

    Deterministic: identical sites and region give bit-identical output.
    """
    sites = np.asarray(sites, dtype=float)
    if sites.ndim != 2 or sites.shape[1] != 2:
        raise RegularityError(f"sites must have shape (kappa, 2), got {sites.shape}")
    kappa = len(sites)
    if delaunay is None:
        delaunay = build_delaunay(sites)
    if delaunay.is_chain and kappa > 2:
        raise RegularityError(
            f"all {kappa} sites are collinear; the diagram is degenerate"
        )

    sites_list = [(float(x), float(y)) for x, y in sites]
    part_data = []
    for j, part in enumerate(region.parts):
        verts = list(part.vertices)
        srcs = [("reg", e) for e in range(len(verts))]
        part_data.append((verts, srcs, part.bbox()))

    use_prefilter = region.p > 1
    cells = []
    for i in range(kappa):
        nbrs = delaunay.neighbors[i]
        cells.append(_build_cell(region, sites_list, i, nbrs, part_data, use_prefilter))

    if kappa >= 3:
        _validate_cells(sites, sites_list, region, cells, part_data)

    return Diagram(sites, region, delaunay, cells)


def _validate_cells(sites, sites_list, region, cells, part_data):
    """Check that no site dominates a foreign cell vertex; re-clip offending
    cells against all sites (only possible near degeneracy)."""
    pts = []
    owner = []
    for i, pieces in enumerate(cells):
        for piece in pieces:
            for v in piece.verts:
                pts.append(v)
                owner.append(i)
    if not pts:
        return
    pts = np.asarray(pts)
    owner = np.asarray(owner)
    dmin, _ = cKDTree(sites).query(pts, k=1)
    own = np.hypot(
        pts[:, 0] - sites[owner, 0], pts[:, 1] - sites[owner, 1]
    )
    bad = own - dmin > 1e-8 * (1.0 + own)
    if not bad.any():
        return
    all_idx = range(len(sites))
    for i in sorted(set(owner[bad].tolist())):
        nbrs = [k for k in all_idx if k != i]
        cells[i] = _build_cell(region, sites_list, i, nbrs, part_data, region.p > 1)


# ---------------------------------------------------------------------------
# derived per-cell quantities


@dataclass
class EdgeInfo:
    """One non-seam edge of a cell, with the data the merit terms consume."""

    piece: int
    index: int  # edge index within the piece
    v: tuple
    w: tuple
    v_class: tuple
    w_class: tuple
    kind: tuple
    length: float
    p_mid: tuple  # midpoint of the edge
    q_mid: tuple | None  # midpoint of the Delaunay edge (interior only)


def cell_edges(diagram: Diagram, i: int):
    """EdgeInfo list for every interior/boundary edge of cell i."""
    out = []
    ax = float(diagram.sites[i, 0])
    ay = float(diagram.sites[i, 1])
    for pi, piece in enumerate(diagram.cells[i]):
        m = len(piece.verts)
        for e in range(m):
            kind = piece.ekinds[e]
            if kind[0] == "seam":
                continue
            v = piece.verts[e]
            w = piece.verts[(e + 1) % m]
            q = None
            if kind[0] == "int":
                bx = float(diagram.sites[kind[1], 0])
                by = float(diagram.sites[kind[1], 1])
                q = (0.5 * (ax + bx), 0.5 * (ay + by))
            out.append(
                EdgeInfo(
                    pi,
                    e,
                    v,
                    w,
                    piece.vclasses[e],
                    piece.vclasses[(e + 1) % m],
                    kind,
                    dist(v, w),
                    (0.5 * (v[0] + w[0]), 0.5 * (v[1] + w[1])),
                    q,
                )
            )
    return out


@dataclass
class CellStats:
    area: float
    perimeter: float
    n_edges: int
    edges: list


def cell_stats(diagram: Diagram, i: int) -> CellStats:
    """Aggregate quantities of cell i used by the merit functions."""
    edges = cell_edges(diagram, i)
    return CellStats(
        area=float(diagram.areas[i]),
        perimeter=sum(e.length for e in edges),
        n_edges=len(edges),
        edges=edges,
    )


# ---------------------------------------------------------------------------
# regularity diagnostics


@dataclass
class Violation:
    kind: str
    where: tuple
    message: str


@dataclass
class RegularityReport:
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_regularity(diagram: Diagram, margin: float = EPS_REG) -> RegularityReport:
    """Check the computable regularity assumptions at this configuration.

    An empty report means the sensitivity formulas are trustworthy here:
    pairwise-distinct sites, no vertex shared by four cells, no diagram
    vertex within ``margin`` of a region corner, no interior edge shorter
    than ``margin``.
    """
    sites = diagram.sites
    out = []
    tree = cKDTree(sites)
    for a, b in sorted(tree.query_pairs(margin)):
        out.append(
            Violation("duplicate_sites", (a, b), f"sites {a} and {b} closer than {margin}")
        )

    corner_tree = None
    if diagram.region.corners:
        corner_tree = cKDTree(np.asarray(diagram.region.corners))

    for i, pieces in enumerate(diagram.cells):
        for piece in pieces:
            m = len(piece.verts)
            for e in range(m):
                v = piece.verts[e]
                cls = piece.vclasses[e]
                if cls[0] == "Y":
                    r = math.hypot(v[0] - sites[i][0], v[1] - sites[i][1])
                    close = tree.query_ball_point(v, r + margin)
                    if len(close) > 3:
                        out.append(
                            Violation(
                                "vertex_degree",
                                (i,) + cls[1:],
                                f"vertex {v} of cell {i} has {len(close)} cocircular sites",
                            )
                        )
                elif cls[0] == "X":
                    r = math.hypot(v[0] - sites[i][0], v[1] - sites[i][1])
                    close = tree.query_ball_point(v, r + margin)
                    if len(close) > 2:
                        out.append(
                            Violation(
                                "boundary_vertex_degree",
                                (i, cls[1]),
                                f"boundary vertex {v} of cell {i} has {len(close)} equidistant sites",
                            )
                        )
                if cls[0] in ("Y", "X") and corner_tree is not None:
                    if corner_tree.query_ball_point(v, margin):
                        out.append(
                            Violation(
                                "vertex_near_corner",
                                (i,),
                                f"diagram vertex {v} within {margin} of a region corner",
                            )
                        )
                kind = piece.ekinds[e]
                if kind[0] == "int":
                    w = piece.verts[(e + 1) % m]
                    if dist(v, w) < margin:
                        out.append(
                            Violation(
                                "short_edge",
                                (i, kind[1]),
                                f"edge of cells ({i},{kind[1]}) shorter than {margin}",
                            )
                        )
    return RegularityReport(out)
