"""Elementary planar geometry: points, convex polygons, half-plane clipping.

Points are plain ``(x, y)`` float tuples so the clipping loops stay cheap;
polygons are immutable vertex sequences in counterclockwise (CCW) order.
The clip keeps provenance: every output vertex is either an input vertex or
an intersection with the clip line, and every output edge remembers which
input edge (or which clip line) it lies on.  Downstream vertex classification
relies on these tags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import GeometryError

# Absolute tolerance for coincidence / on-line tests.  Coordinates in this
# package stay below a few hundred (regions are scaled to area <= 5e4).
EPS_GEOM = 1e-9

# Clipped slivers below this area are treated as empty.
EPS_AREA = EPS_GEOM * EPS_GEOM

Vec = tuple[float, float]


def perp(v: Vec) -> Vec:
    """Rotate ``v`` by +90 degrees (CCW): (x, y) -> (-y, x)."""
    return (-v[1], v[0])


def dot(u: Vec, v: Vec) -> float:
    return u[0] * v[0] + u[1] * v[1]


def cross(u: Vec, v: Vec) -> float:
    return u[0] * v[1] - u[1] * v[0]


def norm(v: Vec) -> float:
    return math.hypot(v[0], v[1])


def dist(p: Vec, q: Vec) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def _is_finite_pair(p) -> bool:
    return (
        len(p) == 2
        and math.isfinite(float(p[0]))
        and math.isfinite(float(p[1]))
    )


def shoelace(verts: Sequence[Vec]) -> float:
    """Signed area of a closed polygon (positive for CCW)."""
    n = len(verts)
    if n < 3:
        return 0.0
    s = 0.0
    x1, y1 = verts[-1]
    for x2, y2 in verts:
        s += x1 * y2 - x2 * y1
        x1, y1 = x2, y2
    return 0.5 * s


@dataclass(frozen=True)
class ConvexPolygon:
    """Strictly convex polygon with CCW vertex order.

    Validation is tolerant up to ``EPS_GEOM``: consecutive near-duplicate
    vertices and reflex corners are rejected, near-collinear corners pass.
    """

    vertices: tuple[Vec, ...]

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise GeometryError(f"polygon needs >= 3 vertices, got {len(verts)}")
        for p in verts:
            if not _is_finite_pair(p):
                raise GeometryError(f"non-finite vertex {p!r}")
        n = len(verts)
        for i in range(n):
            if dist(verts[i], verts[(i + 1) % n]) <= EPS_GEOM:
                raise GeometryError(f"repeated vertex near {verts[i]!r}")
        area = shoelace(verts)
        if area <= 0.0:
            raise GeometryError("polygon is not CCW (signed area <= 0)")
        for i in range(n):
            a, b, c = verts[i - 1], verts[i], verts[(i + 1) % n]
            e1 = (b[0] - a[0], b[1] - a[1])
            e2 = (c[0] - b[0], c[1] - b[1])
            turn = cross(e1, e2)
            if turn < -EPS_GEOM * norm(e1) * norm(e2):
                raise GeometryError(f"polygon is not convex at vertex {b!r}")

    @property
    def n(self) -> int:
        return len(self.vertices)

    def bbox(self) -> tuple[float, float, float, float]:
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return (min(xs), min(ys), max(xs), max(ys))

    def contains(self, p: Vec, tol: float = 0.0) -> bool:
        """True if ``p`` lies inside (or within ``tol`` of) the polygon."""
        verts = self.vertices
        n = len(verts)
        for i in range(n):
            a, b = verts[i], verts[(i + 1) % n]
            if cross((b[0] - a[0], b[1] - a[1]), (p[0] - a[0], p[1] - a[1])) < -tol:
                return False
        return True


def signed_area(poly) -> float:
    """Shoelace area; positive for CCW input, 0 for degenerate input."""
    verts = poly.vertices if isinstance(poly, ConvexPolygon) else poly
    return shoelace(verts)


def perimeter(poly) -> float:
    verts = poly.vertices if isinstance(poly, ConvexPolygon) else poly
    n = len(verts)
    return sum(dist(verts[i], verts[(i + 1) % n]) for i in range(n))


def centroid(verts: Sequence[Vec]) -> Vec:
    """Area centroid of a CCW polygon."""
    a = 0.0
    cx = 0.0
    cy = 0.0
    n = len(verts)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        w = x1 * y2 - x2 * y1
        a += w
        cx += (x1 + x2) * w
        cy += (y1 + y2) * w
    if abs(a) < EPS_AREA:
        xs = [v[0] for v in verts]
        ys = [v[1] for v in verts]
        return (sum(xs) / n, sum(ys) / n)
    return (cx / (3.0 * a), cy / (3.0 * a))


@dataclass(frozen=True)
class HalfPlane:
    """Half-plane {x : n . x <= c} with unit normal ``n``."""

    nx: float
    ny: float
    c: float
    id: object = None

    def __post_init__(self):
        nn = math.hypot(self.nx, self.ny)
        if not math.isfinite(nn) or nn == 0.0:
            raise GeometryError("half-plane normal must be nonzero and finite")
        if abs(nn - 1.0) > 1e-12:
            raise GeometryError("half-plane normal must have unit norm")

    @staticmethod
    def from_normal(n: Vec, c: float, id: object = None) -> "HalfPlane":
        """Build from an arbitrary nonzero normal, normalizing n and c."""
        nn = math.hypot(n[0], n[1])
        if nn == 0.0 or not math.isfinite(nn):
            raise GeometryError("half-plane normal must be nonzero and finite")
        return HalfPlane(n[0] / nn, n[1] / nn, c / nn, id)

    def signed_dist(self, p: Vec) -> float:
        return self.nx * p[0] + self.ny * p[1] - self.c


def clip_tagged(verts, vtags, esrcs, nx, ny, c, cut_tag, cut_src, eps=EPS_GEOM):
    """Clip a CCW polygon with provenance by the half-plane n.x <= c.

    ``verts[i]`` carries vertex tag ``vtags[i]`` and ``esrcs[i]`` labels the
    edge from ``verts[i]`` to ``verts[i+1]``.  New intersection vertices are
    tagged ``cut_tag``; new edges along the clip line are labeled
    ``cut_src``.  Returns ``(verts, vtags, esrcs)`` or ``None`` when the
    result is empty.  The input lists are never mutated; when no vertex is
    cut away the same list objects are returned.
    """
    m = len(verts)
    ds = [nx * v[0] + ny * v[1] - c for v in verts]
    dmax = max(ds)
    if dmax <= 0.0:
        return verts, vtags, esrcs
    if min(ds) >= 0.0:
        return None

    out_v = []
    out_t = []
    out_s = []
    for i in range(m):
        j = i + 1 if i + 1 < m else 0
        d0 = ds[i]
        d1 = ds[j]
        if d0 <= 0.0:
            out_v.append(verts[i])
            out_t.append(vtags[i])
            if d1 <= 0.0:
                out_s.append(esrcs[i])
            else:
                out_s.append(esrcs[i])
                t = d0 / (d0 - d1)
                v0 = verts[i]
                v1 = verts[j]
                out_v.append((v0[0] + t * (v1[0] - v0[0]), v0[1] + t * (v1[1] - v0[1])))
                out_t.append(cut_tag)
                out_s.append(cut_src)
        elif d1 < 0.0:
            t = d0 / (d0 - d1)
            v0 = verts[i]
            v1 = verts[j]
            out_v.append((v0[0] + t * (v1[0] - v0[0]), v0[1] + t * (v1[1] - v0[1])))
            out_t.append(cut_tag)
            out_s.append(esrcs[i])

    return _tidy(out_v, out_t, out_s, eps)


def _tidy(verts, vtags, esrcs, eps):
    """Drop near-duplicate consecutive vertices and spurious collinear
    vertices interior to a single source edge; reject empty results."""
    m = len(verts)
    if m < 3:
        return None
    keep_v = []
    keep_t = []
    keep_s = []
    for i in range(m):
        if keep_v and dist(verts[i], keep_v[-1]) <= eps:
            # dropped vertex: its outgoing edge source survives
            keep_s[-1] = esrcs[i]
            if vtags[i][0] == "orig":
                keep_t[-1] = vtags[i]
            continue
        keep_v.append(verts[i])
        keep_t.append(vtags[i])
        keep_s.append(esrcs[i])
    while len(keep_v) >= 2 and dist(keep_v[0], keep_v[-1]) <= eps:
        if keep_t[-1][0] == "orig":
            keep_t[0] = keep_t[-1]
        keep_v.pop()
        keep_t.pop()
        s = keep_s.pop()
        keep_s[-1] = s if keep_s else s
    if len(keep_v) < 3:
        return None
    # merge runs of edges from the same source (removes collinear artifacts)
    m = len(keep_v)
    if any(keep_s[i - 1] == keep_s[i] for i in range(m)):
        out_v = []
        out_t = []
        out_s = []
        for i in range(m):
            if keep_s[i - 1] == keep_s[i]:
                continue
            out_v.append(keep_v[i])
            out_t.append(keep_t[i])
            out_s.append(keep_s[i])
        keep_v, keep_t, keep_s = out_v, out_t, out_s
    if len(keep_v) < 3 or shoelace(keep_v) < EPS_AREA:
        return None
    return keep_v, keep_t, keep_s


@dataclass(frozen=True)
class ClippedPolygon:
    """Clip result: CCW vertices plus per-vertex provenance tags.

    A tag is ``("orig", i)`` for input vertex ``i`` or ``("cut", id)`` for an
    intersection introduced by the half-plane with that id.
    """

    vertices: tuple[Vec, ...]
    tags: tuple[tuple, ...]

    def area(self) -> float:
        return shoelace(self.vertices)


def clip_halfplane(poly: ConvexPolygon, h: HalfPlane, eps: float = EPS_GEOM):
    """Intersect ``poly`` with ``h``; returns a ClippedPolygon or None."""
    verts = list(poly.vertices)
    vtags = [("orig", i) for i in range(len(verts))]
    esrcs = [("edge", i) for i in range(len(verts))]
    res = clip_tagged(verts, vtags, esrcs, h.nx, h.ny, h.c, ("cut", h.id), ("cut", h.id), eps)
    if res is None:
        return None
    out_v, out_t, _ = res
    return ClippedPolygon(tuple(out_v), tuple(out_t))
