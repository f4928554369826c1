"""Deterministic incremental Delaunay triangulation.

Sites are pre-sorted lexicographically, so every insertion happens outside
the current hull: the new point is fanned onto the visible hull edges and
the affected edges are legalized by Lawson flips.  Near-degenerate orient /
in-circle tests fall back to a deterministic tie rule (ties never flip), so
repeated builds on the same input are bit-identical.  Cost is O(n log n) in
practice for the random-site workloads this package targets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import DelaunayError
from .geom import EPS_GEOM

# First-stage error-bound coefficients for the float predicates.
_ORIENT_ERR = 4e-16
_INCIRCLE_ERR = 1.2e-15


def orient(ax, ay, bx, by, cx, cy):
    """>0 if (a,b,c) is CCW, <0 if CW, 0 if collinear within precision."""
    d1 = (bx - ax) * (cy - ay)
    d2 = (by - ay) * (cx - ax)
    det = d1 - d2
    if abs(det) <= _ORIENT_ERR * (abs(d1) + abs(d2)):
        return 0.0
    return det


def _incircle(ax, ay, bx, by, cx, cy, dx, dy):
    """>0 iff d lies strictly inside the circumcircle of CCW (a,b,c);
    0 within precision (treated as cocircular)."""
    adx = ax - dx
    ady = ay - dy
    bdx = bx - dx
    bdy = by - dy
    cdx = cx - dx
    cdy = cy - dy
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    bxcy = bdx * cdy
    bycx = bdy * cdx
    cxay = cdx * ady
    cyax = cdy * adx
    axby = adx * bdy
    aybx = ady * bdx
    det = alift * (bxcy - bycx) + blift * (cxay - cyax) + clift * (axby - aybx)
    perm = (
        alift * (abs(bxcy) + abs(bycx))
        + blift * (abs(cxay) + abs(cyax))
        + clift * (abs(axby) + abs(aybx))
    )
    if abs(det) <= _INCIRCLE_ERR * perm:
        return 0.0
    return det


@dataclass
class Delaunay:
    """Triangulation of the sites.

    ``triangles`` hold CCW triples of original site indices.  ``neighbors``
    gives, per site, the sorted indices of sites sharing a triangle edge.
    ``chain`` is set instead when all sites are collinear (usable only for
    diagrams with at most two sites).
    """

    points: np.ndarray
    triangles: list = field(default_factory=list)
    neighbors: list = field(default_factory=list)
    hull: list = field(default_factory=list)
    chain: list | None = None

    @property
    def is_chain(self) -> bool:
        return self.chain is not None


def build_delaunay(sites) -> Delaunay:
    """Triangulate ``sites`` (array-like of shape (kappa, 2))."""
    pts_arr = np.asarray(sites, dtype=float)
    if pts_arr.ndim != 2 or pts_arr.shape[1] != 2:
        raise DelaunayError(f"sites must have shape (kappa, 2), got {pts_arr.shape}")
    n = len(pts_arr)
    if n < 1:
        raise DelaunayError("need at least one site")
    if not np.isfinite(pts_arr).all():
        raise DelaunayError("sites contain non-finite coordinates")

    if n >= 2:
        pairs = cKDTree(pts_arr).query_pairs(EPS_GEOM)
        if pairs:
            i, j = sorted(pairs)[0]
            raise DelaunayError(f"duplicate sites {i} and {j} at {tuple(pts_arr[i])}")

    pts = [(float(x), float(y)) for x, y in pts_arr]
    order = sorted(range(n), key=lambda i: pts[i])

    if n == 1:
        return Delaunay(pts_arr, neighbors=[()], hull=[0], chain=[order[0]])
    if n == 2:
        return Delaunay(
            pts_arr, neighbors=[(1,), (0,)], hull=list(order), chain=list(order)
        )

    # leading run of collinear points in sorted order
    c0, c1 = order[0], order[1]
    k = 2
    while k < n and orient(*pts[c0], *pts[c1], *pts[order[k]]) == 0.0:
        k += 1
    if k == n:
        chain = list(order)
        nbrs = [[] for _ in range(n)]
        for a, b in zip(chain, chain[1:]):
            nbrs[a].append(b)
            nbrs[b].append(a)
        return Delaunay(
            pts_arr,
            neighbors=[tuple(sorted(v)) for v in nbrs],
            hull=list(order),
            chain=chain,
        )

    tv = []  # triangle vertices, CCW
    tn = []  # tn[t][s] = triangle across edge opposite vertex s, -1 on hull
    hnext = {}
    hprev = {}
    hedge = {}  # hull edge (u -> hnext[u]) -> (triangle, slot)

    def set_hull_edge(t, s):
        u = tv[t][(s + 1) % 3]
        hedge[u] = (t, s)

    # --- bootstrap: fan the collinear chain onto the first off-line point
    chain = [order[i] for i in range(k)]
    p = order[k]
    if orient(*pts[chain[0]], *pts[chain[1]], *pts[p]) < 0.0:
        chain.reverse()  # keep p strictly left of the chain direction
    m = len(chain) - 1
    for j in range(m):
        tv.append([chain[j], chain[j + 1], p])
        tn.append([-1, -1, -1])
    for j in range(m - 1):
        # edge (chain[j+1], p) shared between fan triangles j and j+1
        tn[j][0] = j + 1
        tn[j + 1][1] = j
    hull_cycle = chain + [p]
    nh = len(hull_cycle)
    for idx in range(nh):
        u = hull_cycle[idx]
        v = hull_cycle[(idx + 1) % nh]
        hnext[u] = v
        hprev[v] = u
    for j in range(m):
        hedge[chain[j]] = (j, 2)  # edge (chain[j], chain[j+1]) opposite p
    hedge[chain[m]] = (m - 1, 0)  # edge (chain[m], p)
    hedge[p] = (0, 1)  # edge (p, chain[0])

    stack = []

    def legalize_from(t, s):
        stack.append((t, s))
        while stack:
            t1, s1 = stack.pop()
            t2 = tn[t1][s1]
            if t2 < 0:
                continue
            s2 = tn[t2].index(t1)
            pv = tv[t1][s1]
            u = tv[t1][(s1 + 1) % 3]
            w = tv[t1][(s1 + 2) % 3]
            d = tv[t2][s2]
            if (
                _incircle(*pts[pv], *pts[u], *pts[w], *pts[d]) <= 0.0
            ):
                continue
            # flip shared edge (u, w) -> (pv, d)
            B = tn[t1][(s1 + 1) % 3]  # across (w, pv)
            C = tn[t1][(s1 + 2) % 3]  # across (pv, u)
            E = tn[t2][(s2 + 1) % 3]  # across (u, d)
            F = tn[t2][(s2 + 2) % 3]  # across (d, w)
            tv[t1] = [pv, u, d]
            tn[t1] = [E, t2, C]
            tv[t2] = [pv, d, w]
            tn[t2] = [F, B, t1]
            if E >= 0:
                tn[E][tn[E].index(t2)] = t1
            else:
                set_hull_edge(t1, 0)
            if B >= 0:
                tn[B][tn[B].index(t1)] = t2
            else:
                set_hull_edge(t2, 1)
            if C < 0:
                set_hull_edge(t1, 2)
            if F < 0:
                set_hull_edge(t2, 0)
            stack.append((t1, 0))
            stack.append((t2, 0))

    for j in range(m):
        legalize_from(j, 0)
        legalize_from(j, 1)

    # --- sweep insertion of the remaining points
    prev = p
    for oi in range(k + 1, n):
        ip = order[oi]
        px, py = pts[ip]

        def visible(u, v):
            return orient(pts[u][0], pts[u][1], pts[v][0], pts[v][1], px, py) < 0.0

        if visible(prev, hnext[prev]):
            first = prev
        elif visible(hprev[prev], prev):
            first = hprev[prev]
        else:
            first = None
            u = hnext[prev]
            while u != prev:
                if visible(u, hnext[u]):
                    first = u
                    break
                u = hnext[u]
            if first is None:
                raise DelaunayError(
                    f"site {ip} at {pts[ip]} is not outside the current hull"
                )
        while visible(hprev[first], first):
            first = hprev[first]
        run = [first]
        v = hnext[first]
        run.append(v)
        while visible(v, hnext[v]):
            v = hnext[v]
            run.append(v)

        new_tris = []
        for j in range(len(run) - 1):
            u, v = run[j], run[j + 1]
            t_in, s_in = hedge[u]
            tnew = len(tv)
            tv.append([v, u, ip])
            tn.append([-1, -1, t_in])
            tn[t_in][s_in] = tnew
            new_tris.append(tnew)
        for j in range(len(new_tris) - 1):
            tn[new_tris[j]][1] = new_tris[j + 1]
            tn[new_tris[j + 1]][0] = new_tris[j]

        for u in run[1:-1]:
            del hnext[u]
            del hprev[u]
            del hedge[u]
        a0, am = run[0], run[-1]
        hnext[a0] = ip
        hprev[ip] = a0
        hnext[ip] = am
        hprev[am] = ip
        hedge[a0] = (new_tris[0], 0)  # edge (a0, ip)
        hedge[ip] = (new_tris[-1], 1)  # edge (ip, am)

        for t in new_tris:
            legalize_from(t, 2)
        prev = ip

    # --- assemble canonical output
    triangles = []
    for a, b, c in tv:
        if b < a and b < c:
            a, b, c = b, c, a
        elif c < a and c < b:
            a, b, c = c, a, b
        triangles.append((a, b, c))
    triangles.sort()

    nbr_sets = [set() for _ in range(n)]
    for a, b, c in triangles:
        nbr_sets[a].update((b, c))
        nbr_sets[b].update((a, c))
        nbr_sets[c].update((a, b))
    neighbors = [tuple(sorted(s)) for s in nbr_sets]

    hull = [prev]
    u = hnext[prev]
    while u != prev:
        hull.append(u)
        u = hnext[u]

    return Delaunay(pts_arr, triangles=triangles, neighbors=neighbors, hull=hull)
