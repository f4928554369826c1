"""Exact first-order sensitivities of diagram vertices and derived values.

An interior vertex (where cells i, j, k meet) is the circumcenter of the
three sites; its velocity under a site perturbation is linear with 2x2
matrices M.  A boundary vertex (cells i, j meeting on the region boundary)
slides along the boundary edge with matrices scrM.  The accumulator
``accumulate_F`` distributes a vertex/direction pairing into the flat site
gradient through the transposed matrices; every merit gradient is built
from it plus the per-cell area gradient.

Conventions: gradients are flat vectors of length 2*kappa, slots 2i and
2i+1 holding d/dx and d/dy of site i.
"""

from __future__ import annotations

import math

import numpy as np

from .diagram import EPS_REG, Diagram
from .errors import SingularityError


def interior_vertex_matrix(v, a_i, a_j, a_k) -> np.ndarray:
    """Matrix mapping a perturbation of the third site to the velocity of
    the circumcenter ``v`` of the three sites: dv/da_k."""
    q = _q_det(a_i, a_j, a_k)
    ux = -(a_i[1] - a_j[1])
    uy = a_i[0] - a_j[0]
    wx = v[0] - a_k[0]
    wy = v[1] - a_k[1]
    return np.array([[ux * wx, ux * wy], [uy * wx, uy * wy]]) / q


def _q_det(a_i, a_j, a_k) -> float:
    q = (a_j[0] - a_i[0]) * (a_k[1] - a_i[1]) - (a_j[1] - a_i[1]) * (a_k[0] - a_i[0])
    if abs(q) <= EPS_REG:
        raise SingularityError(
            f"sites {tuple(a_i)}, {tuple(a_j)}, {tuple(a_k)} are nearly collinear"
        )
    return q


def boundary_vertex_matrix(v, a_i, a_j, n) -> np.ndarray:
    """Matrix mapping a perturbation of the FIRST site to the velocity of
    the boundary vertex ``v`` where the (i, j) bisector meets the boundary
    edge with unit outward normal ``n``: dv/da_i."""
    det = (a_j[0] - a_i[0]) * n[1] - (a_j[1] - a_i[1]) * n[0]
    if abs(det) <= EPS_REG:
        raise SingularityError(
            f"bisector of {tuple(a_i)}, {tuple(a_j)} is parallel to the boundary at {tuple(v)}",
            vertex=tuple(v),
        )
    ux = n[1]  # -perp(n) = (ny, -nx)
    uy = -n[0]
    wx = v[0] - a_i[0]
    wy = v[1] - a_i[1]
    return np.array([[ux * wx, ux * wy], [uy * wx, uy * wy]]) / det


def vertex_velocity(sites, i, vclass, v, delta, bnormals=None) -> np.ndarray:
    """Velocity of a classified vertex of cell i under perturbation
    ``delta`` (flat, length 2*kappa).  Fixed region points return zero;
    boundary vertices need ``bnormals`` (outward normals by edge id)."""
    sites = np.asarray(sites, dtype=float)
    delta = np.asarray(delta, dtype=float)
    tag = vclass[0]
    if tag == "T":
        return np.zeros(2)
    if tag == "Y":
        l1, l2 = vclass[1], vclass[2]
        a_i, b, c = sites[i], sites[l1], sites[l2]
        return (
            interior_vertex_matrix(v, b, c, a_i) @ delta[2 * i : 2 * i + 2]
            + interior_vertex_matrix(v, c, a_i, b) @ delta[2 * l1 : 2 * l1 + 2]
            + interior_vertex_matrix(v, a_i, b, c) @ delta[2 * l2 : 2 * l2 + 2]
        )
    if tag == "X":
        if bnormals is None:
            raise SingularityError(
                "boundary-vertex velocity needs the boundary normals", vertex=v
            )
        return vertex_velocity_bd(sites, i, vclass[1], bnormals[vclass[2]], v, delta)
    raise SingularityError(f"no velocity defined for vertex class {vclass!r}", vertex=v)


def vertex_velocity_bd(sites, i, l, n, v, delta) -> np.ndarray:
    """Velocity of the boundary vertex of cells (i, l) on the edge with
    outward normal ``n`` under perturbation ``delta``."""
    sites = np.asarray(sites, dtype=float)
    delta = np.asarray(delta, dtype=float)
    a_i, a_l = sites[i], sites[l]
    return boundary_vertex_matrix(v, a_i, a_l, n) @ delta[2 * i : 2 * i + 2] + (
        boundary_vertex_matrix(v, a_l, a_i, n) @ delta[2 * l : 2 * l + 2]
    )


def accumulate_F(grad, sites_list, bnormals, i, v, vclass, zx, zy, weight):
    """Add ``weight * (matrix^T zeta)`` into the gradient slots named by the
    vertex class (the accumulator F(i, v, zeta)).

    ``grad`` is a mutable flat list of length 2*kappa; ``bnormals[b]`` is
    the unit outward normal of boundary edge b.  Fixed region points are a
    no-op.  Raises SingularityError on degenerate denominators.
    """
    if weight == 0.0:
        return
    tag = vclass[0]
    if tag == "T":
        return
    ai = sites_list[i]
    vx_ai = v[0] - ai[0]
    vy_ai = v[1] - ai[1]
    if tag == "Y":
        l1 = vclass[1]
        l2 = vclass[2]
        b = sites_list[l1]
        c = sites_list[l2]
        q = (b[0] - ai[0]) * (c[1] - ai[1]) - (b[1] - ai[1]) * (c[0] - ai[0])
        if abs(q) <= EPS_REG:
            raise SingularityError(
                f"degenerate interior vertex at {v} (cells {i},{l1},{l2})",
                vertex=v,
            )
        w = weight / q
        # slot i:  M(l1,l2,i)^T zeta, with (a_l1 - a_l2)^perp
        s = w * (-(b[1] - c[1]) * zx + (b[0] - c[0]) * zy)
        grad[2 * i] += s * vx_ai
        grad[2 * i + 1] += s * vy_ai
        # slot l1: M(l2,i,l1)^T zeta, with (a_l2 - a_i)^perp
        s = w * (-(c[1] - ai[1]) * zx + (c[0] - ai[0]) * zy)
        grad[2 * l1] += s * (v[0] - b[0])
        grad[2 * l1 + 1] += s * (v[1] - b[1])
        # slot l2: M(i,l1,l2)^T zeta, with (a_i - a_l1)^perp
        s = w * (-(ai[1] - b[1]) * zx + (ai[0] - b[0]) * zy)
        grad[2 * l2] += s * (v[0] - c[0])
        grad[2 * l2 + 1] += s * (v[1] - c[1])
        return
    if tag == "X":
        l = vclass[1]
        nx, ny = bnormals[vclass[2]]
        al = sites_list[l]
        det = (al[0] - ai[0]) * ny - (al[1] - ai[1]) * nx
        if abs(det) <= EPS_REG:
            raise SingularityError(
                f"bisector parallel to boundary at vertex {v} (cells {i},{l})",
                vertex=v,
            )
        zperp = ny * zx - nx * zy  # (-perp(n)) . zeta
        s = weight * zperp / det
        grad[2 * i] += s * vx_ai
        grad[2 * i + 1] += s * vy_ai
        s = -s  # det flips sign when the roles of i and l swap
        grad[2 * l] += s * (v[0] - al[0])
        grad[2 * l + 1] += s * (v[1] - al[1])
        return
    raise SingularityError(
        f"gradient requested at seam crossing {v}; seam vertices carry no "
        "sensitivity (use a convex region)",
        vertex=v,
    )


def edge_length_gradient(grad, sites_list, bnormals, i, edge, weight):
    """Add ``weight * grad|E|`` for a cell edge (EdgeInfo-like object with
    v, w, v_class, w_class, length)."""
    if edge.length <= EPS_REG:
        raise SingularityError(f"zero-length edge at {edge.v}", vertex=edge.v)
    tx = (edge.w[0] - edge.v[0]) / edge.length
    ty = (edge.w[1] - edge.v[1]) / edge.length
    accumulate_F(grad, sites_list, bnormals, i, edge.w, edge.w_class, tx, ty, weight)
    accumulate_F(grad, sites_list, bnormals, i, edge.v, edge.v_class, tx, ty, -weight)


def cell_area_gradient(grad, diagram: Diagram, i: int, weight: float, sites_list=None):
    """Add ``weight * grad|V_i|`` into ``grad``.

    Only interior edges contribute (the boundary and seam edges of a cell
    have zero normal velocity); each contributes through its length and
    midpoint, which is exact even for edges split across region parts.
    """
    if sites_list is None:
        sites_list = diagram.sites
    ai = sites_list[i]
    aix = ai[0]
    aiy = ai[1]
    for piece in diagram.cells[i]:
        verts = piece.verts
        m = len(verts)
        for e in range(m):
            kind = piece.ekinds[e]
            if kind[0] != "int":
                continue
            k = kind[1]
            v = verts[e]
            w = verts[(e + 1) % m]
            ak = sites_list[k]
            ex = w[0] - v[0]
            ey = w[1] - v[1]
            elen = math.hypot(ex, ey)
            dx = aix - ak[0]
            dy = aiy - ak[1]
            dlen = math.hypot(dx, dy)
            if dlen <= EPS_REG:
                raise SingularityError(
                    f"sites {i} and {k} coincide", vertex=v
                )
            c = weight * elen / dlen
            px = 0.5 * (v[0] + w[0])
            py = 0.5 * (v[1] + w[1])
            grad[2 * i] += c * (px - aix)
            grad[2 * i + 1] += c * (py - aiy)
            grad[2 * k] -= c * (px - ak[0])
            grad[2 * k + 1] -= c * (py - ak[1])
