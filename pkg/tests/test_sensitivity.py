import math

import numpy as np
import pytest

from conftest import fd_gradient, rel_sup_error, sample_regular_config
from voronoi_tailor import (
    SingularityError,
    accumulate_F,
    boundary_vertex_matrix,
    build_diagram,
    builtin,
    cell_area_gradient,
    cell_edges,
    edge_length_gradient,
    interior_vertex_matrix,
    vertex_velocity,
    vertex_velocity_bd,
)
from voronoi_tailor.sensitivity import _q_det

A1, A2, A3 = (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)
V0 = (0.0, 0.0)  # circumcenter of A1, A2, A3


def collect_vertices(diagram):
    """Unique diagram vertices keyed for re-identification after a
    perturbation: interior by sorted site triple, boundary by sorted pair
    plus boundary-edge id."""
    out = {}
    for i, pieces in enumerate(diagram.cells):
        for p in pieces:
            for v, c in zip(p.verts, p.vclasses):
                if c[0] == "Y":
                    key = ("Y",) + tuple(sorted((i, c[1], c[2])))
                elif c[0] == "X":
                    key = ("X", min(i, c[1]), max(i, c[1]), c[2])
                else:
                    continue
                out.setdefault(key, (v, i, c))
    return out


class TestInteriorMatrix:
    def test_hand_determinant(self):
        assert _q_det(A1, A2, A3) == 2.0

    def test_cyclic_determinant_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            a, b, c = rng.normal(size=(3, 2)) * 3
            q = _q_det(a, b, c)
            assert _q_det(c, a, b) == pytest.approx(q, rel=1e-12)
            assert _q_det(b, c, a) == pytest.approx(q, rel=1e-12)

    def test_hand_matrix(self):
        M = interior_vertex_matrix(V0, A1, A2, A3)
        assert M == pytest.approx(np.array([[0.5, 0.0], [0.5, 0.0]]), abs=1e-15)

    def test_matrices_sum_to_identity(self):
        S = (
            interior_vertex_matrix(V0, A2, A3, A1)
            + interior_vertex_matrix(V0, A3, A1, A2)
            + interior_vertex_matrix(V0, A1, A2, A3)
        )
        assert S == pytest.approx(np.eye(2), abs=1e-14)

    def test_velocity_matches_fd_circumcenter(self):
        def circumcenter(s):
            (ax, ay), (bx, by), (cx, cy) = s
            d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
            ux = ((ax**2 + ay**2) * (by - cy) + (bx**2 + by**2) * (cy - ay) + (cx**2 + cy**2) * (ay - by)) / d
            uy = ((ax**2 + ay**2) * (cx - bx) + (bx**2 + by**2) * (ax - cx) + (cx**2 + cy**2) * (bx - ax)) / d
            return np.array([ux, uy])

        rng = np.random.default_rng(1)
        for _ in range(10):
            s = rng.normal(size=(3, 2)) * 2
            if abs(_q_det(*s)) < 0.3:
                continue
            v = circumcenter(s)
            h = 1e-6
            for site in range(3):
                for coord in range(2):
                    sp = s.copy()
                    sp[site, coord] += h
                    sm = s.copy()
                    sm[site, coord] -= h
                    vel_fd = (circumcenter(sp) - circumcenter(sm)) / (2 * h)
                    delta = np.zeros(6)
                    delta[2 * site + coord] = 1.0
                    vel = vertex_velocity(s, 0, ("Y", 1, 2), tuple(v), delta)
                    assert np.allclose(vel, vel_fd, atol=1e-5 * max(1, np.abs(vel).max()))

    def test_permutation_invariance_of_velocity(self):
        sites = np.array([A1, A2, A3])
        rng = np.random.default_rng(2)
        delta = rng.normal(size=6)
        ref = vertex_velocity(sites, 0, ("Y", 1, 2), V0, delta)
        # the same physical vertex seen from any cell, either cyclic order
        for i, cls in [
            (0, ("Y", 1, 2)),
            (1, ("Y", 2, 0)),
            (2, ("Y", 0, 1)),
            (0, ("Y", 2, 1)),
            (1, ("Y", 0, 2)),
            (2, ("Y", 1, 0)),
        ]:
            vel = vertex_velocity(sites, i, cls, V0, delta)
            assert np.allclose(vel, ref, atol=1e-12)

    def test_collinear_sites_raise(self):
        with pytest.raises(SingularityError):
            interior_vertex_matrix(V0, (0.0, 0.0), (1.0, 0.0), (2.0, 0.0))


class TestBoundaryMatrix:
    N = (0.0, -1.0)  # boundary y=0, region above
    B1, B2 = (-1.0, 1.0), (1.0, 1.0)

    def test_hand_matrix(self):
        M = boundary_vertex_matrix(V0, self.B1, self.B2, self.N)
        assert M == pytest.approx(np.array([[0.5, -0.5], [0.0, 0.0]]), abs=1e-15)

    def test_vertical_lift_of_both_sites_fixes_vertex(self):
        M21 = boundary_vertex_matrix(V0, self.B1, self.B2, self.N)
        M12 = boundary_vertex_matrix(V0, self.B2, self.B1, self.N)
        assert M21 @ (0, 1) + M12 @ (0, 1) == pytest.approx((0, 0), abs=1e-15)

    def test_tangential_translation_carries_vertex(self):
        M21 = boundary_vertex_matrix(V0, self.B1, self.B2, self.N)
        M12 = boundary_vertex_matrix(V0, self.B2, self.B1, self.N)
        assert M21 @ (1, 0) + M12 @ (1, 0) == pytest.approx((1, 0), abs=1e-15)

    def test_velocity_tangent_to_boundary(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = rng.normal(size=2) + (0, 2)
            b = rng.normal(size=2) + (0, 2)
            ang = rng.uniform(0, 2 * np.pi)
            n = (math.cos(ang), math.sin(ang))
            # place the vertex anywhere on the boundary line through 0 with normal n
            t = (-n[1], n[0])
            v = tuple(np.multiply(t, rng.normal()))
            try:
                vel = vertex_velocity_bd(
                    np.array([a, b]), 0, 1, n, v, rng.normal(size=4)
                )
            except SingularityError:
                continue
            assert abs(vel @ n) < 1e-10 * max(1.0, np.abs(vel).max())

    def test_parallel_bisector_raises(self):
        with pytest.raises(SingularityError):
            boundary_vertex_matrix(V0, (-1.0, 1.0), (1.0, 1.0), (1.0, 0.0))


class TestAccumulateF:
    def test_region_corner_is_noop(self):
        grad = [0.0] * 6
        accumulate_F(grad, [A1, A2, A3], [], 0, (5.0, 5.0), ("T",), 1.0, 2.0, 3.0)
        assert grad == [0.0] * 6

    def test_zero_weight_is_noop(self):
        grad = [0.0] * 6
        accumulate_F(grad, [A1, A2, A3], [], 0, V0, ("Y", 1, 2), 1.0, 0.0, 0.0)
        assert grad == [0.0] * 6

    def test_interior_slots_match_velocity_transpose(self):
        # F(i,v,zeta) accumulates d(v . zeta)/da into the slots
        rng = np.random.default_rng(4)
        zeta = rng.normal(size=2)
        grad = [0.0] * 6
        sites = [A1, A2, A3]
        accumulate_F(grad, sites, [], 0, V0, ("Y", 1, 2), zeta[0], zeta[1], 1.0)
        for slot in range(6):
            delta = np.zeros(6)
            delta[slot] = 1.0
            vel = vertex_velocity(np.array(sites), 0, ("Y", 1, 2), V0, delta)
            assert grad[slot] == pytest.approx(float(vel @ zeta), abs=1e-13)

    def test_seam_crossing_raises(self):
        with pytest.raises(SingularityError):
            accumulate_F([0.0] * 4, [A1, A2], [], 0, V0, ("S", 1), 1.0, 0.0, 1.0)


class TestEdgeLengthGradient:
    def setup_method(self):
        self.region = builtin("regular_polygon")
        rng = np.random.default_rng(11)
        self.sites, self.diagram = sample_regular_config(self.region, 8, rng)
        self.bnormals = [b.normal for b in self.region.boundary_edges]

    def _edge_and_key(self):
        for e in cell_edges(self.diagram, 0):
            if e.kind[0] == "int":
                return e
        raise AssertionError("no interior edge")

    def test_fd_match(self):
        e = self._edge_and_key()
        k = e.kind[1]
        key = frozenset((0, k))
        sites_list = [tuple(map(float, s)) for s in self.sites]
        grad = [0.0] * 16
        edge_length_gradient(grad, sites_list, self.bnormals, 0, e, 1.0)

        def length_of(x):
            d = build_diagram(x.reshape(-1, 2), self.region)
            for ee in cell_edges(d, 0):
                if ee.kind[0] == "int" and frozenset((0, ee.kind[1])) == key:
                    return ee.length
            raise AssertionError("edge vanished under perturbation")

        gfd = fd_gradient(length_of, self.sites.reshape(-1))
        assert rel_sup_error(grad, gfd) < 1e-6

    def test_translation_invariance(self):
        e = self._edge_and_key()
        sites_list = [tuple(map(float, s)) for s in self.sites]
        grad = [0.0] * 16
        edge_length_gradient(grad, sites_list, self.bnormals, 0, e, 1.0)
        g = np.asarray(grad).reshape(-1, 2)
        assert np.abs(g.sum(axis=0)).max() < 1e-10


class TestCellAreaGradient:
    def test_single_cell_zero(self, square4):
        d = build_diagram(np.array([[0.1, 0.3]]), square4)
        grad = [0.0, 0.0]
        cell_area_gradient(grad, d, 0, 1.0)
        assert grad == [0.0, 0.0]

    def test_two_cell_value_and_fd_sign(self, square4):
        sites = np.array([[1.0, 0.0], [-1.0, 0.0]])
        d = build_diagram(sites, square4)
        grad = [0.0] * 4
        cell_area_gradient(grad, d, 0, 1.0)
        # |E|=4, |a0-a1|=2, p_E=(0,0): d|V_0|/da_0 = 2*(p - a0) = (-2, 0)
        assert grad[:2] == pytest.approx([-2.0, 0.0], abs=1e-12)

        def area0(x):
            return float(build_diagram(x.reshape(-1, 2), square4).areas[0])

        gfd = fd_gradient(area0, sites.reshape(-1))
        assert rel_sup_error(grad, gfd) < 1e-7

    def test_gradients_sum_to_zero(self):
        region = builtin("regular_polygon")
        rng = np.random.default_rng(12)
        sites, diagram = sample_regular_config(region, 10, rng)
        total = [0.0] * 20
        for i in range(10):
            cell_area_gradient(total, diagram, i, 1.0)
        assert np.abs(total).max() < 1e-10


class TestVertexVelocityOracle:
    def test_velocities_match_rebuilt_diagram_fd(self):
        region = builtin("regular_polygon")
        rng = np.random.default_rng(13)
        sites, diagram = sample_regular_config(region, 8, rng)
        bnormals = [b.normal for b in region.boundary_edges]
        verts = collect_vertices(diagram)
        assert verts
        x = sites.reshape(-1)
        h = 1e-6
        for slot in range(len(x)):
            xp = x.copy()
            xp[slot] += h
            xm = x.copy()
            xm[slot] -= h
            vp = collect_vertices(build_diagram(xp.reshape(-1, 2), region))
            vm = collect_vertices(build_diagram(xm.reshape(-1, 2), region))
            delta = np.zeros_like(x)
            delta[slot] = 1.0
            for key, (v, i, cls) in verts.items():
                assert key in vp and key in vm, "vertex lost under perturbation"
                fd = (np.asarray(vp[key][0]) - np.asarray(vm[key][0])) / (2 * h)
                an = vertex_velocity(sites, i, cls, v, delta, bnormals)
                assert np.abs(an - fd).max() < 1e-5 * max(1.0, np.abs(an).max())
