import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voronoi_tailor import ConvexPolygon, GeometryError, HalfPlane, clip_halfplane, perimeter, perp, signed_area
from voronoi_tailor.geom import EPS_GEOM, centroid, shoelace

UNIT_SQUARE = ConvexPolygon(((0, 0), (1, 0), (1, 1), (0, 1)))


def regular_ngon(n, r=1.0, cx=0.0, cy=0.0):
    return ConvexPolygon(
        tuple(
            (cx + r * math.cos(2 * math.pi * i / n), cy + r * math.sin(2 * math.pi * i / n))
            for i in range(n)
        )
    )


@st.composite
def convex_polygons(draw):
    """Random strictly convex polygons: distinct angles on a circle."""
    n = draw(st.integers(min_value=3, max_value=9))
    base = draw(st.floats(min_value=0.0, max_value=2 * math.pi))
    gaps = draw(
        st.lists(st.floats(min_value=0.08, max_value=1.0), min_size=n, max_size=n)
    )
    total = sum(gaps)
    angles = []
    acc = base
    for g in gaps:
        angles.append(acc)
        acc += 2 * math.pi * g / total
    r = draw(st.floats(min_value=0.5, max_value=20.0))
    cx = draw(st.floats(min_value=-50.0, max_value=50.0))
    cy = draw(st.floats(min_value=-50.0, max_value=50.0))
    return ConvexPolygon(
        tuple((cx + r * math.cos(a), cy + r * math.sin(a)) for a in angles)
    )


class TestSignedArea:
    def test_unit_square(self):
        assert signed_area(UNIT_SQUARE) == 1.0

    def test_regular_20gon_closed_form(self):
        # independent closed form (n/2) sin(2 pi / n) for unit circumradius
        expected = 10.0 * math.sin(2 * math.pi / 20)
        assert signed_area(regular_ngon(20)) == pytest.approx(expected, abs=1e-12)

    def test_degenerate_returns_zero(self):
        assert shoelace([(0, 0), (1, 1)]) == 0.0

    @given(convex_polygons(), st.floats(-100, 100), st.floats(-100, 100))
    @settings(max_examples=60, deadline=None)
    def test_translation_invariant(self, poly, tx, ty):
        moved = [(x + tx, y + ty) for x, y in poly.vertices]
        a = signed_area(poly)
        assert shoelace(moved) == pytest.approx(a, rel=1e-12, abs=1e-9)

    @given(convex_polygons(), st.floats(0, 2 * math.pi))
    @settings(max_examples=60, deadline=None)
    def test_rotation_invariant(self, poly, ang):
        c, s = math.cos(ang), math.sin(ang)
        rot = [(c * x - s * y, s * x + c * y) for x, y in poly.vertices]
        assert shoelace(rot) == pytest.approx(signed_area(poly), rel=1e-12, abs=1e-9)


class TestPerimeter:
    def test_unit_square(self):
        assert perimeter(UNIT_SQUARE) == 4.0

    def test_equilateral_triangle_side2(self):
        h = math.sqrt(3)
        tri = ConvexPolygon(((0, 0), (2, 0), (1, h)))
        assert perimeter(tri) == pytest.approx(6.0, abs=1e-12)

    def test_regular_20gon_closed_form(self):
        expected = 20 * 2 * math.sin(math.pi / 20)
        assert perimeter(regular_ngon(20)) == pytest.approx(expected, abs=1e-12)


class TestPolygonValidation:
    def test_too_few_vertices(self):
        with pytest.raises(GeometryError):
            ConvexPolygon(((0, 0), (1, 0)))

    def test_cw_rejected(self):
        with pytest.raises(GeometryError):
            ConvexPolygon(((0, 0), (0, 1), (1, 1), (1, 0)))

    def test_nonconvex_rejected(self):
        with pytest.raises(GeometryError):
            ConvexPolygon(((0, 0), (2, 0), (2, 2), (1, 0.5), (0, 2)))

    def test_repeated_vertex_rejected(self):
        with pytest.raises(GeometryError):
            ConvexPolygon(((0, 0), (1, 0), (1, 0), (0, 1)))

    def test_nan_rejected(self):
        with pytest.raises(GeometryError):
            ConvexPolygon(((0, 0), (1, 0), (float("nan"), 1)))


class TestClip:
    def test_halfspace_through_middle(self):
        h = HalfPlane(1.0, 0.0, 0.5)
        res = clip_halfplane(UNIT_SQUARE, h)
        assert res.area() == pytest.approx(0.5, abs=1e-12)

    def test_no_op(self):
        res = clip_halfplane(UNIT_SQUARE, HalfPlane(1.0, 0.0, 2.0))
        assert res.area() == pytest.approx(1.0, abs=1e-14)
        assert all(tag[0] == "orig" for tag in res.tags)

    def test_full_rejection(self):
        assert clip_halfplane(UNIT_SQUARE, HalfPlane(1.0, 0.0, -1.0)) is None

    def test_cut_vertices_tagged_with_halfplane_id(self):
        h = HalfPlane(1.0, 0.0, 0.5, id="cut7")
        res = clip_halfplane(UNIT_SQUARE, h)
        cut_tags = [t for t in res.tags if t[0] == "cut"]
        assert len(cut_tags) == 2
        assert all(t[1] == "cut7" for t in cut_tags)

    @given(convex_polygons(), st.floats(0, 2 * math.pi), st.floats(-1.2, 1.2))
    @settings(max_examples=120, deadline=None)
    def test_complementary_halfplanes_partition_area(self, poly, ang, off):
        cx, cy = centroid(poly.vertices)
        n = (math.cos(ang), math.sin(ang))
        c = n[0] * cx + n[1] * cy + off * max(abs(x) + abs(y) for x, y in poly.vertices)
        h1 = HalfPlane(n[0], n[1], c)
        h2 = HalfPlane(-n[0], -n[1], -c)
        a = signed_area(poly)
        a1 = r.area() if (r := clip_halfplane(poly, h1)) else 0.0
        a2 = r.area() if (r := clip_halfplane(poly, h2)) else 0.0
        assert a1 + a2 == pytest.approx(a, rel=1e-12, abs=1e-10)
        assert a1 <= a * (1 + 1e-12) and a2 <= a * (1 + 1e-12)


class TestPerp:
    def test_rotates_ccw(self):
        assert perp((1.0, 0.0)) == (0.0, 1.0)
        assert perp((0.0, 1.0)) == (-1.0, 0.0)

    def test_double_perp_negates(self):
        assert perp(perp((3.0, 4.0))) == (-3.0, -4.0)

    @given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
    @settings(max_examples=60, deadline=None)
    def test_linear_norm_preserving_orthogonal(self, x, y):
        px, py = perp((x, y))
        assert math.hypot(px, py) == pytest.approx(math.hypot(x, y), rel=1e-15, abs=0)
        assert abs(x * px + y * py) <= 1e-12 * (x * x + y * y)
