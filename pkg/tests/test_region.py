import math

import numpy as np
import pytest

from voronoi_tailor import PRESETS, Region, RegionError, builtin, load, scale, suggest_scale
from voronoi_tailor.geom import dist


class TestBuiltins:
    def test_letter_a(self):
        r = builtin("letter_a")
        assert r.p == 16
        assert r.area == pytest.approx(232.5318, abs=1e-3)

    def test_key(self):
        r = builtin("key")
        assert r.p == 22
        assert r.area == pytest.approx(88.15209, abs=1e-4)

    def test_regular_polygon(self):
        r = builtin("regular_polygon")
        assert r.p == 1
        verts = r.parts[0].vertices
        assert len(verts) == 20
        assert all(math.hypot(x, y) == pytest.approx(1.0, abs=1e-15) for x, y in verts)

    def test_convex_hexagon(self):
        r = builtin("convex_hexagon")
        assert r.p == 1
        assert len(r.parts[0].vertices) == 6

    def test_unknown_name(self):
        with pytest.raises(RegionError):
            builtin("america")


class TestScale:
    def test_regular_polygon_table_row(self):
        r = scale(builtin("regular_polygon"), 5.70312)
        assert r.area == pytest.approx(100.510, abs=1e-3)

    def test_letter_a_table_row(self):
        r = scale(builtin("letter_a"), 0.65625)
        assert r.area == pytest.approx(100.143, abs=1e-3)

    def test_identity(self):
        r = builtin("key")
        s = scale(r, 1.0)
        assert s.area == r.area
        assert all(
            pa.vertices == pb.vertices for pa, pb in zip(r.parts, s.parts)
        )

    def test_rejects_nonpositive(self):
        with pytest.raises(RegionError):
            scale(builtin("key"), 0.0)
        with pytest.raises(RegionError):
            scale(builtin("key"), -2.0)


class TestSuggestScale:
    def test_exact_area(self):
        r = Region([[(0, 0), (10, 0), (10, 10), (0, 10)]])
        assert suggest_scale(r, 100) == 1.0

    def test_quarter_area(self):
        r = Region([[(0, 0), (5, 0), (5, 5), (0, 5)]])
        assert suggest_scale(r, 100) == 2.0

    def test_twenty_gon(self):
        assert suggest_scale(builtin("regular_polygon"), 100) == pytest.approx(5.6875)

    def test_rounds_to_64th(self):
        r = builtin("key")
        f = suggest_scale(r, 1000)
        assert f * 64 == pytest.approx(round(f * 64), abs=1e-12)


class TestStoredFactors:
    @pytest.mark.parametrize(
        "name,kappa,area",
        [
            ("convex_hexagon", 100, 1.00582e2),
            ("convex_hexagon", 1000, 1.00320e3),
            ("regular_polygon", 100, 1.00510e2),
            ("regular_polygon", 1000, 9.96007e2),
            ("letter_a", 100, 1.00143e2),
            ("letter_a", 1000, 1.00421e3),
            ("key", 100, 9.95155e1),
            ("key", 1000, 9.99464e2),
        ],
    )
    def test_scaled_area_matches_reference(self, name, kappa, area):
        base = builtin(name)
        factor = base.preset_factors[kappa]
        assert scale(base, factor).area == pytest.approx(area, rel=1e-5)


class TestBoundary:
    def test_two_squares_share_a_seam(self):
        r = Region(
            [
                [(0, 0), (1, 0), (1, 1), (0, 1)],
                [(1, 0), (2, 0), (2, 1), (1, 1)],
            ]
        )
        total = sum(dist(b.p0, b.p1) for b in r.boundary_edges)
        assert total == pytest.approx(6.0, abs=1e-12)  # seam x=1 excluded
        for b in r.boundary_edges:
            mid = (0.5 * (b.p0[0] + b.p1[0]), 0.5 * (b.p0[1] + b.p1[1]))
            assert abs(mid[0] - 1.0) > 1e-9 or abs(mid[1]) < 1e-9 or abs(mid[1] - 1.0) < 1e-9

    def test_outward_normals_unit_and_outward(self):
        for name in PRESETS:
            r = builtin(name)
            cx = 0.5 * (r.bbox[0] + r.bbox[2])
            cy = 0.5 * (r.bbox[1] + r.bbox[3])
            for b in r.boundary_edges:
                assert math.hypot(*b.normal) == pytest.approx(1.0, abs=1e-12)
                mid = (0.5 * (b.p0[0] + b.p1[0]), 0.5 * (b.p0[1] + b.p1[1]))
                # stepping outward along the normal must leave the region
                step = 1e-6 * max(r.bbox[2] - r.bbox[0], r.bbox[3] - r.bbox[1])
                out = (mid[0] + step * b.normal[0], mid[1] + step * b.normal[1])
                assert not r.contains(out)

    def test_partial_edge_overlap_split(self):
        # the long bottom edge of the top box is covered by two smaller boxes
        r = Region(
            [
                [(0, 0), (1, 0), (1, 1), (0, 1)],
                [(1, 0), (2, 0), (2, 1), (1, 1)],
                [(0, 1), (2, 1), (2, 2), (0, 2)],
            ]
        )
        total = sum(dist(b.p0, b.p1) for b in r.boundary_edges)
        assert total == pytest.approx(8.0, abs=1e-12)

    def test_overlapping_parts_rejected(self):
        with pytest.raises(RegionError):
            Region(
                [
                    [(0, 0), (2, 0), (2, 2), (0, 2)],
                    [(1, 1), (3, 1), (3, 3), (1, 3)],
                ]
            )


class TestLoad:
    def test_unit_square_roundtrip(self, tmp_path):
        path = tmp_path / "square.region"
        path.write_text("# a comment\n1\n4\n0 0\n1 0\n1 1\n0 1\n")
        r = load(path)
        assert r.p == 1
        assert r.area == pytest.approx(1.0)

    def test_letter_a_file_equals_builtin(self, tmp_path):
        ref = builtin("letter_a")
        lines = [str(ref.p)]
        for part in ref.parts:
            lines.append(str(len(part.vertices)))
            lines.extend(f"{x!r} {y!r}" for x, y in part.vertices)
        path = tmp_path / "letter_a.region"
        path.write_text("\n".join(lines) + "\n")
        r = load(path)
        assert r.p == ref.p
        assert r.area == pytest.approx(ref.area, rel=1e-15)
        for pa, pb in zip(r.parts, ref.parts):
            assert pa.vertices == pb.vertices

    def test_malformed_vertex_count_names_polygon(self, tmp_path):
        path = tmp_path / "bad.region"
        path.write_text("2\n4\n0 0\n1 0\n1 1\n0 1\n3\n5 0\n6 0\n")
        with pytest.raises(RegionError, match="polygon 1"):
            load(path)

    def test_bad_token_has_line_number(self, tmp_path):
        path = tmp_path / "bad2.region"
        path.write_text("1\n4\n0 0\n1 zero\n1 1\n0 1\n")
        with pytest.raises(RegionError, match="line 4"):
            load(path)

    def test_cw_polygon_reversed_with_warning(self, tmp_path):
        path = tmp_path / "cw.region"
        path.write_text("1\n4\n0 0\n0 1\n1 1\n1 0\n")
        with pytest.warns(UserWarning, match="clockwise"):
            r = load(path)
        assert r.area == pytest.approx(1.0)
