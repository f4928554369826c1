"""Voronoi diagrams clipped to polygonal regions, exact site-gradients of
diagram merit functions, and a spectral-projected-gradient driver for
tailoring diagrams (equal-area, edge-balanced, angle-balanced,
midpoint-matched, size-graded)."""

from .delaunay import Delaunay, build_delaunay
from .diagram import (
    Diagram,
    EPS_REG,
    build_diagram,
    cell_edges,
    cell_stats,
    verify_regularity,
)
from .errors import (
    DelaunayError,
    GeometryError,
    MeritError,
    RegionError,
    RegularityError,
    SingularityError,
    SpgError,
    VoronoiTailorError,
)
from .geom import EPS_GEOM, ConvexPolygon, HalfPlane, clip_halfplane, perp, perimeter, signed_area
from .merit import (
    FieldFunction,
    ObjectiveSpec,
    ObjectiveTerm,
    eval_j0,
    eval_j1,
    eval_j2,
    eval_j3,
    eval_j4,
    eval_j5,
    eval_objective,
    make_field,
    parse_objective,
)
from .region import Region, RegionPreset, PRESETS, builtin, load, scale, suggest_scale
from .render import render_svg, write_dump
from .sensitivity import (
    accumulate_F,
    boundary_vertex_matrix,
    cell_area_gradient,
    edge_length_gradient,
    interior_vertex_matrix,
    vertex_velocity,
    vertex_velocity_bd,
)
from .spg import SpgOptions, SpgReport, draw_sites, minimize, multi_trial

__version__ = "0.1.0"
