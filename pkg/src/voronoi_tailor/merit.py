"""Merit functions J0..J5 on clipped Voronoi diagrams, with exact gradients.

* J0 penalizes site pairs closer than a separation delta,
* J1 penalizes deviation of cell areas from |A|/kappa,
* J2 penalizes edges shorter than a fraction c2 of the cell's mean edge,
* J3 penalizes interior angles sharper than a fraction c3 of the cell mean,
* J4 penalizes the distance between Voronoi and Delaunay edge midpoints,
* J5 is J1 with the target area ratio given by a field psi evaluated at the
  site.

Each ``eval_*`` returns ``(value, gradient)`` with the gradient as a flat
array of length 2*kappa.  J2, J3 and J4 need direct access to the true cell
edges and are therefore restricted to convex regions (a single part).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .delaunay import build_delaunay
from .diagram import Diagram, build_diagram, cell_edges
from .errors import MeritError
from .geom import dist
from .region import Region
from .sensitivity import accumulate_F, cell_area_gradient, edge_length_gradient

_ANGLE_MARGIN = 1e-7  # reject angles this close to 0 or pi


# ---------------------------------------------------------------------------
# objective specification

_VALID_KINDS = ("j0", "j1", "j2", "j3", "j4", "j5")


@dataclass
class ObjectiveTerm:
    kind: str
    weight: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _VALID_KINDS:
            raise MeritError(f"unknown merit kind {self.kind!r}")
        if not (self.weight >= 0.0) or not math.isfinite(self.weight):
            raise MeritError(f"{self.kind}: weight must be >= 0, got {self.weight!r}")
        p = self.params
        if self.kind == "j0":
            delta = p.setdefault("delta", 0.1)
            if not delta > 0.0:
                raise MeritError(f"j0: delta must be > 0, got {delta!r}")
            mode = p.setdefault("mode", "delaunay_neighbors")
            if mode not in ("delaunay_neighbors", "all_pairs"):
                raise MeritError(f"j0: unknown mode {mode!r}")
        elif self.kind == "j2":
            c2 = p.get("c2")
            if c2 is None or not 0.0 < c2 < 1.0:
                raise MeritError(f"j2: c2 must be in (0,1), got {c2!r}")
        elif self.kind == "j3":
            c3 = p.get("c3")
            if c3 is None or not 0.0 < c3 < 1.0:
                raise MeritError(f"j3: c3 must be in (0,1), got {c3!r}")
        elif self.kind == "j5":
            p.setdefault("psi", "one")


@dataclass
class ObjectiveSpec:
    terms: list

    def __post_init__(self):
        if not self.terms:
            raise MeritError("objective needs at least one term")


def parse_objective(text: str) -> ObjectiveSpec:
    """Parse ``j0:10@delta=0.1,j1:1,j2:1@c2=0.4,...`` into an ObjectiveSpec."""
    terms = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        head, *opts = chunk.split("@")
        if ":" in head:
            kind, wtext = head.split(":", 1)
            try:
                weight = float(wtext)
            except ValueError:
                raise MeritError(f"bad weight {wtext!r} in term {chunk!r}") from None
        else:
            kind, weight = head, 1.0
        params = {}
        for opt in opts:
            if "=" not in opt:
                raise MeritError(f"bad parameter {opt!r} in term {chunk!r}")
            key, val = opt.split("=", 1)
            key = key.strip()
            if key in ("delta", "c2", "c3"):
                params[key] = float(val)
            else:
                params[key] = val.strip()
        terms.append(ObjectiveTerm(kind.strip().lower(), weight, params))
    return ObjectiveSpec(terms)


def format_objective(spec: ObjectiveSpec) -> str:
    chunks = []
    for t in spec.terms:
        opts = "".join(
            f"@{k}={v}" for k, v in sorted(t.params.items()) if not callable(v)
        )
        chunks.append(f"{t.kind}:{t.weight:g}{opts}")
    return ",".join(chunks)


# ---------------------------------------------------------------------------
# size fields for J5


@dataclass
class FieldFunction:
    """Scalar field psi with its gradient, as used by J5."""

    evaluate: object
    gradient: object
    name: str = "custom"


def make_field(name: str, region: Region) -> FieldFunction:
    """Built-in psi presets: ``one``, ``paraboloid``, ``rosenbrock_level``.

    ``paraboloid`` grades cell sizes radially from the center of the region
    (value 2.5 at the center, 0.5 at the circumscribing radius);
    ``rosenbrock_level`` asks for small cells inside a scaled level set of
    the Rosenbrock function and larger ones outside (piecewise constant, so
    its gradient is zero almost everywhere).
    """
    if name == "one":
        return FieldFunction(lambda z: 1.0, lambda z: (0.0, 0.0), "one")
    if name == "paraboloid":
        x0, y0, x1, y1 = region.bbox
        cx = 0.5 * (x0 + x1)
        cy = 0.5 * (y0 + y1)
        r2 = max(
            (v[0] - cx) ** 2 + (v[1] - cy) ** 2
            for part in region.parts
            for v in part.vertices
        )

        def ev(z):
            return 2.5 - 2.0 * ((z[0] - cx) ** 2 + (z[1] - cy) ** 2) / r2

        def gr(z):
            return (-4.0 * (z[0] - cx) / r2, -4.0 * (z[1] - cy) / r2)

        return FieldFunction(ev, gr, "paraboloid")
    if name == "rosenbrock_level":

        def ev(z):
            zb1 = 2.0 + 0.4 * z[0]
            zb2 = 2.0 + 0.4 * z[1]
            inside = (zb2 - (zb1 / 4.0) ** 2) ** 2 + (zb1 / 4.0 - 1.0) ** 2 <= 1.0
            return 0.25 if inside else 1.075

        return FieldFunction(ev, lambda z: (0.0, 0.0), "rosenbrock_level")
    raise MeritError(f"unknown field preset {name!r}")


# ---------------------------------------------------------------------------
# individual merit terms


def eval_j0(sites, delta: float = 0.1, mode: str = "delaunay_neighbors", delaunay=None):
    """Separation penalty sum_{i<j} max(0, delta^2 - |a_i-a_j|^2)^2.

    ``delaunay_neighbors`` restricts the sum to neighbor pairs (an O(kappa)
    surrogate, exact whenever non-neighbors are farther than delta apart);
    configurations with at most 64 sites always use all pairs.
    """
    sites = np.asarray(sites, dtype=float)
    kappa = len(sites)
    grad = np.zeros(2 * kappa)
    all_pairs = mode == "all_pairs" or kappa <= 64
    if all_pairs:
        pairs = itertools.combinations(range(kappa), 2)
    else:
        if delaunay is None:
            delaunay = build_delaunay(sites)
        pairs = (
            (i, k) for i in range(kappa) for k in delaunay.neighbors[i] if k > i
        )
    d2 = delta * delta
    value = 0.0
    for i, j in pairs:
        dx = sites[i, 0] - sites[j, 0]
        dy = sites[i, 1] - sites[j, 1]
        m = d2 - dx * dx - dy * dy
        if m <= 0.0:
            continue
        value += m * m
        gx = -4.0 * m * dx
        gy = -4.0 * m * dy
        grad[2 * i] += gx
        grad[2 * i + 1] += gy
        grad[2 * j] -= gx
        grad[2 * j + 1] -= gy
    return value, grad


def _area_deviation(diagram: Diagram, psi=None):
    """Per-cell deviations |V_i|/(|A|/kappa) - psi(a_i), psi defaulting to 1."""
    kappa = diagram.kappa
    ideal = diagram.region.area / kappa
    dev = np.empty(kappa)
    for i in range(kappa):
        target = 1.0 if psi is None else psi(diagram.sites[i])
        dev[i] = diagram.areas[i] / ideal - target
    return dev


def _area_term(diagram: Diagram, psi=None, psi_grad=None):
    kappa = diagram.kappa
    dev = _area_deviation(diagram, psi)
    value = float(np.dot(dev, dev)) / kappa
    grad = [0.0] * (2 * kappa)
    sites_list = [(float(x), float(y)) for x, y in diagram.sites]
    scale = 2.0 / diagram.region.area  # (2/kappa) * J_i * (kappa/|A|)
    for i in range(kappa):
        if dev[i] != 0.0:
            cell_area_gradient(grad, diagram, i, scale * dev[i], sites_list)
        if psi_grad is not None:
            gx, gy = psi_grad(diagram.sites[i])
            coef = -2.0 / kappa * dev[i]
            grad[2 * i] += coef * gx
            grad[2 * i + 1] += coef * gy
    return value, np.asarray(grad)


def eval_j1(diagram: Diagram):
    """Equal-area merit (1/kappa) sum_i (|V_i|/(|A|/kappa) - 1)^2."""
    return _area_term(diagram)


def eval_j5(diagram: Diagram, psi: FieldFunction):
    """Graded-area merit: J1 with per-site area targets psi(a_i)."""
    return _area_term(diagram, psi.evaluate, psi.gradient)


def _require_convex(diagram: Diagram, kind: str):
    if diagram.region.p != 1:
        raise MeritError(
            f"{kind} needs direct access to whole cell edges and is only "
            f"supported on convex regions (one part); this region has "
            f"{diagram.region.p} parts"
        )


def _bnormals(diagram: Diagram):
    return [be.normal for be in diagram.region.boundary_edges]


def eval_j2(diagram: Diagram, c2: float):
    """Edge-balance merit: per cell, mean squared violation of
    |E| >= c2 * (perimeter / edge count)."""
    if not 0.0 < c2 < 1.0:
        raise MeritError(f"c2 must be in (0,1), got {c2!r}")
    _require_convex(diagram, "j2")
    sites_list = [(float(x), float(y)) for x, y in diagram.sites]
    bnormals = _bnormals(diagram)
    kappa = diagram.kappa
    grad = [0.0] * (2 * kappa)
    value = 0.0
    for i in range(kappa):
        edges = cell_edges(diagram, i)
        n_i = len(edges)
        if n_i == 0:
            raise MeritError(f"cell {i} is empty")
        per = sum(e.length for e in edges)
        ebar = per / n_i
        mins = [min(0.0, e.length / ebar - c2) for e in edges]
        if not any(mins):
            continue
        value += sum(m * m for m in mins) / n_i
        s = sum(e.length / per * m for e, m in zip(edges, mins))
        for e, m in zip(edges, mins):
            mu = 2.0 / per * (m - s)
            if mu != 0.0:
                edge_length_gradient(grad, sites_list, bnormals, i, e, mu)
    return value, np.asarray(grad)


def _cell_angles(edges, i):
    """Interior angle at the start vertex of each edge (None where that
    vertex is a fixed region corner), plus unit tangents."""
    n = len(edges)
    taus = []
    for e in edges:
        taus.append(((e.w[0] - e.v[0]) / e.length, (e.w[1] - e.v[1]) / e.length))
    thetas = []
    for idx in range(n):
        if edges[idx].v_class[0] == "T":
            thetas.append(None)
            continue
        tprev = taus[idx - 1]
        tcur = taus[idx]
        cosv = -(tcur[0] * tprev[0] + tcur[1] * tprev[1])
        cosv = max(-1.0, min(1.0, cosv))
        theta = math.acos(cosv)
        if theta < _ANGLE_MARGIN or theta > math.pi - _ANGLE_MARGIN:
            raise MeritError(
                f"degenerate interior angle {theta:.3e} at {edges[idx].v} (cell {i})"
            )
        thetas.append(theta)
    return taus, thetas


def eval_j3(diagram: Diagram, c3: float):
    """Angle-balance merit: per cell, mean squared violation of
    theta_E >= c3 * (mean interior angle), corners of the region excluded."""
    if not 0.0 < c3 < 1.0:
        raise MeritError(f"c3 must be in (0,1), got {c3!r}")
    _require_convex(diagram, "j3")
    sites_list = [(float(x), float(y)) for x, y in diagram.sites]
    bnormals = _bnormals(diagram)
    kappa = diagram.kappa
    grad = [0.0] * (2 * kappa)
    value = 0.0
    for i in range(kappa):
        edges = cell_edges(diagram, i)
        if not edges:
            raise MeritError(f"cell {i} is empty")
        taus, thetas = _cell_angles(edges, i)
        meas = [idx for idx, th in enumerate(thetas) if th is not None]
        if not meas:
            continue
        nm = len(meas)
        tbar = sum(thetas[idx] for idx in meas) / nm
        mins = {idx: min(0.0, thetas[idx] / tbar - c3) for idx in meas}
        if not any(mins.values()):
            continue
        value += sum(m * m for m in mins.values()) / nm
        s = sum(thetas[idx] / (tbar * nm) * mins[idx] for idx in meas)
        n = len(edges)
        for idx in meas:
            eta = 2.0 / (tbar * nm) * (mins[idx] - s)
            if eta == 0.0:
                continue
            e = edges[idx]
            eh = edges[idx - 1]
            nu = (taus[idx][1], -taus[idx][0])
            nuh = (taus[idx - 1][1], -taus[idx - 1][0])
            w = eta / e.length
            accumulate_F(grad, sites_list, bnormals, i, e.w, e.w_class, nu[0], nu[1], w)
            accumulate_F(grad, sites_list, bnormals, i, e.v, e.v_class, nu[0], nu[1], -w)
            wh = eta / eh.length
            accumulate_F(grad, sites_list, bnormals, i, eh.w, eh.w_class, nuh[0], nuh[1], -wh)
            accumulate_F(grad, sites_list, bnormals, i, eh.v, eh.v_class, nuh[0], nuh[1], wh)
    return value, np.asarray(grad)


def eval_j4(diagram: Diagram):
    """Midpoint-matching merit: per cell, mean of |p_E - q_E|^2 / |E|^2 over
    interior edges (p_E the Voronoi edge midpoint, q_E the Delaunay one)."""
    _require_convex(diagram, "j4")
    sites_list = [(float(x), float(y)) for x, y in diagram.sites]
    bnormals = _bnormals(diagram)
    kappa = diagram.kappa
    grad = [0.0] * (2 * kappa)
    value = 0.0
    for i in range(kappa):
        edges = [e for e in cell_edges(diagram, i) if e.kind[0] == "int"]
        if not edges:
            raise MeritError(
                f"cell {i} has no interior edges (kappa={kappa}); J4 needs >= 2 cells"
            )
        mi = len(edges)
        for e in edges:
            dx = e.p_mid[0] - e.q_mid[0]
            dy = e.p_mid[1] - e.q_mid[1]
            L2 = e.length * e.length
            dn2 = dx * dx + dy * dy
            value += dn2 / L2 / mi
            k = e.kind[1]
            cw = 1.0 / mi
            ex = e.w[0] - e.v[0]
            ey = e.w[1] - e.v[1]
            f2 = 2.0 * dn2 / (L2 * L2)
            mu = (dx / L2 + f2 * ex, dy / L2 + f2 * ey)
            et = (dx / L2 - f2 * ex, dy / L2 - f2 * ey)
            accumulate_F(grad, sites_list, bnormals, i, e.v, e.v_class, mu[0], mu[1], cw)
            accumulate_F(grad, sites_list, bnormals, i, e.w, e.w_class, et[0], et[1], cw)
            grad[2 * i] -= cw * dx / L2
            grad[2 * i + 1] -= cw * dy / L2
            grad[2 * k] -= cw * dx / L2
            grad[2 * k + 1] -= cw * dy / L2
    return value, np.asarray(grad)


# ---------------------------------------------------------------------------
# weighted composite


@dataclass
class ObjectiveResult:
    value: float
    gradient: np.ndarray
    per_term: dict
    diagram: Diagram | None = None


def eval_objective(
    sites,
    region: Region,
    spec: ObjectiveSpec,
    delaunay=None,
    diagram: Diagram | None = None,
) -> ObjectiveResult:
    """Weighted sum of merit terms; one diagram build shared by all terms."""
    sites = np.asarray(sites, dtype=float)
    if sites.ndim == 1:
        sites = sites.reshape(-1, 2)
    kappa = len(sites)
    needs_diagram = any(t.kind != "j0" for t in spec.terms)
    needs_delaunay = needs_diagram or any(
        t.kind == "j0"
        and t.params.get("mode", "delaunay_neighbors") == "delaunay_neighbors"
        and kappa > 64
        for t in spec.terms
    )
    if needs_delaunay and delaunay is None:
        delaunay = build_delaunay(sites)
    if needs_diagram and diagram is None:
        diagram = build_diagram(sites, region, delaunay)

    total = 0.0
    grad = np.zeros(2 * kappa)
    per_term = {}
    for t in spec.terms:
        if t.kind == "j0":
            v, g = eval_j0(sites, t.params["delta"], t.params["mode"], delaunay)
        elif t.kind == "j1":
            v, g = eval_j1(diagram)
        elif t.kind == "j2":
            v, g = eval_j2(diagram, t.params["c2"])
        elif t.kind == "j3":
            v, g = eval_j3(diagram, t.params["c3"])
        elif t.kind == "j4":
            v, g = eval_j4(diagram)
        else:
            psi = t.params["psi"]
            if isinstance(psi, str):
                psi = make_field(psi, region)
            v, g = eval_j5(diagram, psi)
        per_term[t.kind] = v
        total += t.weight * v
        grad += t.weight * g
    return ObjectiveResult(total, grad, per_term, diagram)
