import numpy as np
import pytest

from voronoi_tailor import Region, build_diagram, draw_sites, verify_regularity


@pytest.fixture
def square4():
    """The [-2,2]^2 square used by the small hand-checked configurations."""
    return Region([[(-2, -2), (2, -2), (2, 2), (-2, 2)]], name="square4")


@pytest.fixture
def unit_square():
    return Region([[(0, 0), (1, 0), (1, 1), (0, 1)]], name="unit_square")


def fd_gradient(value_fn, x, h=1e-6):
    """Central finite differences of a scalar function of a flat vector."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for s in range(len(x)):
        hs = h * max(1.0, abs(x[s]))
        xp = x.copy()
        xp[s] += hs
        xm = x.copy()
        xm[s] -= hs
        g[s] = (value_fn(xp) - value_fn(xm)) / (2.0 * hs)
    return g


def rel_sup_error(g, gfd, floor=1e-8):
    """Relative sup-norm disagreement, ignoring slots that are ~0 in both."""
    g = np.asarray(g)
    gfd = np.asarray(gfd)
    mask = (np.abs(g) > floor) | (np.abs(gfd) > floor)
    if not mask.any():
        return 0.0
    return float(
        (np.abs(g - gfd)[mask] / np.maximum(np.abs(g[mask]), np.abs(gfd[mask]))).max()
    )


def sample_regular_config(region, kappa, rng, margin=1e-4, max_tries=50):
    """Random sites in the region whose diagram passes the regularity checks
    with a margin wide enough for finite-difference validation."""
    for _ in range(max_tries):
        sites = draw_sites(region, kappa, rng)
        diagram = build_diagram(sites, region)
        if verify_regularity(diagram, margin=margin).ok:
            return sites, diagram
    raise AssertionError(f"no regular configuration found in {max_tries} tries")
