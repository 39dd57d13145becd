import numpy as np
import pytest

from bubblelab import bubble
from bubblelab.grid import RadialGrid, ball_volume, gauss_grid, geometric_grid


@pytest.mark.parametrize("make", [geometric_grid, gauss_grid])
@pytest.mark.parametrize("n", [7, 9])
def test_ball_volume_and_positivity(make, n):
    g = make(n)
    assert np.all(g.weights > 0)
    assert np.all(np.diff(g.nodes) > 0)
    assert g.ball_volume_defect() < 1e-10


def test_nodes_per_decade(mesh7):
    # resolves scale 1 and the smallest bubble scale at >= 8 nodes/decade
    assert mesh7.nodes_per_decade(0.05, mesh7.r_max) >= 8


def test_dimension_contract():
    with pytest.raises(ValueError):
        geometric_grid(6)
    with pytest.raises(ValueError):
        geometric_grid(7, per_decade=4)


def test_serialization_roundtrip(mesh7):
    g2 = RadialGrid.from_json(mesh7.to_json())
    assert g2.n == mesh7.n
    np.testing.assert_allclose(g2.nodes, mesh7.nodes)
    np.testing.assert_allclose(g2.weights, mesh7.weights)
    with pytest.raises(ValueError):
        RadialGrid.from_json('{"oops": 1}')


def test_quadrature_refinement_order(quad7):
    # int r^2 W^{2n/(n-2)} dx: observed order >= 2 on the mesh quadrature
    n = 7

    def integrand(r):
        return r ** 2 * bubble.ground_state(n, r) ** (2.0 * n / (n - 2.0))

    ref = quad7.integrate(integrand(quad7.nodes))
    errs = []
    for per_decade in (40, 80, 160):
        g = geometric_grid(n, r_max=3000.0, r_cell=0.32 / per_decade, per_decade=per_decade)
        errs.append(abs(g.integrate(integrand(g.nodes)) - ref) / ref)
    order1 = np.log2(errs[0] / errs[1])
    order2 = np.log2(errs[1] / errs[2])
    assert order1 >= 2.0 - 0.3
    assert order2 >= 2.0 - 0.3


def test_gradient_seminorm_matches_analytic(mesh7):
    n = 7
    vals = bubble.ground_state(n, mesh7.nodes)
    exact = bubble.explicit_constants(n)["gradWsq"]
    disc = mesh7.gradient_seminorm_sq(vals)
    assert abs(disc - exact) / exact < 2e-4


def test_gauss_grid_rejects_difference_ops(quad7):
    with pytest.raises(ValueError):
        quad7.gradient_seminorm_sq(np.ones(quad7.size))
