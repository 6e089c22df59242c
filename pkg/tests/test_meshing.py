import math

import numpy as np
import pytest

from levelgeom import quadrature as q
from levelgeom.errors import ConfigError, TopologyError
from levelgeom.fields import BoundingBox, builtin_field
from levelgeom.meshing import (
    GridSpec,
    TriangleMesh,
    area_estimate,
    connected_components,
    edge_counts,
    euler_characteristic,
    extract_level_set,
    read_off,
    surface_area,
    surface_integral,
    surface_integral_detailed,
    write_off,
)

SPHERE = builtin_field("sphere")
DW = builtin_field("double_well")
TORUS = builtin_field("torus", R=2)
TBOX = BoundingBox((-3.5, -3.5, -1.5), (3.5, 3.5, 1.5))


def grid(lo, hi, res=128):
    return GridSpec(BoundingBox.cube(lo, hi, 3), res)


@pytest.fixture(scope="module")
def sphere1():
    return extract_level_set(SPHERE, 1.0, grid(-1.5, 1.5))


def test_sphere_mesh_closed(sphere1):
    _, counts = edge_counts(sphere1)
    assert np.all(counts == 2)
    assert surface_area(sphere1) == pytest.approx(4 * math.pi, rel=5e-3)
    np.testing.assert_allclose(np.linalg.norm(sphere1.vertices, axis=1), 1.0, atol=2e-3)


def test_areas():
    assert surface_area(extract_level_set(SPHERE, 4.0, grid(-2.5, 2.5))) == pytest.approx(16 * math.pi, rel=5e-3)
    assert surface_area(extract_level_set(TORUS, 0.25, GridSpec(TBOX, 128))) == pytest.approx(4 * math.pi**2, rel=1e-2)


def test_empty_mesh():
    m = extract_level_set(SPHERE, -1.0, grid(-2, 2, 32))
    assert m.is_empty and surface_area(m) == 0.0
    assert connected_components(m) == 0 and euler_characteristic(m) == 0


def test_surface_integrals(sphere1):
    assert surface_integral(sphere1, SPHERE, lambda s: s.H / s.grad_norm) == pytest.approx(2 * math.pi, rel=1e-2)
    assert surface_integral(sphere1, SPHERE, lambda s: np.ones(len(s))) == pytest.approx(surface_area(sphere1), rel=1e-14)
    val = surface_integral(sphere1, SPHERE, lambda s: s.K * s.gradient[:, 0] / s.grad_norm)
    assert abs(val) <= 0.01 * 4 * math.pi
    res = surface_integral_detailed(sphere1, SPHERE, q.one)
    assert res.skipped_area_fraction == 0.0


def test_euler_characteristic():
    assert euler_characteristic(extract_level_set(SPHERE, 1.0, grid(-1.5, 1.5))) == 2
    assert euler_characteristic(extract_level_set(TORUS, 0.25, GridSpec(TBOX, 128))) == 0
    below = extract_level_set(DW, 0.5, grid(-2, 2, 160))
    above = extract_level_set(DW, 1.5, grid(-2, 2, 160))
    assert euler_characteristic(below) == 4 and connected_components(below) == 2
    assert euler_characteristic(above) == 2 and connected_components(above) == 1


@pytest.mark.parametrize(
    "field, t, box",
    [
        (SPHERE, 2.0, BoundingBox.cube(-2, 2, 3)),
        (TORUS, 0.5, TBOX),
        (DW, 0.5, BoundingBox.cube(-2, 2, 3)),
        (builtin_field("quadric", A=[1.0, 2.0, 3.0]), 1.0, BoundingBox.cube(-1.5, 1.5, 3)),
    ],
)
def test_chi_resolution_invariant(field, t, box):
    a = euler_characteristic(extract_level_set(field, t, GridSpec(box, 128)))
    b = euler_characteristic(extract_level_set(field, t, GridSpec(box, 192)))
    assert a == b


def test_resolution_convergence():
    g = grid(-1.5, 1.5)
    truth = 4 * math.pi
    a128 = surface_area(extract_level_set(SPHERE, 1.0, g))
    a256 = surface_area(extract_level_set(SPHERE, 1.0, g.with_resolution(256)))
    assert abs(a256 - a128) < abs(a128 - truth)
    assert abs(a256 - truth) < abs(a128 - truth)


def test_area_estimate_error_bar():
    est = area_estimate(SPHERE, 1.0, grid(-1.5, 1.5))
    assert est.std_error > 0
    assert abs(est.value - 4 * math.pi) <= 3 * est.std_error


@pytest.mark.parametrize("field, t, box", [(SPHERE, 2.0, BoundingBox.cube(-2.5, 2.5, 3)), (TORUS, 0.5, TBOX)])
def test_mesh_matches_monte_carlo(field, t, box):
    mesh_area = surface_area(extract_level_set(field, t, GridSpec(box, 128)))
    mc = q.level_integral_shell(field, q.one, t, box, q.QuadratureConfig(samples=2_000_000), epsilon=0.01)
    assert abs(mesh_area - mc.value) <= max(0.01 * mesh_area, 3 * mc.std_error)


def test_level_on_grid_nodes_is_closed():
    # t = 1 sphere in [-2, 2] at res 32 passes exactly through grid nodes
    m = extract_level_set(SPHERE, 1.0, grid(-2, 2, 32))
    assert euler_characteristic(m) == 2


def test_boundary_edges_raise():
    m = extract_level_set(SPHERE, 4.0, grid(-1.5, 1.5, 32))
    with pytest.raises(TopologyError):
        euler_characteristic(m)


def test_non_manifold_edge_raises():
    v = np.zeros((5, 3))
    tri = np.array([[0, 1, 2], [0, 1, 3], [0, 1, 4]])
    with pytest.raises(TopologyError):
        euler_characteristic(TriangleMesh(v, tri))


def test_grid_validation():
    with pytest.raises(ConfigError):
        GridSpec(BoundingBox.cube(-1, 1, 3), 8)
    with pytest.raises(ConfigError):
        GridSpec(BoundingBox.cube(-1, 1, 4), 32)
    with pytest.raises(ConfigError):
        extract_level_set(builtin_field("sphere", dim=4), 1.0, grid(-1, 1, 32))


def test_off_roundtrip(tmp_path):
    m = extract_level_set(SPHERE, 1.0, grid(-1.5, 1.5, 24))
    path = tmp_path / "m.off"
    write_off(m, path, comments=["sphere t=1"])
    text = path.read_text().splitlines()
    assert text[0] == "OFF" and text[1] == "# sphere t=1"
    back = read_off(path)
    np.testing.assert_array_equal(back.vertices, m.vertices)
    np.testing.assert_array_equal(back.triangles, m.triangles)
