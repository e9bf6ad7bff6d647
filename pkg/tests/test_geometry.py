import numpy as np
import pytest

from stokeslame.errors import ConfigError, GeometryError, ShapeError
from stokeslame.geometry import (BASE_RESOLUTION, FLUID_DIRICHLET, INTERFACE,
                                 SOLID_DIRICHLET, TimeGrid, build_geometry,
                                 interface_extension, interface_restriction,
                                 write_mesh_csv)


def test_time_grid():
    g = TimeGrid(2.0, 8)
    assert g.dt == 0.25
    assert np.allclose(g.times, np.arange(9) * 0.25)
    with pytest.raises(ConfigError):
        TimeGrid(0.0, 8)
    with pytest.raises(ConfigError):
        TimeGrid(1.0, 0)


@pytest.mark.parametrize("r", [0, 1, 2])
def test_flat_counts_and_areas(r):
    mesh = build_geometry("flat-channel", 0.0, r)
    n = BASE_RESOLUTION * 2 ** r
    assert mesh.fluid_nodes.shape == ((n + 1) ** 2, 2)
    assert mesh.fluid_elements.shape == (2 * n * n, 3)
    assert mesh.solid_elements.shape == (2 * n * n, 3)
    for side in ("fluid", "solid"):
        p = mesh.nodes(side)[mesh.elements(side)]
        a, b = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        areas = 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
        assert np.all(areas > 0)
        assert abs(areas.sum() - 1.0) < 1e-12  # each subdomain is a unit square
    assert mesh.interface_pairs.shape == (n + 1, 2)
    # flat interface has unit length and straight arclength
    assert abs(mesh.interface_arclength[-1] - 1.0) < 1e-12


def test_interface_pairs_coincide_and_tags():
    mesh = build_geometry("flat-channel", 0.0, 1)
    fpts = mesh.fluid_nodes[mesh.interface_pairs[:, 0]]
    spts = mesh.solid_nodes[mesh.interface_pairs[:, 1]]
    assert np.allclose(fpts, spts, atol=1e-14)
    assert np.all(fpts[:, 1] == 0.0)
    assert set(mesh.fluid_boundary_tags) == {INTERFACE, FLUID_DIRICHLET}
    assert set(mesh.solid_boundary_tags) == {INTERFACE, SOLID_DIRICHLET}
    n = mesh.interface_pairs.shape[0] - 1
    assert np.sum(mesh.fluid_boundary_tags == INTERFACE) == n
    assert np.sum(mesh.solid_boundary_tags == INTERFACE) == n


def test_curved_geometry():
    mesh = build_geometry("curved-interface", 0.1, 1)
    pts = mesh.interface_vertex_coords
    assert np.allclose(pts[:, 1], 0.1 * np.sin(2 * np.pi * pts[:, 0]), atol=1e-12)
    assert mesh.interface_arclength[-1] > 1.0
    norms = np.linalg.norm(mesh.interface_normals, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-12)
    # outer boundaries stay on the reference square
    assert np.allclose(mesh.fluid_nodes[:, 1].max(), 1.0)
    assert np.allclose(mesh.solid_nodes[:, 1].min(), -1.0)


def test_determinism():
    a = build_geometry("curved-interface", 0.05, 2)
    b = build_geometry("curved-interface", 0.05, 2)
    assert np.array_equal(a.fluid_nodes, b.fluid_nodes)
    assert np.array_equal(a.solid_elements, b.solid_elements)


def test_invalid_inputs():
    with pytest.raises(ConfigError):
        build_geometry("no-such-preset")
    with pytest.raises(GeometryError):
        build_geometry("curved-interface", 0.3, 1)
    with pytest.raises(ConfigError):
        build_geometry("flat-channel", 0.0, -1)


def test_restriction_extension_roundtrip(rng):
    mesh = build_geometry("flat-channel", 0.0, 1)
    ni = mesh.interface_pairs.shape[0]
    vals = rng.standard_normal((ni, 2))
    ext = interface_extension(mesh, "fluid", vals)
    back = interface_restriction(mesh, "fluid", ext)
    assert np.array_equal(back, vals)
    with pytest.raises(ShapeError):
        interface_restriction(mesh, "fluid", np.zeros(3))


def test_write_mesh_csv(tmp_path):
    mesh = build_geometry("flat-channel", 0.0, 0)
    write_mesh_csv(mesh, tmp_path)
    for side in ("fluid", "solid"):
        nodes = (tmp_path / f"{side}_nodes.csv").read_text().splitlines()
        assert nodes[0] == "id,x,y"
        assert len(nodes) == 1 + mesh.nodes(side).shape[0]
        # repr round-trips exactly
        _, x, y = nodes[1].split(",")
        assert float(x) == mesh.nodes(side)[0, 0]
        bnd = (tmp_path / f"{side}_boundary.csv").read_text().splitlines()
        assert bnd[0] == "facet,node_a,node_b,tag"
