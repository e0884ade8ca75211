import numpy as np
import pytest

from stromasim.geometry import (BiconicSurface, CorneaGeometry, MeshSpec,
                                biconic_sag, boundary_orientation_deviation,
                                generate_mesh, shape_factors,
                                reference_geometry)


def test_biconic_sag_apex_and_symmetry():
    s = BiconicSurface(r_steep=7.56, r_flat=7.41, q_steep=1.5, q_flat=1.5)
    assert biconic_sag(0.0, 0.0, s) == 0.0
    a = biconic_sag(1.3, -0.7, s)
    assert biconic_sag(-1.3, 0.7, s) == pytest.approx(a)


def test_biconic_sag_small_x_curvature():
    # near the apex the sag follows z ~ x^2 / (2 R) along each meridian;
    # the steep meridian sits on x for steep_axis_deg = 0
    s = BiconicSurface(r_steep=7.56, r_flat=7.41, q_steep=1.5, q_flat=1.5)
    x = 1e-3
    assert biconic_sag(x, 0.0, s) == pytest.approx(x**2 / (2 * 7.56),
                                                   rel=1e-5)
    assert biconic_sag(0.0, x, s) == pytest.approx(x**2 / (2 * 7.41),
                                                   rel=1e-5)


def test_reference_mesh_counts():
    mesh = generate_mesh(reference_geometry(), MeshSpec(24, 3))
    assert mesh.n_nodes == 2500
    assert mesh.n_hex == 1728


def test_even_layer_count_rejected():
    with pytest.raises(ValueError, match="odd"):
        MeshSpec(24, 4)


def test_mesh_dimensions_match_geometry():
    geom = reference_geometry()
    mesh = generate_mesh(geom, MeshSpec(24, 3))
    n1 = mesh.n_m + 1
    center = (mesh.n_m // 2) * n1 + mesh.n_m // 2
    anterior_start = mesh.n_l * n1 * n1
    # central thickness is exact; in-plane radius equals the semi-diameter
    thickness = (mesh.nodes[anterior_start + center, 2]
                 - mesh.nodes[center, 2])
    assert thickness == pytest.approx(geom.central_thickness, abs=1e-12)
    r = np.linalg.norm(mesh.nodes[:n1 * n1, :2], axis=1)
    assert r.max() == pytest.approx(geom.in_plane_diameter / 2.0, rel=1e-12)
    # the generated dome height is a consistency check, not a constraint
    ant = mesh.nodes[anterior_start:anterior_start + n1 * n1, 2]
    dome = mesh.nodes[anterior_start + center, 2] - ant.min()
    assert dome == pytest.approx(geom.apex_elevation, rel=0.05)


def test_layers_ordered_through_thickness():
    mesh = generate_mesh(reference_geometry(), MeshSpec(8, 3))
    n1 = mesh.n_m + 1
    z = mesh.nodes[:, 2].reshape(mesh.n_l + 1, n1 * n1)
    assert np.all(np.diff(z, axis=0) > 0.0)


def test_hex_connectivity_positive_volume():
    from stromasim.elements import hex_precompute

    mesh = generate_mesh(reference_geometry(), MeshSpec(8, 3))
    pre = hex_precompute(mesh.nodes[mesh.hexes])
    assert np.all(pre.volume > 0.0)
    assert np.all(pre.wdet > 0.0)


def test_shape_factors_positive_and_refinement_scaling():
    geom = reference_geometry()
    f1 = shape_factors(generate_mesh(geom, MeshSpec(12, 3)))
    f2 = shape_factors(generate_mesh(geom, MeshSpec(24, 3)))
    assert np.all(f1.per_cell_f > 0.0)
    # halving the in-plane size at fixed layers halves the shape factor
    assert f2.mean_f == pytest.approx(f1.mean_f / 2.0, rel=0.05)


def test_matched_shape_factor_family():
    # n_l / n_m constant keeps the mean shape factor nearly constant
    geom = reference_geometry()
    fa = shape_factors(generate_mesh(geom, MeshSpec(18, 3))).mean_f
    fb = shape_factors(generate_mesh(geom, MeshSpec(30, 5))).mean_f
    assert abs(fa - fb) / fb < 0.02


def test_boundary_orientation_deviation_reported():
    mesh = generate_mesh(reference_geometry(), MeshSpec(12, 3))
    cells, degs = boundary_orientation_deviation(mesh)
    assert len(cells) == len(degs) > 0
    # the squircle map aligns well on the axes, worst near the corners
    assert np.min(degs) < 5.0
    assert np.max(degs) < 50.0


def test_limbus_columns_span_all_layers():
    mesh = generate_mesh(reference_geometry(), MeshSpec(8, 3))
    for col in mesh.limbus_columns:
        assert len(col) == mesh.n_l + 1
        xy = mesh.nodes[col, :2]
        assert np.allclose(xy, xy[0], atol=1e-9)


def test_geometry_validation():
    with pytest.raises(ValueError):
        BiconicSurface(r_steep=-1.0, r_flat=7.41, q_steep=1.5, q_flat=1.5)
    good = BiconicSurface(r_steep=7.56, r_flat=7.41, q_steep=1.5, q_flat=1.5)
    with pytest.raises(ValueError):
        CorneaGeometry(anterior=good, posterior=good,
                       central_thickness=-0.5, apex_elevation=2.48,
                       in_plane_diameter=10.6)
