import numpy as np
import pytest

from stromasim.geometry import MeshSpec, generate_mesh, reference_geometry
from stromasim.unitcell import TrussKind, assign_truss_areas, build_trusswork


@pytest.fixture(scope="module")
def mesh():
    return generate_mesh(reference_geometry(), MeshSpec(8, 3))


@pytest.fixture(scope="module")
def truss(mesh):
    return build_trusswork(mesh, spec=mesh)


def test_deduplicated_and_ordered(truss):
    assert np.all(truss.node_a < truss.node_b)
    pairs = truss.node_a.astype(np.int64) * 10**6 + truss.node_b
    assert len(np.unique(pairs)) == truss.n_trusses


def test_all_kinds_present(truss):
    kinds = set(truss.kind.tolist())
    assert kinds == {TrussKind.COLLAGEN,
                     TrussKind.CROSSLINK_IN_PLANE_AXIAL,
                     TrussKind.CROSSLINK_IN_PLANE_DIAGONAL,
                     TrussKind.CROSSLINK_OUT_OF_PLANE}


def test_reference_mesh_truss_count():
    mesh = generate_mesh(reference_geometry(), MeshSpec(24, 3))
    ts = build_trusswork(mesh, spec=mesh)
    assert ts.n_trusses == 13008


def test_collagen_on_node_layers_only(mesh, truss):
    # collagen laminae live on node layers; their two ends share a layer
    n1 = mesh.n_m + 1
    layer_a = truss.node_a // (n1 * n1)
    layer_b = truss.node_b // (n1 * n1)
    col = truss.kind == TrussKind.COLLAGEN
    assert np.all(layer_a[col] == layer_b[col])
    oop = truss.kind == TrussKind.CROSSLINK_OUT_OF_PLANE
    assert np.all(layer_a[oop] != layer_b[oop])


def test_alternating_lamina_orientation(mesh, truss):
    # adjacent collagen laminae alternate between the two in-plane
    # directions, one entry per node layer
    orient = truss.lamina_orientation
    assert len(orient) == mesh.n_l + 1
    assert all(a != b for a, b in zip(orient, orient[1:]))
    assert set(orient) == {"dir1", "dir2"}


def test_positive_reference_lengths(truss, mesh):
    d = mesh.nodes[truss.node_b] - mesh.nodes[truss.node_a]
    assert np.allclose(np.linalg.norm(d, axis=1), truss.ref_length)
    assert np.all(truss.ref_length > 0.0)


def test_area_weights(mesh, truss):
    ts = assign_truss_areas(truss, mesh)
    w_m = 1.0 / mesh.n_m
    assert np.allclose(ts.ref_area[ts.surface], w_m / (2 * mesh.n_l))
    assert np.allclose(ts.ref_area[~ts.surface], w_m / mesh.n_l)
    # interior laminae carry twice the referential area of surface ones
    assert ts.ref_area[~ts.surface].min() == pytest.approx(
        2.0 * ts.ref_area[ts.surface].max())


def test_odd_layers_required():
    geom = reference_geometry()
    mesh = generate_mesh(geom, MeshSpec(6, 3))
    # the mesh spec enforces odd n_l at construction
    with pytest.raises(ValueError, match="odd"):
        MeshSpec(6, 2)
    assert build_trusswork(mesh, spec=mesh).n_trusses > 0
