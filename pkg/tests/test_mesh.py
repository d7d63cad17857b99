"""Mesh generation, reflection tiling, DOF classification, and mesh I/O."""

import numpy as np
import pytest

import layerrom as lr
from layerrom.errors import InvalidInputError
from layerrom.mesh import reflection_pairs



def test_square_template_coarsest():
    mesh = lr.build_template_layer(lr.LayerProfile.square(), 0.5)
    assert mesh.n_triangles >= 8
    assert np.allclose(mesh.vertices.min(axis=0), [0.0, 0.0])
    assert np.allclose(mesh.vertices.max(axis=0), [1.0, 1.0])
    right = np.flatnonzero(mesh.vertices[:, 0] == 1.0)
    assert len(right) == 3


def test_template_regression_counts():
    # frozen after first generation of the unit-square template at h = 1/32
    mesh = lr.build_template_layer(lr.LayerProfile.square(), 1.0 / 32)
    assert mesh.n_vertices == 1089
    assert mesh.n_triangles == 2048


def test_crown_template_inside_polygon():
    mesh = lr.build_template_layer(lr.LayerProfile.crown(), 1.0 / 8)
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    assert np.all(y >= -1e-14)
    # top boundary r2 = 1/2 + |x - 1/2| dips to half height at mid-layer
    assert np.all(y <= 0.5 + np.abs(x - 0.5) + 1e-14)
    # triangle areas tile the polygon area exactly
    p = mesh.vertices[mesh.triangles]
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    areas = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    assert np.all(areas > 0)
    assert areas.sum() == pytest.approx(0.75, abs=1e-12)


def test_template_diameter_bound():
    for profile in (lr.LayerProfile.square(), lr.LayerProfile.crown()):
        for h in (1.0 / 8, 1.0 / 20):
            mesh = lr.build_template_layer(profile, h)
            assert mesh.max_diameter() <= 2.0 * h + 1e-14


def test_degenerate_profile_rejected():
    with pytest.raises(InvalidInputError):
        lr.LayerProfile((0.0, 0.5, 1.0), (0.0, 0.6, 0.0), (1.0, 0.5, 1.0))
    with pytest.raises(InvalidInputError):
        lr.LayerProfile((0.0, 1.0), (0.0, 0.0), (1.0, 1.0), thickness=2.0)
    with pytest.raises(InvalidInputError):
        lr.build_template_layer(lr.LayerProfile.square(), 0.9)


def test_reflect_two_square():
    mesh = lr.reflect_and_tile(lr.build_template_layer(lr.LayerProfile.square(), 0.5), 2)
    assert mesh.n_layers == 2
    assert np.allclose(mesh.vertices.max(axis=0), [2.0, 1.0])
    assert len(mesh.interfaces) == 1
    assert np.all(mesh.vertices[mesh.interfaces[0], 0] == 1.0)


def test_reflect_crown_three():
    mesh = lr.reflect_and_tile(lr.build_template_layer(lr.LayerProfile.crown(), 1.0 / 8), 3)
    assert len(mesh.interfaces) == 2
    for k, iface in enumerate(mesh.interfaces, start=1):
        assert np.all(mesh.vertices[iface, 0] == float(k))
    # the crown top returns to full height at the interfaces
    for iface in mesh.interfaces:
        assert mesh.vertices[iface, 1].min() == 0.0
        assert mesh.vertices[iface, 1].max() == 1.0


def test_reflect_rejects_bad_input():
    template = lr.build_template_layer(lr.LayerProfile.square(), 0.5)
    with pytest.raises(InvalidInputError):
        lr.reflect_and_tile(template, 1)
    # mismatched end extents are fine for 2 layers but not for 3+
    lopsided = lr.LayerProfile((0.0, 1.0), (0.0, 0.0), (0.5, 1.0))
    t2 = lr.build_template_layer(lopsided, 0.2)
    lr.reflect_and_tile(t2, 2)
    with pytest.raises(InvalidInputError):
        lr.reflect_and_tile(t2, 3)
    # a mesh without generator metadata cannot be tiled exactly
    bare = lr.Mesh(template.vertices, template.triangles, template.tri_layers,
                   template.boundary, template.interfaces, 1)
    with pytest.raises(InvalidInputError):
        lr.reflect_and_tile(bare, 2)


def test_reflection_is_involution():
    template = lr.build_template_layer(lr.LayerProfile.crown(), 1.0 / 8)
    mesh = lr.reflect_and_tile(template, 2)
    layer1 = np.unique(mesh.triangles[mesh.tri_layers == 1])
    tcoords = template.vertices[np.lexsort(template.vertices.T)]
    mcoords = mesh.vertices[layer1][np.lexsort(mesh.vertices[layer1].T)]
    assert np.array_equal(tcoords, mcoords)


def test_reflection_bijection_exact():
    mesh = lr.reflect_and_tile(lr.build_template_layer(lr.LayerProfile.crown(), 1.0 / 8), 3)
    for i in range(2):
        left, right = reflection_pairs(mesh, i)
        mapped_x = 2.0 * (i + 1) - mesh.vertices[left, 0]
        assert np.max(np.abs(mapped_x - mesh.vertices[right, 0])) <= 1e-14
        assert np.max(np.abs(mesh.vertices[left, 1] - mesh.vertices[right, 1])) <= 1e-14


def test_conformity_no_edge_crosses_interfaces(crown3_h16):
    mesh = crown3_h16.mesh
    for layer in range(1, mesh.n_layers + 1):
        tri = mesh.triangles[mesh.tri_layers == layer]
        x = mesh.vertices[np.unique(tri), 0]
        assert np.all(x >= layer - 1 - 1e-14)
        assert np.all(x <= layer + 1e-14)


def test_interfaces_identical_heights(square3_h32):
    mesh = square3_h32.mesh
    h0 = mesh.vertices[mesh.interfaces[0], 1]
    h1 = mesh.vertices[mesh.interfaces[1], 1]
    assert np.array_equal(np.sort(h0), np.sort(h1))


def test_classify_coarse_square_interface():
    mesh = lr.reflect_and_tile(lr.build_template_layer(lr.LayerProfile.square(), 0.5), 2)
    part = lr.classify_dofs(mesh)
    assert len(part.interface) == 1
    assert len(part.interface[0]) == 1
    vid = part.vertex_of_free[part.interface[0][0]]
    assert np.allclose(mesh.vertices[vid], [1.0, 0.5])


def test_classify_equal_interface_cardinality(square3_h32):
    part = square3_h32.part
    assert len(part.interface[0]) == len(part.interface[1])


def test_classify_counts(crown3_h16):
    mesh, part = crown3_h16.mesh, crown3_h16.part
    total = sum(len(s) for s in part.interior) + sum(len(s) for s in part.interface)
    assert total == part.n_free
    assert part.n_free == mesh.n_vertices - len(part.dirichlet)
    # groups are pairwise disjoint
    all_dofs = np.concatenate([*part.interior, *part.interface])
    assert len(np.unique(all_dofs)) == len(all_dofs)


def test_interface_dofs_sorted_by_height(square3_h32):
    mesh, part = square3_h32.mesh, square3_h32.part
    for dofs in part.interface:
        heights = mesh.vertices[part.vertex_of_free[dofs], 1]
        assert np.all(np.diff(heights) > 0)


def test_interface_endpoints_are_dirichlet(square3_h32):
    mesh = square3_h32.mesh
    for iface in mesh.interfaces:
        heights = mesh.vertices[iface, 1]
        ends = iface[(heights == heights.min()) | (heights == heights.max())]
        assert np.all(mesh.boundary[ends])


def test_mesh_io_roundtrip(tmp_path):
    mesh = lr.reflect_and_tile(lr.build_template_layer(lr.LayerProfile.crown(), 1.0 / 4), 3)
    path = tmp_path / "mesh.txt"
    lr.write_mesh(mesh, path, comment="roundtrip check")
    back = lr.read_mesh(path)
    assert back.n_layers == 3
    assert back.n_vertices == mesh.n_vertices
    assert back.n_triangles == mesh.n_triangles
    # written in lexicographic vertex order
    assert np.all(np.diff(back.vertices[:, 0]) >= 0)
    assert int(back.boundary.sum()) == int(mesh.boundary.sum())
    assert [len(i) for i in back.interfaces] == [len(i) for i in mesh.interfaces]
    # identical triangle geometry up to renumbering: compare sorted area lists
    for m in (mesh, back):
        p = m.vertices[m.triangles]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        areas = np.sort(0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]))
        assert np.all(areas > 0)
    part_a = lr.classify_dofs(mesh)
    part_b = lr.classify_dofs(back)
    assert part_a.n_free == part_b.n_free


def test_mesh_header_format(tmp_path):
    mesh = lr.reflect_and_tile(lr.build_template_layer(lr.LayerProfile.square(), 0.5), 2)
    path = tmp_path / "mesh.txt"
    lr.write_mesh(mesh, path)
    head = path.read_text().splitlines()[0]
    assert head == f"vertices {mesh.n_vertices} triangles {mesh.n_triangles} interfaces 1"


def test_load_profile():
    assert lr.load_profile("square").upper == (1.0, 1.0)
    profile = lr.load_profile("0 0 1\n0.5 0 0.5\n1 0 1\n")
    assert profile.upper == (1.0, 0.5, 1.0)
    with pytest.raises(InvalidInputError):
        lr.load_profile("0 0\n1 1\n")
    with pytest.raises(InvalidInputError):
        lr.load_profile("")


def test_layered_domain_type():
    domain = lr.LayeredDomain(3, lr.LayerProfile.crown())
    assert np.array_equal(domain.interface_abscissae, [1.0, 2.0])
    with pytest.raises(InvalidInputError):
        lr.LayeredDomain(1, lr.LayerProfile.square())
