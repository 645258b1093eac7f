import math

import numpy as np
import pytest

from rtbvc.geometry import CurvedDomain
from rtbvc.mesh import (
    INNER, INTERIOR, OUTER, InfeasibleMeshError, Mesh, generate_mesh, read_mesh, validate_mesh,
    write_mesh,
)

LEVELS = (1 / 8, 1 / 16, 1 / 32, 1 / 64)


@pytest.fixture(scope="module")
def disk_family(disk):
    return [generate_mesh(disk, h) for h in LEVELS]


@pytest.fixture(scope="module")
def disk_reports(disk, disk_family):
    return [validate_mesh(m, disk) for m in disk_family]


def test_disk_boundary_vertices(disk, disk_mesh8):
    bv = disk_mesh8.boundary_vertices
    assert len(bv) == math.ceil(2 * math.pi * 8) == 51
    r = np.linalg.norm(disk_mesh8.vertices[bv], axis=1)
    assert np.max(np.abs(r - 1.0)) <= 1e-12


def test_square_half_is_eight_congruent_triangles(square):
    mesh = generate_mesh(square, 1 / 2)
    assert mesh.n_cells == 8
    np.testing.assert_allclose(mesh.areas(), 1 / 8, rtol=1e-14)
    rep = validate_mesh(mesh, square)
    assert rep.sigma == pytest.approx(1 + math.sqrt(2), rel=1e-13)
    assert rep.max_delta == 0.0


def test_annulus_markers(annulus, annulus_mesh8):
    mesh = annulus_mesh8
    rep = validate_mesh(mesh, annulus)
    assert rep.ok
    x = mesh.vertices
    for marker, radius in ((OUTER, 1.0), (INNER, 0.5)):
        ends = mesh.edges[mesh.edge_markers == marker].ravel()
        assert len(ends) > 0
        assert np.max(np.abs(np.linalg.norm(x[ends], axis=1) - radius)) <= 1e-12
    assert set(np.unique(mesh.edge_markers)) == {INTERIOR, OUTER, INNER}


def test_invariants_hold(disk_reports):
    for rep in disk_reports:
        assert rep.ok
        assert rep.max_boundary_residual <= 1e-12
        assert rep.sigma <= 10
        assert rep.tau > 0.3


def test_delta_drops_quadratically(disk_reports):
    d = [r.max_delta_over_h2 for r in disk_reports]
    assert max(d) / min(d) <= 1.5
    for a, b in zip(d[:-1], d[1:]):
        assert 0.2 <= b / a <= 1.2
    assert disk_reports[0].max_delta / disk_reports[1].max_delta == pytest.approx(4, rel=0.25)


def test_normal_deviation_is_first_order(disk_reports):
    c = [r.max_normal_dev_over_h for r in disk_reports]
    assert max(c) / min(c) <= 2.0


def test_refinement_quadruples_cells(disk_family):
    n = [m.n_cells for m in disk_family]
    for a, b in zip(n[:-1], n[1:]):
        assert 3.5 <= b / a <= 4.5


def test_generation_is_deterministic(disk):
    a, b = generate_mesh(disk, 1 / 16), generate_mesh(disk, 1 / 16)
    np.testing.assert_array_equal(a.vertices, b.vertices)
    np.testing.assert_array_equal(a.cells, b.cells)


def test_cells_are_counterclockwise(disk_mesh8):
    assert np.all(np.linalg.det(disk_mesh8.jacobians()) > 0)


def test_edge_adjacency(disk_mesh8):
    m = disk_mesh8
    interior = m.edge_markers == INTERIOR
    assert np.all(m.edge_cells[interior] >= 0)
    assert np.all(m.edge_cells[~interior, 1] == -1)


def test_infeasible_annulus():
    with pytest.raises(InfeasibleMeshError):
        generate_mesh(CurvedDomain.annulus(0.5, 1.0), 1.0)
    with pytest.raises(InfeasibleMeshError):
        generate_mesh(CurvedDomain.annulus(0.9, 1.0), 0.5)


def test_validator_flags_off_circle_vertex(disk):
    mesh = Mesh.from_cells([[0.0, 0.0], [0.9, 0.0], [0.0, 1.0]], [[0, 1, 2]], 1.0)
    rep = validate_mesh(mesh, disk)
    assert rep.boundary_vertex_violations >= 1
    assert not rep.ok


def test_roundtrip(tmp_path, annulus, annulus_mesh8):
    path = tmp_path / "a.mesh"
    write_mesh(annulus_mesh8, path)
    text = path.read_text().splitlines()
    assert text[0] == "mesh2d v1"
    back = read_mesh(path, h=1 / 8)
    np.testing.assert_array_equal(back.vertices, annulus_mesh8.vertices)
    np.testing.assert_array_equal(back.cells, annulus_mesh8.cells)
    np.testing.assert_array_equal(back.edge_markers, annulus_mesh8.edge_markers)
    assert validate_mesh(back, annulus).as_dict() == validate_mesh(annulus_mesh8, annulus).as_dict()


def test_read_rejects_bad_header(tmp_path):
    path = tmp_path / "x.mesh"
    path.write_text("mesh3d\n")
    with pytest.raises(ValueError):
        read_mesh(path)
