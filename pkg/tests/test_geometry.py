import numpy as np
import pytest

from rtbvc.geometry import CurvedDomain, DegenerateDirectionError, DomainKind, project_to_boundary


def test_point_already_on_circle():
    s = project_to_boundary(CurvedDomain.disk(), (0.6, 0.8), (0.6, 0.8))
    assert s.delta[0] == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(s.n_tilde[0], (0.6, 0.8), atol=1e-15)


def test_disk_radial_projection():
    s = project_to_boundary(CurvedDomain.disk(), (0.5, 0.5), (1.0, 0.0))
    assert s.delta[0] == pytest.approx(1 - np.sqrt(0.5), abs=1e-14)
    np.testing.assert_allclose(s.target[0], (np.sqrt(0.5), np.sqrt(0.5)), atol=1e-14)


def test_annulus_inner_projection():
    dom = CurvedDomain.annulus(0.5, 1.0)
    s = project_to_boundary(dom, (0.3, 0.0), (1.0, 0.0))
    np.testing.assert_allclose(s.nu[0], (1.0, 0.0))
    assert s.delta[0] == pytest.approx(0.2, abs=1e-15)
    np.testing.assert_allclose(s.target[0], (0.5, 0.0), atol=1e-15)
    # outward normal of the domain on the hole points to the center
    np.testing.assert_allclose(s.n_tilde[0], (-1.0, 0.0))


def test_square_has_no_transfer():
    n = np.array([[0.0, -1.0]])
    s = project_to_boundary(CurvedDomain.from_name("square"), (0.3, 0.0), n)
    assert s.delta[0] == 0.0
    np.testing.assert_array_equal(s.nu, n)
    np.testing.assert_array_equal(s.n_tilde, n)


def test_center_is_degenerate():
    with pytest.raises(DegenerateDirectionError):
        project_to_boundary(CurvedDomain.disk(), (0.0, 0.0), (1.0, 0.0))


def test_random_points_land_on_circles(rng):
    dom = CurvedDomain.annulus(0.5, 1.0)
    theta = rng.uniform(0, 2 * np.pi, 200)
    r = np.concatenate([rng.uniform(0.45, 0.55, 100), rng.uniform(0.95, 1.0, 100)])
    x = r[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
    s = project_to_boundary(dom, x, np.column_stack([np.cos(theta), np.sin(theta)]))
    assert np.all(s.delta >= 0)
    for v in (s.nu, s.n_tilde):
        np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-14)
    assert np.max(np.abs(dom.level_set(s.target))) <= 1e-12


def test_domain_validation():
    with pytest.raises(ValueError):
        CurvedDomain.annulus(1.0, 0.5)
    with pytest.raises(ValueError):
        CurvedDomain.disk(-1.0)
    assert CurvedDomain.from_name("annulus").kind is DomainKind.ANNULUS
    with pytest.raises(ValueError):
        CurvedDomain.from_name("ellipse")
