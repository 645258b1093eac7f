import numpy as np
import pytest

from rtbvc.mesh import generate_mesh
from rtbvc.quadrature import segment_rule, triangle_rule
from rtbvc.spaces import FeSpace, eval_rt_basis, rt_reference

from oracles import FIELDS, commuting_error

KS = (1, 2, 3)


def l2(space, vals):
    """L2 norm of per-cell values sampled at triangle_rule(20) points."""
    w = triangle_rule(20).weights
    sq = vals**2 if vals.ndim == 2 else np.sum(vals**2, axis=-1)
    return float(np.sqrt(np.einsum("q,c,cq->", w, space.detJ, sq)))


@pytest.fixture(scope="module", params=KS)
def disk_space(request, disk_mesh8):
    return FeSpace(disk_mesh8, request.param)


@pytest.mark.parametrize("k", KS)
def test_dimension_and_unisolvence(k):
    rt = rt_reference(k)
    assert rt.dim == (k + 1) * (k + 3)
    duality = rt.apply_dofs(rt.coef)
    assert np.max(np.abs(duality - np.eye(rt.dim))) <= 1e-12
    assert rt.dof_condition < 100


def test_hdiv_conformity(disk_space, rng):
    space = disk_space
    mesh = space.mesh
    U = rng.standard_normal(space.n_u)
    ie = mesh.interior_edges
    s = segment_rule(8).points[:, 0]
    a, b, _, normal = space.edge_geometry(ie)
    pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
    traces = []
    for side in (0, 1):
        cells = mesh.edge_cells[ie, side]
        ref = np.einsum("eab,eqb->eqa", space.Jinv[cells], pts - space.x0[cells, None, :])
        pc = np.repeat(cells, len(s))
        v_ref = np.einsum("pia,pi->pa", space.rt.values(ref.reshape(-1, 2)), space.local_velocity(U)[pc])
        v = (np.einsum("pab,pb->pa", space.J[pc], v_ref) / space.detJ[pc, None]).reshape(len(ie), len(s), 2)
        traces.append(np.einsum("eqa,ea->eq", v, normal))
    assert np.max(np.abs(traces[0] - traces[1])) <= 1e-11 * np.max(np.abs(traces[0]))


def test_reproduces_rt_fields(disk_space, rng):
    space = disk_space
    k = space.k
    c = rng.standard_normal((2, k + 1, k + 1))
    d = rng.standard_normal(k + 1)

    def v(x, y):
        # P_k^2 plus x * (homogeneous degree k)
        px = sum(c[0, i, j] * x**i * y**j for i in range(k + 1) for j in range(k + 1 - i))
        py = sum(c[1, i, j] * x**i * y**j for i in range(k + 1) for j in range(k + 1 - i))
        hom = sum(d[i] * x**i * y ** (k - i) for i in range(k + 1))
        return np.array([px + x * hom, py + y * hom])

    U = space.interpolate_rt(v)
    rule = triangle_rule(20)
    x = space.map_points(rule.points)
    err = np.moveaxis(v(x[..., 0], x[..., 1]), 0, -1) - space.eval_velocity(U, rule.points)
    assert l2(space, err) <= 1e-12 * max(1.0, l2(space, np.moveaxis(v(x[..., 0], x[..., 1]), 0, -1)))


@pytest.mark.parametrize("k", KS)
def test_commuting_diagram(k, disk_mesh8):
    space = FeSpace(disk_mesh8, k)
    for v, div in FIELDS:
        assert commuting_error(space, v, div) <= 1e-12


def test_zero_flux_interpolant(disk_space):
    space = disk_space
    v, _ = FIELDS[0]
    U = space.interpolate_rt_zero_flux(v)
    assert np.all(U[space.boundary_udofs] == 0.0)
    full = space.interpolate_rt(v)
    interior = np.setdiff1d(np.arange(space.n_u), space.boundary_udofs)
    np.testing.assert_array_equal(U[interior], full[interior])


def test_pressure_projection(disk_space, rng):
    space = disk_space
    k = space.k
    c = rng.standard_normal((k + 1, k + 1))

    def q(x, y):
        return sum(c[i, j] * x**i * y**j for i in range(k + 1) for j in range(k + 1 - i))

    P = space.project_pressure(q)
    rule = triangle_rule(20)
    x = space.map_points(rule.points)
    assert l2(space, q(x[..., 0], x[..., 1]) - space.eval_pressure(P, rule.points)) <= 1e-12
    # the constant, and orthogonality of the residual of a non-polynomial
    one = space.pressure_constant()
    np.testing.assert_allclose(space.eval_pressure(one, rule.points), 1.0, atol=1e-13)
    P2 = space.project_pressure(lambda x, y: np.exp(x) * np.sin(3 * y), quad_degree=20)
    resid = np.exp(x[..., 0]) * np.sin(3 * x[..., 1]) - space.eval_pressure(P2, rule.points)
    test = space.pk.values(rule.points)
    moments = np.einsum("q,qj,cq->cj", rule.weights, test, resid)
    assert np.max(np.abs(moments)) <= 1e-13


def test_cell_integrals_sum_to_area(disk_space):
    space = disk_space
    m = space.pressure_cell_integrals()
    assert m @ space.pressure_constant() == pytest.approx(space.mesh.areas().sum(), rel=1e-13)


@pytest.mark.parametrize("k", KS)
def test_directional_derivatives_match_finite_differences(k, rng):
    rt = rt_reference(k)
    verts = np.array([[0.1, 0.2], [0.5, 0.25], [0.2, 0.6]])
    x = np.array([[0.25, 0.33]])
    nu = np.array([0.6, 0.8])
    eps = 1e-4
    f = lambda t: eval_rt_basis(rt, verts, x + t * nu)[0]
    d1 = eval_rt_basis(rt, verts, x, 1, nu)[0]
    fd1 = (f(eps) - f(-eps)) / (2 * eps)
    np.testing.assert_allclose(d1, fd1, atol=1e-5 * np.abs(d1).max())
    if k >= 2:
        d2 = eval_rt_basis(rt, verts, x, 2, nu)[0]
        fd2 = (f(eps) - 2 * f(0.0) + f(-eps)) / eps**2
        np.testing.assert_allclose(d2, fd2, atol=1e-4 * np.abs(d2).max())


def test_eval_rt_basis_rejects_bad_input():
    rt = rt_reference(1)
    with pytest.raises(ValueError):
        eval_rt_basis(rt, [[0, 0], [0, 1], [1, 0]], [[0.2, 0.2]])  # clockwise
    with pytest.raises(ValueError):
        eval_rt_basis(rt, [[0, 0], [1, 0], [0, 1]], [[0.2, 0.2]], 2, (1, 0))


def test_dof_counts(disk_space):
    space = disk_space
    k, mesh = space.k, space.mesh
    assert space.n_p == mesh.n_cells * (k + 1) * (k + 2) // 2
    assert space.n_u == mesh.n_edges * (k + 1) + mesh.n_cells * k * (k + 1)


def test_interior_edges_have_opposite_signs(disk_space):
    space = disk_space
    mesh = space.mesh
    ie = mesh.interior_edges
    s = []
    for side in (0, 1):
        c = mesh.edge_cells[ie, side]
        le = np.argmax(mesh.cell_edges[c] == ie[:, None], axis=1)
        s.append(space.cell_edge_sign[c, le])
    assert np.all(s[0] == -s[1])


@pytest.mark.parametrize("k", KS)
def test_interpolation_order(k, square):
    v, _ = FIELDS[1]
    errs = []
    for h in (1 / 4, 1 / 8):
        space = FeSpace(generate_mesh(square, h), k)
        U = space.interpolate_rt(v, quad_degree=20)
        rule = triangle_rule(20)
        x = space.map_points(rule.points)
        exact = np.moveaxis(v(x[..., 0], x[..., 1]), 0, -1)
        errs.append(l2(space, exact - space.eval_velocity(U, rule.points)))
    assert np.log2(errs[0] / errs[1]) >= k + 0.8
