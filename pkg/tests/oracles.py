"""Independent constructions shared by the unit and acceptance tests."""
import numpy as np

from rtbvc.quadrature import segment_rule, triangle_rule
from rtbvc.spaces import eval_monomials, interior_test_coef

# smooth non-polynomial fields with their divergences
FIELDS = [
    (lambda x, y: np.array([np.sin(x) * np.cos(y), np.exp(x * y)]),
     lambda x, y: np.cos(x) * np.cos(y) + x * np.exp(x * y)),
    (lambda x, y: np.array([np.exp(x + 2 * y), np.cos(3 * x * y)]),
     lambda x, y: np.exp(x + 2 * y) - 3 * x * np.sin(3 * x * y)),
    (lambda x, y: np.array([1 / (2 + x), np.log(2 + y)]),
     lambda x, y: -1 / (2 + x) ** 2 + 1 / (2 + y)),
    (lambda x, y: np.array([np.sin(np.pi * x) * np.sin(np.pi * y), np.cos(x - y)]),
     lambda x, y: np.pi * np.cos(np.pi * x) * np.sin(np.pi * y) + np.sin(x - y)),
    (lambda x, y: np.array([np.arctan(x + y), np.sinh(x) * y**2]),
     lambda x, y: 1 / (1 + (x + y) ** 2) + 2 * y * np.sinh(x)),
]


def commuting_error(space, v, div):
    """L2 norm of div I_h v - Pi_k div v."""
    rule = triangle_rule(20)
    U = space.interpolate_rt(v, quad_degree=20)
    P = space.project_pressure(div, quad_degree=20)
    diff = space.eval_divergence(U, rule.points) - space.eval_pressure(P, rule.points)
    return float(np.sqrt(np.einsum("q,c,cq->", rule.weights, space.detJ, diff**2)))


def lbb_witness(space, P, h):
    """Velocity with b_h0(v, q) = ||q||_{1,h}^2 for the pressure P."""
    k, mesh = space.k, space.mesh
    U = np.zeros(space.n_u)
    # interior moments reproduce grad q on each cell
    tri = triangle_rule(2 * k)
    grad = space.eval_pressure_gradient(P, tri.points)
    pulled = np.einsum("cab,cqb->cqa", space.Jinv, grad) * space.detJ[:, None, None]
    test = eval_monomials(tri.points, k - 1) @ interior_test_coef(k).T
    U[space.n_edge_block:] = np.einsum("q,qm,cqa->cma", tri.weights, test, pulled).ravel()
    # on interior edges v.n_e = -[q] / h with the jump taken from the cell n_e leaves
    ie = mesh.interior_edges
    seg = segment_rule(2 * k + 2)
    s = seg.points[:, 0]
    a, b, length, _ = space.edge_geometry(ie)
    pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
    jump = np.zeros((len(ie), len(s)))
    for side in (0, 1):
        c = mesh.edge_cells[ie, side]
        le = np.argmax(mesh.cell_edges[c] == ie[:, None], axis=1)
        sign = space.cell_edge_sign[c, le]  # +1 where the global normal leaves c
        ref = np.einsum("eab,eqb->eqa", space.Jinv[c], pts - space.x0[c, None, :])
        q = np.einsum("eqj,ej->eq", space.pk.values(ref.reshape(-1, 2)).reshape(len(ie), len(s), -1),
                      P[space.cell_pdofs[c]])
        jump += sign[:, None] * q
    leg = np.polynomial.legendre.legvander(2 * s - 1, k)
    mom = np.einsum("q,qj,eq,e->ej", seg.weights, leg, -jump / h, length)
    U[space.edge_dofs(ie)] = mom.ravel()
    return U
