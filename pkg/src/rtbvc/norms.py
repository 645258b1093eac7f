"""Error norms and the mesh-dependent norms used by the stability checks."""
from __future__ import annotations

from math import factorial

import numpy as np

from .assembly import boundary_quadrature, edge_quad_degree
from .geometry import CurvedDomain
from .quadrature import segment_rule, triangle_rule
from .spaces import FeSpace


def error_quad_degree(k: int) -> int:
    return min(2 * k + 6, 20)


def error_u(space: FeSpace, U, case) -> float:
    """L2 norm of u - u_h over the mesh."""
    rule = triangle_rule(error_quad_degree(space.k))
    x = space.map_points(rule.points)
    exact = np.moveaxis(np.asarray(case.u(x[..., 0], x[..., 1])), 0, -1)
    diff = exact - space.eval_velocity(U, rule.points)
    return float(np.sqrt(np.einsum("q,c,cqa->", rule.weights, space.detJ, diff**2)))


def error_p(space: FeSpace, P, case) -> float:
    """Broken H1 seminorm of p - p_h."""
    rule = triangle_rule(error_quad_degree(space.k))
    x = space.map_points(rule.points)
    exact = np.moveaxis(np.asarray(case.grad_p(x[..., 0], x[..., 1])), 0, -1)
    diff = exact - space.eval_pressure_gradient(P, rule.points)
    return float(np.sqrt(np.einsum("q,c,cqa->", rule.weights, space.detJ, diff**2)))


def _ray_taylor(space: FeSpace, U, cells, x, nu, delta, order: int) -> np.ndarray:
    """Truncated Taylor sum of u_h along ``nu`` by fitting the restriction to the ray.

    The cell polynomial restricted to x + t nu has degree k+1; sampling it at
    k+2 points of the ray recovers its Taylor coefficients exactly.
    """
    k = space.k
    deg = k + 1
    scale = space.mesh.h_K[cells]
    t_nodes = np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))  # Chebyshev on [-1, 1]
    loc = space.local_velocity(U)[cells]
    vals = np.empty((len(cells), deg + 1, 2))
    for n, t in enumerate(t_nodes):
        pts = x + (t * scale)[:, None] * nu
        ref = space.to_reference(cells, pts)
        phi = space.rt.values(ref)  # evaluates each point against all basis functions
        v_ref = np.einsum("pia,pi->pa", phi, loc)
        vals[:, n] = np.einsum("pab,pb->pa", space.J[cells], v_ref) / space.detJ[cells, None]
    V = np.vander(t_nodes, deg + 1, increasing=True)  # value = sum c_j t^j
    coeffs = np.einsum("jn,pna->pja", np.linalg.inv(V), vals)  # in units of scale
    out = np.zeros((len(cells), 2))
    for j in range(order + 1):
        out += coeffs[:, j] * ((delta / scale) ** j)[:, None]
    return out


def mesh_norms(space: FeSpace, domain: CurvedDomain, U=None, P=None, taylor_order=None,
               quad_boost: int = 0) -> tuple[float, float]:
    """(||v_h||_{0,h}, ||q_h||_{1,h}), either may be skipped by passing None.

    Evaluated pointwise by quadrature, independently of the assembled blocks.
    The jump weight is 1/h with h the largest cell diameter.
    """
    k = space.k
    mesh = space.mesh
    v_norm = q_norm = 0.0
    if U is not None:
        order = k if taylor_order is None else taylor_order
        rule = triangle_rule(min(2 * k + 4, 20))
        vals = space.eval_velocity(U, rule.points)
        vol = np.einsum("q,c,cqa->", rule.weights, space.detJ, vals**2)
        bq = boundary_quadrature(space, domain, edge_quad_degree(k, quad_boost))
        nb, nq = bq.shape
        cells = np.repeat(bq.cells, nq)
        smp = bq.sample
        T = _ray_taylor(space, U, cells, smp.x_h, smp.nu, smp.delta, order)
        Tn = np.einsum("pa,pa->p", T, smp.n_tilde).reshape(nb, nq)
        bnd = np.sum(bq.weights / bq.h_K[:, None] * Tn**2)
        v_norm = float(np.sqrt(vol + bnd))
    if P is not None:
        rule = triangle_rule(min(2 * k, 20))
        g = space.eval_pressure_gradient(P, rule.points)
        grad = np.einsum("q,c,cqa->", rule.weights, space.detJ, g**2)
        jumps = jump_norm_squared(space, P)
        q_norm = float(np.sqrt(grad + jumps / mesh.h_K.max()))
    return v_norm, q_norm


def jump_norm_squared(space: FeSpace, P) -> float:
    """Sum over interior edges of ||[q_h]||^2."""
    mesh = space.mesh
    ie = mesh.interior_edges
    seg = segment_rule(2 * space.k + 1)
    s = seg.points[:, 0]
    a, b, length, _ = space.edge_geometry(ie)
    pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
    jump = np.zeros((len(ie), len(s)))
    for side, sign in ((0, 1.0), (1, -1.0)):
        cells = mesh.edge_cells[ie, side]
        ref = np.einsum("eab,eqb->eqa", space.Jinv[cells], pts - space.x0[cells, None, :])
        q = np.einsum("eqj,ej->eq", space.pk.values(ref.reshape(-1, 2)).reshape(*ref.shape[:2], -1),
                      np.asarray(P)[space.cell_pdofs[cells]])
        jump += sign * q
    return float(np.sum(length[:, None] * seg.weights[None, :] * jump**2))


def taylor_reference(order: int) -> np.ndarray:
    return np.array([1.0 / factorial(j) for j in range(order + 1)])
