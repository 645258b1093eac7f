"""Assembly of the corrected and uncorrected mixed schemes.

Both systems are bordered by one multiplier that pins the pressure mean::

    [ A    B1^T  0 ] [u]   [G]
    [ B0   0     m ] [p] = [F]
    [ 0    m^T   0 ] [l]   [0]

where ``m_j`` is the integral of pressure basis function ``j``.  The
multiplier also absorbs any mismatch between the source and the flux data.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .geometry import CurvedDomain, SurrogateMapSample, project_to_boundary
from .quadrature import segment_rule, triangle_rule
from .spaces import FeSpace, shifted_legendre, taylor_factors


@dataclass(frozen=True)
class ProblemData:
    """Source ``f(x, y)`` and flux ``g_N(points, normals)`` on the true boundary."""

    f: Callable
    g_N: Callable


@dataclass
class BoundaryQuadrature:
    """Quadrature on every boundary edge, flattened to (edge, point) rows.

    ``weights`` already include the edge length.
    """

    edges: np.ndarray
    cells: np.ndarray
    points: np.ndarray  # (nb, nq, 2)
    ref_points: np.ndarray  # (nb, nq, 2) reference coordinates in the owner cell
    weights: np.ndarray  # (nb, nq)
    sample: SurrogateMapSample  # flattened over (nb * nq)
    h_K: np.ndarray  # (nb,)

    @property
    def shape(self):
        return self.weights.shape


def boundary_quadrature(space: FeSpace, domain: CurvedDomain, degree: int) -> BoundaryQuadrature:
    mesh = space.mesh
    edges = mesh.boundary_edges
    cells = space.boundary_owner
    seg = segment_rule(degree)
    s = seg.points[:, 0]
    a, b, length, normal = space.edge_geometry(edges)
    outward = normal * space.edge_outward_sign[edges, None]
    pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
    nq = len(s)
    sample = project_to_boundary(
        domain, pts.reshape(-1, 2), np.repeat(outward, nq, axis=0)
    )
    ref = np.einsum("eab,eqb->eqa", space.Jinv[cells], pts - space.x0[cells, None, :])
    return BoundaryQuadrature(
        edges=edges,
        cells=cells,
        points=pts,
        ref_points=ref,
        weights=length[:, None] * seg.weights[None, :],
        sample=sample,
        h_K=mesh.h_K[cells],
    )


@dataclass
class TaylorTrace:
    """Linear functionals of the owner cell's velocity DOFs at boundary points.

    ``full[e, q, i]`` is T^m phi_i . n_tilde, ``plain`` the j = 0 term
    phi_i(x_h) . n_tilde and ``higher`` the j >= 1 remainder, so that
    ``full = plain + higher``.  ``normal_trace`` is phi_i . n_h.
    """

    order: int
    full: np.ndarray
    plain: np.ndarray
    higher: np.ndarray
    normal_trace: np.ndarray


def taylor_trace(space: FeSpace, domain: CurvedDomain, k_taylor: int,
                 bq: Optional[BoundaryQuadrature] = None, quad_degree: int = 12) -> TaylorTrace:
    """Evaluate T^m v_h . n_tilde as coefficients on the local (signed) basis."""
    if bq is None:
        bq = boundary_quadrature(space, domain, quad_degree)
    if not 0 <= k_taylor <= space.k:
        raise ValueError("Taylor order must lie in [0, k]")
    nb, nq = bq.shape
    cells = np.repeat(bq.cells, nq)
    smp = bq.sample
    J, Jinv, det = space.J[cells], space.Jinv[cells], space.detJ[cells]
    nu_ref = np.einsum("pab,pb->pa", Jinv, smp.nu)
    derivs = space.rt.directional_derivatives(bq.ref_points.reshape(-1, 2), nu_ref, k_taylor)
    phys = np.einsum("pab,pjib->pjia", J, derivs) / det[:, None, None, None]
    phys *= space.cell_signs[cells][:, None, :, None]
    terms = np.einsum("pjia,pa->pji", phys, smp.n_tilde)
    factors = taylor_factors(smp.delta, k_taylor)
    weighted = terms * factors[:, :, None]
    plain = weighted[:, 0]
    higher = weighted[:, 1:].sum(axis=1)
    trace = np.einsum("pia,pa->pi", phys[:, 0], smp.n_h)
    shape = (nb, nq, space.rt.dim)
    return TaylorTrace(
        order=k_taylor,
        full=(plain + higher).reshape(shape),
        plain=plain.reshape(shape),
        higher=higher.reshape(shape),
        normal_trace=trace.reshape(shape),
    )


@dataclass
class AssembledSystem:
    """Bordered saddle-point system and its blocks.

    For strongly imposed fluxes ``free_u`` lists the velocity DOFs kept as
    unknowns and ``fixed_u`` holds the values of the others; ``matrix`` and
    ``rhs`` are then the reduced system.
    """

    scheme: str
    space: FeSpace
    matrix: sp.csr_matrix
    rhs: np.ndarray
    A: sp.csr_matrix
    B1: sp.csr_matrix
    B0: sp.csr_matrix
    m: np.ndarray
    G: np.ndarray
    F: np.ndarray
    taylor_order: Optional[int] = None
    free_u: Optional[np.ndarray] = None
    fixed_u: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n_u(self) -> int:
        return self.space.n_u

    @property
    def n_p(self) -> int:
        return self.space.n_p

    @property
    def n_dof(self) -> int:
        return self.matrix.shape[0]

    def split(self, x: np.ndarray):
        """Full velocity, pressure and multiplier from a solution vector."""
        nu = self.n_u if self.free_u is None else len(self.free_u)
        if self.free_u is None:
            U = x[:nu].copy()
        else:
            U = self.fixed_u.copy()
            U[self.free_u] = x[:nu]
        return U, x[nu:nu + self.n_p].copy(), float(x[-1])


def _scatter(rows, cols, vals, shape) -> sp.csr_matrix:
    mat = sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=shape).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def _mass_and_div(space: FeSpace, degree: int):
    k_rule = triangle_rule(degree)
    w = k_rule.weights
    phi = space.rt.values(k_rule.points)  # (q, i, a)
    R = np.einsum("q,qia,qjb->abij", w, phi, phi)
    G = np.einsum("cab,cad->cbd", space.J, space.J)  # J^T J
    M = np.einsum("cab,abij->cij", G, R) / space.detJ[:, None, None]
    s = space.cell_signs
    M *= s[:, :, None] * s[:, None, :]
    D = np.einsum("q,qj,qi->ji", w, space.pk.values(k_rule.points), space.rt.divergence(k_rule.points))
    Bdiv = -D[None, :, :] * s[:, None, :]  # -(div phi_i, q_j)
    return M, Bdiv


def _global_blocks(space: FeSpace, M_loc, B_loc):
    ud, pd = space.cell_udofs, space.cell_pdofs
    n_loc = ud.shape[1]
    A = _scatter(
        np.repeat(ud[:, :, None], n_loc, axis=2), np.repeat(ud[:, None, :], n_loc, axis=1),
        M_loc, (space.n_u, space.n_u),
    )
    npl = pd.shape[1]
    B = _scatter(
        np.repeat(pd[:, :, None], n_loc, axis=2), np.repeat(ud[:, None, :], npl, axis=1),
        B_loc, (space.n_p, space.n_u),
    )
    return A, B


def _source_vector(space: FeSpace, f, degree: int) -> np.ndarray:
    rule = triangle_rule(min(degree, 20))
    x = space.map_points(rule.points)
    vals = np.asarray(f(x[..., 0], x[..., 1]), dtype=float)
    loc = np.einsum("q,qj,cq->cj", rule.weights, space.pk.values(rule.points), vals)
    return -(loc * space.detJ[:, None]).ravel()


def _border(A, B1, B0, m, G, F) -> tuple[sp.csr_matrix, np.ndarray]:
    mcol = sp.csr_matrix(m[:, None])
    mat = sp.bmat(
        [[A, B1.T, None], [B0, None, mcol], [None, mcol.T, None]], format="csr"
    )
    mat.sort_indices()
    rhs = np.concatenate([G, F, [0.0]])
    return mat, rhs


def edge_quad_degree(k: int, boost: int = 0) -> int:
    return min(max(2 * k + 3, 12) + boost, 41)


def element_quad_degree(k: int, boost: int = 0) -> int:
    return min(2 * k + 2 + boost, 20)


def assemble_corrected(space: FeSpace, domain: CurvedDomain, data: ProblemData,
                       taylor_order: Optional[int] = None, quad_boost: int = 0) -> AssembledSystem:
    """Mixed scheme with the Taylor-corrected boundary penalty."""
    k = space.k
    order = k if taylor_order is None else taylor_order
    M_loc, B_loc = _mass_and_div(space, element_quad_degree(k, quad_boost))
    A, B0 = _global_blocks(space, M_loc, B_loc)

    bq = boundary_quadrature(space, domain, edge_quad_degree(k, quad_boost))
    tt = taylor_trace(space, domain, order, bq)
    ud, pd = space.cell_udofs[bq.cells], space.cell_pdofs[bq.cells]
    wpen = bq.weights / bq.h_K[:, None]
    pen = np.einsum("eq,eqi,eqj->eij", wpen, tt.full, tt.full)
    n_loc = ud.shape[1]
    A = A + _scatter(
        np.repeat(ud[:, :, None], n_loc, axis=2), np.repeat(ud[:, None, :], n_loc, axis=1),
        pen, A.shape,
    )
    qvals = space.pk.values(bq.ref_points.reshape(-1, 2)).reshape(*bq.shape, -1)
    bnd = np.einsum("eq,eqi,eqj->eji", bq.weights, tt.normal_trace, qvals)
    npl = pd.shape[1]
    B1 = B0 + _scatter(
        np.repeat(pd[:, :, None], n_loc, axis=2), np.repeat(ud[:, None, :], npl, axis=1),
        bnd, B0.shape,
    )

    smp = bq.sample
    g = np.asarray(data.g_N(smp.target, smp.n_tilde), dtype=float).reshape(bq.shape)
    G_loc = np.einsum("eq,eq,eqi->ei", wpen, g, tt.full)
    G = np.zeros(space.n_u)
    np.add.at(G, ud.ravel(), G_loc.ravel())

    F = _source_vector(space, data.f, element_quad_degree(k, quad_boost))
    m = space.pressure_cell_integrals()
    mat, rhs = _border(A, B1, B0, m, G, F)
    return AssembledSystem("corrected", space, mat, rhs, A, B1, B0, m, G, F, taylor_order=order)


def boundary_flux_dofs(space: FeSpace, domain: CurvedDomain, data: ProblemData,
                       quad_degree: int) -> np.ndarray:
    """Edge moments of the pulled-back flux against the global Legendre basis."""
    bq = boundary_quadrature(space, domain, quad_degree)
    smp = bq.sample
    g = np.asarray(data.g_N(smp.target, smp.n_tilde), dtype=float).reshape(bq.shape)
    seg = segment_rule(quad_degree)
    leg = shifted_legendre(seg.points[:, 0], space.k)
    mom = np.einsum("eq,eq,qj->ej", bq.weights, g, leg)
    return mom * space.edge_outward_sign[bq.edges, None]


def assemble_uncorrected(space: FeSpace, domain: CurvedDomain, data: ProblemData,
                         quad_boost: int = 0, imposition: str = "strong") -> AssembledSystem:
    """Plain mixed scheme on the polygonal domain.

    ``imposition="strong"`` fixes boundary normal-flux DOFs to the edge
    moments of the pulled-back data.  ``"penalty"`` instead uses the
    corrected penalty with the Taylor sum truncated after its first term.
    """
    if imposition == "penalty":
        sys_ = assemble_corrected(space, domain, data, taylor_order=0, quad_boost=quad_boost)
        sys_.scheme = "uncorrected-penalty"
        return sys_
    if imposition != "strong":
        raise ValueError(f"unknown imposition {imposition!r}")
    k = space.k
    M_loc, B_loc = _mass_and_div(space, element_quad_degree(k, quad_boost))
    A, B0 = _global_blocks(space, M_loc, B_loc)
    F = _source_vector(space, data.f, element_quad_degree(k, quad_boost))
    m = space.pressure_cell_integrals()

    fixed = np.zeros(space.n_u)
    bdofs = space.boundary_udofs
    fixed[bdofs] = boundary_flux_dofs(space, domain, data, edge_quad_degree(k, quad_boost)).ravel()
    free = np.setdiff1d(np.arange(space.n_u), bdofs)

    A_ff = A[free][:, free]
    B_f = B0[:, free]
    G = -(A[free] @ fixed)
    F_red = F - B0 @ fixed
    mat, rhs = _border(A_ff, B_f, B_f, m, G, F_red)
    return AssembledSystem(
        "uncorrected", space, mat, rhs, A, B0, B0, m, np.zeros(space.n_u), F,
        free_u=free, fixed_u=fixed,
    )
