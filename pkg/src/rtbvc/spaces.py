"""Raviart-Thomas velocity and discontinuous pressure spaces.

The reference triangle has vertices (0,0), (1,0), (0,1); local edge ``i`` runs
from vertex ``(i+1) % 3`` to ``(i+2) % 3``.  Degrees of freedom are normal
moments against shifted Legendre polynomials on each edge followed by interior
moments against an orthonormal basis of P_{k-1}^2.  Physical fields come from
the contravariant Piola map ``v = J v_ref / det J``.

Global edge DOFs use the edge normal obtained by rotating the low-to-high
vertex tangent clockwise and the edge parameter running from the lower vertex
id.  A cell whose local edge runs the other way sees the DOF ``j`` with sign
``(-1)**(j+1)``.
"""
from __future__ import annotations

from functools import cached_property, lru_cache
from math import comb, factorial

import numpy as np

from .mesh import Mesh
from .quadrature import segment_rule, triangle_rule

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
# polynomials are stored as monomials centred here to keep coefficients small
REF_CENTROID = np.array([1.0, 1.0]) / 3.0


def monomial_exponents(degree: int) -> np.ndarray:
    """Exponent pairs (a, b) of x**a * y**b with a + b <= degree."""
    return np.array([(d - b, b) for d in range(degree + 1) for b in range(d + 1)], dtype=int)


def eval_monomials(points, degree: int, dx: int = 0, dy: int = 0) -> np.ndarray:
    """Values of the ``dx``, ``dy`` partial derivative of every centred monomial.

    Returns an array of shape (n_points, n_monomials).
    """
    points = np.atleast_2d(points) - REF_CENTROID
    exps = monomial_exponents(degree)
    a, b = exps[:, 0], exps[:, 1]
    ca = np.array([_falling(x, dx) for x in a], dtype=float)
    cb = np.array([_falling(x, dy) for x in b], dtype=float)
    pa = np.clip(a - dx, 0, None)
    pb = np.clip(b - dy, 0, None)
    x = points[:, :1]
    y = points[:, 1:2]
    return (ca * cb) * x**pa * y**pb


def _falling(n: int, m: int) -> int:
    out = 1
    for i in range(m):
        out *= n - i
    return out


def shifted_legendre(s, degree: int) -> np.ndarray:
    """L_0..L_degree on [0, 1] at ``s``; shape (len(s), degree + 1)."""
    s = np.asarray(s, dtype=float)
    return np.polynomial.legendre.legvander(2.0 * s - 1.0, degree)


class RtReferenceElement:
    """RT_k on the reference triangle, dual to the moment DOFs."""

    def __init__(self, k: int):
        if not 1 <= k <= 3:
            raise ValueError(f"RT degree must be 1, 2 or 3, got {k}")
        self.k = k
        self.poly_degree = k + 1
        self.n_edge_dofs = k + 1
        self.n_interior_dofs = k * (k + 1)
        self.dim = (k + 1) * (k + 3)
        raw = _orthonormalize(self._raw_basis(), self.poly_degree)
        dof_matrix = self.apply_dofs(raw)
        self.dof_condition = float(np.linalg.cond(dof_matrix))
        # coef[i, comp, monomial]: basis i is dual to DOF i
        self.coef = np.einsum("rcm,rj->jcm", raw, np.linalg.inv(dof_matrix))

    def _raw_basis(self) -> np.ndarray:
        k = self.k
        exps = monomial_exponents(k + 1)
        index = {tuple(e): i for i, e in enumerate(exps)}
        raw = []
        for a, b in monomial_exponents(k):
            for comp in (0, 1):
                v = np.zeros((2, len(exps)))
                v[comp, index[(a, b)]] = 1.0
                raw.append(v)
        for b in range(k + 1):
            a = k - b
            v = np.zeros((2, len(exps)))
            v[0, index[(a + 1, b)]] = 1.0
            v[1, index[(a, b + 1)]] = 1.0
            raw.append(v)
        return np.array(raw)

    def apply_dofs(self, coef: np.ndarray) -> np.ndarray:
        """DOF values of polynomial fields given by ``coef[f, comp, monomial]``.

        Returns an array of shape (dim, n_fields).
        """
        k, D = self.k, self.poly_degree
        rows = []
        seg = segment_rule(2 * k + 2)
        s, w = seg.points[:, 0], seg.weights
        leg = shifted_legendre(s, k)
        for le in range(3):
            a, b = REF_VERTICES[(le + 1) % 3], REF_VERTICES[(le + 2) % 3]
            t = b - a
            scaled_normal = np.array([t[1], -t[0]])  # |t| * outward normal
            vals = np.einsum("qm,fcm->qfc", eval_monomials(a + s[:, None] * t, D), coef)
            flux = vals @ scaled_normal
            rows.append(np.einsum("q,qj,qf->jf", w, leg, flux))
        tri = triangle_rule(2 * k + 1)
        vals = np.einsum("qm,fcm->qfc", eval_monomials(tri.points, D), coef)
        test = eval_monomials(tri.points, k - 1) @ interior_test_coef(k).T
        for m in range(test.shape[1]):
            for comp in (0, 1):
                rows.append(np.einsum("q,q,qf->f", tri.weights, test[:, m], vals[:, :, comp])[None])
        return np.concatenate(rows, axis=0)

    def values(self, points) -> np.ndarray:
        """Basis values, shape (n_points, dim, 2)."""
        return np.einsum("qm,icm->qic", eval_monomials(points, self.poly_degree), self.coef)

    def partial(self, points, dx: int, dy: int) -> np.ndarray:
        return np.einsum(
            "qm,icm->qic", eval_monomials(points, self.poly_degree, dx, dy), self.coef
        )

    def divergence(self, points) -> np.ndarray:
        D = self.poly_degree
        return np.einsum("qm,im->qi", eval_monomials(points, D, 1, 0), self.coef[:, 0]) + \
            np.einsum("qm,im->qi", eval_monomials(points, D, 0, 1), self.coef[:, 1])

    def directional_derivatives(self, points, directions, order: int) -> np.ndarray:
        """Derivatives of order 0..``order`` along per-point reference directions.

        Returns shape (n_points, order + 1, dim, 2).
        """
        points = np.atleast_2d(points)
        directions = np.broadcast_to(np.atleast_2d(directions), points.shape)
        out = np.zeros((len(points), order + 1, self.dim, 2))
        for j in range(order + 1):
            for i in range(j + 1):
                w = comb(j, i) * directions[:, 0] ** i * directions[:, 1] ** (j - i)
                out[:, j] += w[:, None, None] * self.partial(points, i, j - i)
        return out


def _orthonormalize(coef: np.ndarray, degree: int) -> np.ndarray:
    """L2(reference)-orthonormal combinations of the fields ``coef[f, comp, m]``."""
    tri = triangle_rule(max(2 * degree, 1))
    vals = np.einsum("qm,fcm->qcf", eval_monomials(tri.points, degree), coef)
    A = (np.sqrt(tri.weights)[:, None, None] * vals).reshape(-1, len(coef))
    _, R = np.linalg.qr(A)
    return np.einsum("fcm,fg->gcm", coef, np.linalg.inv(R))


@lru_cache(maxsize=None)
def interior_test_coef(k: int) -> np.ndarray:
    """Orthonormal basis of P_{k-1} on the reference triangle (monomial coefficients)."""
    n = k * (k + 1) // 2
    scalar = np.eye(n)[:, None, :]
    return _orthonormalize(scalar, k - 1)[:, 0, :]


@lru_cache(maxsize=None)
def rt_reference(k: int) -> RtReferenceElement:
    return RtReferenceElement(k)


class PkReferenceElement:
    """L2-orthonormal basis of P_k on the reference triangle."""

    def __init__(self, k: int):
        self.k = k
        self.dim = (k + 1) * (k + 2) // 2
        self.coef = _orthonormalize(np.eye(self.dim)[:, None, :], k)[:, 0, :]
        rule = triangle_rule(2 * k)
        v = self.values(rule.points)
        self.mass = np.einsum("q,qi,qj->ij", rule.weights, v, v)
        self.mass_inv = np.linalg.inv(self.mass)
        # coefficients of the constant function 1
        self.one = self.mass_inv @ (rule.weights @ v)

    def values(self, points) -> np.ndarray:
        return eval_monomials(points, self.k) @ self.coef.T

    def gradients(self, points) -> np.ndarray:
        """Shape (n_points, dim, 2)."""
        return np.stack(
            [eval_monomials(points, self.k, 1, 0) @ self.coef.T,
             eval_monomials(points, self.k, 0, 1) @ self.coef.T],
            axis=2,
        )


@lru_cache(maxsize=None)
def pk_reference(k: int) -> PkReferenceElement:
    return PkReferenceElement(k)


def eval_rt_basis(elem: RtReferenceElement, cell_vertices, points, derivative_order: int = 0,
                  direction=None) -> np.ndarray:
    """Physical RT basis on one affine cell at physical ``points``.

    With ``derivative_order = 0`` returns values of shape (n_points, dim, 2).
    Otherwise returns the ``derivative_order``-th derivative along the physical
    unit ``direction`` (one per point or shared).
    """
    cell_vertices = np.asarray(cell_vertices, dtype=float)
    J = np.column_stack([cell_vertices[1] - cell_vertices[0], cell_vertices[2] - cell_vertices[0]])
    det = np.linalg.det(J)
    if det <= 0:
        raise ValueError("degenerate or clockwise cell (det J <= 0)")
    if not 0 <= derivative_order <= elem.k:
        raise ValueError("derivative order must lie in [0, k]")
    Jinv = np.linalg.inv(J)
    ref = (np.atleast_2d(points) - cell_vertices[0]) @ Jinv.T
    if derivative_order == 0:
        vals = elem.values(ref)
    else:
        d = np.atleast_2d(np.asarray(direction, dtype=float)) @ Jinv.T
        vals = elem.directional_derivatives(ref, d, derivative_order)[:, derivative_order]
    return vals @ J.T / det


class FeSpace:
    """Global RT_k x P_k pair with DOF numbering on a mesh.

    Velocity DOFs: ``k+1`` per edge (edge-major), then ``k(k+1)`` per cell.
    Pressure DOFs: ``(k+1)(k+2)/2`` per cell, discontinuous.
    """

    def __init__(self, mesh: Mesh, k: int):
        self.mesh = mesh
        self.k = k
        self.rt = rt_reference(k)
        self.pk = pk_reference(k)
        ne, nc = mesh.n_edges, mesh.n_cells
        ned, nid = self.rt.n_edge_dofs, self.rt.n_interior_dofs
        self.n_edge_block = ne * ned
        self.n_u = ne * ned + nc * nid
        self.n_p = nc * self.pk.dim

        cells = mesh.cells
        low_first = np.stack(
            [cells[:, (le + 1) % 3] < cells[:, (le + 2) % 3] for le in range(3)], axis=1
        )
        edge_sign = np.where(low_first, 1.0, -1.0)
        j = np.arange(ned)
        dofs = mesh.cell_edges[:, :, None] * ned + j  # (nc, 3, ned)
        signs = edge_sign[:, :, None] ** (j + 1)
        interior = self.n_edge_block + np.arange(nc)[:, None] * nid + np.arange(nid)
        self.cell_udofs = np.concatenate([dofs.reshape(nc, -1), interior], axis=1)
        self.cell_signs = np.concatenate([signs.reshape(nc, -1), np.ones((nc, nid))], axis=1)
        self.cell_edge_sign = edge_sign
        self.cell_pdofs = np.arange(self.n_p).reshape(nc, self.pk.dim)

        self.J = mesh.jacobians()
        self.detJ = np.linalg.det(self.J)
        if np.any(self.detJ <= 0):
            raise ValueError("mesh contains degenerate cells")
        self.Jinv = np.linalg.inv(self.J)
        self.x0 = mesh.vertices[cells[:, 0]]

        # sign of the global normal relative to the outward normal on boundary edges
        self.edge_outward_sign = np.zeros(ne)
        be = mesh.boundary_edges
        owner = mesh.edge_cells[be, 0]
        le = np.argmax(mesh.cell_edges[owner] == be[:, None], axis=1)
        self.boundary_owner = owner
        self.boundary_local_edge = le
        self.edge_outward_sign[be] = edge_sign[owner, le]

    @property
    def ndof(self) -> int:
        return self.n_u + self.n_p

    def edge_dofs(self, edges) -> np.ndarray:
        edges = np.asarray(edges)
        return (edges[:, None] * self.rt.n_edge_dofs + np.arange(self.rt.n_edge_dofs)).ravel()

    @cached_property
    def boundary_udofs(self) -> np.ndarray:
        return self.edge_dofs(self.mesh.boundary_edges)

    def map_points(self, ref_points) -> np.ndarray:
        """Physical images of reference points in every cell: (nc, nq, 2)."""
        return self.x0[:, None, :] + np.einsum("cab,qb->cqa", self.J, ref_points)

    def to_reference(self, cells, x) -> np.ndarray:
        return np.einsum("cab,cb->ca", self.Jinv[cells], x - self.x0[cells])

    def edge_geometry(self, edges):
        """Endpoints (low id first), lengths and global unit normals."""
        v = self.mesh.vertices
        a, b = v[self.mesh.edges[edges, 0]], v[self.mesh.edges[edges, 1]]
        t = b - a
        length = np.hypot(t[:, 0], t[:, 1])
        normal = np.column_stack([t[:, 1], -t[:, 0]]) / length[:, None]
        return a, b, length, normal

    # -- evaluation ---------------------------------------------------------

    def local_velocity(self, U) -> np.ndarray:
        return np.asarray(U)[self.cell_udofs] * self.cell_signs

    def eval_velocity(self, U, ref_points) -> np.ndarray:
        """u_h at reference points in every cell: (nc, nq, 2)."""
        loc = self.local_velocity(U)
        ref = np.einsum("qia,ci->cqa", self.rt.values(ref_points), loc)
        return np.einsum("cab,cqb->cqa", self.J, ref) / self.detJ[:, None, None]

    def eval_divergence(self, U, ref_points) -> np.ndarray:
        loc = self.local_velocity(U)
        return np.einsum("qi,ci->cq", self.rt.divergence(ref_points), loc) / self.detJ[:, None]

    def eval_pressure(self, P, ref_points) -> np.ndarray:
        return np.asarray(P)[self.cell_pdofs] @ self.pk.values(ref_points).T

    def eval_pressure_gradient(self, P, ref_points) -> np.ndarray:
        g = np.einsum("qia,ci->cqa", self.pk.gradients(ref_points), np.asarray(P)[self.cell_pdofs])
        return np.einsum("cba,cqb->cqa", self.Jinv, g)

    def physical_basis(self, cells, ref_points) -> np.ndarray:
        """Signed global basis restricted to ``cells``: (n, nq, dim, 2)."""
        cells = np.asarray(cells)
        vals = self.rt.values(ref_points)
        phys = np.einsum("cab,qib->cqia", self.J[cells], vals) / self.detJ[cells, None, None, None]
        return phys * self.cell_signs[cells][:, None, :, None]

    # -- interpolation and projection --------------------------------------

    def edge_moments(self, v, edges, quad_degree: int | None = None) -> np.ndarray:
        """Global edge DOFs of a field: int_e v.n_e L_j ds, shape (n_edges, k+1)."""
        k = self.k
        seg = segment_rule(quad_degree or max(2 * k + 8, 12))
        s, w = seg.points[:, 0], seg.weights
        a, b, length, normal = self.edge_geometry(edges)
        x = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
        vals = np.asarray(v(x[..., 0], x[..., 1]))
        vals = np.moveaxis(vals, 0, -1)
        flux = np.einsum("eqa,ea->eq", vals, normal)
        leg = shifted_legendre(s, k)
        return np.einsum("q,qj,eq,e->ej", w, leg, flux, length)

    def interior_moments(self, v, quad_degree: int | None = None) -> np.ndarray:
        """Local interior DOFs (reference moments of the pulled-back field)."""
        k = self.k
        tri = triangle_rule(quad_degree or min(2 * k + 8, 20))
        x = self.map_points(tri.points)
        vals = np.moveaxis(np.asarray(v(x[..., 0], x[..., 1])), 0, -1)
        pulled = np.einsum("cab,cqb->cqa", self.Jinv, vals) * self.detJ[:, None, None]
        test = eval_monomials(tri.points, k - 1) @ interior_test_coef(k).T
        out = np.einsum("q,qm,cqa->cma", tri.weights, test, pulled)
        return out.reshape(len(out), -1)

    def interpolate_rt(self, v, quad_degree: int | None = None) -> np.ndarray:
        """Canonical RT interpolant of ``v(x, y) -> (vx, vy)``."""
        U = np.zeros(self.n_u)
        all_edges = np.arange(self.mesh.n_edges)
        U[: self.n_edge_block] = self.edge_moments(v, all_edges, quad_degree).ravel()
        U[self.n_edge_block:] = self.interior_moments(v, quad_degree).ravel()
        return U

    def interpolate_rt_zero_flux(self, v, quad_degree: int | None = None) -> np.ndarray:
        U = self.interpolate_rt(v, quad_degree)
        U[self.boundary_udofs] = 0.0
        return U

    def project_pressure(self, phi, quad_degree: int | None = None) -> np.ndarray:
        """Cellwise L2 projection onto P_k."""
        tri = triangle_rule(quad_degree or min(2 * self.k + 8, 20))
        x = self.map_points(tri.points)
        vals = np.asarray(phi(x[..., 0], x[..., 1]), dtype=float)
        rhs = np.einsum("q,qj,cq->cj", tri.weights, self.pk.values(tri.points), vals)
        return (rhs @ self.pk.mass_inv.T).ravel()

    def pressure_constant(self, value: float = 1.0) -> np.ndarray:
        return np.tile(value * self.pk.one, self.mesh.n_cells)

    def pressure_cell_integrals(self) -> np.ndarray:
        """m_j = int q_j dx for every pressure basis function."""
        tri = triangle_rule(max(self.k, 1))
        ref = tri.weights @ self.pk.values(tri.points)
        return (self.detJ[:, None] * ref[None, :]).ravel()


def taylor_factors(delta, order: int) -> np.ndarray:
    """delta**j / j! for j = 0..order; shape (n, order + 1)."""
    delta = np.asarray(delta, dtype=float)
    return np.stack([delta**j / factorial(j) for j in range(order + 1)], axis=-1)
