"""Body-fitted triangular meshes of the model domains.

Circle boundaries are sampled with ceil(2*pi*r/h) equally spaced vertices and
the interior is filled with concentric rings of vertices, triangulated by
Delaunay.  The construction uses no randomness, so equal inputs give
bit-identical meshes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay

from .geometry import CurvedDomain, DomainKind, project_to_boundary
from .quadrature import segment_rule

INTERIOR, OUTER, INNER = 0, 1, 2
SNAP_TOL = 1e-12


class InfeasibleMeshError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulation with edge topology.

    Cells are counterclockwise.  Local edge ``i`` of a cell joins its local
    vertices ``(i+1) % 3`` and ``(i+2) % 3``.  Global edges are stored with
    the lower vertex id first.  ``edge_cells[e, 1]`` is -1 on the boundary.
    """

    vertices: np.ndarray
    cells: np.ndarray
    edges: np.ndarray
    edge_cells: np.ndarray
    edge_markers: np.ndarray
    cell_edges: np.ndarray
    h: float
    h_K: np.ndarray = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_markers != INTERIOR)

    @property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_markers == INTERIOR)

    @property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.edges[self.boundary_edges])

    def jacobians(self) -> np.ndarray:
        """(n_cells, 2, 2) affine maps from the reference triangle."""
        p = self.vertices[self.cells]
        return np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)

    def areas(self) -> np.ndarray:
        return 0.5 * np.abs(np.linalg.det(self.jacobians()))

    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def inradius_diameters(self) -> np.ndarray:
        p = self.vertices[self.cells]
        perim = sum(np.linalg.norm(p[:, (i + 1) % 3] - p[:, i], axis=1) for i in range(3))
        return 4.0 * self.areas() / perim

    @classmethod
    def from_cells(cls, vertices, cells, h: float, domain: CurvedDomain | None = None) -> "Mesh":
        vertices = np.ascontiguousarray(vertices, dtype=float)
        cells = np.array(cells, dtype=np.int64).reshape(-1, 3)
        p = vertices[cells]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        cw = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0
        cells[cw] = cells[cw][:, [0, 2, 1]]

        local = np.stack([cells[:, [1, 2]], cells[:, [2, 0]], cells[:, [0, 1]]], axis=1)
        pairs = np.sort(local.reshape(-1, 2), axis=1)
        edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        cell_edges = inverse.reshape(-1, 3)
        edge_cells = np.full((len(edges), 2), -1, dtype=np.int64)
        owner = np.repeat(np.arange(len(cells)), 3)
        counts = np.zeros(len(edges), dtype=np.int64)
        for slot, (e, c) in enumerate(zip(inverse, owner)):
            if counts[e] >= 2:
                raise ValueError(f"edge {edges[e]} shared by more than two cells")
            edge_cells[e, counts[e]] = c
            counts[e] += 1

        markers = np.where(edge_cells[:, 1] < 0, OUTER, INTERIOR)
        if domain is not None and domain.kind is DomainKind.ANNULUS:
            b = markers != INTERIOR
            mid = 0.5 * (vertices[edges[b, 0]] + vertices[edges[b, 1]])
            markers[b] = np.where(domain.circle_index(mid) == 1, INNER, OUTER)

        ext = np.linalg.norm(p[:, [1, 2, 0]] - p, axis=2).max(axis=1)
        return cls(vertices, cells, edges, edge_cells, markers, cell_edges, float(h), ext)


def generate_mesh(domain: CurvedDomain, h: float) -> Mesh:
    """Deterministic body-fitted mesh of ``domain`` with nominal size ``h``."""
    if not h > 0:
        raise ValueError("mesh size must be positive")
    if h >= domain.diameter:
        raise InfeasibleMeshError(f"h={h} is not smaller than the domain diameter")
    if domain.kind is DomainKind.SQUARE:
        return _square_mesh(domain, h)

    c = np.asarray(domain.center)
    if domain.kind is DomainKind.DISK:
        n_rings = max(1, round(domain.radius / h))
        radii = domain.radius * np.arange(n_rings + 1) / n_rings
    else:
        gap = domain.radius - domain.r_inner
        n_rings = round(gap / h)
        if n_rings < 1 or math.ceil(2 * math.pi * domain.r_inner / h) < 3:
            raise InfeasibleMeshError(f"h={h} cannot resolve the annulus gap {gap}")
        radii = domain.r_inner + gap * np.arange(n_rings + 1) / n_rings

    pts = []
    for i, r in enumerate(radii):
        if r == 0.0:
            pts.append(np.zeros((1, 2)))
            continue
        n = math.ceil(2.0 * math.pi * r / h)
        theta = 2.0 * math.pi * (np.arange(n) + 0.5 * (i % 2)) / n
        pts.append(r * np.column_stack([np.cos(theta), np.sin(theta)]))
    vertices = np.concatenate(pts) + c

    cells = Delaunay(vertices).simplices
    if domain.kind is DomainKind.ANNULUS:
        centroid = vertices[cells].mean(axis=1)
        cells = cells[np.linalg.norm(centroid - c, axis=1) > domain.r_inner]
    mesh = Mesh.from_cells(vertices, cells, h, domain)
    _snap(mesh, domain)
    return mesh


def _snap(mesh: Mesh, domain: CurvedDomain) -> None:
    # one Newton step on the level set; for circles it is the radial projection
    idx = mesh.boundary_vertices
    x = mesh.vertices[idx]
    rel = x - domain.center
    r = np.linalg.norm(rel, axis=1)
    radius = np.where(domain.circle_index(x) == 1, domain.r_inner, domain.radius)
    moved = rel * (radius / r)[:, None] + domain.center
    if np.max(np.abs(moved - x)) > 1e-10:
        raise InfeasibleMeshError("boundary vertex generated off the boundary")
    mesh.vertices[idx] = moved


def _square_mesh(domain: CurvedDomain, h: float) -> Mesh:
    n = max(1, round(domain.side / h))
    t = np.linspace(-0.5 * domain.side, 0.5 * domain.side, n + 1)
    X, Y = np.meshgrid(t, t, indexing="ij")
    vertices = np.column_stack([X.ravel(), Y.ravel()]) + domain.center
    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    a, b = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel()
    c, d = idx[1:, 1:].ravel(), idx[:-1, 1:].ravel()
    cells = np.concatenate([np.column_stack([a, b, c]), np.column_stack([a, c, d])])
    return Mesh.from_cells(vertices, cells, h, domain)


@dataclass
class GeometryReport:
    """Observed mesh-quality and surrogate-map statistics.  Pure data."""

    n_vertices: int
    n_cells: int
    n_edges: int
    n_boundary_edges: int
    sigma: float
    tau: float
    max_delta: float
    max_delta_over_h2: float
    max_normal_dev: float
    max_normal_dev_over_h: float
    max_boundary_residual: float
    boundary_vertex_violations: int
    adjacency_violations: int
    inverted_cells: int
    sigma_gate: float = 10.0

    @property
    def ok(self) -> bool:
        return (
            self.boundary_vertex_violations == 0
            and self.adjacency_violations == 0
            and self.inverted_cells == 0
            and self.sigma <= self.sigma_gate
        )

    def as_dict(self) -> dict:
        out = dict(self.__dict__)
        out["ok"] = self.ok
        return out


def boundary_edge_normals(mesh: Mesh, edges=None) -> np.ndarray:
    """Unit outward normals of boundary edges."""
    if edges is None:
        edges = mesh.boundary_edges
    out = np.empty((len(edges), 2))
    for n, e in enumerate(edges):
        cell = mesh.edge_cells[e, 0]
        le = int(np.flatnonzero(mesh.cell_edges[cell] == e)[0])
        cv = mesh.cells[cell]
        a, b = mesh.vertices[cv[(le + 1) % 3]], mesh.vertices[cv[(le + 2) % 3]]
        t = b - a
        out[n] = (t[1], -t[0]) / np.hypot(*t)
    return out


def validate_mesh(mesh: Mesh, domain: CurvedDomain, quad_degree: int = 12,
                  sigma_gate: float = 10.0) -> GeometryReport:
    """Evaluate every mesh invariant; violations are reported, never raised."""
    bv = mesh.boundary_vertices
    residual = np.abs(domain.level_set(mesh.vertices[bv])) if len(bv) else np.zeros(0)
    max_res = float(residual.max()) if len(residual) else 0.0

    adjacency = 0
    interior = mesh.edge_markers == INTERIOR
    adjacency += int(np.sum(interior & (mesh.edge_cells[:, 1] < 0)))
    adjacency += int(np.sum(~interior & (mesh.edge_cells[:, 1] >= 0)))
    adjacency += int(np.sum(mesh.edge_cells[:, 0] < 0))

    det = np.linalg.det(mesh.jacobians())
    inverted = int(np.sum(det <= 0))
    rho = mesh.inradius_diameters()
    with np.errstate(divide="ignore"):
        sigma = float(np.max(mesh.h_K / rho)) if mesh.n_cells else 0.0
    tau = float(mesh.h_K.min() / mesh.h) if mesh.n_cells else 0.0

    max_delta = max_dev = 0.0
    be = mesh.boundary_edges
    if len(be) and len(residual):
        rule = segment_rule(quad_degree)
        s = rule.points[:, 0]
        a, b = mesh.vertices[mesh.edges[be, 0]], mesh.vertices[mesh.edges[be, 1]]
        x = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
        normals = np.repeat(boundary_edge_normals(mesh, be), len(s), axis=0)
        try:
            sample = project_to_boundary(domain, x.reshape(-1, 2), normals)
            max_delta = float(sample.delta.max())
            max_dev = float(np.abs(sample.n_tilde - sample.n_h).max())
        except ValueError:
            max_delta = max_dev = float("inf")

    return GeometryReport(
        n_vertices=mesh.n_vertices,
        n_cells=mesh.n_cells,
        n_edges=mesh.n_edges,
        n_boundary_edges=len(be),
        sigma=sigma,
        tau=tau,
        max_delta=max_delta,
        max_delta_over_h2=max_delta / mesh.h**2,
        max_normal_dev=max_dev,
        max_normal_dev_over_h=max_dev / mesh.h,
        max_boundary_residual=max_res,
        boundary_vertex_violations=int(np.sum(residual > SNAP_TOL)),
        adjacency_violations=adjacency,
        inverted_cells=inverted,
        sigma_gate=sigma_gate,
    )


def write_mesh(mesh: Mesh, path) -> None:
    """Write the ``mesh2d v1`` text format."""
    lines = ["mesh2d v1", f"vertices {mesh.n_vertices}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines.append(f"cells {mesh.n_cells}")
    lines += [f"{a} {b} {c}" for a, b, c in mesh.cells]
    lines.append(f"edges {mesh.n_edges}")
    lines += [f"{a} {b} {m}" for (a, b), m in zip(mesh.edges, mesh.edge_markers)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path, h: float | None = None) -> Mesh:
    """Read a ``mesh2d v1`` file.  ``h`` defaults to the largest cell diameter."""
    tokens = Path(path).read_text().split("\n")
    it = iter(line for line in tokens if line.strip())
    if next(it).strip() != "mesh2d v1":
        raise ValueError("not a mesh2d v1 file")

    def block(name):
        head = next(it).split()
        if head[0] != name:
            raise ValueError(f"expected {name!r} section, got {head[0]!r}")
        return [next(it).split() for _ in range(int(head[1]))]

    vertices = np.array(block("vertices"), dtype=float).reshape(-1, 2)
    cells = np.array(block("cells"), dtype=np.int64).reshape(-1, 3)
    edge_rows = np.array(block("edges"), dtype=np.int64).reshape(-1, 3)
    probe = Mesh.from_cells(vertices, cells, 1.0)
    if h is None:
        h = float(probe.h_K.max())
    markers = dict(zip(map(tuple, np.sort(edge_rows[:, :2], axis=1)), edge_rows[:, 2]))
    edge_markers = np.array([markers[tuple(e)] for e in probe.edges], dtype=np.int64)
    return Mesh(probe.vertices, probe.cells, probe.edges, probe.edge_cells, edge_markers,
                probe.cell_edges, float(h), probe.h_K)
