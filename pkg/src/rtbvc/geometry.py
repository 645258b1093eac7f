"""Curved domains and the surrogate map from the mesh boundary to the true one."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class DomainKind(str, Enum):
    DISK = "disk"
    ANNULUS = "annulus"
    SQUARE = "square"


class DegenerateDirectionError(ValueError):
    """Raised when the radial transfer direction is undefined."""


@dataclass(frozen=True)
class CurvedDomain:
    """A disk, an annulus or an axis-aligned square.

    The square has straight sides and serves as a patch-test geometry where
    the surrogate boundary coincides with the true one.
    """

    kind: DomainKind
    radius: float = 1.0
    r_inner: float = 0.0
    side: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "kind", DomainKind(self.kind))
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if self.kind is DomainKind.ANNULUS and not 0.0 < self.r_inner < self.radius:
            raise ValueError(
                f"annulus requires 0 < r_inner < r_outer, got {self.r_inner}, {self.radius}"
            )
        if self.kind is not DomainKind.SQUARE and self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.kind is DomainKind.SQUARE and self.side <= 0:
            raise ValueError("side must be positive")

    @classmethod
    def disk(cls, radius: float = 1.0, center=(0.0, 0.0)) -> "CurvedDomain":
        return cls(DomainKind.DISK, radius=radius, center=center)

    @classmethod
    def annulus(cls, r_inner: float = 0.5, r_outer: float = 1.0, center=(0.0, 0.0)) -> "CurvedDomain":
        return cls(DomainKind.ANNULUS, radius=r_outer, r_inner=r_inner, center=center)

    @classmethod
    def square(cls, side: float = 1.0, center=(0.0, 0.0)) -> "CurvedDomain":
        return cls(DomainKind.SQUARE, side=side, center=center)

    @classmethod
    def from_name(cls, name: str) -> "CurvedDomain":
        """Default domains used by the numerical examples."""
        if name == "disk":
            return cls.disk(1.0)
        if name == "annulus":
            return cls.annulus(0.5, 1.0)
        if name == "square":
            return cls.square(1.0, center=(0.5, 0.5))
        raise ValueError(f"unknown domain {name!r}")

    @property
    def r_outer(self) -> float:
        return self.radius

    @property
    def is_curved(self) -> bool:
        return self.kind is not DomainKind.SQUARE

    @property
    def diameter(self) -> float:
        if self.kind is DomainKind.SQUARE:
            return float(np.sqrt(2.0) * self.side)
        return 2.0 * self.radius

    @property
    def area(self) -> float:
        if self.kind is DomainKind.SQUARE:
            return self.side**2
        if self.kind is DomainKind.DISK:
            return np.pi * self.radius**2
        return np.pi * (self.radius**2 - self.r_inner**2)

    def level_set(self, x) -> np.ndarray:
        """Signed distance to the boundary (negative inside)."""
        x = np.asarray(x, dtype=float) - self.center
        if self.kind is DomainKind.SQUARE:
            return np.max(np.abs(x), axis=-1) - 0.5 * self.side
        r = np.linalg.norm(x, axis=-1)
        outer = r - self.radius
        if self.kind is DomainKind.DISK:
            return outer
        return np.maximum(outer, self.r_inner - r)

    def circle_index(self, x) -> np.ndarray:
        """0 for points nearest the outer circle, 1 for the inner circle."""
        r = np.linalg.norm(np.asarray(x, dtype=float) - self.center, axis=-1)
        if self.kind is not DomainKind.ANNULUS:
            return np.zeros(r.shape, dtype=int)
        return (np.abs(r - self.r_inner) < np.abs(r - self.radius)).astype(int)


@dataclass(frozen=True)
class SurrogateMapSample:
    """Surrogate map data at points of the mesh boundary.

    All fields are arrays with a leading point axis.  ``x_h + delta * nu``
    lies on the true boundary and ``n_tilde`` is its outward normal there.
    """

    x_h: np.ndarray
    delta: np.ndarray
    nu: np.ndarray
    n_tilde: np.ndarray
    n_h: np.ndarray

    @property
    def target(self) -> np.ndarray:
        return self.x_h + self.delta[:, None] * self.nu


def project_to_boundary(domain: CurvedDomain, x_h, edge_normal) -> SurrogateMapSample:
    """Radially project boundary points of the mesh onto the true boundary.

    Accepts a single point or an (n, 2) array with matching unit normals.
    On the annulus each point goes to the circle it is nearest to.
    """
    x_h = np.atleast_2d(np.asarray(x_h, dtype=float))
    n_h = np.atleast_2d(np.asarray(edge_normal, dtype=float))
    n_h = np.broadcast_to(n_h, x_h.shape).copy()
    n_pts = len(x_h)
    if domain.kind is DomainKind.SQUARE:
        return SurrogateMapSample(x_h.copy(), np.zeros(n_pts), n_h.copy(), n_h.copy(), n_h)

    rel = x_h - domain.center
    r = np.linalg.norm(rel, axis=1)
    if np.any(r < 1e-14):
        raise DegenerateDirectionError("boundary point coincides with the circle center")
    radial = rel / r[:, None]
    inner = domain.circle_index(x_h) == 1
    radius = np.where(inner, domain.r_inner, domain.radius)
    target = domain.center + radial * radius[:, None]
    # outward normal of the domain: away from the center on the outer circle
    n_tilde = np.where(inner[:, None], -radial, radial)
    delta = np.abs(radius - r)
    direction = np.sign(radius - r)
    nu = np.where((direction == 0)[:, None], n_tilde, direction[:, None] * radial)
    # recompute delta from the target to keep |x_h + delta nu| on the circle
    delta = np.einsum("ij,ij->i", target - x_h, nu)
    return SurrogateMapSample(x_h.copy(), delta, nu, n_tilde, n_h)
