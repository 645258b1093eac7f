"""Gauss rules on the unit segment and the reference triangle.

The reference triangle has vertices (0, 0), (1, 0), (0, 1).  Triangle rules
are collapsed (Duffy) products of a Gauss-Legendre rule and a Gauss-Jacobi
rule, which keeps every weight positive and every point strictly inside the
triangle for any degree.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

MAX_TRIANGLE_DEGREE = 20
MAX_SEGMENT_DEGREE = 41


@dataclass(frozen=True)
class QuadRule:
    """Quadrature rule on a reference cell.

    ``points`` has shape (n, 1) on the segment [0, 1] and (n, 2) on the
    reference triangle (Cartesian reference coordinates).
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def barycentric(self) -> np.ndarray:
        if self.points.shape[1] == 1:
            s = self.points[:, 0]
            return np.column_stack([1.0 - s, s])
        x, y = self.points.T
        return np.column_stack([1.0 - x - y, x, y])

    def __len__(self) -> int:
        return len(self.weights)


@lru_cache(maxsize=None)
def segment_rule(degree: int) -> QuadRule:
    """Gauss-Legendre rule on [0, 1] with ceil((degree+1)/2) points."""
    if not 1 <= degree <= MAX_SEGMENT_DEGREE:
        raise ValueError(f"segment rule degree must be in [1, {MAX_SEGMENT_DEGREE}], got {degree}")
    n = (degree + 2) // 2
    x, w = np.polynomial.legendre.leggauss(n)
    pts = 0.5 * (x + 1.0)
    rule = QuadRule(pts[:, None], 0.5 * w, degree)
    _freeze(rule)
    return rule


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadRule:
    """Collapsed Gauss rule on the reference triangle exact to ``degree``."""
    if not 1 <= degree <= MAX_TRIANGLE_DEGREE:
        raise ValueError(
            f"triangle rule degree must be in [1, {MAX_TRIANGLE_DEGREE}], got {degree}"
        )
    n = (degree + 2) // 2
    # u direction: plain Gauss-Legendre on [0, 1]
    gu, wu = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (gu + 1.0)
    wu = 0.5 * wu
    # v direction carries the (1 - v) Jacobian of the collapse
    gv, wv = roots_jacobi(n, 1.0, 0.0)
    v = 0.5 * (gv + 1.0)
    wv = 0.25 * wv
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    pts = np.column_stack([(U * (1.0 - V)).ravel(), V.ravel()])
    rule = QuadRule(pts, W.ravel(), degree)
    _freeze(rule)
    return rule


def _freeze(rule: QuadRule) -> None:
    rule.points.setflags(write=False)
    rule.weights.setflags(write=False)
