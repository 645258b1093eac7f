"""Closed-form test solutions of u = -grad p, div u = f, u.n = g_N.

Each formula is defined on the whole plane, so evaluating it outside the
true domain is the smooth extension the scheme needs on the mesh.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .assembly import ProblemData

PI = np.pi


@dataclass(frozen=True)
class ManufacturedCase:
    id: int
    name: str
    u: Callable  # (x, y) -> (ux, uy)
    p: Callable
    grad_p: Callable
    f: Callable
    default_domain: str

    def g_N(self, points, normals) -> np.ndarray:
        points = np.asarray(points)
        ux, uy = self.u(points[..., 0], points[..., 1])
        return ux * normals[..., 0] + uy * normals[..., 1]

    def data(self) -> ProblemData:
        return ProblemData(f=self.f, g_N=self.g_N)


def _ex1_u(x, y):
    return np.array([x**3 * (3 * x**2 + 2 * y**2 - 3), x**4 * y])


def _ex1_p(x, y):
    return -0.5 * x**6 - 0.5 * x**4 * y**2 + 0.75 * x**4 - 3.0 / 64.0


def _ex1_grad_p(x, y):
    return np.array([-3 * x**5 - 2 * x**3 * y**2 + 3 * x**3, -(x**4) * y])


def _ex1_f(x, y):
    return 16 * x**4 + 6 * x**2 * y**2 - 9 * x**2


def example2(wavenumber: int = 2) -> "ManufacturedCase":
    """Example 2 with p = -sin(w pi x) sin(w pi y); the default w = 2 is the printed form."""
    w = wavenumber * PI

    def u(x, y):
        return np.array([w * np.cos(w * x) * np.sin(w * y), w * np.sin(w * x) * np.cos(w * y)])

    def p(x, y):
        return -np.sin(w * x) * np.sin(w * y)

    def grad_p(x, y):
        return -u(x, y)

    def f(x, y):
        return -2 * w**2 * np.sin(w * x) * np.sin(w * y)

    return ManufacturedCase(2, f"trigonometric (wavenumber {wavenumber})", u, p, grad_p, f, "disk")


# p = -(e^y - e^-y) sin(pi x) and u = -grad p
def _ex3_u(x, y):
    return np.array([
        PI * np.cos(PI * x) * (np.exp(y) - np.exp(-y)),
        np.sin(PI * x) * (np.exp(y) + np.exp(-y)),
    ])


def _ex3_p(x, y):
    return -(np.exp(y) - np.exp(-y)) * np.sin(PI * x)


def _ex3_grad_p(x, y):
    return -_ex3_u(x, y)


def _ex3_f(x, y):
    return (1.0 - PI**2) * np.sin(PI * x) * (np.exp(y) - np.exp(-y))


CASES = {
    1: ManufacturedCase(1, "polynomial, zero flux", _ex1_u, _ex1_p, _ex1_grad_p, _ex1_f, "disk"),
    2: example2(2),
    3: ManufacturedCase(3, "exponential-trigonometric", _ex3_u, _ex3_p, _ex3_grad_p, _ex3_f, "annulus"),
}


def get_case(case_id: int, ex2_wavenumber: int = 2) -> ManufacturedCase:
    if int(case_id) == 2 and ex2_wavenumber != 2:
        return example2(ex2_wavenumber)
    try:
        return CASES[int(case_id)]
    except KeyError:
        raise ValueError(f"unknown example {case_id!r}; expected 1, 2 or 3") from None


def polynomial_patch_case(k: int) -> ManufacturedCase:
    """Pressure in P_k with u = -grad p in P_{k-1}^2, for straight-sided domains."""
    c = [0.3, -0.7, 0.45, 1.1, -0.25, 0.6, 0.8, -0.35, 0.2, 0.5]

    def p(x, y):
        out = c[0] + c[1] * x + c[2] * y
        if k >= 2:
            out = out + c[3] * x**2 + c[4] * x * y + c[5] * y**2
        if k >= 3:
            out = out + c[6] * x**3 + c[7] * x**2 * y + c[8] * x * y**2 + c[9] * y**3
        return out

    def grad_p(x, y):
        gx = c[1] + 0 * x
        gy = c[2] + 0 * y
        if k >= 2:
            gx = gx + 2 * c[3] * x + c[4] * y
            gy = gy + c[4] * x + 2 * c[5] * y
        if k >= 3:
            gx = gx + 3 * c[6] * x**2 + 2 * c[7] * x * y + c[8] * y**2
            gy = gy + c[7] * x**2 + 2 * c[8] * x * y + 3 * c[9] * y**2
        return np.array([gx, gy])

    def u(x, y):
        return -grad_p(x, y)

    def f(x, y):
        lap = 0 * x
        if k >= 2:
            lap = lap + 2 * c[3] + 2 * c[5]
        if k >= 3:
            lap = lap + 6 * c[6] * x + 2 * c[7] * y + 2 * c[8] * x + 6 * c[9] * y
        return -lap + 0 * x

    return ManufacturedCase(0, f"patch P{k}", u, p, grad_p, f, "square")
