"""Linear solves for the bordered saddle-point systems."""
from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import AssembledSystem


class SingularSystemError(RuntimeError):
    pass


@dataclass
class SolveReport:
    residual: float
    method: str
    refinement_steps: int
    fill_nnz: int
    seconds: float
    multiplier: float


def _relative_residual(mat, x, b) -> float:
    nb = np.linalg.norm(b)
    r = np.linalg.norm(mat @ x - b)
    return float(r / nb) if nb > 0 else float(r)


def solve_linear(mat: sp.spmatrix, rhs: np.ndarray, tol: float = 1e-10, method: str = "direct",
                 max_refinement: int = 3):
    """Solve ``mat x = rhs``; returns (x, residual, refinement steps, fill)."""
    if tol < 1e-14:
        raise ValueError("tolerance below 1e-14 is not attainable")
    rhs = np.asarray(rhs, dtype=float)
    if not np.any(rhs):
        return np.zeros_like(rhs), 0.0, 0, 0
    csc = sp.csc_matrix(mat)
    if method == "direct":
        try:
            lu = spla.splu(csc, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise SingularSystemError(
                f"sparse LU failed ({exc}); the system likely has a nullspace, "
                "e.g. a missing pressure-mean augmentation"
            ) from exc
        x = lu.solve(rhs)
        fill = int(lu.nnz)
        steps = 0
        res = _relative_residual(csc, x, rhs)
        while res > tol and steps < max_refinement:
            x = x + lu.solve(rhs - csc @ x)
            res = _relative_residual(csc, x, rhs)
            steps += 1
        if not np.all(np.isfinite(x)):
            raise SingularSystemError("non-finite solution; the factorization is singular")
        return x, res, steps, fill
    if method == "gmres":
        ilu = spla.spilu(csc, drop_tol=1e-5, fill_factor=20)
        prec = spla.LinearOperator(csc.shape, ilu.solve)
        x, info = spla.gmres(csc, rhs, M=prec, rtol=tol, atol=0.0, restart=200, maxiter=50)
        return x, _relative_residual(csc, x, rhs), int(info), 0
    raise ValueError(f"unknown method {method!r}")


def solve(system: AssembledSystem, tol: float = 1e-10, method: str = "direct"):
    """Solve an assembled system.

    Returns ``(U, P, multiplier, report)``.  The pressure is shifted to have
    exactly zero mean on the mesh afterwards.
    """
    t0 = time.perf_counter()
    x, res, steps, fill = solve_linear(system.matrix, system.rhs, tol, method)
    if res > tol:
        raise SingularSystemError(
            f"relative residual {res:.3e} exceeds tolerance {tol:.1e}; "
            "the system may be singular"
        )
    U, P, lam = system.split(x)
    space = system.space
    area = float(system.m.sum())
    mean = float(system.m @ P) / area
    if abs(mean) > 1e-13:
        P -= mean * space.pressure_constant()
    report = SolveReport(res, method, steps, fill, time.perf_counter() - t0, lam)
    return U, P, lam, report


def dump_system(system: AssembledSystem, directory) -> None:
    """Write ``matrix.txt`` (0-based ``i j value`` triplets) and ``rhs.txt``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    coo = system.matrix.tocoo()
    with open(out / "matrix.txt", "w") as fh:
        fh.write(f"% {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {v:.17g}\n")
    np.savetxt(out / "rhs.txt", system.rhs, fmt="%.17g")


def load_system(directory):
    """Read a dump back as (csr matrix, rhs)."""
    src = Path(directory)
    with open(src / "matrix.txt") as fh:
        n, m, _ = map(int, fh.readline()[1:].split())
        data = np.loadtxt(fh, ndmin=2)
    mat = sp.coo_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=(n, m))
    return mat.tocsr(), np.loadtxt(src / "rhs.txt", ndmin=1)
