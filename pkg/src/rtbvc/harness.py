"""Convergence studies: mesh, assemble, solve and measure over a ladder of h."""
from __future__ import annotations

import csv
import gc
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .assembly import assemble_corrected, assemble_uncorrected
from .cases import get_case, polynomial_patch_case
from .geometry import CurvedDomain
from .mesh import generate_mesh
from .norms import error_p, error_u
from .solver import solve
from .spaces import FeSpace

log = logging.getLogger(__name__)

CSV_COLUMNS = ("example", "scheme", "domain", "k", "h", "n_cells", "n_dof",
               "e_u", "order_u", "e_p", "order_p", "residual", "seconds")
SCHEMES = ("corrected", "uncorrected")

# errors at or below this are roundoff, and orders computed from them are meaningless
ROUNDOFF = 1e-9

# Reference magnitudes at h = 1/16, indexed by k-1.  Mesh-dependent; only
# compared within a factor of ten, for information.
REFERENCE_H16 = {
    (1, "uncorrected", "e_u"): (2.13e-03, 1.79e-03, 1.76e-03),
    (2, "uncorrected", "e_u"): (8.40e-03, 4.88e-03, 4.61e-03),
    (3, "uncorrected", "e_u"): (2.17e-02, 1.42e-02, 1.26e-02),
    (1, "corrected", "e_u"): (1.38e-03, 3.57e-05, 4.86e-07),
    (2, "corrected", "e_u"): (7.37e-03, 1.89e-04, 2.81e-06),
    (3, "corrected", "e_u"): (1.55e-02, 1.83e-04, 8.55e-07),
    (1, "corrected", "e_p"): (2.98e-02, 1.86e-03, 5.04e-05),
    (2, "corrected", "e_p"): (2.43e-01, 7.87e-03, 1.95e-04),
    (3, "corrected", "e_p"): (2.18e-01, 5.66e-03, 9.81e-05),
}


def convergence_orders(errors) -> list[float]:
    """log2(e(h)/e(h/2)) for each consecutive pair; nan where undefined."""
    e = np.asarray(errors, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log2(e[:-1] / e[1:])
    return [float(o) if np.isfinite(o) else math.nan for o in out]


def parse_h(text: str) -> float:
    """Accept ``1/16``, ``0.0625`` or ``16`` (read as 1/16)."""
    text = text.strip()
    value = float(Fraction(text))
    if value > 1.0 and "/" not in text and "." not in text:
        value = 1.0 / value
    if not 0.0 < value <= 1.0:
        raise ValueError(f"mesh size {text!r} must lie in (0, 1]")
    return value


def format_h(h: float) -> str:
    n = 1.0 / h
    return f"1/{round(n)}" if abs(n - round(n)) < 1e-9 else f"{h:.6g}"


@dataclass
class LevelResult:
    h: float
    n_cells: int
    n_dof: int
    e_u: float
    e_p: float
    residual: float
    seconds: float


@dataclass
class ConvergenceRecord:
    """One study row: a fixed (example, scheme, domain, k) over a ladder of h."""

    example: int
    scheme: str
    domain: str
    k: int
    levels: list[LevelResult] = field(default_factory=list)
    failure: str | None = None

    @property
    def hs(self) -> list[float]:
        return [lv.h for lv in self.levels]

    @property
    def e_u(self) -> list[float]:
        return [lv.e_u for lv in self.levels]

    @property
    def e_p(self) -> list[float]:
        return [lv.e_p for lv in self.levels]

    @property
    def orders_u(self) -> list[float]:
        return self._orders(self.e_u)

    @property
    def orders_p(self) -> list[float]:
        return self._orders(self.e_p)

    def _orders(self, errors) -> list[float]:
        orders = convergence_orders(errors)
        # no rate is visible once both errors sit at roundoff
        return [math.nan if max(a, b) <= ROUNDOFF else o
                for o, a, b in zip(orders, errors[:-1], errors[1:])]

    @property
    def ok(self) -> bool:
        return self.failure is None

    def rows(self) -> list[dict]:
        ou = [math.nan] + self.orders_u
        op = [math.nan] + self.orders_p
        return [
            {"example": self.example, "scheme": self.scheme, "domain": self.domain, "k": self.k,
             "h": lv.h, "n_cells": lv.n_cells, "n_dof": lv.n_dof, "e_u": lv.e_u,
             "order_u": ou[i], "e_p": lv.e_p, "order_p": op[i], "residual": lv.residual,
             "seconds": lv.seconds}
            for i, lv in enumerate(self.levels)
        ]


@dataclass
class StudyConfig:
    examples: tuple[int, ...] = (1,)
    ks: tuple[int, ...] = (1,)
    schemes: tuple[str, ...] = ("corrected",)
    hs: tuple[float, ...] = (1 / 8, 1 / 16, 1 / 32)
    domain: str | None = None  # None: each example's default domain
    quad_boost: int = 0
    tol: float = 1e-10
    method: str = "direct"
    ex2_wavenumber: int = 2
    imposition: str = "strong"
    # skip levels whose system would exceed this many unknowns (memory guard)
    max_dofs: int | None = 500_000
    out: Path | None = None

    def __post_init__(self):
        for s in self.schemes:
            if s not in SCHEMES:
                raise ValueError(f"unknown scheme {s!r}")
        for k in self.ks:
            if k not in (1, 2, 3):
                raise ValueError(f"k must be 1, 2 or 3, got {k}")
        hs = list(self.hs)
        if not hs:
            raise ValueError("at least one mesh size is required")
        for a, b in zip(hs[:-1], hs[1:]):
            if not math.isclose(a / b, 2.0, rel_tol=1e-9):
                raise ValueError("mesh sizes must halve from one level to the next")


def estimate_dofs(n_cells: int, k: int) -> int:
    # about 1.5 edges per cell on a triangulation
    n_u = round(1.5 * n_cells) * (k + 1) + n_cells * k * (k + 1)
    return n_u + n_cells * (k + 1) * (k + 2) // 2 + 1


class _MeshCache:
    def __init__(self):
        self._meshes = {}

    def get(self, domain: CurvedDomain, name: str, h: float):
        key = (name, h)
        if key not in self._meshes:
            self._meshes[key] = generate_mesh(domain, h)
        return self._meshes[key]


def run_row(example: int, scheme: str, domain_name: str, k: int, config: StudyConfig,
            meshes: _MeshCache | None = None) -> ConvergenceRecord:
    """Run one (example, scheme, domain, k) row; failures are recorded, not raised."""
    meshes = meshes or _MeshCache()
    rec = ConvergenceRecord(example, scheme, domain_name, k)
    domain = CurvedDomain.from_name(domain_name)
    case = polynomial_patch_case(k) if example == 0 else get_case(example, config.ex2_wavenumber)
    data = case.data()
    try:
        for h in config.hs:
            t0 = time.perf_counter()
            mesh = meshes.get(domain, domain_name, h)
            if config.max_dofs is not None and estimate_dofs(mesh.n_cells, k) > config.max_dofs:
                rec.failure = (f"skipped h={format_h(h)} and finer: about {estimate_dofs(mesh.n_cells, k)} "
                               f"unknowns exceeds max_dofs={config.max_dofs}")
                break
            space = FeSpace(mesh, k)
            if scheme == "corrected":
                system = assemble_corrected(space, domain, data, quad_boost=config.quad_boost)
            else:
                system = assemble_uncorrected(space, domain, data, quad_boost=config.quad_boost,
                                              imposition=config.imposition)
            U, P, _, report = solve(system, config.tol, config.method)
            n_dof = system.n_dof
            del system
            gc.collect()
            rec.levels.append(LevelResult(h, mesh.n_cells, n_dof, error_u(space, U, case),
                                          error_p(space, P, case), report.residual,
                                          time.perf_counter() - t0))
            log.info("example %d %s k=%d h=%s: e_u=%.3e e_p=%.3e", example, scheme, k,
                     format_h(h), rec.levels[-1].e_u, rec.levels[-1].e_p)
    except Exception as exc:  # a failed row must not stop the others
        rec.failure = f"{type(exc).__name__}: {exc}"
        log.warning("row example=%d scheme=%s k=%d failed: %s", example, scheme, k, rec.failure)
    return rec


def run_study(config: StudyConfig) -> list[ConvergenceRecord]:
    """Run every (example, scheme, k) row of ``config``.

    Records come back ordered by (example, scheme, k).  When ``config.out`` is
    set, ``results.csv`` and ``tables.txt`` are written there.
    """
    meshes = _MeshCache()
    records = []
    for example in sorted(config.examples):
        if config.domain == "square":
            domain_name = "square"
        else:
            domain_name = config.domain or get_case(example).default_domain
        # the square has no curved boundary, so the study there is a patch test
        ex_id = 0 if domain_name == "square" else example
        for scheme in sorted(config.schemes):
            for k in sorted(config.ks):
                records.append(run_row(ex_id, scheme, domain_name, k, config, meshes))
    if config.out is not None:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(records, out / "results.csv")
        (out / "tables.txt").write_text(format_tables(records))
    return records


def _fmt(x: float, spec: str) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else format(x, spec)


def write_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for rec in records:
            for row in rec.rows():
                row = dict(row)
                for key in ("h", "e_u", "e_p", "residual"):
                    row[key] = _fmt(row[key], ".10e") if key != "h" else repr(row[key])
                for key in ("order_u", "order_p"):
                    row[key] = _fmt(row[key], ".4f")
                row["seconds"] = _fmt(row["seconds"], ".3f")
                writer.writerow(row)


def format_tables(records) -> str:
    """Aligned text tables: one block per (example, scheme, quantity), k across."""
    blocks = []
    groups: dict[tuple, list[ConvergenceRecord]] = {}
    for rec in records:
        groups.setdefault((rec.example, rec.scheme, rec.domain), []).append(rec)
    for (example, scheme, domain), recs in groups.items():
        recs = sorted(recs, key=lambda r: r.k)
        hs = sorted({lv.h for r in recs for lv in r.levels}, reverse=True)
        for qty in ("e_u", "e_p"):
            label = "patch" if example == 0 else f"example {example}"
            lines = [f"{label}, {scheme}, {domain}: {qty}"]
            header = f"{'h':>6}" + "".join(f" | {f'k={r.k}':>10} {'order':>6}" for r in recs)
            lines += [header, "-" * len(header)]
            for h in hs:
                cells = []
                for r in recs:
                    errs = getattr(r, qty)
                    orders = r.orders_u if qty == "e_u" else r.orders_p
                    i = next((j for j, lv in enumerate(r.levels) if lv.h == h), None)
                    if i is None:
                        cells.append(f" | {'':>10} {'':>6}")
                        continue
                    o = "" if i == 0 else (_fmt(orders[i - 1], ".2f") or "—")
                    cells.append(f" | {errs[i]:>10.2e} {o:>6}")
                lines.append(f"{format_h(h):>6}" + "".join(cells))
            for r in recs:
                if r.failure:
                    lines.append(f"  k={r.k}: {r.failure}")
            blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def reference_comparison(records) -> list[str]:
    """Factor between measured and reference errors at h = 1/16 (informational)."""
    lines = []
    for rec in records:
        for qty in ("e_u", "e_p"):
            ref = REFERENCE_H16.get((rec.example, rec.scheme, qty))
            lv = next((lv for lv in rec.levels if math.isclose(lv.h, 1 / 16)), None)
            if ref is None or lv is None:
                continue
            val = getattr(lv, qty)
            ratio = val / ref[rec.k - 1]
            tag = "within 10x" if 0.1 <= ratio <= 10 else "outside 10x"
            lines.append(f"example {rec.example} {rec.scheme} k={rec.k} {qty} at h=1/16: "
                         f"{val:.2e} vs reference {ref[rec.k - 1]:.2e} (x{ratio:.2f}, {tag})")
    return lines


def check_bands(records) -> list[str]:
    """Violations of the acceptance bands; an empty list means all pass.

    Corrected: velocity order on the finest pair in [k+0.4, k+1.2] and
    pressure order in [k-0.25, k+0.25].  Uncorrected: velocity order at most
    2.0.  With both schemes present, corrected e_u at h = 1/32 must be ten
    times below uncorrected for k >= 2.  Patch rows: all errors <= 1e-9.
    """
    bad = []
    for rec in records:
        tag = f"example {rec.example} {rec.scheme} {rec.domain} k={rec.k}"
        if rec.failure and not rec.failure.startswith("skipped"):
            bad.append(f"{tag}: failed ({rec.failure})")
            continue
        if rec.example == 0:
            worst = max([*rec.e_u, *rec.e_p], default=math.inf)
            if worst > ROUNDOFF:
                bad.append(f"{tag}: patch error {worst:.2e} > {ROUNDOFF:.0e}")
            continue
        if len(rec.levels) < 2:
            bad.append(f"{tag}: need two levels to fit an order")
            continue
        ou, op = rec.orders_u[-1], rec.orders_p[-1]
        k = rec.k
        if rec.scheme == "corrected":
            if not k + 0.4 <= ou <= k + 1.2:
                bad.append(f"{tag}: velocity order {ou:.2f} outside [{k + 0.4:.1f}, {k + 1.2:.1f}]")
            if not k - 0.25 <= op <= k + 0.25:
                bad.append(f"{tag}: pressure order {op:.2f} outside [{k - 0.25:.2f}, {k + 0.25:.2f}]")
        elif not ou <= 2.0:
            bad.append(f"{tag}: uncorrected velocity order {ou:.2f} > 2.0")
    by_key = {(r.example, r.scheme, r.domain, r.k): r for r in records}
    for (ex, scheme, dom, k), rec in by_key.items():
        other = by_key.get((ex, "uncorrected", dom, k))
        if scheme != "corrected" or k < 2 or other is None or ex == 0:
            continue
        a = next((lv.e_u for lv in rec.levels if math.isclose(lv.h, 1 / 32)), None)
        b = next((lv.e_u for lv in other.levels if math.isclose(lv.h, 1 / 32)), None)
        if a is not None and b is not None and not a < b / 10:
            bad.append(f"example {ex} {dom} k={k}: corrected e_u {a:.2e} not 10x below "
                       f"uncorrected {b:.2e} at h=1/32")
    return bad
