"""Command-line entry point ``rt-bvc``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .geometry import CurvedDomain
from .harness import (
    StudyConfig, check_bands, format_tables, parse_h, reference_comparison, run_study,
)
from .mesh import generate_mesh, read_mesh, validate_mesh, write_mesh


def _h_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(parse_h(t) for t in text.split(",") if t.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rt-bvc",
        description="Mixed RT_k/P_k solver with boundary value correction on curved domains.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress per level")
    sub = parser.add_subparsers(dest="command", required=True)

    st = sub.add_parser("study", help="run a convergence study and write CSV and tables")
    st.add_argument("--example", type=_int_list, default=(1,),
                    help="example id(s) 1, 2, 3 (comma separated)")
    st.add_argument("--domain", choices=("disk", "annulus", "square"), default=None,
                    help="default: disk for examples 1-2, annulus for 3; square runs a patch test")
    st.add_argument("--k", type=_int_list, default=(1,), help="degree(s) 1, 2, 3 (comma separated)")
    st.add_argument("--scheme", choices=("corrected", "uncorrected", "both"), default="corrected")
    st.add_argument("--h", type=_h_list, default=(1 / 8, 1 / 16, 1 / 32),
                    help="mesh sizes, e.g. 1/8,1/16,1/32")
    st.add_argument("--quad-boost", type=int, default=0, help="extra quadrature degree")
    st.add_argument("--tol", type=float, default=1e-10, help="relative residual tolerance")
    st.add_argument("--method", choices=("direct", "gmres"), default="direct")
    st.add_argument("--imposition", choices=("strong", "penalty"), default="strong",
                    help="flux imposition for the uncorrected scheme")
    st.add_argument("--ex2-wavenumber", type=int, default=2,
                    help="w in p = -sin(w pi x) sin(w pi y) for example 2")
    st.add_argument("--max-dofs", type=int, default=500_000,
                    help="skip levels above this many unknowns (0 disables)")
    st.add_argument("--out", type=Path, default=None, help="output directory")
    st.add_argument("--check", action="store_true", help="exit nonzero if an acceptance band fails")

    me = sub.add_parser("mesh", help="generate a mesh and write it in mesh2d format")
    me.add_argument("--domain", choices=("disk", "annulus", "square"), required=True)
    me.add_argument("--h", type=parse_h, required=True)
    me.add_argument("--out", type=Path, required=True)

    va = sub.add_parser("validate", help="print the geometry report as JSON")
    va.add_argument("--domain", choices=("disk", "annulus", "square"), required=True)
    va.add_argument("--h", type=parse_h,
                    help="generate the mesh at this size, or the nominal size of --mesh")
    va.add_argument("--mesh", type=Path, help="read a mesh2d file instead of generating one")
    va.add_argument("--quad-degree", type=int, default=12)
    return parser


def _study(args) -> int:
    schemes = ("corrected", "uncorrected") if args.scheme == "both" else (args.scheme,)
    config = StudyConfig(
        examples=args.example, ks=args.k, schemes=schemes, hs=args.h, domain=args.domain,
        quad_boost=args.quad_boost, tol=args.tol, method=args.method,
        ex2_wavenumber=args.ex2_wavenumber, imposition=args.imposition,
        max_dofs=args.max_dofs or None, out=args.out,
    )
    records = run_study(config)
    print(format_tables(records), end="")
    for line in reference_comparison(records):
        print(line)
    if args.out is not None:
        print(f"wrote {args.out / 'results.csv'} and {args.out / 'tables.txt'}")
    if args.check:
        violations = check_bands(records)
        for v in violations:
            print(f"FAIL {v}", file=sys.stderr)
        if violations:
            return 1
        print("all acceptance bands satisfied")
    return 0


def _mesh(args) -> int:
    domain = CurvedDomain.from_name(args.domain)
    mesh = generate_mesh(domain, args.h)
    write_mesh(mesh, args.out)
    print(f"wrote {args.out}: {mesh.n_vertices} vertices, {mesh.n_cells} cells, {mesh.n_edges} edges")
    return 0


def _validate(args) -> int:
    domain = CurvedDomain.from_name(args.domain)
    if args.mesh is not None:
        mesh = read_mesh(args.mesh, h=args.h)
    elif args.h is not None:
        mesh = generate_mesh(domain, args.h)
    else:
        raise ValueError("validate needs --h or --mesh")
    report = validate_mesh(mesh, domain, quad_degree=args.quad_degree)
    print(json.dumps(report.as_dict(), indent=2))
    return 0 if report.ok else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"study": _study, "mesh": _mesh, "validate": _validate}
    try:
        return handlers[args.command](args)
    except ValueError as exc:
        print(f"rt-bvc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
