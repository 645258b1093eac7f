"""Mixed RT_k / P_k finite elements for u = -grad p, div u = f with Neumann data
on curved domains, using a Taylor boundary value correction on a polygonal mesh."""
from .assembly import AssembledSystem, ProblemData, assemble_corrected, assemble_uncorrected
from .cases import ManufacturedCase, get_case, polynomial_patch_case
from .geometry import CurvedDomain, DomainKind, project_to_boundary
from .harness import ConvergenceRecord, StudyConfig, check_bands, run_study
from .mesh import GeometryReport, Mesh, generate_mesh, read_mesh, validate_mesh, write_mesh
from .norms import error_p, error_u, mesh_norms
from .quadrature import QuadRule, segment_rule, triangle_rule
from .solver import SingularSystemError, SolveReport, solve
from .spaces import FeSpace, RtReferenceElement, rt_reference

__version__ = "0.1.0"

__all__ = [
    "AssembledSystem", "ConvergenceRecord", "CurvedDomain", "DomainKind", "FeSpace",
    "GeometryReport", "ManufacturedCase", "Mesh", "ProblemData", "QuadRule",
    "RtReferenceElement", "SingularSystemError", "SolveReport", "StudyConfig",
    "assemble_corrected", "assemble_uncorrected", "check_bands", "error_p", "error_u",
    "generate_mesh", "get_case", "mesh_norms", "polynomial_patch_case", "project_to_boundary",
    "read_mesh", "rt_reference", "run_study", "segment_rule", "solve", "triangle_rule",
    "validate_mesh", "write_mesh",
]
