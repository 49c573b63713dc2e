"""Conforming divdiv-complex finite elements on tetrahedra, exactness audits,
and a dual-form linearized Einstein-Bianchi solver."""

__version__ = "0.1.0"

from .complex_asm import GlobalSpace, assemble_diff, build_complex, complex_audit
from .eb_solver import EBConfig, EBSystem, infsup_estimate, mms_convergence, run
from .fe2d import element_2d
from .fe3d import element_3d
from .fields import PolyField, Simplex
from .mesh import TetMesh, kuhn_cube, load, single_tet, two_tets
from .poly import PolySpace, constrained_subspace, diff, poly_complex_audit, space
from .quadrature import rule

__all__ = [
    "EBConfig", "EBSystem", "GlobalSpace", "PolyField", "PolySpace", "Simplex",
    "TetMesh", "assemble_diff", "build_complex", "complex_audit",
    "constrained_subspace", "diff", "element_2d", "element_3d",
    "infsup_estimate", "kuhn_cube", "load", "mms_convergence",
    "poly_complex_audit", "run", "rule", "single_tet", "space", "two_tets",
]
