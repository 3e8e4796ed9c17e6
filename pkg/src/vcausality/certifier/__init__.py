"""Exact linear programming with independently checkable certificates."""

from .lp import Certificate, ConstraintSet, LinearProgram, Unbounded
from .polytope import (CertificateError, build_bound_lp, local_decomposition_2222, marginal_feasibility,
                       maximize, robustness_margin)
from .simplex import solve
from .verify import VerificationResult, verify_certificate

__all__ = [
    "Certificate", "ConstraintSet", "LinearProgram", "Unbounded", "CertificateError", "build_bound_lp",
    "local_decomposition_2222", "marginal_feasibility", "maximize", "robustness_margin", "solve",
    "VerificationResult", "verify_certificate",
]
