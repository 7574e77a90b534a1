"""Numerical toolkit for toric K-stability of 2-D Delzant polytopes.

Core objects: polygons with lattice structure (`polytope`), deterministic
adaptive quadrature over them (`quadrature`), the volume / boundary /
Futaki / Einstein-Hilbert functionals of a positive affine Killing potential
(`functionals`), pointwise curvature calculus from the canonical symplectic
potential (`abreu`), critical-ray search and closed-form families
(`criticalpoints`), Donaldson-Futaki scans over crease test functions with
a stability verdict (`kstability`), and cross-checking suites (`suites`).
"""

__version__ = "0.1.0"

from .errors import DomainError, EvaluationError, PolytopeValidationError, ToleranceError
from .functionals import (
    FunctionalContext,
    c_const,
    d_const,
    df,
    df_pair,
    eh,
    eh_gradient,
    eh_hessian,
    futaki,
    total_scalar,
    vol,
)
from .kstability import (
    CreaseCase,
    ScanTable,
    Verdict,
    df_scan,
    emit_scan_csv,
    enumerate_crease_cases,
    scan_csv_text,
    stability_verdict,
    verdict_report,
)
from .criticalpoints import (
    CriticalRay,
    SearchConfig,
    closed_form_family,
    find_critical_rays,
    match_families,
    quartic_alpha,
    verify_slice_principle,
)
from .polytope import (
    AffineFn2,
    Edge,
    Polytope2,
    SPLFn,
    delta_p,
    from_vertices,
    load_polytope_json,
    unimodular_transform,
)

__all__ = [
    "__version__",
    "AffineFn2",
    "CreaseCase",
    "CriticalRay",
    "DomainError",
    "Edge",
    "EvaluationError",
    "FunctionalContext",
    "Polytope2",
    "PolytopeValidationError",
    "SPLFn",
    "ScanTable",
    "SearchConfig",
    "ToleranceError",
    "Verdict",
    "c_const",
    "closed_form_family",
    "d_const",
    "delta_p",
    "df",
    "df_pair",
    "df_scan",
    "eh",
    "eh_gradient",
    "eh_hessian",
    "emit_scan_csv",
    "enumerate_crease_cases",
    "find_critical_rays",
    "from_vertices",
    "futaki",
    "load_polytope_json",
    "match_families",
    "quartic_alpha",
    "scan_csv_text",
    "stability_verdict",
    "total_scalar",
    "unimodular_transform",
    "verdict_report",
    "verify_slice_principle",
    "vol",
]
