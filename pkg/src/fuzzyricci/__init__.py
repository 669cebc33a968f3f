"""Matrix-geometry heat flow on the fuzzy torus.

Builds the clock/shift matrix geometry, integrates the metric flow
dc/dt = -laplacian(log c) from strictly positive initial metrics, and
audits the conservation and monotonicity laws of the flow along the way.
"""

from .flow import (
    DiagRecord,
    FlowConfig,
    FlowState,
    FlowTrace,
    StepRejected,
    entropy,
    entropy_rate_check,
    integrate,
    integrate_fixed,
    log_det_rate_check,
    rhs,
    scalar_curvature,
    step,
)
from .matcore import EigDecomp, HermiticityError, PositivityError
from .metric import (
    Metric,
    cigar,
    diag_ladder,
    flat,
    normalize_density,
    random_metric,
    read_metric,
    write_metric,
)
from .torus import (
    FuzzyTorus,
    TorusParameterError,
    TorusParams,
    build_torus,
    delta1,
    delta2,
    laplacian,
    laplacian_superop,
)

__version__ = "0.1.0"

__all__ = [
    "DiagRecord", "EigDecomp", "FlowConfig", "FlowState", "FlowTrace",
    "FuzzyTorus", "HermiticityError", "Metric", "PositivityError",
    "StepRejected", "TorusParameterError", "TorusParams", "build_torus",
    "cigar", "delta1", "delta2", "diag_ladder", "entropy",
    "entropy_rate_check", "flat", "integrate", "integrate_fixed",
    "laplacian", "laplacian_superop", "log_det_rate_check",
    "normalize_density", "random_metric", "read_metric", "rhs",
    "scalar_curvature", "step", "write_metric",
]
