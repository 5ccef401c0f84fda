"""Numerical isomonodromy lab.

Monodromy of Fuchsian systems by analytic continuation, the Schlesinger
isomonodromy flow, and SVD detection of the integrable-direction
distribution of parameter-to-monodromy maps, cross-validated against the
closed-form family of linear foliations on 2-dimensional complex tori.
"""

from .continuation import (
    TransportResult,
    calibrate_steps,
    transport,
    transport_fixed,
    transport_many,
)
from .detector import (
    KernelReport,
    LeafTrace,
    ParameterFamily,
    RankMap,
    class_kernel,
    complex_structure_check,
    framed_kernel,
    framed_map,
    frobenius_residual,
    jacobian,
    kernel_report,
    leaf_trace,
    nilpotent_parameter_family,
    nilpotent_reference_tau,
    rank_scan,
)
from .errors import IsofolError
from .fuchsian import (
    NILPOTENT,
    FuchsianSystem,
    connection_eval,
    nilpotent_family,
    residue_at_infinity,
)
from .monodromy import (
    KIND_AFFINE,
    KIND_LINEAR,
    MonodromyTuple,
    adjoint_orbit_matrix,
    class_distance,
    monodromy_tuple,
    product_defect,
    trace_invariants,
)
from .paths import (
    Arc,
    LoopSystem,
    Path,
    Segment,
    canonical_generators,
    default_basepoint,
    enclosing_circle,
    loops_in_order,
    pole_loop,
    winding_number,
)
from .schlesinger import PolePath, flow, isomonodromy_drift, schlesinger_rhs
from .torus import (
    TorusFoliation,
    analytic_kernel,
    first_integral_jacobian,
    first_integrals,
    torus_family,
    torus_tau,
    translation_monodromy,
)
from .torus import parameter_family as torus_parameter_family

__version__ = "0.1.0"

__all__ = [
    "Arc",
    "FuchsianSystem",
    "IsofolError",
    "KernelReport",
    "KIND_AFFINE",
    "KIND_LINEAR",
    "LeafTrace",
    "LoopSystem",
    "MonodromyTuple",
    "NILPOTENT",
    "ParameterFamily",
    "Path",
    "PolePath",
    "RankMap",
    "Segment",
    "TorusFoliation",
    "TransportResult",
    "adjoint_orbit_matrix",
    "analytic_kernel",
    "calibrate_steps",
    "canonical_generators",
    "class_distance",
    "class_kernel",
    "complex_structure_check",
    "connection_eval",
    "default_basepoint",
    "enclosing_circle",
    "first_integral_jacobian",
    "first_integrals",
    "flow",
    "framed_kernel",
    "framed_map",
    "frobenius_residual",
    "isomonodromy_drift",
    "jacobian",
    "kernel_report",
    "leaf_trace",
    "loops_in_order",
    "monodromy_tuple",
    "nilpotent_family",
    "nilpotent_parameter_family",
    "nilpotent_reference_tau",
    "pole_loop",
    "product_defect",
    "rank_scan",
    "residue_at_infinity",
    "schlesinger_rhs",
    "torus_family",
    "torus_parameter_family",
    "torus_tau",
    "trace_invariants",
    "translation_monodromy",
    "transport",
    "transport_fixed",
    "transport_many",
    "winding_number",
]
