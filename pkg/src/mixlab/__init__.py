"""mixlab: the mixing operator on two-level spaces of discrete measures.

First-level objects are finitely supported non-negative measures on R^d;
second-level objects are weighted finite collections of those.  The
package provides the mixing operator that flattens a second-level measure
into its mixture, exact and approximate transport metrics that metrize
narrow convergence at desk scale, a quantized normal parametric family
with its pushforward, and a harness that generates convergent sequences
and certifies how the mixture responds.
"""

from .errors import (
    ConvergenceError,
    InvariantError,
    MassMismatchError,
    MixlabError,
    NonexpansiveViolationError,
    SchemaError,
)
from .ground import Ball, Box, HalfSpace, TestSet, as_point, distance, testset_from_dict
from .harness import (
    Certificate,
    ConvergenceReport,
    SequenceSpec,
    StepRecord,
    continuity_certificate,
    generate_sequence,
    geometric_schedule,
    harmonic_schedule,
    portmanteau_check,
    run_convergence,
)
from .measures import BOUNDARY_TOL, MERGE_TOL, DiscreteMeasure, dirac, linear_combination
from .mixing import MetaMeasure, meta_dirac, meta_linear_combination, mix, mix_mass
from .parametric import (
    ThetaMeasure,
    ThetaPoint,
    mean_abs_quantile,
    mix_theta,
    psi_normal,
    pushforward,
    std_normal_quantiles,
)
from .transport import (
    MASS_RTOL,
    TransportPlan,
    bl_distance,
    nested_w1,
    pairwise_distances,
    w1_exact,
    w1_sinkhorn,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "MixlabError",
    "SchemaError",
    "InvariantError",
    "MassMismatchError",
    "ConvergenceError",
    "NonexpansiveViolationError",
    # ground
    "as_point",
    "distance",
    "TestSet",
    "Box",
    "Ball",
    "HalfSpace",
    "testset_from_dict",
    # measures
    "DiscreteMeasure",
    "dirac",
    "linear_combination",
    "MERGE_TOL",
    "BOUNDARY_TOL",
    # mixing
    "MetaMeasure",
    "meta_dirac",
    "mix",
    "mix_mass",
    "meta_linear_combination",
    # transport
    "TransportPlan",
    "pairwise_distances",
    "w1_exact",
    "w1_sinkhorn",
    "bl_distance",
    "nested_w1",
    "MASS_RTOL",
    # parametric
    "ThetaPoint",
    "ThetaMeasure",
    "std_normal_quantiles",
    "mean_abs_quantile",
    "psi_normal",
    "pushforward",
    "mix_theta",
    # harness
    "SequenceSpec",
    "StepRecord",
    "ConvergenceReport",
    "Certificate",
    "harmonic_schedule",
    "geometric_schedule",
    "generate_sequence",
    "portmanteau_check",
    "continuity_certificate",
    "run_convergence",
]
