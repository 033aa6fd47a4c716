"""Decreasing-density maximum likelihood on a bounded support, the KL
projection of an arbitrary density onto the decreasing class, and
samplers for the limit laws of plug-in functionals when the true
density need not be decreasing.
"""

from ._kernel import BACKEND
from .density import (
    FlatBlock,
    KlProjection,
    PiecewisePolyDensity,
    RegionBlock,
    RegionDecomposition,
    decompose_regions,
    functional_mean,
    gbar,
    kl_projection,
    preset_density,
)
from .exceptions import (
    DomainError,
    GrenlimError,
    InvalidInputError,
    NotApplicableError,
    NumericError,
)
from .experiments import (
    EntropyTarget,
    LinearTarget,
    PointwiseTarget,
    ReplicationReport,
    get_target,
    ks_two_sample,
    qq_pairs,
    run_finite_sample,
    run_limit,
    run_replication,
    tail_bound_audit,
)
from .grenander import GrenanderFit, fit
from .integrands import Integrand, get_integrand
from .lcm import (
    ConcaveMajorant,
    KnotSequence,
    StepFunction,
    gren,
    lcm_of_knots,
    restricted_lcm,
    switching_argmax,
)
from .limits import (
    BridgePath,
    gren_of_bridge,
    sample_bridge,
    sample_entropy_limit,
    sample_linear_limit,
    sample_pointwise_limit,
    sample_pointwise_limit_decomposed,
    sample_timechanged_bridge,
    sigma2_entropy,
    sigma2_linear,
    sigma2_pointwise,
)
from .rng import as_generator, stream

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "__version__",
    "GrenlimError",
    "InvalidInputError",
    "DomainError",
    "NotApplicableError",
    "NumericError",
    "KnotSequence",
    "StepFunction",
    "ConcaveMajorant",
    "lcm_of_knots",
    "restricted_lcm",
    "gren",
    "switching_argmax",
    "PiecewisePolyDensity",
    "preset_density",
    "KlProjection",
    "kl_projection",
    "FlatBlock",
    "RegionBlock",
    "RegionDecomposition",
    "decompose_regions",
    "functional_mean",
    "gbar",
    "Integrand",
    "get_integrand",
    "GrenanderFit",
    "fit",
    "BridgePath",
    "sample_bridge",
    "sample_timechanged_bridge",
    "gren_of_bridge",
    "sigma2_pointwise",
    "sample_pointwise_limit",
    "sample_pointwise_limit_decomposed",
    "sigma2_linear",
    "sample_linear_limit",
    "sigma2_entropy",
    "sample_entropy_limit",
    "PointwiseTarget",
    "LinearTarget",
    "EntropyTarget",
    "get_target",
    "run_finite_sample",
    "run_limit",
    "run_replication",
    "ReplicationReport",
    "ks_two_sample",
    "qq_pairs",
    "tail_bound_audit",
    "stream",
    "as_generator",
]
