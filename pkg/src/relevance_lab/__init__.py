"""Eigenrelevance observables: which features of a state survive coarse-graining.

Numerical tools for the Kubo-Mori information metric, coarse-graining
channels, relevance spectra of states seen through those channels, and the
closed-form Gaussian-sector results built on them.
"""

from .errors import (
    CapacityError,
    ConfigurationError,
    DimensionError,
    DivergenceError,
    DomainError,
    NoSolutionError,
    NumericalError,
    RankError,
    RelevanceLabError,
    ValidationError,
    WindowError,
)
from .kubo_mori import (
    ClassicalState,
    DensityMatrix,
    center,
    inner_product,
    log_mean,
    omega_apply,
    omega_inverse,
    relative_entropy,
    relevance,
)
from .channels import (
    GaussianChannelSpec,
    KrausChannel,
    RecoveryMap,
    StochasticChannel,
    adjoint_apply,
    apply,
    build_gaussian_convolution,
    partial_trace_channel,
    recovery_apply,
)
from .eigenrelevance import (
    RelevancePencil,
    RelevanceSpectrum,
    equivalent_first_order,
    project_relevant,
    relevance_operator,
    solve_spectrum,
)

__version__ = "0.1.0"
