"""Two-sided bounds on the bottom of the spectrum of one-dimensional diffusion operators."""

from .bounds import SpectralInterval, compact_resolvent, essential_bounds, schrodinger_potential, spectrum_bounds
from .coefficients import (
    Asymptotic,
    Constant,
    Domain,
    Function,
    PowerLaw,
    Problem,
    Reflected,
    Scaled,
    Sided,
    Sum,
    Tabulated,
    from_dict,
    power_family,
)
from .errors import (
    CaseError,
    ConditioningError,
    DiffspecError,
    DomainError,
    EvaluationError,
    InconclusiveError,
    KinkError,
    MetadataRequiredError,
    NumericalError,
)
from .integrate import QuadConfig
from .omega import (
    OmegaResult,
    classify_halfline,
    classify_line,
    h_transform_drift,
    omega_hat_line,
    omega_hat_plus,
    omega_line,
    omega_plus,
    omega_plus_l,
)
from .oracle import MCConfig, fixed_point, mc_exponential_moment, principal_eigenvalue

__version__ = "0.1.0"

__all__ = [
    "Asymptotic",
    "CaseError",
    "ConditioningError",
    "Constant",
    "DiffspecError",
    "Domain",
    "DomainError",
    "EvaluationError",
    "Function",
    "InconclusiveError",
    "KinkError",
    "MCConfig",
    "MetadataRequiredError",
    "NumericalError",
    "OmegaResult",
    "PowerLaw",
    "Problem",
    "QuadConfig",
    "Reflected",
    "Scaled",
    "Sided",
    "SpectralInterval",
    "Sum",
    "Tabulated",
    "classify_halfline",
    "classify_line",
    "compact_resolvent",
    "essential_bounds",
    "fixed_point",
    "from_dict",
    "h_transform_drift",
    "mc_exponential_moment",
    "omega_hat_line",
    "omega_hat_plus",
    "omega_line",
    "omega_plus",
    "omega_plus_l",
    "power_family",
    "principal_eigenvalue",
    "schrodinger_potential",
    "spectrum_bounds",
]
