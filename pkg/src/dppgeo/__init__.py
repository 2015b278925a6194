"""Information geometry of determinantal point processes on a finite ground set.

The library covers the kernel layer (validation, K/L conversion, exact
sampling), the embedding of the model into the log-linear family over
the subset lattice, Fisher information and e-embedding curvature in the
curved coordinates, the expectation/mixed parameterizations with their
Legendre and KL identities, and natural-gradient maximum likelihood.
"""

from .duality import (
    EtaPoint,
    MixedPoint,
    eta_from_k,
    grad_psi_u1,
    kl_direct,
    kl_legendre,
    laplace_check_k11,
    legendre_psi_star,
    mixed_from_u,
    psi_grad_u2_fd,
    u_from_mixed,
)
from .embedding import (
    ThetaPoint,
    k_closed_m2,
    loglinear_pmf,
    loglinear_table,
    phi,
    psi,
    psi_m2,
    psi_m3,
    theta123_m3,
    theta_from_u,
)
from .errors import (
    CapacityError,
    ConvergenceError,
    DegeneratePointError,
    DomainError,
    DppGeoError,
    PreconditionError,
    ShapeError,
)
from .estimation import Dataset, FitResult, fit_mle, log_likelihood, score_u
from .geometry import (
    CrossBlockReport,
    CurvatureTensor,
    FisherTheta,
    JacobianB,
    ancillary_basis,
    e_connection,
    e_curvature,
    fisher_theta,
    fisher_theta_dpp,
    fisher_u,
    fisher_u_cross_claimed,
    jacobian_B,
    m_connection,
)
from .kernel import (
    LKernel,
    MarginalKernel,
    ScalingDecomposition,
    UPoint,
    diagonal_scaling,
    inclusion_prob,
    k_from_u,
    k_to_l,
    l_from_u,
    l_to_k,
    pmf,
    pmf_table,
    sample,
    u_from_l,
    validate_k,
    validate_l,
)
from .lattice import (
    SubsetId,
    SubsetIndex,
    enumerate_powerset,
    enumerate_sk,
    proper_subsets_of_size,
    subset_index,
    sufficient_stat,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "ConvergenceError",
    "CrossBlockReport",
    "CurvatureTensor",
    "Dataset",
    "DegeneratePointError",
    "DomainError",
    "DppGeoError",
    "EtaPoint",
    "FisherTheta",
    "FitResult",
    "JacobianB",
    "LKernel",
    "MarginalKernel",
    "MixedPoint",
    "PreconditionError",
    "ScalingDecomposition",
    "ShapeError",
    "SubsetId",
    "SubsetIndex",
    "ThetaPoint",
    "UPoint",
    "ancillary_basis",
    "diagonal_scaling",
    "e_connection",
    "e_curvature",
    "enumerate_powerset",
    "enumerate_sk",
    "eta_from_k",
    "fisher_theta",
    "fisher_theta_dpp",
    "fisher_u",
    "fisher_u_cross_claimed",
    "fit_mle",
    "grad_psi_u1",
    "inclusion_prob",
    "jacobian_B",
    "k_closed_m2",
    "k_from_u",
    "k_to_l",
    "kl_direct",
    "kl_legendre",
    "l_from_u",
    "l_to_k",
    "laplace_check_k11",
    "legendre_psi_star",
    "log_likelihood",
    "loglinear_pmf",
    "loglinear_table",
    "m_connection",
    "mixed_from_u",
    "phi",
    "pmf",
    "pmf_table",
    "proper_subsets_of_size",
    "psi",
    "psi_grad_u2_fd",
    "psi_m2",
    "psi_m3",
    "sample",
    "score_u",
    "subset_index",
    "sufficient_stat",
    "theta123_m3",
    "theta_from_u",
    "u_from_l",
    "u_from_mixed",
    "validate_k",
    "validate_l",
]
