"""Numerical tests for linear rigidity of stationary random measures and sequences."""
from .builtins import BUILTIN_DENSITIES, builtin_density
from .discrete_predictor import (TargetFunctional, WindowSpec, best_linear_predictor,
                                 k_rigid_discrete_test, kolmogorov_interpolation_variance,
                                 lmr_test_1d, prediction_curve, rigidity_from_curve)
from .dpp_rigidity import (BUILTIN_KERNELS, DppKernel, dpp_rigidity_order,
                           structure_factor_from_kernel)
from .errors import RigidityError
from .gaussian_sampler import SimulationSpec, empirical_prediction_check, sample_gaussian
from .pole_analysis import (MultiIndex, classify_simple, finite_pole_order, gram_pole_test,
                            radial_pole_test, rigidity_classifier)
from .spectral_core import (CovarianceSequence, DensityFlags, Domain, SpectralDensity,
                            ZeroAnnotation, covariance_from_density, density_from_covariance,
                            validate_temperedness)

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_DENSITIES",
    "BUILTIN_KERNELS",
    "CovarianceSequence",
    "DensityFlags",
    "Domain",
    "DppKernel",
    "MultiIndex",
    "RigidityError",
    "SimulationSpec",
    "SpectralDensity",
    "TargetFunctional",
    "WindowSpec",
    "ZeroAnnotation",
    "best_linear_predictor",
    "builtin_density",
    "classify_simple",
    "covariance_from_density",
    "density_from_covariance",
    "dpp_rigidity_order",
    "empirical_prediction_check",
    "finite_pole_order",
    "gram_pole_test",
    "k_rigid_discrete_test",
    "kolmogorov_interpolation_variance",
    "lmr_test_1d",
    "prediction_curve",
    "radial_pole_test",
    "rigidity_classifier",
    "rigidity_from_curve",
    "sample_gaussian",
    "structure_factor_from_kernel",
    "validate_temperedness",
]
