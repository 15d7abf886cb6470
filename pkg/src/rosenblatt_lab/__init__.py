"""Numerical laboratory for the Rosenblatt process and its Ornstein-Uhlenbeck relatives."""

__version__ = "0.1.0"

from .errors import AccuracyError, DomainError, RosenblattLabError
from .kernels import (
    ExpIndicatorAtom,
    HurstIndex,
    KernelSpec,
    hh_inner,
    rosenblatt_kernel_L,
    scaling_constant,
    wiener_rosenblatt_kernel_J,
)
from .cumulants import (
    CumulantVector,
    chi2_limit_cumulants,
    cumulant_wr_quadrature,
    cumulant_wr_trace,
    gaussian_limit_variance,
    integral_I,
    quadrature_cumulants,
    trace_cumulants,
)
from .simulation import (
    PathEnsemble,
    RngSeed,
    simulate_gaussian_ou,
    simulate_rosenblatt_paths,
    simulate_rou,
    simulate_stationary_rou,
    simulate_wr_integral,
)
from .power_counting import ExponentAssignment, FunctionalSet, check_integrability, critical_exponent_scan
from .limits import (
    DistributionTarget,
    covariance_check,
    cumulant_sweep,
    fdd_check_rou,
    identity_approximation_check,
    increment_bound_check,
    ks_test,
)
