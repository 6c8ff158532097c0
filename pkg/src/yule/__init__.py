"""Exact moments and coupled Monte Carlo for the nonsense correlation of
Gaussian random walks and its Wiener-process limit."""

__version__ = "0.1.0"

from .errors import (ConvergenceError, DivergenceError, DomainError,
                     NumericError, YuleError)
from .kernel import (BuildMode, KernelContext, build_kernel_matrix,
                     cached_context, dn_explicit, dn_neg, dn_neg_prime,
                     dn_oracle, eigen_spectrum)
from .mgf import AlphaBeta, MgfPoint, alpha_beta, phi_B, phi_Bn, phi_n
from .moments import (CONTINUOUS, ContinuousSpectrum, MomentRequest,
                      MomentResult, moment, negative_moment,
                      second_moment_closed_form)
from .montecarlo import (CoupledSample, SimConfig, estimate_difference_variances,
                         estimate_l1_distance, sample_coupled)
from .bounds import (BoundReport, build_bound_report, check_dn_lower_bounds,
                     compute_C4, compute_C5, compute_Cm)
from .series import (TruncatedSeries, dphi_ds12_at_zero, log_D_series,
                     series_add, series_exp, series_log, series_mul,
                     series_powneghalf)

__all__ = [
    "BuildMode", "KernelContext", "build_kernel_matrix", "cached_context",
    "dn_explicit", "dn_neg", "dn_neg_prime", "dn_oracle", "eigen_spectrum",
    "AlphaBeta", "MgfPoint", "alpha_beta", "phi_B", "phi_Bn", "phi_n",
    "CONTINUOUS", "ContinuousSpectrum", "MomentRequest", "MomentResult",
    "moment", "negative_moment", "second_moment_closed_form",
    "CoupledSample", "SimConfig", "estimate_difference_variances",
    "estimate_l1_distance", "sample_coupled",
    "BoundReport", "build_bound_report", "check_dn_lower_bounds",
    "compute_C4", "compute_C5", "compute_Cm",
    "TruncatedSeries", "dphi_ds12_at_zero", "log_D_series",
    "series_add", "series_exp", "series_log", "series_mul",
    "series_powneghalf",
    "YuleError", "DomainError", "NumericError", "ConvergenceError",
    "DivergenceError",
]
