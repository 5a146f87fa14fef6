"""Simulation and nonparametric jump-rate estimation for PDMPs with discrete transitions."""
from .basis import (OrthonormalBasis, RawBasis, fourier_basis, gamma_n, legendre_basis, make_basis,
                    orthonormalize, spline5_basis, spline_raw_basis)
from .estimator import JumpRateEstimator
from .estimators import (CountingData, EstimationResult, StepFunction, assemble_jump_rate, build_counting,
                         estimate, estimate_theta, estimate_theta_variance, estimate_transition, nelson_aalen,
                         survival_fh)
from .inference import TestResult, chi2_decision, chi2_quantile, test_statistic
from .model import (PdmpModel, StateGrid, Trajectory, cumulative_rate, read_trajectory, sample_interjump,
                    sample_postjump, simulate, write_trajectory)
from .tcp import tcp_model

__version__ = "0.1.0"
