"""scikit-learn style front end for the jump-rate estimator."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .basis import OrthonormalBasis, default_tau, make_basis
from .estimators import estimate
from .exceptions import UnvisitedStateError
from .inference import coefficient_tests
from .tcp import tcp_exit_time
from .validation import check_states, check_trajectory

_EXIT_TIMES = {"tcp": lambda x: float(tcp_exit_time(x))}


class JumpRateEstimator(BaseEstimator):
    """Nonparametric jump-rate estimator for PDMPs with discrete transitions.

    Parameters
    ----------
    basis : str or OrthonormalBasis, default='spline5'
        Orthonormal family of L2[0, 1]; strings go through
        :func:`~pdmpjump.basis.make_basis`.
    tau : int or None, default=None
        Largest basis index kept.  ``None`` picks
        :func:`~pdmpjump.basis.default_tau` for the fitted sample size.
    exit_time : callable or 'tcp', default='tcp'
        Deterministic exit time t_star(x).  This is the only knowledge of the
        dynamics the estimator needs.
    grid : StateGrid or None
        States to report on.  ``None`` uses the states seen in the data.
    clamp : bool, default=False
        Clip negative estimates to zero in :meth:`predict`.  The fitted
        ``lambda_hat_`` is never clipped.

    Attributes
    ----------
    result_ : EstimationResult
    states_, lambda_hat_, R_hat_, nu_hat_, theta_hat_, sigma2_theta_hat_ : ndarray
    tau_ : int
    basis_ : OrthonormalBasis
    """

    def __init__(self, basis="spline5", tau=None, exit_time="tcp", grid=None, clamp=False):
        self.basis = basis
        self.tau = tau
        self.exit_time = exit_time
        self.grid = grid
        self.clamp = clamp

    def _resolve(self):
        basis = self.basis if isinstance(self.basis, OrthonormalBasis) else make_basis(self.basis)
        if callable(self.exit_time):
            exit_time = self.exit_time
        elif self.exit_time in _EXIT_TIMES:
            exit_time = _EXIT_TIMES[self.exit_time]
        else:
            raise ValueError(f"exit_time must be callable or one of {sorted(_EXIT_TIMES)}")
        return basis, exit_time

    def fit(self, X, y=None):
        """Estimate the jump rate from one observed trajectory ``X``."""
        traj = check_trajectory(X)
        basis, exit_time = self._resolve()
        tau = default_tau(basis, traj.n_transitions) if self.tau is None else int(self.tau)
        if not 0 <= tau < basis.size:
            raise ValueError(f"tau={tau} outside [0, {basis.size - 1}] for basis {basis.name!r}")
        res = estimate(traj, basis, exit_time, tau=tau, grid=self.grid)
        self.basis_ = basis
        self.tau_ = tau
        self.result_ = res
        self.states_ = res.states
        self.lambda_hat_ = res.lambda_hat
        self.R_hat_ = res.R_hat
        self.nu_hat_ = res.nu_hat
        self.theta_hat_ = res.theta_hat
        self.sigma2_theta_hat_ = res.sigma2_theta_hat
        self.n_transitions_ = res.n
        return self

    def predict(self, X):
        """Estimated jump rate at the grid states ``X``."""
        check_is_fitted(self, "lambda_hat_")
        x = check_states(X)
        idx = np.searchsorted(self.states_, x)
        idx = np.clip(idx, 0, self.states_.size - 1)
        off = np.abs(self.states_[idx] - x) > 1e-12
        if np.any(off):
            raise ValueError(f"state {x[off][0]!r} is not on the fitted grid")
        out = self.lambda_hat_[idx]
        if np.any(np.isnan(out)):
            raise UnvisitedStateError(f"state {x[np.isnan(out)][0]!r} was never visited")
        return np.maximum(out, 0.0) if self.clamp else out

    def test_coefficients(self, alpha=0.05, ps=None):
        """Nullity tests of theta_p(x, y); see :func:`~pdmpjump.inference.coefficient_tests`."""
        check_is_fitted(self, "result_")
        return coefficient_tests(self.result_, alpha, ps, self.basis_)
