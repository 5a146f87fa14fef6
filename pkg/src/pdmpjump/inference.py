"""Nullity test for the basis coefficients theta_p(x, y).

Under theta_p(x, y) = 0 the statistic n theta_hat^2 / sigma_hat^2 is
asymptotically chi-squared with one degree of freedom; the null is rejected
when it exceeds the (1 - alpha) quantile.  Quantiles are computed here,
without statistical tables.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import DegenerateVarianceError, ToleranceError

# rational approximation of the standard normal quantile (P. J. Acklam)
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if p > 1.0 - _P_LOW:
        return -_acklam(1.0 - p)
    q = p - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def normal_quantile(p: float) -> float:
    """Standard normal quantile: rational approximation plus one Halley step."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if p > 0.5:
        # 1 - p is exact here; refining in the lower tail keeps relative accuracy
        return -normal_quantile(1.0 - p)
    z = _acklam(p)
    err = normal_cdf(z) - p
    u = err * math.sqrt(2.0 * math.pi) * math.exp(0.5 * z * z)
    return z - u / (1.0 + 0.5 * z * u)


def regularized_gamma_p(a: float, x: float) -> float:
    """Lower regularized incomplete gamma P(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0:
        return 0.0
    log_pre = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1.0:
        term = total = 1.0 / a
        ap = a
        for _ in range(10_000):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * 1e-17:
                return total * math.exp(log_pre)
        raise ToleranceError("incomplete gamma series did not converge")
    # modified Lentz continued fraction for Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return 1.0 - math.exp(log_pre) * h
    raise ToleranceError("incomplete gamma continued fraction did not converge")


def chi2_cdf(q: float, df: float = 1.0) -> float:
    return regularized_gamma_p(0.5 * df, 0.5 * q)


def chi2_quantile(prob: float, df: float = 1.0, rtol: float = 1e-12) -> float:
    """Inverse chi-squared CDF by safeguarded Newton on the regularized gamma."""
    if not 0.0 < prob < 1.0:
        raise ValueError("prob must lie in (0, 1)")
    a = 0.5 * df
    # Wilson-Hilferty start
    z = normal_quantile(prob)
    h = 2.0 / (9.0 * df)
    x = max(0.5 * df * (1.0 - h + z * math.sqrt(h)) ** 3, 1e-8)
    lo, hi = 0.0, max(4.0 * x, 1.0)
    while regularized_gamma_p(a, hi) < prob:
        hi *= 2.0
    for _ in range(200):
        f = regularized_gamma_p(a, x) - prob
        if f > 0:
            hi = x
        else:
            lo = x
        dens = math.exp((a - 1.0) * math.log(x) - x - math.lgamma(a))
        nxt = x - f / dens if dens > 0 else 0.5 * (lo + hi)
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= rtol * nxt:
            return 2.0 * nxt
        x = nxt
    raise ToleranceError("chi-squared quantile did not converge")


@dataclass(frozen=True)
class TestResult:
    statistic: float
    alpha: float
    quantile: float
    reject: bool
    x: Optional[float] = None
    y: Optional[float] = None
    p: Optional[int] = None

    __test__ = False  # not a pytest class


def test_statistic(theta_hat: float, sigma2_hat: float, n: int) -> float:
    """n theta_hat^2 / sigma2_hat."""
    if not sigma2_hat > 0:
        raise DegenerateVarianceError(f"variance estimate {sigma2_hat!r} is not positive")
    return n * theta_hat ** 2 / sigma2_hat


test_statistic.__test__ = False


def chi2_decision(statistic: float, alpha: float, x=None, y=None, p=None) -> TestResult:
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    q = chi2_quantile(1.0 - alpha, 1.0)
    return TestResult(float(statistic), alpha, q, bool(statistic > q), x, y, p)


def coefficient_tests(result, alpha: float = 0.05, ps=None, basis=None) -> list[TestResult]:
    """Run the nullity test for every (p, x, y) with a usable variance estimate.

    ``result`` is an :class:`~pdmpjump.estimators.EstimationResult`.  Pairs
    with a zero or missing variance estimate are skipped.
    """
    if basis is not None and not basis.continuously_differentiable:
        warnings.warn("the chi-squared limit requires continuously differentiable basis functions",
                      RuntimeWarning, stacklevel=2)
    P = result.theta_hat.shape[0]
    ps = range(P) if ps is None else ps
    out = []
    q = chi2_quantile(1.0 - alpha, 1.0)
    for p in ps:
        for i, x in enumerate(result.states):
            for j, y in enumerate(result.states):
                s2 = result.sigma2_theta_hat[p, i, j]
                if not (np.isfinite(s2) and s2 > 0):
                    continue
                t = test_statistic(result.theta_hat[p, i, j], s2, result.n)
                out.append(TestResult(float(t), alpha, q, bool(t > q), float(x), float(y), int(p)))
    return out
