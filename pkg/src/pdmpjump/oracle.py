"""Ground-truth quantities computed by quadrature from the model itself.

Nothing here touches the estimators.  Two numerical routes are provided for
the pair quantities: ``method='adaptive'`` (QUADPACK-style Gauss-Kronrod
via :func:`scipy.integrate.quad_vec`, splitting at the kernel kinks; basis
coefficients use a graded composite Gauss-Legendre rule instead) and
``method='trapezoid'`` (fixed trapezoid rule on ``trapezoid_points``
nodes).  Tests compare the two.

The workhorse is the at-risk mass

    D(t | x, y) = int_t^{t_star} f(s|x) Q(y | flow(s, x)) ds
                  + G(t_star|x) Q(y | flow(t_star, x)),

which equals P(S_1 >= t, Z_1 = y | Z_0 = x).  The modified rate is
``f Q / D``, its cumulative version is ``log(D(0) / D(t))`` and
``D(0 | x, y) = R(y | x)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad_vec

from .basis import OrthonormalBasis
from .exceptions import DegeneracyError, ToleranceError
from .model import PdmpModel, cumulative_rate

DENOMINATOR_FLOOR = 1e-14


@dataclass(frozen=True)
class OracleConfig:
    nodes_per_unit: int = 512
    atol: float = 1e-9
    rtol: float = 1e-10
    trapezoid_points: int = 100_000

    def __post_init__(self):
        if self.nodes_per_unit < 64:
            raise ValueError("nodes_per_unit must be >= 64")


DEFAULT = OracleConfig()


def _probs(model: PdmpModel, phi: float) -> np.ndarray:
    w = np.asarray(model.kernel(phi), dtype=float)
    return w / w.sum()


def _check_t(model: PdmpModel, x: float, t: float) -> float:
    t_star = model.exit_time(x)
    if not 0.0 <= t < t_star:
        raise ValueError(f"t={t!r} outside [0, t_star(x)={t_star!r})")
    return t_star


def true_survival(model: PdmpModel, x: float, t: float) -> float:
    """G(t|x) = exp(-int_0^t rate(flow(s, x)) ds)."""
    return math.exp(-cumulative_rate(model, x, t))


def true_density_f(model: PdmpModel, x: float, t: float) -> float:
    """Density of the inter-jump time on [0, t_star(x))."""
    _check_t(model, x, t)
    return model.rate(model.flow(t, x)) * true_survival(model, x, t)


def _g(model: PdmpModel, x: float, t: float) -> np.ndarray:
    # f(t|x) Q(.|flow(t, x)) over the grid
    return model.rate(model.flow(t, x)) * math.exp(-cumulative_rate(model, x, t)) * _probs(model, model.flow(t, x))


def _tail(model: PdmpModel, x: float) -> np.ndarray:
    t_star = model.exit_time(x)
    return true_survival(model, x, t_star) * _probs(model, model.flow(t_star, x))


def _kinks(model: PdmpModel, x: float, a: float, b: float) -> list[float]:
    if model.kink_times is None:
        return []
    return [t for t in model.kink_times(x) if a < t < b]


def _integrate(func, a: float, b: float, points, cfg: OracleConfig, what: str) -> np.ndarray:
    if b <= a:
        return 0.0 * np.asarray(func(a))
    val, err, info = quad_vec(func, a, b, epsabs=cfg.atol * 1e-6, epsrel=cfg.rtol, norm="max",
                              points=points or None, full_output=True, limit=20000)
    if not info.success:
        raise ToleranceError(f"{what}: quadrature did not converge (error estimate {err:.3g})")
    return np.asarray(val)


def _denominator_row(model: PdmpModel, x: float, t: float, cfg: OracleConfig) -> np.ndarray:
    t_star = model.exit_time(x)
    inner = _integrate(lambda s: _g(model, x, s), t, t_star, _kinks(model, x, t, t_star), cfg,
                       f"D(t={t}|x={x})")
    return inner + _tail(model, x)


def trapezoid_profile(model: PdmpModel, x: float, cfg: OracleConfig = DEFAULT):
    """Fixed-grid tabulation ``(t, D, lambda_tilde)`` over [0, t_star(x)].

    ``D`` and ``lambda_tilde`` have one column per grid state.  Where ``D``
    vanishes the modified rate is set to 0.
    """
    t_star = model.exit_time(x)
    t = np.linspace(0.0, t_star, cfg.trapezoid_points)
    g = np.array([_g(model, x, ti) for ti in t])
    seg = 0.5 * np.diff(t)[:, None] * (g[1:] + g[:-1])
    rest = np.concatenate([np.cumsum(seg[::-1], axis=0)[::-1], np.zeros((1, g.shape[1]))])
    D = rest + _tail(model, x)
    with np.errstate(divide="ignore", invalid="ignore"):
        lt = np.where(D > DENOMINATOR_FLOOR, g / D, 0.0)
    return t, D, lt


def _row_index(model: PdmpModel, y: float) -> int:
    return model.grid.index(y)


def true_lambda_tilde_row(model: PdmpModel, x: float, t: float, cfg: OracleConfig = DEFAULT,
                          method: str = "adaptive") -> np.ndarray:
    """Modified rate lambda_tilde(t | x, y) for every y."""
    t_star = _check_t(model, x, t)
    num = _g(model, x, t)
    if method == "adaptive":
        den = _denominator_row(model, x, t, cfg)
    elif method == "trapezoid":
        grid = np.linspace(t, t_star, cfg.trapezoid_points)
        g = np.array([_g(model, x, ti) for ti in grid])
        den = 0.5 * np.sum(np.diff(grid)[:, None] * (g[1:] + g[:-1]), axis=0) + _tail(model, x)
    else:
        raise ValueError(f"unknown method {method!r}")
    out = np.zeros_like(num)
    pos = num > 0
    if np.any(den[pos] < DENOMINATOR_FLOOR):
        raise DegeneracyError(f"at-risk mass below {DENOMINATOR_FLOOR} at t={t}, x={x}")
    out[pos] = num[pos] / den[pos]
    return out


def true_lambda_tilde(model: PdmpModel, x: float, y: float, t: float, cfg: OracleConfig = DEFAULT,
                      method: str = "adaptive") -> float:
    return float(true_lambda_tilde_row(model, x, t, cfg, method)[_row_index(model, y)])


@dataclass(frozen=True)
class Profile:
    """Graded Gauss-Legendre tabulation along the flow from one state.

    ``t``/``weights`` form a quadrature rule on [0, t_star]; ``g`` is
    f(t) Q(.|flow(t)) and ``D`` the at-risk mass at those nodes, one column
    per grid state.  ``D_extra`` holds D at the requested extra times.
    """

    t: np.ndarray
    weights: np.ndarray
    g: np.ndarray
    D: np.ndarray
    D_extra: np.ndarray


_PANEL_ORDER = 16
_GAP_ORDER = 8
_GRADING_LEVELS = 30


def _profile_edges(model: PdmpModel, x: float, cfg: OracleConfig, breakpoints=()) -> np.ndarray:
    t_star = model.exit_time(x)
    panels = max(1, math.ceil(t_star * cfg.nodes_per_unit / _PANEL_ORDER))
    h = t_star / panels
    edges = set(np.linspace(0.0, t_star, panels + 1))
    graded = [2.0 ** -j * h for j in range(_GRADING_LEVELS + 1)]
    anchors = _kinks(model, x, 0.0, t_star)
    edges.update(anchors)
    for k in anchors:
        edges.update(k + d for d in graded)
        edges.update(k - d for d in graded)
    edges.update(t_star - d for d in graded)
    edges.update(float(b) for b in breakpoints)
    e = np.array(sorted(edges))
    return e[(e >= 0.0) & (e <= t_star)]


def gauss_profile(model: PdmpModel, x: float, cfg: OracleConfig = DEFAULT, extra_times=(),
                  breakpoints=()) -> Profile:
    """Tabulate along the flow; ``breakpoints`` are extra panel edges in time units."""
    t_star = model.exit_time(x)
    edges = _profile_edges(model, x, cfg, breakpoints)
    ref_x, ref_w = np.polynomial.legendre.leggauss(_PANEL_ORDER)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    t = (mid[:, None] + half[:, None] * ref_x).ravel()
    w = (half[:, None] * ref_w).ravel()
    extra = np.asarray(extra_times, dtype=float).ravel()
    if np.any(extra < 0) or np.any(extra > t_star):
        raise ValueError("extra times must lie in [0, t_star(x)]")
    pts = np.unique(np.concatenate([edges, t, extra]))
    gx, gw = np.polynomial.legendre.leggauss(_GAP_ORDER)
    gh = 0.5 * np.diff(pts)
    gm = 0.5 * (pts[1:] + pts[:-1])
    nodes = (gm[:, None] + gh[:, None] * gx).ravel()
    vals = np.array([_g(model, x, s) for s in nodes]).reshape(pts.size - 1, _GAP_ORDER, -1)
    seg = np.einsum("gok,o,g->gk", vals, gw, gh)
    rest = np.concatenate([np.cumsum(seg[::-1], axis=0)[::-1], np.zeros((1, seg.shape[1]))])
    D_pts = rest + _tail(model, x)
    g = np.array([_g(model, x, s) for s in t])
    return Profile(t, w, g, D_pts[np.searchsorted(pts, t)], D_pts[np.searchsorted(pts, extra)])


def at_risk_table(model: PdmpModel, x: float, times, cfg: OracleConfig = DEFAULT) -> np.ndarray:
    """D(t | x, y) at the requested ``times`` (rows) for every y (columns)."""
    return gauss_profile(model, x, cfg, times).D_extra


def true_cumulative_lambda_tilde(model: PdmpModel, x: float, y: float, times,
                                 cfg: OracleConfig = DEFAULT) -> np.ndarray:
    """Lambda_tilde(t | x, y) = log(D(0) / D(t)) at each of ``times``."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    j = _row_index(model, y)
    D = at_risk_table(model, x, np.concatenate([[0.0], times]), cfg)[:, j]
    if np.any(D <= DENOMINATOR_FLOOR):
        raise DegeneracyError("at-risk mass vanishes inside the requested range")
    return np.log(D[0] / D[1:])


def true_transition_row(model: PdmpModel, x: float, cfg: OracleConfig = DEFAULT,
                        method: str = "adaptive") -> np.ndarray:
    """R(. | x): law of the next post-jump location."""
    if method == "adaptive":
        return _denominator_row(model, x, 0.0, cfg)
    if method == "trapezoid":
        return trapezoid_profile(model, x, cfg)[1][0]
    raise ValueError(f"unknown method {method!r}")


def true_transition(model: PdmpModel, x: float, y: float, cfg: OracleConfig = DEFAULT,
                    method: str = "adaptive") -> float:
    return float(true_transition_row(model, x, cfg, method)[_row_index(model, y)])


def true_transition_matrix(model: PdmpModel, cfg: OracleConfig = DEFAULT,
                           method: str = "adaptive") -> np.ndarray:
    return np.vstack([true_transition_row(model, x, cfg, method) for x in model.grid])


def invariant_measure(R: np.ndarray) -> np.ndarray:
    """Stationary law of a row-stochastic matrix (left Perron eigenvector)."""
    vals, vecs = np.linalg.eig(np.asarray(R, dtype=float).T)
    v = np.real(vecs[:, np.argmin(np.abs(vals - 1.0))])
    return v / v.sum()


def sigma2_R(R: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """Asymptotic variance of sqrt(n) (R_hat - R): R (1 - R) / nu."""
    return R * (1.0 - R) / np.asarray(nu)[:, None]


def total_probability(model: PdmpModel, x: float, cfg: OracleConfig = DEFAULT) -> float:
    """int_0^{t_star} f(t|x) dt + G(t_star|x); should be one."""
    t_star = model.exit_time(x)
    dens = _integrate(lambda t: np.array([true_density_f(model, x, t)]), 0.0, t_star,
                      _kinks(model, x, 0.0, t_star), cfg, "total probability")
    return float(dens[0]) + true_survival(model, x, t_star)


def true_theta_row(model: PdmpModel, basis: OrthonormalBasis, x: float, cfg: OracleConfig = DEFAULT,
                   method: str = "adaptive") -> np.ndarray:
    """theta_p(x, y) = int_0^1 lambda_tilde(t_star u | x, y) B_p(u) du, shape (P, #E).

    The default route integrates on the graded Gauss-Legendre profile, whose
    open panels never touch the right end where the modified rate may blow up.
    """
    t_star = model.exit_time(x)
    if method == "adaptive":
        prof = gauss_profile(model, x, cfg, breakpoints=np.asarray(basis.breakpoints) * t_star)
        with np.errstate(divide="ignore", invalid="ignore"):
            lt = np.where(prof.g > 0, prof.g / prof.D, 0.0)
        if not np.all(np.isfinite(lt)):
            raise ToleranceError(f"modified rate is not integrable on the profile at x={x}")
        return (basis(prof.t / t_star) * (prof.weights / t_star)) @ lt
    if method == "trapezoid":
        t, _, lt = trapezoid_profile(model, x, cfg)
        u = t / t_star
        vals = basis(u)[:, :, None] * lt[None, :, :]
        return 0.5 * np.sum(np.diff(u)[None, :, None] * (vals[:, 1:] + vals[:, :-1]), axis=1)
    raise ValueError(f"unknown method {method!r}")


def true_theta(model: PdmpModel, basis: OrthonormalBasis, p: int, x: float, y: float,
               cfg: OracleConfig = DEFAULT, method: str = "adaptive") -> float:
    return float(true_theta_row(model, basis, x, cfg, method)[p, _row_index(model, y)])


def true_sigma2_theta_row(model: PdmpModel, basis: OrthonormalBasis, x: float, nu_x: float,
                          cfg: OracleConfig = DEFAULT) -> np.ndarray:
    """Asymptotic variance of sqrt(n) theta_hat_p(x, y), shape (P, #E).

    Uses lambda_tilde / G_tilde = R f Q / D^2, so that
    sigma^2 = (1 / (nu t_star)) int_0^1 B_p(s)^2 f Q / D^2 (t_star s) ds.
    """
    t_star = model.exit_time(x)
    prof = gauss_profile(model, x, cfg, breakpoints=np.asarray(basis.breakpoints) * t_star)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(prof.g > 0, prof.g / prof.D ** 2, 0.0)
    b = basis(prof.t / t_star)
    # du = dt / t_star
    return (b * b * (prof.weights / t_star)) @ ratio / (nu_x * t_star)


def true_sigma2_theta(model: PdmpModel, basis: OrthonormalBasis, p: int, x: float, y: float,
                      nu_x: float, cfg: OracleConfig = DEFAULT) -> float:
    return float(true_sigma2_theta_row(model, basis, x, nu_x, cfg)[p, _row_index(model, y)])


def characterization_check(model: PdmpModel, x: float, cfg: OracleConfig = DEFAULT) -> float:
    """|rate(x) - sum_y lambda_tilde(0|x, y) R(y|x)|, all by quadrature."""
    R = true_transition_row(model, x, cfg)
    lt0 = true_lambda_tilde_row(model, x, 0.0, cfg)
    return abs(model.rate(x) - float(lt0 @ R))


def projected_rate(model: PdmpModel, basis: OrthonormalBasis, x: float, tau: Optional[int] = None,
                   cfg: OracleConfig = DEFAULT, method: str = "adaptive") -> float:
    """sum_{p <= tau} B_p(0) sum_y R(y|x) theta_p(x, y) with oracle R and theta."""
    tau = basis.size - 1 if tau is None else tau
    theta = true_theta_row(model, basis, x, cfg, method)[: tau + 1]
    R = true_transition_row(model, x, cfg)
    return float(basis.values_at_zero[: tau + 1] @ (theta @ R))
