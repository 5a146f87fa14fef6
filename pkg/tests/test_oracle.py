import numpy as np
import pytest

from pdmpjump import oracle as o
from pdmpjump.basis import legendre_basis, spline5_basis
from pdmpjump.estimators import estimate_transition
from pdmpjump.exceptions import DegeneracyError
from pdmpjump.model import kernel_probabilities, simulate
from pdmpjump.tcp import tcp_model

# frozen reference values (TCP kernel, N = 10, adaptive route)
FROZEN = {
    "const5": dict(R=0.11488025208597494, nu=0.11001063763214677, lt=5.462943116060481,
                   theta=5.372822892142415, sigma2=4329.435469331843),
    "linear20x": dict(R=0.1198325604488957, nu=0.1022130828433057, lt=14.61497071977314,
                      theta=15.457233170485358, sigma2=741793.5392569322),
}


@pytest.fixture(scope="module")
def spline5():
    return spline5_basis()


@pytest.fixture(scope="module", params=["const5", "linear20x"])
def scenario(request):
    m = tcp_model(10, request.param)
    R = o.true_transition_matrix(m)
    return request.param, m, R, o.invariant_measure(R)


def test_frozen_values(scenario, spline5):
    name, m, R, nu = scenario
    ref = FROZEN[name]
    assert R[5, 3] == pytest.approx(ref["R"], rel=1e-9)
    assert nu[5] == pytest.approx(ref["nu"], rel=1e-8)
    assert o.true_lambda_tilde(m, 0.5, 0.3, 0.2) == pytest.approx(ref["lt"], rel=1e-9)
    assert o.true_theta(m, spline5, 0, 0.5, 0.3) == pytest.approx(ref["theta"], rel=1e-8)
    assert o.true_sigma2_theta(m, spline5, 0, 0.5, 0.3, nu[5]) == pytest.approx(ref["sigma2"], rel=1e-7)


def test_rows_are_distributions(scenario):
    _, m, R, nu = scenario
    assert np.allclose(R.sum(axis=1), 1, atol=1e-10)
    assert np.all(R > 0)
    assert nu @ R == pytest.approx(nu, abs=1e-12)
    for x in m.grid:
        assert o.total_probability(m, x) == pytest.approx(1.0, abs=1e-10)


def test_adaptive_against_trapezoid(scenario, spline5):
    _, m, R, _ = scenario
    for x in (0.0, 0.5, 0.9):
        i = m.grid.index(x)
        assert np.max(np.abs(o.true_transition_row(m, x, method="trapezoid") - R[i])) < 1e-6
        a = o.true_lambda_tilde_row(m, x, 0.3 * (1 - x))
        t = o.true_lambda_tilde_row(m, x, 0.3 * (1 - x), method="trapezoid")
        assert np.max(np.abs(a - t) / a) < 1e-6
        tha = o.true_theta_row(m, spline5, x)
        tht = o.true_theta_row(m, spline5, x, method="trapezoid")
        assert np.max(np.abs(tha - tht)) < 1e-3 * max(1.0, np.abs(tha).max())


def test_cumulative_matches_integrated_rate(scenario):
    _, m, _, _ = scenario
    x, y = 0.2, 0.6
    times = np.linspace(0, 0.7, 8)
    cum = o.true_cumulative_lambda_tilde(m, x, y, times)
    grid, _, lt = o.trapezoid_profile(m, x)
    col = lt[:, m.grid.index(y)]
    trap = np.concatenate([[0], np.cumsum(0.5 * np.diff(grid) * (col[1:] + col[:-1]))])
    assert np.allclose(cum, np.interp(times, grid, trap), atol=1e-6)


def test_characterization(scenario):
    _, m, _, _ = scenario
    for x in (0.0, 0.4, 0.9):
        assert o.characterization_check(m, x) <= 1e-6


def test_transition_matrix_against_simulation():
    m = tcp_model(10)
    R = o.true_transition_matrix(m)
    traj = simulate(m, 0.0, 100_000, seed=17)
    t = estimate_transition(traj, m.grid)
    se = np.sqrt(R * (1 - R) / t.visits[:, None])
    assert np.mean(np.abs(t.R_hat - R) < 3 * se) > 0.97


@pytest.mark.parametrize("scenario_name", ["const5", "linear20x"])
def test_fixed_kernel_modified_rate_is_rate_along_flow(scenario_name):
    m = tcp_model(10, scenario_name, kernel="fixed")
    for x in (0.1, 0.5):
        for t in np.linspace(0, 0.9 * (1 - x), 5):
            lt = o.true_lambda_tilde_row(m, x, t)
            assert np.allclose(lt, m.rate(x + t), rtol=0, atol=1e-8)


def test_fixed_kernel_transition_is_kernel():
    m = tcp_model(10, kernel="fixed")
    assert np.allclose(o.true_transition_row(m, 0.3), kernel_probabilities(m, 0.0), atol=1e-10)


@pytest.mark.parametrize("basis", [spline5_basis(), legendre_basis(4)], ids=["spline5", "legendre4"])
def test_projection_recovers_rate_when_spanned(basis):
    # fixed kernel, linear rate: lambda_tilde(t|x, y) = 20 (x + t) lies in the span
    m = tcp_model(10, "linear20x", kernel="fixed")
    for x in (0.0, 0.3, 0.7):
        assert o.projected_rate(m, basis, x) == pytest.approx(20 * x, abs=1e-6)


def test_projected_rate_tcp_kernel(spline5):
    m = tcp_model(10)
    for x in (0.0, 0.5, 0.9):
        assert o.projected_rate(m, spline5, x) == pytest.approx(5.0, abs=0.01)


def test_sigma2_R():
    R = np.array([[0.25, 0.75], [0.5, 0.5]])
    nu = o.invariant_measure(R)
    assert np.allclose(nu, [0.4, 0.6])
    assert np.allclose(o.sigma2_R(R, nu), R * (1 - R) / nu[:, None])


def test_guards():
    m = tcp_model(10)
    with pytest.raises(ValueError):
        o.true_lambda_tilde(m, 0.5, 0.3, 0.5)
    with pytest.raises(ValueError):
        o.true_lambda_tilde(m, 0.5, 0.3, 0.1, method="simpson")
    with pytest.raises(ValueError):
        o.OracleConfig(nodes_per_unit=8)


def test_vanishing_at_risk_mass_is_reported():
    # with a fixed kernel the at-risk mass of y is Q(y) G(t); at huge rate it underflows
    from pdmpjump.model import PdmpModel
    base = tcp_model(4, kernel="fixed")
    m = PdmpModel(base.grid, base.flow, lambda x: 200.0, base.kernel, base.exit_time,
                  cumulative_rate=lambda x, t: 200.0 * t)
    with pytest.raises(DegeneracyError):
        o.true_cumulative_lambda_tilde(m, 0.0, 0.25, [0.9])
