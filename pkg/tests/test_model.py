import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from conftest import make_constant_model
from pdmpjump.exceptions import ModelError
from pdmpjump.model import (PdmpModel, StateGrid, Trajectory, check_model, cumulative_rate,
                            invert_cumulative_rate, kernel_probabilities, read_trajectory,
                            sample_interjump, sample_postjump, simulate, write_trajectory)
from pdmpjump.tcp import tcp_model
from pdmpjump.validation import check_trajectory_invariants


class TestStateGrid:
    def test_lookup_index_roundtrip(self):
        g = StateGrid((0.0, 0.25, 0.7))
        for i, x in enumerate(g):
            assert g.index(x) == i
            assert g.lookup(g.index(x)) == x

    @pytest.mark.parametrize("points", [(0.0,), (0.0, 0.0, 1.0), (0.0, float("nan"))])
    def test_rejects_bad_points(self, points):
        with pytest.raises(ValueError):
            StateGrid(points)

    def test_off_grid(self):
        g = StateGrid((0.0, 1.0))
        assert 0.5 not in g
        with pytest.raises(KeyError):
            g.index(0.5)


class TestCumulativeRate:
    def test_constant_rate(self):
        assert cumulative_rate(make_constant_model(), 0.0, 0.3) == pytest.approx(1.5, abs=1e-12)

    def test_linear_rate_quadrature_and_closed_form(self):
        closed = tcp_model(10, "linear20x")
        quad = PdmpModel(closed.grid, closed.flow, closed.rate, closed.kernel, closed.exit_time)
        # 20 * 0.1 * 0.2 + 10 * 0.04
        assert cumulative_rate(closed, 0.1, 0.2) == pytest.approx(0.8, abs=1e-14)
        assert cumulative_rate(quad, 0.1, 0.2) == pytest.approx(0.8, abs=1e-10)

    def test_zero_time(self):
        assert cumulative_rate(tcp_model(), 0.4, 0.0) == 0.0

    @pytest.mark.parametrize("t", [-0.1, 0.81])
    def test_out_of_range(self, t):
        with pytest.raises(ValueError):
            cumulative_rate(make_constant_model(t_star=0.8), 0.0, t)


class TestInterjump:
    @pytest.mark.parametrize("closed_form", [False, True])
    def test_inversion(self, closed_form):
        m = make_constant_model(c=5.0, t_star=0.8, closed_form=closed_form)
        s, hit = invert_cumulative_rate(m, 0.0, 0.5)
        assert s == pytest.approx(0.1, abs=1e-12)
        assert not hit

    def test_censored(self):
        m = make_constant_model(c=5.0, t_star=0.1)
        assert invert_cumulative_rate(m, 0.0, 3.0) == (0.1, True)

    def test_zero_rate_always_hits_boundary(self, rng):
        m = make_constant_model(c=0.0, t_star=0.4)
        for _ in range(50):
            assert sample_interjump(m, 0.0, rng) == (0.4, True)

    def test_root_solver_on_nonlinear_hazard(self):
        m = tcp_model(10, "linear20x")
        quad = PdmpModel(m.grid, m.flow, m.rate, m.kernel, m.exit_time)
        for x, e in [(0.0, 0.3), (0.3, 1.2), (0.8, 0.05)]:
            s_closed, _ = invert_cumulative_rate(m, x, e)
            s_quad, _ = invert_cumulative_rate(quad, x, e)
            assert s_quad == pytest.approx(s_closed, abs=1e-9)
            assert cumulative_rate(m, x, s_closed) == pytest.approx(e, abs=1e-12)

    def test_ks_against_exponential(self):
        # uncensored draws of a constant hazard follow the truncated exponential
        c, t_star = 5.0, 0.8
        m = make_constant_model(c=c, t_star=t_star, closed_form=True)
        rng = np.random.default_rng(7)
        draws = np.array([sample_interjump(m, 0.0, rng) for _ in range(100_000)], dtype=object)
        s = np.array([d[0] for d in draws if not d[1]], dtype=float)
        cdf = lambda t: (1 - np.exp(-c * t)) / (1 - np.exp(-c * t_star))
        assert stats.kstest(s, cdf).pvalue > 0.01


class TestPostjump:
    def test_degenerate_kernel(self, rng):
        m = make_constant_model()
        assert all(sample_postjump(m, 0.1, rng) == 0.5 for _ in range(20))

    def test_tcp_mode_at_0987(self):
        m = tcp_model(10)
        p = kernel_probabilities(m, 0.987)
        assert m.grid.points[int(np.argmax(p))] == 0.5

    def test_empirical_frequencies(self):
        m = tcp_model(10)
        rng = np.random.default_rng(3)
        phi, draws = 0.63, 100_000
        p = kernel_probabilities(m, phi)
        counts = np.zeros(10)
        for _ in range(draws):
            counts[m.grid.index(sample_postjump(m, phi, rng))] += 1
        se = np.sqrt(draws * p * (1 - p))
        assert np.all(np.abs(counts - draws * p) <= 3 * se)

    def test_unnormalisable_row(self, rng):
        m = make_constant_model()
        broken = PdmpModel(m.grid, m.flow, m.rate, lambda phi: np.zeros(2), m.exit_time)
        with pytest.raises(ModelError):
            sample_postjump(broken, 0.0, rng)


class TestSimulate:
    def test_single_record_replay(self):
        m = tcp_model(10)
        a, b = simulate(m, 0.0, 1, seed=9), simulate(m, 0.0, 1, seed=9)
        assert len(a) == 1
        assert list(a.records()) == list(b.records())
        assert np.array_equal(a.z, b.z)

    def test_degenerate_kernel_path(self):
        m = make_constant_model()
        traj = simulate(m, 0.0, 200, seed=1)
        phi = traj.z[:-1] + traj.s
        expected = np.where(np.abs(phi) > np.abs(phi - 0.5), 0.0, 0.5)
        assert np.array_equal(traj.z[1:], expected)

    def test_zero_jumps(self):
        with pytest.raises(ValueError):
            simulate(tcp_model(), 0.0, 0, seed=0)

    def test_off_grid_start(self):
        with pytest.raises(KeyError):
            simulate(tcp_model(), 0.05, 10, seed=0)

    @pytest.mark.parametrize("scenario", ["const5", "linear20x"])
    def test_record_invariants(self, scenario):
        m = tcp_model(10, scenario)
        traj = simulate(m, 0.0, 5000, seed=11)
        check_trajectory_invariants(traj, m)
        t_star = 1.0 - traj.z[:-1]
        assert np.array_equal(traj.boundary, traj.s == t_star)

    def test_conditional_mean_of_uncensored_times(self):
        # E[S | S < t_star, Z = x] for a constant hazard truncated at t_star
        m = tcp_model(10, "const5")
        traj = simulate(m, 0.0, 100_000, seed=5)
        c = 5.0
        for x in (0.0, 0.5, 0.8):
            t = 1.0 - x
            sel = (traj.z[:-1] == m.grid.points[m.grid.index(x)]) & ~traj.boundary
            s = traj.s[sel]
            mean = 1 / c - t * np.exp(-c * t) / (1 - np.exp(-c * t))
            var = 1 / c ** 2 - t ** 2 * np.exp(-c * t) / (1 - np.exp(-c * t)) ** 2
            assert abs(s.mean() - mean) < 4 * np.sqrt(var / s.size)

    def test_marked_renewal_degeneracy(self):
        # flow(t, x) = x: inter-jump times given Z = x are censored exponentials of rate lambda(x)
        grid = StateGrid((0.0, 1.0, 2.0))
        rates = {0.0: 1.0, 1.0: 2.0, 2.0: 4.0}
        m = PdmpModel(grid, lambda t, x: x, lambda x: rates[x],
                      lambda phi: np.full(3, 1.0), lambda x: 0.5)
        traj = simulate(m, 0.0, 30_000, seed=2)
        for x, lam in rates.items():
            sel = traj.z[:-1] == x
            events = np.sum(sel & ~traj.boundary)
            exposure = traj.s[sel].sum()
            est = events / exposure
            assert abs(est - lam) < 4 * np.sqrt(lam / exposure)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 0.45), st.floats(0, 0.45), st.sampled_from([k / 10 for k in range(10)]))
def test_semigroup_property(t, s, x):
    m = tcp_model(10)
    assert abs(m.flow(t + s, x) - m.flow(s, m.flow(t, x))) <= 1e-12
    assert m.flow(0.0, x) == x


def test_check_model_reports_self_mass():
    notes = check_model(tcp_model(10))
    assert notes and all("Q({x}|x)" in n for n in notes)
    assert check_model(make_constant_model()) == []


def test_check_model_rejects_broken_semigroup():
    m = tcp_model(10)
    bad = PdmpModel(m.grid, lambda t, x: x + t * t, m.rate, m.kernel, m.exit_time)
    with pytest.raises(ModelError):
        check_model(bad)


class TestTrajectoryFile:
    def test_roundtrip(self, tmp_path):
        traj = simulate(tcp_model(10, "linear20x"), 0.3, 500, seed=42)
        path = tmp_path / "traj.csv"
        write_trajectory(path, traj)
        text = path.read_text().splitlines()
        assert text[0] == "# pdmp-trajectory v1, seed=42"
        assert text[1].count(",") == 3
        back = read_trajectory(path)
        assert back.seed == 42
        assert np.array_equal(back.z, traj.z)
        assert np.array_equal(back.s, traj.s)
        assert np.array_equal(back.boundary, traj.boundary)

    def test_without_terminal_line(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("# pdmp-trajectory v1, seed=1\n0,0,0.5,0\n1,0.5,0.25,1\n")
        traj = read_trajectory(path)
        assert len(traj) == 2 and traj.n_transitions == 1

    def test_bad_header(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("0,0,0.5,0\n")
        with pytest.raises(ValueError):
            read_trajectory(path)

    def test_trajectory_shape_validation(self):
        with pytest.raises(ValueError):
            Trajectory(z=np.zeros(5), s=np.ones(2), boundary=np.zeros(2, bool))
