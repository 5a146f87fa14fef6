import numpy as np
import pytest

from pdmpjump.model import PdmpModel, StateGrid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_constant_model(c=5.0, t_star=0.8, closed_form=False, points=(0.0, 0.5)):
    """Two-state model with constant rate ``c`` and a swapping kernel."""
    grid = StateGrid(points)

    def swap(phi):
        # everything goes to the state farther from phi
        d = np.abs(grid.as_array() - phi)
        w = np.zeros(len(grid))
        w[int(np.argmax(d))] = 1.0
        return w

    return PdmpModel(
        grid=grid,
        flow=lambda t, x: x + t,
        rate=lambda x: c,
        kernel=swap,
        exit_time=lambda x: t_star,
        cumulative_rate=(lambda x, t: c * t) if closed_form else None,
        inverse_cumulative_rate=(lambda x, e: e / c) if closed_form else None,
    )


@pytest.fixture
def constant_model():
    return make_constant_model()
