import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdmpjump.basis import (RawBasis, default_tau, fourier_basis, gamma_n, legendre_basis, make_basis,
                            orthonormalize, spline5_basis, spline_basis)
from pdmpjump.exceptions import DegeneracyError


@pytest.fixture(scope="module")
def spline5():
    return spline5_basis()


@pytest.mark.parametrize("code,size", [("spline5", 9), ("fourier:16", 33), ("legendre:16", 17),
                                       ("spline:3", 7)])
def test_orthonormal(code, size):
    b = make_basis(code)
    assert b.size == size
    assert b.orthonormality_residual() <= 1e-10


def test_constant_function_first(spline5):
    for b in (spline5, fourier_basis(4), legendre_basis(4)):
        assert np.allclose(b(np.linspace(0, 1, 7))[0], 1.0)


def test_spline5_reproduces_cubic_splines(spline5):
    # any member of the raw span lies in the orthonormal span.
    f = lambda s: 1 - 2 * s + s ** 3 + 4 * np.clip(s - 0.5, 0, None) ** 3
    g = spline5.project(f)
    s = np.linspace(0, 1, 101)
    assert np.max(np.abs(g(s) - f(s))) < 1e-10


def test_spline_is_c2(spline5):
    h = 1e-7
    for k in range(1, 6):
        t = k / 6
        left = spline5(np.array([t - 2 * h, t - h, t]))
        right = spline5(np.array([t, t + h, t + 2 * h]))
        d1l = (left[:, 2] - left[:, 1]) / h
        d1r = (right[:, 1] - right[:, 0]) / h
        assert np.max(np.abs(d1l - d1r) / (1 + np.abs(d1l))) < 1e-3


def test_legendre_values():
    b = legendre_basis(2)
    s = np.array([0.0, 0.5, 1.0])
    expected = np.array([[1, 1, 1], [-np.sqrt(3), 0, np.sqrt(3)], [np.sqrt(5), -np.sqrt(5) / 2, np.sqrt(5)]])
    assert np.allclose(b(s), expected)


def test_fourier_ordering():
    b = fourier_basis(2)
    assert b.labels == ("1", "cos1", "sin1", "cos2", "sin2")
    assert np.allclose(b(np.zeros(1))[:, 0], [1, np.sqrt(2), 0, np.sqrt(2), 0])


def test_dependent_raw_basis_rejected():
    f = (lambda s: s, lambda s: 2 * s)
    with pytest.raises(DegeneracyError):
        RawBasis(f, ("a", "b"))


def test_duplicate_knots_rejected():
    with pytest.raises((DegeneracyError, ValueError)):
        spline_basis([0.3, 0.3])


def test_unknown_basis():
    with pytest.raises(ValueError):
        make_basis("wavelet:3")


def test_default_tau(spline5):
    assert default_tau(spline5, 10 ** 6) == 8
    assert default_tau(fourier_basis(16), 10_000) == 20
    assert default_tau(fourier_basis(3), 10_000) == 6
    assert default_tau(legendre_basis(5), 1) == 5


@pytest.mark.parametrize("k", [1, 2, 5, 10])
def test_fourier_gamma_closed_form(k):
    # cos(0) = 1 for every cosine, so the kernel peaks at s = 0 with value 1 + 2k.
    assert gamma_n(fourier_basis(16), 2 * k) == pytest.approx(1 + 2 * k, rel=1e-12)


def test_legendre_gamma():
    # the shifted Legendre kernel at 0 peaks at s = 0 with value sum(2p + 1)
    assert gamma_n(legendre_basis(6), 6) == pytest.approx(49.0, rel=1e-10)


def test_gamma_grid_size_guard(spline5):
    with pytest.raises(ValueError):
        gamma_n(spline5, 8, grid_size=100)
    with pytest.raises(ValueError):
        gamma_n(spline5, 9)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.05, 0.95), min_size=1, max_size=4, unique=True)
       .filter(lambda k: min(np.diff(sorted(k)), default=1) > 0.05))
def test_random_knots_orthonormal(knots):
    b = spline_basis(sorted(knots))
    assert b.orthonormality_residual() <= 1e-10


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=9, max_size=9))
def test_projection_idempotent(coef):
    b = spline5_basis()
    c = np.array(coef)
    f = lambda s: c @ b(s)
    assert np.allclose(b.coefficients(f), c, atol=1e-10)
