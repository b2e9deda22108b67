import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm as scipy_expm

from fmslab.numerics import (
    NumericsError,
    RealSeries,
    eig_small,
    expm,
    find_peaks,
    fit_loglog,
    integrate_ray,
    pade,
)

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def test_eig_pauli_x():
    vals = [v for v, _ in eig_small(np.array([[0, 1], [1, 0]]))]
    assert np.allclose(vals, [-1, 1], atol=1e-14)


def test_eig_transmon_ep_is_double():
    vals = [v for v, _ in eig_small(np.array([[0, 0.25], [0.25, -0.5j]]))]
    assert np.allclose(vals, [-0.25j, -0.25j], atol=1e-12)


def test_eig_closed_form():
    vals = [v for v, _ in eig_small(np.array([[0, 1], [1 + 0.1j, 0]]))]
    r = np.sqrt(1 + 0.1j)
    assert np.allclose(sorted(vals, key=lambda z: z.real), [-r, r], atol=1e-14)


def test_eig_larger_matrix_matches_lapack():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    pairs = eig_small(a)
    vals = np.array([v for v, _ in pairs])
    ref = np.linalg.eigvals(a)
    assert np.allclose(np.sort_complex(vals), np.sort_complex(ref), atol=1e-10)
    for lam, v in pairs:
        assert np.linalg.norm(a @ v - lam * v) < 1e-9


def test_eig_rejects_nonsquare():
    with pytest.raises(ValueError):
        eig_small(np.ones((2, 3)))


def test_expm_trivial():
    assert np.allclose(expm(np.zeros((2, 2))), np.eye(2))
    assert np.allclose(expm(np.diag([0.3, -1.2j])), np.diag(np.exp([0.3, -1.2j])))
    sx = np.array([[0, 1], [1, 0]])
    assert np.allclose(expm(-0.5j * np.pi * sx), [[0, -1j], [-1j, 0]], atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.lists(finite, min_size=8, max_size=8))
def test_expm_matches_scipy(xs):
    a = np.array(xs[:4]).reshape(2, 2) + 1j * np.array(xs[4:]).reshape(2, 2)
    assert np.allclose(expm(a), scipy_expm(a), rtol=1e-12, atol=1e-12)


def test_fit_loglog_exact_power():
    x = np.array([1.0, 2, 4, 8])
    assert abs(fit_loglog(RealSeries(x, x**2)).slope - 2) < 1e-12
    assert abs(fit_loglog(RealSeries(x, np.sqrt(x))).slope - 0.5) < 1e-12


def test_fit_loglog_rejects_nonpositive():
    with pytest.raises(ValueError):
        fit_loglog(RealSeries(np.array([1.0, 2, 3, 4]), np.array([1.0, 0, 1, 1])))


def test_find_peaks():
    th = np.linspace(0, 2 * np.pi, 360, endpoint=False)
    assert find_peaks(RealSeries(th, np.ones_like(th)), 0.1, periodic=True) == []
    assert len(find_peaks(RealSeries(th, np.sin(3 * th)), 0.5, periodic=True)) == 3


def test_pade_geometric():
    p, q = pade([1, 1, 1], 1, 1)
    assert np.allclose(p, [1, 0]) and np.allclose(q, [1, -1])


def test_pade_constant():
    p, q = pade([1, 0, 0, 0, 0, 0, 0], 3, 3)
    assert np.allclose(p, [1, 0, 0, 0]) and np.allclose(q, [1, 0, 0, 0])


def test_pade_alternating_borel():
    p, q = pade([(-1.0) ** n for n in range(9)], 4, 4)
    t = np.linspace(0, 3, 7)
    assert np.allclose(np.polyval(p[::-1], t) / np.polyval(q[::-1], t), 1 / (1 + t), atol=1e-12)


def test_integrate_ray_basic():
    assert abs(integrate_ray(lambda t: np.exp(-t), 0.0) - 1) < 1e-10
    assert abs(integrate_ray(lambda t: t * np.exp(-t), 0.0) - 1) < 1e-10


def test_integrate_ray_oracle():
    # 200-point Gauss-Laguerre overflows; 100 points already converge to 1e-15 here
    x, w = np.polynomial.laguerre.laggauss(100)
    oracle = np.sum(w / (1 + 0.1 * x))
    assert abs(integrate_ray(lambda t: np.exp(-t) / (1 + 0.1 * t), 0.0) - oracle) < 1e-10
    assert abs(oracle - 0.9156333393978806) < 1e-13


def test_integrate_ray_rejects_growth():
    with pytest.raises(NumericsError):
        integrate_ray(lambda t: np.exp(t), 0.0)
