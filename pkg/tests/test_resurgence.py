import numpy as np
import pytest
from scipy.special import exp1, expi

from fmslab.models import ModelSpec, TrajectorySpec
from fmslab.numerics import NumericsError
from fmslab.resurgence import (
    AsymptoticSeries,
    action_integral,
    borel_lateral,
    euler_series,
    optimal_truncation,
    resummation_report,
    resurgent_correct,
)

LAM = 0.1


def euler_oracle(lam):
    return np.exp(1 / lam) * exp1(1 / lam) / lam


def pv_oracle(lam):
    return np.exp(-1 / lam) * expi(1 / lam) / lam


def test_oracles_against_laguerre():
    x, w = np.polynomial.laguerre.laggauss(100)
    assert euler_oracle(LAM) == pytest.approx(np.sum(w / (1 + LAM * x)), rel=1e-13)


def test_euler_coefficients():
    s = euler_series(30)
    assert s.coeffs[0] == 1 and s.coeffs[1] == -1 and s.coeffs[5] == -120
    assert np.allclose(np.abs(s.coeffs[1:] / s.coeffs[:-1]), np.arange(1, 31))


def test_series_validation():
    with pytest.raises(ValueError):
        euler_series(10)
    with pytest.raises(ValueError):
        AsymptoticSeries(np.ones(5))


def test_optimal_truncation():
    val, order = optimal_truncation(euler_series(40), LAM)
    assert order == 10
    assert abs(val - euler_oracle(LAM)) < 1e-3
    val0, _ = optimal_truncation(euler_series(40), 1e-9)
    assert val0 == pytest.approx(1.0, abs=1e-8)


def test_alternating_laterals_agree_with_oracle():
    s = euler_series(40)
    lp, lm = borel_lateral(s, LAM, 1), borel_lateral(s, LAM, -1)
    assert abs(lp - euler_oracle(LAM)) < 1e-8 and abs(lm - euler_oracle(LAM)) < 1e-8


def test_flipped_laterals_ambiguous():
    s = euler_series(40, sign=1)
    lp, lm = borel_lateral(s, LAM, 1), borel_lateral(s, LAM, -1)
    assert abs(lp - np.conj(lm)) < 1e-9
    assert lp.imag > 1e-4
    # the jump across the pole at t = 1 is 2 pi i e^(-1/lam) / lam
    assert lp.imag == pytest.approx(np.pi * np.exp(-1 / LAM) / LAM, rel=1e-9)


def test_laterals_small_coupling():
    for sign in (1, -1):
        assert abs(borel_lateral(euler_series(40, sign), 1e-4, 1) - 1) < 2e-4


def test_correction():
    s = euler_series(40, sign=1)
    lp, lm = borel_lateral(s, LAM, 1), borel_lateral(s, LAM, -1)
    cp = resurgent_correct(lp, 1, np.pi, 1.0, LAM, 1 / LAM)
    cm = resurgent_correct(lm, -1, np.pi, 1.0, LAM, 1 / LAM)
    assert abs(cp - cm) < 1e-8
    assert abs(cp - pv_oracle(LAM)) < 1e-6 * abs(pv_oracle(LAM))
    unamb = borel_lateral(euler_series(40), LAM, 1)
    assert resurgent_correct(unamb, 1, 0.0, 1.0, LAM) == pytest.approx(unamb.real)


def test_inconsistent_sigma_raises():
    lp = borel_lateral(euler_series(40, sign=1), LAM, 1)
    with pytest.raises(NumericsError):
        resurgent_correct(lp, 1, 2.0, 1.0, LAM, 1 / LAM)
    with pytest.raises(ValueError):
        resurgent_correct(lp, 1, np.pi, 0.0, LAM)


def test_report_ladder():
    rep = resummation_report(euler_series(40, sign=1), LAM, pv_oracle(LAM))
    naive = rep.naive_partial_sums.y[2 * rep.optimal_order - 1]
    assert abs(naive - rep.oracle_value) > abs(rep.optimal_truncation_value - rep.oracle_value)
    assert rep.abs_error <= abs(rep.optimal_truncation_value - rep.oracle_value)
    assert rep.ambiguity == pytest.approx(2 * abs(rep.lateral_plus.imag))


def test_action_non_encircling_is_zero():
    for k in (1, 2):
        a = action_integral(ModelSpec("RankK", {"k": k}), TrajectorySpec(center=0.5, radius=0.2, omega=0.1))
        assert abs(a) < 1e-6


def test_action_grows_with_radius():
    m = ModelSpec("RankK", {"k": 2})
    a1 = action_integral(m, TrajectorySpec(radius=0.2, omega=0.1))
    a2 = action_integral(m, TrajectorySpec(radius=0.4, omega=0.1))
    assert 0 < a1 < a2
    t1 = action_integral(ModelSpec("TransmonEP2"), TrajectorySpec(radius=0.2, omega=0.1))
    t2 = action_integral(ModelSpec("TransmonEP2"), TrajectorySpec(radius=0.4, omega=0.1))
    assert 0 < t1 < t2


def test_action_rejects_loop_through_second_ep():
    # the transmon has a second EP at lambda = -kappa / 2, on the R = 0.5 circle
    with pytest.raises(NumericsError):
        action_integral(ModelSpec("TransmonEP2"), TrajectorySpec(radius=0.5, omega=0.1))
