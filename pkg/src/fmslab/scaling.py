"""Gap scaling experiments and the disorder-robustness comparison."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .floquet import eig2_batch, monodromy_fidelity, normalize, propagate
from .models import ModelSpec, TrajectorySpec, ep_location
from .numerics import FitResult, NumericsError, RealSeries, fit_loglog

# the tame class is the k -> infinity end of the 1 + 1/k family
TAME_RANK = 64


@dataclass(frozen=True)
class ScalingReport:
    sweep_variable: str
    series: RealSeries
    fit: FitResult
    expected_exponent: float
    tolerance: float
    passed: bool


def _report(var, x, y, expected, tol) -> ScalingReport:
    s = RealSeries(np.asarray(x, float), np.asarray(y, float))
    fit = fit_loglog(s)
    return ScalingReport(var, s, fit, expected, tol, abs(fit.slope - expected) <= tol)


def _decades(x) -> float:
    x = np.asarray(x, float)
    return float(np.log10(x.max() / x.min()))


def static_gap_scaling(model: ModelSpec, r_grid: Sequence[float], direction: complex = 1.0,
                       expected: float = None, tol: float = 0.02) -> ScalingReport:
    """Static eigenvalue splitting ``|lambda_1 - lambda_2|`` at ``EP + R * direction``."""
    r = np.sort(np.asarray(r_grid, float))
    if np.any(r <= 0):
        raise ValueError("R must be positive")
    u = complex(direction) / abs(direction)
    lam = ep_location(model).position + r * u
    vals, _ = eig2_batch(model.hamiltonian_batch(lam))
    gap = np.abs(vals[:, 0] - vals[:, 1])
    if expected is None:
        expected = (model.rank + 1) / 2
    return _report("R", r, gap, expected, tol)


def breakdown_gap(k: int, omega: float, c: float = 1.0, r0: float = 1.0) -> float:
    """Adiabaticity-breakdown gap of a rank-``k`` connection pole.

    The effective gap is ``dE(z) = sqrt(g(z)) |dz/dt|`` with
    ``g(z) = c |z|^{-2(k+1)}`` along a radial approach ``|z|(t) = r0 (1 - omega t)``
    (speed ``omega r0``). The breakdown point solves
    ``dE(z_c)^2 = |d dE/dt|(z_c)`` and the returned value is ``dE(z_c)``.
    """
    speed = omega * r0

    def log_gap(logz):
        return 0.5 * np.log(c) - (k + 1) * logz + np.log(speed)

    def log_rate(logz):
        return 0.5 * np.log(c) + np.log(k + 1) - (k + 2) * logz + 2 * np.log(speed)

    def f(logz):
        return 2 * log_gap(logz) - log_rate(logz)

    lo, hi = np.log(1e-12 * r0), np.log(r0)
    flo, fhi = f(lo), f(hi)
    if not (np.isfinite(flo) and np.isfinite(fhi)) or flo * fhi > 0:
        raise NumericsError(
            f"no breakdown bracket for k={k}, omega={omega}: f(z_min)={flo:.3e}, f(r0)={fhi:.3e}")
    logzc = brentq(f, lo, hi, xtol=1e-14, rtol=1e-14)
    return float(np.exp(log_gap(logzc)))


def dynamic_gap_scaling(model_or_rank, omega_grid: Sequence[float], c: float = 1.0, r0: float = 1.0,
                        tol: float = None) -> ScalingReport:
    """Breakdown gap versus drive frequency with the fitted exponent.

    ``model_or_rank`` is a :class:`ModelSpec` (its connection-pole rank is
    used, rank 0 meaning tame) or an integer rank, or ``"tame"``.
    """
    if isinstance(model_or_rank, ModelSpec):
        k = model_or_rank.rank
    elif model_or_rank == "tame":
        k = 0
    else:
        k = int(model_or_rank)
    omegas = np.sort(np.asarray(omega_grid, float))
    if _decades(omegas) < 2:
        raise ValueError("omega grid must span at least two decades")
    k_eff = TAME_RANK if k == 0 else k
    expected = 1.0 if k == 0 else 1 + 1 / k
    if tol is None:
        tol = 0.05 if k == 0 else 0.1
    gaps = [breakdown_gap(k_eff, w, c, r0) for w in omegas]
    return _report("omega", omegas, gaps, expected, tol)


# ---------------------------------------------------------------- disorder


def disorder_matrix(seed: int, trial: int) -> np.ndarray:
    """Fixed-per-trial 2x2 complex matrix, parts uniform on [-1/2, 1/2]."""
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, int(trial)])
    return rng.uniform(-0.5, 0.5, (2, 2)) + 1j * rng.uniform(-0.5, 0.5, (2, 2))


def _splitting(h: np.ndarray) -> np.ndarray:
    vals, _ = eig2_batch(h)
    return vals[:, 1] - vals[:, 0]


def spectral_fit_error(model: ModelSpec, traj: TrajectorySpec, g: np.ndarray, samples: int = 256) -> float:
    """rms relative misfit of the noisy branch splitting to the clean square-root law.

    The noisy splitting along the loop is fitted as ``a * split_clean`` with a
    single complex amplitude ``a``; the sign of each square root is aligned
    with the clean branch before fitting.
    """
    t = np.linspace(0, traj.period, samples, endpoint=False)
    h = model.hamiltonian_batch(traj.points(t))
    clean = _splitting(h)
    noisy = _splitting(h + g)
    noisy = np.where(np.abs(noisy - clean) <= np.abs(noisy + clean), noisy, -noisy)
    a = np.vdot(clean, noisy) / np.vdot(clean, clean)
    rel = np.abs(noisy - a * clean) / np.abs(clean)
    return float(np.sqrt(np.mean(rel**2)))


@dataclass(frozen=True)
class DisorderCurves:
    fms: RealSeries
    spectral: RealSeries
    fms_stderr: np.ndarray
    spectral_stderr: np.ndarray


def disorder_point(model: ModelSpec, traj: TrajectorySpec, w: float, trial: int, seed: int,
                   clean: np.ndarray):
    g = w * disorder_matrix(seed, trial)
    if w == 0:
        return 1.0, 1.0
    noisy = propagate(model, traj, perturbation=g).normalized
    return monodromy_fidelity(clean, noisy), float(np.exp(-spectral_fit_error(model, traj, g)))


def disorder_robustness(model: ModelSpec, traj: TrajectorySpec, w_grid: Sequence[float], trials: int = 64,
                        seed: int = 0, executor=None) -> DisorderCurves:
    """Monodromy fidelity and spectral-fit proxy fidelity versus disorder strength.

    ``executor`` is an optional ``concurrent.futures`` executor; results are
    assembled by (W index, trial) so scheduling cannot change them.
    """
    if trials < 32:
        raise ValueError("trials must be at least 32")
    w_grid = np.asarray(w_grid, float)
    if np.any(w_grid < 0):
        raise ValueError("W must be nonnegative")
    clean = propagate(model, traj).normalized
    jobs = [(w, tr) for w in w_grid for tr in range(trials)]
    if executor is None:
        out = [disorder_point(model, traj, w, tr, seed, clean) for w, tr in jobs]
    else:
        futs = [executor.submit(disorder_point, model, traj, w, tr, seed, clean) for w, tr in jobs]
        out = [f.result() for f in futs]
    arr = np.array(out).reshape(len(w_grid), trials, 2)
    mean = arr.mean(axis=1)
    se = arr.std(axis=1, ddof=1) / np.sqrt(trials)
    return DisorderCurves(RealSeries(w_grid, mean[:, 0]), RealSeries(w_grid, mean[:, 1]), se[:, 0], se[:, 1])
