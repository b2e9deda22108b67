"""Quantum geometric tensor, biorthogonal connection, the singular trace
``f_mix``, the angular Saito-pairing scan and the phantom-transition scan."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .floquet import (
    eig2_batch,
    expm2_batch,
    hamiltonian_along,
    propagate,
    track_branches,
)
from .models import ModelSpec, TrajectorySpec, ep_location
from .numerics import FitResult, NumericsError, RealSeries, find_peaks, fit_loglog

Family = Union[ModelSpec, Callable[[complex], np.ndarray]]


class SingularStencilError(NumericsError):
    """The finite-difference stencil touches an exceptional point."""


@dataclass(frozen=True)
class QgtValue:
    """Geometric tensor at one point of the complex control plane.

    ``metric`` is the 2x2 real symmetric part over (Re lambda, Im lambda),
    ``curvature`` is ``-2 Im Q_12`` and ``mixing`` is ``Q_12``.
    """

    metric: np.ndarray
    curvature: float
    mixing: complex


def _ham(model: Family, lam: complex) -> np.ndarray:
    if isinstance(model, ModelSpec):
        return model.hamiltonian_batch(lam)
    return np.asarray(model(lam), dtype=complex)


def _ep_points(model: Family) -> list:
    if not isinstance(model, ModelSpec):
        return []
    if model.family == "RankK":
        k, d = model.params["k"], model.params["delta"]
        if d == 0:
            return [0j]
        return [complex((-1j * d) ** (1 / (k + 1)) * np.exp(2j * np.pi * m / (k + 1))) for m in range(k + 1)]
    return [ep_location(model).position]


def _check_stencil(model: Family, lam: complex, h: float):
    for ep in _ep_points(model):
        if abs(lam - ep) <= 2 * h:
            raise SingularStencilError(f"singular stencil: EP at {ep} within 2h of {lam}")


def _eigvec(model: Family, lam: complex, branch: int, ref: np.ndarray = None) -> np.ndarray:
    hm = _ham(model, lam)
    vals, vecs = eig2_batch(hm[None])
    vals, vecs = vals[0], vecs[0]
    if ref is None:
        order = np.lexsort((vals.imag, vals.real))
        v = vecs[:, order[branch]]
    else:
        ov = np.abs(ref.conj() @ vecs)
        v = vecs[:, int(np.argmax(ov))]
        ph = np.vdot(v, ref)
        v = v * ph / abs(ph)
    return v


def _qgt_fd(model: Family, lam: complex, h: float, branch: int) -> np.ndarray:
    psi = _eigvec(model, lam, branch)
    d = []
    for e in (1.0, 1j):
        vp = _eigvec(model, lam + h * e, branch, psi)
        vm = _eigvec(model, lam - h * e, branch, psi)
        d.append((vp - vm) / (2 * h))
    proj = np.eye(2) - np.outer(psi, psi.conj())
    return np.array([[np.vdot(d[i], proj @ d[j]) for j in range(2)] for i in range(2)])


def qgt(model: Family, lam: complex, h: float = None, branch: int = 0) -> QgtValue:
    """Geometric tensor of the normalized right eigenvector ``branch``.

    Central differences at steps ``h`` and ``h/2`` combined by Richardson
    extrapolation. ``h`` defaults to ``1e-4`` times the distance to the
    nearest EP (or ``1e-4`` without one).
    """
    lam = complex(lam)
    if h is None:
        eps = _ep_points(model)
        dist = min((abs(lam - e) for e in eps), default=1.0)
        h = 1e-4 * dist if dist > 0 else 1e-4
    if h <= 0:
        raise ValueError("h must be positive")
    _check_stencil(model, lam, h)
    q = (4 * _qgt_fd(model, lam, h / 2, branch) - _qgt_fd(model, lam, h, branch)) / 3
    return QgtValue(metric=q.real.copy(), curvature=float(-2 * q[0, 1].imag), mixing=complex(q[0, 1]))


def metric_divergence_exponent(model: Family, d_grid: Sequence[float], direction: complex = 1.0,
                               branch: int = 0) -> FitResult:
    """Log-log slope of the metric along a ray into the EP.

    The metric component along ``direction`` is sampled at ``EP + d * direction``.
    """
    d_grid = np.sort(np.asarray(d_grid, dtype=float))
    ep = _ep_points(model)[0] if _ep_points(model) else 0j
    u = complex(direction) / abs(direction)
    g = []
    for d in d_grid:
        q = qgt(model, ep + d * u, h=1e-3 * d, branch=branch)
        e = np.array([u.real, u.imag])
        g.append(float(e @ q.metric @ e))
    return fit_loglog(RealSeries(d_grid, np.array(g)))


def connection_matrix(model: Family, lam: complex, h: float = None, mu: int = 0) -> np.ndarray:
    """Biorthogonal connection ``A_mn = <left_m | d_mu right_n>``.

    Right eigenvectors carry unit norm and a smooth gauge; left eigenvectors
    are the rows of the inverse eigenvector matrix, so ``<left_m|right_n> =
    delta_mn``. ``mu = 0`` differentiates along Re lambda, ``mu = 1`` along
    Im lambda.
    """
    lam = complex(lam)
    if h is None:
        dist = min((abs(lam - e) for e in _ep_points(model)), default=1.0)
        h = 1e-4 * max(dist, 1e-12)
    _check_stencil(model, lam, h)
    hm = _ham(model, lam)
    vals, vecs = eig2_batch(hm[None])
    vals, vecs = vals[0], vecs[0]
    if abs(vals[0] - vals[1]) < 1e-10 * max(1.0, abs(vals).max()):
        raise NumericsError("degenerate spectrum: connection undefined")
    order = np.lexsort((vals.imag, vals.real))
    r0 = vecs[:, order]
    e = 1.0 if mu == 0 else 1j

    def frame(x):
        return np.stack([_eigvec(model, x, b, r0[:, b]) for b in range(2)], axis=1)

    def deriv(step):
        return (frame(lam + step * e) - frame(lam - step * e)) / (2 * step)

    dr = (4 * deriv(h / 2) - deriv(h)) / 3
    left = np.linalg.inv(r0)
    return left @ dr


def f_mix(a_i: np.ndarray, s: np.ndarray, a_j: np.ndarray) -> complex:
    """Singular trace ``tr(A_i S^{-1} A_j)``."""
    a_i, s, a_j = (np.asarray(x, dtype=complex) for x in (a_i, s, a_j))
    if not (a_i.shape == s.shape == a_j.shape):
        raise ValueError("dimension mismatch")
    if abs(np.linalg.det(s)) < 1e-14 * max(1.0, np.linalg.norm(s)) ** s.shape[0]:
        raise NumericsError("S is singular")
    return complex(np.trace(a_i @ np.linalg.solve(s, a_j)))


# ---------------------------------------------------------------- Saito scan


@dataclass(frozen=True)
class SaitoScan:
    theta_grid: np.ndarray
    signal: np.ndarray
    peak_locations: np.ndarray
    peak_count: int
    sector_floor: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.signal)):
            raise ValueError("signal must be finite")
        if self.peak_count != len(self.peak_locations):
            raise ValueError("peak_count must equal the number of peak locations")


def _sector_floor(theta: np.ndarray, signal: np.ndarray, peaks: np.ndarray) -> float:
    """Largest inter-peak minimum relative to the peak height (periodic)."""
    top = signal.max()
    if top <= 0 or len(peaks) < 2:
        return float("nan") if top <= 0 else float(signal.min() / top)
    worst = 0.0
    ps = np.sort(peaks)
    for a, b in zip(ps, np.r_[ps[1:], ps[0] + 2 * np.pi]):
        sel = ((theta - a) % (2 * np.pi)) < (b - a)
        sel &= ((theta - a) % (2 * np.pi)) > 0
        if np.any(sel):
            worst = max(worst, signal[sel].min() / top)
    return float(worst)


def loop_amplitudes(model: ModelSpec, traj: TrajectorySpec, steps: int = None):
    """Biorthogonal adiabatic-basis amplitudes along one period of a loop.

    Starts in the eigenvector of ``H(k(0))`` with the larger imaginary
    eigenvalue and returns ``(t, c_occ, c_other)`` at every grid point.
    """
    if steps is None:
        steps = propagate(model, traj).step_count_used
    dt = traj.period / steps
    tgrid = np.arange(steps + 1) * dt
    tm = (np.arange(steps) + 0.5) * dt
    factors = expm2_batch(-1j * dt * hamiltonian_along(model, traj, tm))
    vals, vecs, worst = track_branches(hamiltonian_along(model, traj, tgrid))
    if worst < 0.5:
        raise NumericsError(f"branch tracking failed: overlap {worst:.3f} between steps")
    occ = int(np.argmax(vals[0].imag))
    oth = 1 - occ
    left = np.linalg.inv(vecs)
    psi = np.empty((steps + 1, 2), dtype=complex)
    psi[0] = vecs[0, :, occ]
    a, b = psi[0]
    f = factors.tolist()
    for j in range(steps):
        (p, q), (r, s) = f[j]
        a, b = p * a + q * b, r * a + s * b
        psi[j + 1, 0], psi[j + 1, 1] = a, b
    c = np.einsum("jbi,ji->jb", left, psi)
    return tgrid, c[:, occ], c[:, oth]


def saito_scan(model: ModelSpec, base_traj: TrajectorySpec, theta_grid: Sequence[float] = None,
               prominence_frac: float = 0.25) -> SaitoScan:
    """Angular profile of non-adiabatic amplitude growth around a loop.

    Signal is ``|d|c_other|/d theta|`` with ``theta = omega t``, smoothed by a
    3-point moving average, resampled on ``theta_grid`` and searched for
    peaks of prominence ``prominence_frac * max`` on the periodic domain.
    """
    if base_traj.kind != "Loop":
        raise ValueError("saito_scan needs a closed loop")
    if theta_grid is None:
        theta_grid = np.linspace(0, 2 * np.pi, 360, endpoint=False)
    theta_grid = np.asarray(theta_grid, dtype=float)
    t, _, c_other = loop_amplitudes(model, base_traj)
    theta = base_traj.omega * t
    mag = np.abs(c_other)
    deriv = np.abs(np.gradient(mag, theta))
    smooth = np.convolve(np.r_[deriv[-2], deriv, deriv[1]], np.ones(3) / 3, mode="valid")
    signal = np.interp(theta_grid, theta, smooth)
    top = signal.max()
    peaks = []
    if top > 0:
        peaks = find_peaks(RealSeries(theta_grid, signal), prominence_frac * top, periodic=True)
    peaks = np.array(peaks)
    return SaitoScan(theta_grid, signal, peaks, len(peaks), _sector_floor(theta_grid, signal, peaks))


# ---------------------------------------------------------------- phantom


def min_gap_along(model: ModelSpec, traj: TrajectorySpec, samples: int = 4096) -> float:
    """Minimum of ``|lambda_1 - lambda_2| = |sqrt(disc)|`` over the trajectory.

    A dense scan is refined by bounded scalar minimisation around the best
    sample so that an isolated closing of the gap is not stepped over.
    """
    t_end = traj.period
    t = np.linspace(0, t_end, samples)
    gap = np.sqrt(np.abs(model.discriminant(traj.points(t))))
    j = int(np.argmin(gap))
    lo, hi = t[max(j - 1, 0)], t[min(j + 1, samples - 1)]
    res = minimize_scalar(lambda x: float(np.sqrt(abs(model.discriminant(traj.points(x))))),
                          bounds=(lo, hi), method="bounded", options={"xatol": 1e-12 * t_end})
    return float(min(gap[j], res.fun))


def phantom_scan(model: ModelSpec, theta_grid: Sequence[float], velocity: float = 0.2,
                 half_width: float = 4.0, offset: complex = 0j, steps: int = 4096):
    """Stokes invariant and minimum gap of a linear sweep versus offset phase.

    For each ``theta`` the gap-opening offset becomes ``delta * e^{i theta}``
    and the sweep ``lambda(t) = velocity (t - T/2) + offset`` runs from
    ``-half_width`` to ``+half_width``.

    Returns
    -------
    (RealSeries, RealSeries)
        ``S(theta)`` and ``min_t gap(theta)``.
    """
    if model.family != "RankK" or model.params["delta"] == 0:
        raise ValueError("phantom_scan needs a RankK model with delta != 0")
    theta_grid = np.asarray(theta_grid, dtype=float)
    period = 2 * half_width / velocity
    traj = TrajectorySpec("LinearSweep", omega=2 * np.pi / period, steps=steps,
                          velocity=velocity, offset=offset)
    s_vals, gaps = [], []
    for th in theta_grid:
        m = ModelSpec("RankK", {"k": model.params["k"], "delta": model.params["delta"] * np.exp(1j * th)})
        res = propagate(m, traj)
        s_vals.append(res.stokes_invariant)
        gaps.append(min_gap_along(m, traj))
    return RealSeries(theta_grid, np.array(s_vals)), RealSeries(theta_grid, np.array(gaps))
