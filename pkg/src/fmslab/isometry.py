"""Invariant Hermitian pairings of Stokes matrices and cross-platform quantization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .floquet import propagate
from .models import ModelSpec, TrajectorySpec

NULL_RTOL = 1e3 * np.finfo(float).eps
RESIDUAL_TOL = 1e-6
CONDITION_TOL = 1e-6
QUANTIZATION_TOL = 0.05


@dataclass(frozen=True)
class IsometryReport:
    """Result of solving ``S^dagger G S = G`` over Hermitian ``G``.

    ``condition`` is the smallest eigenvalue magnitude of the unit-Frobenius
    ``G`` (its distance from degeneracy); ``null_dimension`` is the real
    dimension of the numerical solution space.
    """

    stokes_matrix: np.ndarray
    pairing: np.ndarray
    residual: float
    condition: float
    null_dimension: int
    singular_values: np.ndarray
    passed: bool


def _hermitian_basis(n: int) -> list:
    basis = []
    for i in range(n):
        e = np.zeros((n, n), complex)
        e[i, i] = 1
        basis.append(e)
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), complex)
            e[i, j] = e[j, i] = 1 / np.sqrt(2)
            basis.append(e)
            e = np.zeros((n, n), complex)
            e[i, j], e[j, i] = 1j / np.sqrt(2), -1j / np.sqrt(2)
            basis.append(e)
    return basis


def _coords(h: np.ndarray, basis: list) -> np.ndarray:
    # the basis is orthonormal under Re tr(A^dagger B)
    return np.array([np.real(np.vdot(b, h)) for b in basis])


def _min_abs_eig(g: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(0.5 * (g + g.conj().T))).min())


def _null_start(sv: np.ndarray) -> int:
    """Index of the first numerically-zero singular value.

    Values at or below ``NULL_RTOL * sigma_max`` are zero: forming
    ``S^dagger G S`` loses ``eps * |S|^2`` absolutely, and ``sigma_max`` is of
    order ``|S|^2``.
    """
    top = sv[0]
    return int(np.count_nonzero(sv > NULL_RTOL * top)) if top > 0 else 0


def find_invariant_pairing(s: np.ndarray) -> IsometryReport:
    """Most non-degenerate unit Hermitian ``G`` with ``S^dagger G S = G``.

    The real-linear map ``G -> S^dagger G S - G`` is written in an
    orthonormal basis of Hermitian matrices and its numerical null space
    taken from the SVD (see :func:`_null_start`).
    Within that space the unit vector maximising the smallest eigenvalue
    magnitude of ``G`` is selected. An empty null space gives
    ``passed = False`` rather than an exception.
    """
    s = np.asarray(s, dtype=complex)
    n = s.shape[0]
    if s.shape != (n, n) or not np.all(np.isfinite(s)):
        raise ValueError("S must be a finite square matrix")
    basis = _hermitian_basis(n)
    a = np.column_stack([_coords(s.conj().T @ b @ s - b, basis) for b in basis])
    _, sv, vt = np.linalg.svd(a)
    null = vt[_null_start(sv):]
    d = null.shape[0]
    if d == 0:
        v = vt[-1]
        g = sum(c * b for c, b in zip(v, basis))
        res = float(np.linalg.norm(s.conj().T @ g @ s - g))
        return IsometryReport(s, g, res, _min_abs_eig(g), 0, sv, False)

    def to_g(c):
        c = np.asarray(c, float)
        v = c @ null
        v = v / np.linalg.norm(v)
        return sum(x * b for x, b in zip(v, basis))

    if d == 1:
        best = to_g([1.0])
    else:
        starts = [np.eye(d)[i] for i in range(d)]
        starts += [np.ones(d) / np.sqrt(d)]
        starts += [np.r_[1.0, -np.ones(d - 1)] / np.sqrt(d)]
        best, best_val = None, -1.0
        for x0 in starts:
            r = minimize(lambda c: -_min_abs_eig(to_g(c)), x0, method="Nelder-Mead",
                         options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
            g = to_g(r.x)
            val = _min_abs_eig(g)
            if val > best_val:
                best, best_val = g, val
    g = 0.5 * (best + best.conj().T)
    res = float(np.linalg.norm(s.conj().T @ g @ s - g))
    cond = _min_abs_eig(g)
    return IsometryReport(s, g, res, cond, d, sv, bool(res < RESIDUAL_TOL and cond > CONDITION_TOL))


@dataclass(frozen=True)
class QuantizationReport:
    families: tuple
    stokes_invariants: np.ndarray
    max_deviation: float
    tolerance: float
    passed: bool


def quantization_check(models: Sequence[ModelSpec], traj: TrajectorySpec,
                       tol: float = QUANTIZATION_TOL) -> QuantizationReport:
    """Stokes invariant of each platform on the same loop about its own EP.

    Each loop is recentred on the platform's exceptional point. Passes when
    the largest pairwise deviation is within ``tol``.
    """
    from dataclasses import replace

    from .models import ep_location

    if len(models) < 3:
        raise ValueError("need at least three realisations")
    vals = []
    for m in models:
        t = replace(traj, center=ep_location(m).position + (traj.center - 0j))
        vals.append(propagate(m, t).stokes_invariant)
    vals = np.array(vals)
    dev = float(vals.max() - vals.min())
    return QuantizationReport(tuple(m.family for m in models), vals, dev, tol, dev <= tol)
