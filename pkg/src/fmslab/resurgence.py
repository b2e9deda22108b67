"""Borel-Pade lateral resummation, optimal truncation and the Stokes correction."""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial, lgamma
from typing import Sequence

import numpy as np
from scipy.integrate import simpson

from .models import ModelSpec, TrajectorySpec
from .numerics import NumericsError, RealSeries, integrate_ray, pade

LATERAL_ANGLE = 0.05


@dataclass(frozen=True)
class AsymptoticSeries:
    """Coefficients ``c_0 .. c_N`` of a formal power series in ``lambda``.

    ``growth_class`` is the declared Gevrey order; ``action`` and
    ``stokes_constant`` optionally carry the leading Borel singularity data.
    """

    coeffs: np.ndarray
    growth_class: int = 1
    action: float = None
    stokes_constant: float = None

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size < 21:
            raise ValueError("need at least 21 coefficients (N >= 20)")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        if self.growth_class == 1:
            ratio = np.abs(c) / np.array([factorial(n) for n in range(c.size)], dtype=float)
            if not np.all(np.isfinite(ratio)) or ratio.max() > 1e12 * max(ratio[0], 1.0):
                raise ValueError("coefficients grow faster than Gevrey-1 on the provided range")
        object.__setattr__(self, "coeffs", c)

    def __len__(self):
        return self.coeffs.size

    def borel(self) -> np.ndarray:
        """Borel coefficients ``b_n = c_n / n!``."""
        n = np.arange(self.coeffs.size)
        return self.coeffs / np.exp([lgamma(k + 1) for k in n])


def euler_series(n_max: int = 40, sign: int = -1) -> AsymptoticSeries:
    """``c_n = sign^n n!``.

    ``sign = -1`` is the expansion of ``E(lambda) = int_0^inf e^-t / (1 + lambda t) dt``
    (Borel pole on the negative axis). ``sign = +1`` moves the pole to
    ``t = 1`` on the positive axis, giving a genuine lateral ambiguity with
    action 1 and Stokes constant ``pi``.
    """
    if n_max < 20:
        raise ValueError("n_max must be at least 20")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    c = [float(sign**n * factorial(n)) for n in range(n_max + 1)]
    if sign == 1:
        return AsymptoticSeries(np.array(c), 1, action=1.0, stokes_constant=np.pi)
    return AsymptoticSeries(np.array(c), 1)


def partial_sums(s: AsymptoticSeries, lam: float) -> np.ndarray:
    """``S_N = sum_{n<N} c_n lambda^n`` for ``N = 1 .. len``."""
    return np.cumsum(s.coeffs * lam ** np.arange(len(s)))


def optimal_truncation(s: AsymptoticSeries, lam: float):
    """Partial sum cut at the smallest term.

    Returns ``(value, order)`` where ``order = N* = argmin_n |c_n lambda^n|``
    (ties go to the larger ``n``) and ``value = sum_{n < N*} c_n lambda^n``.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    terms = np.abs(s.coeffs) * lam ** np.arange(len(s))
    nz = np.where(terms > 0, terms, np.inf)
    best = nz.min()
    order = int(np.nonzero(nz <= best * (1 + 1e-12))[0].max())
    order = max(order, 1)
    return float(np.sum(s.coeffs[:order] * lam ** np.arange(order))), order


def borel_lateral(s: AsymptoticSeries, lam: float, side: int, pade_order: int = None,
                  epsilon: float = LATERAL_ANGLE, tol: float = 1e-12) -> complex:
    """Laplace transform of the diagonal Borel-Pade approximant along ``arg t = side * epsilon``.

    Raises
    ------
    NumericsError
        If a Pade pole lies within 1e-6 of the integration ray.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    if pade_order is None:
        pade_order = (len(s) - 1) // 2
    if 2 * pade_order + 1 > len(s):
        raise ValueError("2 * pade_order + 1 exceeds the number of coefficients")
    p, q = pade(s.borel(), pade_order, pade_order)
    angle = side * epsilon
    qt = np.trim_zeros(q, "b")
    if qt.size > 1:
        for z in np.roots(qt[::-1]):
            # distance from the pole to the ray {r e^{i angle}, r >= 0}
            u = np.exp(1j * angle)
            r = max((z * np.conj(u)).real, 0.0)
            if abs(z - r * u) < 1e-6:
                raise NumericsError(
                    f"Pade pole {z:.6g} lies on the lateral ray; use a larger epsilon")
    pp, qq = p[::-1], q[::-1]

    def integrand(t):
        return np.exp(-t / lam) * np.polyval(pp, t) / np.polyval(qq, t)

    return integrate_ray(integrand, angle, tol=tol, scale=lam) / lam


def resurgent_correct(lateral: complex, side: int, sigma: float, action: float, lam: float,
                      inst_prefactor: float = 1.0) -> float:
    """Remove the one-instanton ambiguity from a lateral sum.

    Returns ``re(lateral - side * i * sigma * exp(-action / lambda) * inst_prefactor)``.

    Raises
    ------
    NumericsError
        If the combination keeps an imaginary part above ``1e-8 |lateral|``.
    """
    if not action > 0:
        raise ValueError("action must be positive")
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    val = complex(lateral) - side * 1j * sigma * np.exp(-action / lam) * inst_prefactor
    if abs(val.imag) > 1e-8 * abs(lateral):
        raise NumericsError(
            f"sigma or A inconsistent: residual imaginary part {val.imag:.3e}")
    return float(val.real)


@dataclass(frozen=True)
class ResummationReport:
    lam: float
    naive_partial_sums: RealSeries
    optimal_truncation_value: float
    optimal_order: int
    lateral_plus: complex
    lateral_minus: complex
    ambiguity: float
    action: float
    stokes_constant: float
    corrected_value: float
    oracle_value: float
    abs_error: float


def resummation_report(s: AsymptoticSeries, lam: float, oracle: float, sigma: float = None,
                       action: float = None, inst_prefactor: float = None,
                       pade_order: int = None) -> ResummationReport:
    """Full ladder at one coupling.

    ``sigma`` and ``action`` default to the series metadata; a series with
    no Borel singularity on the positive axis uses ``sigma = 0``.
    ``inst_prefactor`` defaults to ``1 / lambda``, the residue weight of a
    simple Borel pole under the ``(1/lambda) int e^{-t/lambda}`` Laplace form.
    """
    sigma = s.stokes_constant if sigma is None else sigma
    action = s.action if action is None else action
    sigma = 0.0 if sigma is None else float(sigma)
    action = 1.0 if action is None else float(action)
    if inst_prefactor is None:
        inst_prefactor = 1.0 / lam
    ps = partial_sums(s, lam)
    opt, order = optimal_truncation(s, lam)
    lp = borel_lateral(s, lam, 1, pade_order)
    lm = borel_lateral(s, lam, -1, pade_order)
    corr = resurgent_correct(lp, 1, sigma, action, lam, inst_prefactor)
    return ResummationReport(
        lam=float(lam),
        naive_partial_sums=RealSeries(np.arange(1, len(s) + 1, dtype=float), ps),
        optimal_truncation_value=opt,
        optimal_order=order,
        lateral_plus=lp,
        lateral_minus=lm,
        ambiguity=2 * abs(lp.imag),
        action=action,
        stokes_constant=sigma,
        corrected_value=corr,
        oracle_value=float(oracle),
        abs_error=abs(corr - oracle),
    )


# ---------------------------------------------------------------- loop action


def action_integral(model: ModelSpec, traj: TrajectorySpec, samples: int = 8192) -> float:
    """``|Im oint sqrt(det[H(k) - E]) dk|`` with ``E`` the mean eigenvalue.

    ``det[H - tr H / 2] = -disc / 4``; the square root is continued along
    the discretised loop by choosing, at each sample, the sign closest to
    the previous value.

    Raises
    ------
    NumericsError
        If the loop passes so close to an exceptional point that the sign
        choice is ambiguous.
    """
    if traj.kind != "Loop":
        raise ValueError("action_integral needs a closed loop")
    t = np.linspace(0.0, traj.period, samples + 1)
    k = traj.points(t)
    dk = traj.velocity_at(t)
    root = np.sqrt(-0.25 * model.discriminant(k).astype(complex))
    scale = np.abs(root).max()
    if scale == 0:
        return 0.0
    for j in range(1, root.size):
        if abs(root[j] - root[j - 1]) > abs(root[j] + root[j - 1]):
            root[j] = -root[j]
        if abs(root[j]) < 1e-9 * scale:
            raise NumericsError(f"branch tracking failed: loop meets an exceptional point at t={t[j]:.6g}")
        if abs(root[j] - root[j - 1]) > 0.5 * abs(root[j - 1]):
            raise NumericsError(f"branch tracking failed at t={t[j]:.6g}: increase samples")
    val = simpson(root * dk, x=t)
    return float(abs(val.imag))
