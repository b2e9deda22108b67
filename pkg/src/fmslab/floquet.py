"""One-period propagation and monodromy observables.

The propagator is the midpoint-exponential product

    U(T) = prod_{j=N-1..0} exp(-i H(t_j + dt/2) dt),   dt = T / N,

with each 2x2 factor exponentiated in closed form and the product formed by
a pairwise tree (same ordering, fewer roundoff-accumulating serial steps).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .models import ModelSpec, TrajectorySpec
from .numerics import NumericsError, expm

DEFAULT_TOL = 1e-8
MAX_STEPS = 2**20


class ConvergenceError(NumericsError):
    """Step doubling did not reach the requested tolerance."""

    def __init__(self, message, norm_n=None, norm_2n=None, change=None):
        super().__init__(message)
        self.norm_n = norm_n
        self.norm_2n = norm_2n
        self.change = change


@dataclass(frozen=True)
class MonodromyResult:
    """One-period propagator and derived quantities.

    ``change`` is the relative Frobenius distance between the N-step and
    2N-step propagators, the quantity used for the convergence flag.
    """

    monodromy: np.ndarray
    normalized: np.ndarray
    quasienergies: np.ndarray
    unipotent: np.ndarray
    stokes_invariant: float
    converged: bool
    step_count_used: int
    period: float
    change: float


# ---------------------------------------------------------------- kernels


def expm2_batch(a: np.ndarray) -> np.ndarray:
    """Closed-form exponential of a stack of 2x2 matrices, shape (..., 2, 2).

    Uses ``exp(A) = e^{tr A / 2} (cosh s I + sinh(s)/s B)`` with ``B`` the
    traceless part and ``s^2 = -det B``.
    """
    a = np.asarray(a, dtype=complex)
    half_tr = 0.5 * (a[..., 0, 0] + a[..., 1, 1])
    b = a.copy()
    b[..., 0, 0] -= half_tr
    b[..., 1, 1] -= half_tr
    s2 = b[..., 0, 0] ** 2 + b[..., 0, 1] * b[..., 1, 0]
    s = np.sqrt(s2)
    small = np.abs(s) < 1e-4
    safe = np.where(small, 1.0, s)
    # series through s^6 keeps full precision below |s| = 1e-4
    sinhc = np.where(small, 1 + s2 / 6 + s2 * s2 / 120, np.sinh(safe) / safe)
    cosh = np.where(small, 1 + s2 / 2 + s2 * s2 / 24, np.cosh(s))
    out = sinhc[..., None, None] * b
    out[..., 0, 0] += cosh
    out[..., 1, 1] += cosh
    return np.exp(half_tr)[..., None, None] * out


def ordered_product(mats: np.ndarray) -> np.ndarray:
    """``mats[N-1] @ ... @ mats[1] @ mats[0]`` by pairwise reduction."""
    mats = np.asarray(mats, dtype=complex)
    if mats.shape[0] == 0:
        return np.eye(mats.shape[-1], dtype=complex)
    while mats.shape[0] > 1:
        if mats.shape[0] % 2:
            mats = np.concatenate([mats, np.eye(mats.shape[-1], dtype=complex)[None]])
        mats = mats[1::2] @ mats[0::2]
    return mats[0]


def hamiltonian_along(model: ModelSpec, traj: TrajectorySpec, t: np.ndarray,
                      perturbation: Optional[np.ndarray] = None) -> np.ndarray:
    h = model.hamiltonian_batch(traj.points(t))
    if perturbation is not None:
        h = h + np.asarray(perturbation, dtype=complex)
    return h


def propagator(model: ModelSpec, traj: TrajectorySpec, steps: int, t0: float = 0.0,
               t1: Optional[float] = None, perturbation: Optional[np.ndarray] = None,
               return_log_det: bool = False):
    """Midpoint-exponential propagator from ``t0`` to ``t1`` with ``steps`` factors.

    With ``return_log_det`` also returns ``log det U = -i dt sum_j tr H_j``.
    """
    if t1 is None:
        t1 = traj.period
    dt = (t1 - t0) / steps
    tm = t0 + (np.arange(steps) + 0.5) * dt
    h = hamiltonian_along(model, traj, tm, perturbation)
    u = ordered_product(expm2_batch(-1j * dt * h))
    if not np.all(np.isfinite(u)):
        raise NumericsError("propagator overflowed")
    if return_log_det:
        return u, complex(-1j * dt * np.sum(h[:, 0, 0] + h[:, 1, 1]))
    return u


# ---------------------------------------------------------------- observables


def quasienergies(m: np.ndarray, period: float, log_det: complex = None) -> np.ndarray:
    """Floquet exponents ``(i/T) Log mu`` for the eigenvalues ``mu`` of ``m``.

    The principal logarithm puts ``Re eps`` in ``[-omega/2, omega/2)`` with
    ``omega = 2 pi / T``. For 2x2 input the eigenvalues are taken from the
    unit-determinant rescaling, ``mu = e^{log det / 2} (t/2 +- sqrt(t^2/4 - 1))``,
    with the smaller root as the reciprocal of the larger; this keeps the
    subdominant multiplier accurate when ``|mu_1| >> |mu_2|``.
    """
    from .numerics import eig_small

    m = np.asarray(m, dtype=complex)
    omega = 2 * np.pi / period
    if m.shape == (2, 2):
        if log_det is None:
            det = np.linalg.det(m)
            if det == 0:
                raise NumericsError("monodromy is singular")
            log_det = np.log(det)
        # no sign fixing here: a flip would shift both exponents by omega / 2
        mt = m * np.exp(-0.5 * log_det)
        half = 0.5 * np.trace(mt)
        root = np.sqrt(half * half - 1)
        big = half + root if abs(half + root) >= abs(half - root) else half - root
        logs = [np.log(big) + 0.5 * log_det, -np.log(big) + 0.5 * log_det]
    else:
        det = np.linalg.det(m)
        if det == 0:
            raise NumericsError("monodromy is singular")
        logs = [np.log(p[0]) for p in eig_small(m)]
    eps = []
    for lg in logs:
        e = 1j / period * lg
        re = (e.real + omega / 2) % omega - omega / 2
        eps.append(complex(re, e.imag))
    eps.sort(key=lambda z: (z.real, z.imag))
    return np.array(eps)


def quasienergy_splitting(eps: np.ndarray, omega: float) -> float:
    """Distance between two quasienergy real parts on the circle of length omega."""
    d = abs(eps[0].real - eps[1].real) % omega
    return float(min(d, omega - d))


def normalize(m: np.ndarray, log_det: complex = None) -> np.ndarray:
    """Scale ``m`` to unit determinant, picking the root with ``Re tr >= 0``.

    ``log_det`` may carry the exact logarithm of the determinant; for a
    midpoint-exponential product it is ``-i sum_j tr H_j dt``. Strongly
    non-normal monodromies lose their determinant to cancellation in
    ``ad - bc``, so propagation results are normalized this way.
    """
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    if log_det is None:
        det = np.linalg.det(m)
        if det == 0 or not np.isfinite(det):
            raise NumericsError("cannot normalize a singular matrix")
        log_det = np.log(det)
    out = m * np.exp(-log_det / n)
    if n == 2 and np.trace(out).real < 0:
        out = -out
    return out


def unipotent_part(mt: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Unipotent factor of the multiplicative Jordan-Chevalley split of a 2x2.

    The eigenvalues count as degenerate when they differ by at most
    ``tol * max(1, sqrt(|mt|_F))``: a Jordan block with off-diagonal entry
    ``s`` splits by ``O(sqrt(s * eps))`` under an entry perturbation ``eps``,
    so a scale-free threshold would misread every large computed Stokes
    matrix as semisimple. ``det mt = 1`` is assumed rather than recomputed,
    since ``ad - bc`` cancels catastrophically for large entries.
    """
    mt = np.asarray(mt, dtype=complex)
    tr = np.trace(mt)
    disc = tr * tr - 4
    lam = 0.5 * tr
    if abs(np.sqrt(disc)) <= tol * max(1.0, np.sqrt(np.linalg.norm(mt))):
        return mt / lam
    return np.eye(2, dtype=complex)


def stokes_invariant(result_or_matrix) -> float:
    """Imaginary part of the trace of the normalized monodromy."""
    mt = getattr(result_or_matrix, "normalized", result_or_matrix)
    return float(np.trace(mt).imag)


def monodromy_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Normalized Hilbert-Schmidt overlap ``|tr(a^dag b)| / (|a|_F |b|_F)``.

    Equals ``|tr(a^dag b)| / n`` for unitary inputs and stays in [0, 1] for
    the non-unitary unit-determinant matrices produced by lossy drives.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("zero matrix has no fidelity")
    return float(min(1.0, abs(np.trace(a.conj().T @ b)) / (na * nb)))


# ---------------------------------------------------------------- driver


def propagate(model: ModelSpec, traj: TrajectorySpec, tol: float = DEFAULT_TOL,
              max_steps: int = MAX_STEPS, perturbation: Optional[np.ndarray] = None) -> MonodromyResult:
    """Converged one-period monodromy by step doubling.

    The relative change ``|U_N - U_2N|_F / |U_2N|_F`` must fall below
    ``tol``; the 2N result is returned.

    Raises
    ------
    ConvergenceError
        When ``2N`` would exceed ``max_steps`` before converging.
    """
    n = int(traj.steps)
    u_n = propagator(model, traj, n, perturbation=perturbation)
    while True:
        u_2n, log_det = propagator(model, traj, 2 * n, perturbation=perturbation, return_log_det=True)
        norm_2n = np.linalg.norm(u_2n)
        change = np.linalg.norm(u_n - u_2n) / norm_2n
        if change < tol:
            break
        if 4 * n > max_steps:
            raise ConvergenceError(
                f"no convergence at {2 * n} steps: relative change {change:.3e}",
                norm_n=float(np.linalg.norm(u_n)), norm_2n=float(norm_2n), change=float(change))
        n *= 2
        u_n = u_2n
    mt = normalize(u_2n, log_det)
    return MonodromyResult(
        monodromy=u_2n,
        normalized=mt,
        quasienergies=quasienergies(u_2n, traj.period, log_det),
        unipotent=unipotent_part(mt),
        stokes_invariant=stokes_invariant(mt),
        converged=True,
        step_count_used=2 * n,
        period=traj.period,
        change=float(change),
    )


# ---------------------------------------------------------------- branch tracking


def eig2_batch(h: np.ndarray):
    """Closed-form eigenvalues and unit right eigenvectors of stacked 2x2s.

    Returns ``vals`` with shape (N, 2) and ``vecs`` with shape (N, 2, 2) where
    ``vecs[j, :, b]`` belongs to ``vals[j, b]``.
    """
    p, q, r, s = h[:, 0, 0], h[:, 0, 1], h[:, 1, 0], h[:, 1, 1]
    mean = 0.5 * (p + s)
    root = np.sqrt((0.5 * (p - s)) ** 2 + q * r)
    vals = np.stack([mean - root, mean + root], axis=1)
    vecs = np.empty(h.shape, dtype=complex)
    for b in range(2):
        lam = vals[:, b]
        v1 = np.stack([q, lam - p], axis=1)
        v2 = np.stack([lam - s, r], axis=1)
        use1 = np.linalg.norm(v1, axis=1) >= np.linalg.norm(v2, axis=1)
        v = np.where(use1[:, None], v1, v2)
        nv = np.linalg.norm(v, axis=1)
        v = np.where(nv[:, None] > 0, v / np.where(nv > 0, nv, 1)[:, None], np.eye(2)[b][None])
        vecs[:, :, b] = v
    return vals, vecs


def track_branches(h: np.ndarray, min_overlap: float = 0.0):
    """Continue the two eigen-branches of ``h[j]`` by maximal eigenvector overlap.

    Returns ``vals`` (N, 2), ``vecs`` (N, 2, 2) with consistent labels and the
    smallest accepted overlap. Raises if the best overlap drops below
    ``min_overlap``.
    """
    vals, vecs = eig2_batch(h)
    a, b = vecs[:-1], vecs[1:]
    ov = np.abs(np.einsum("jib,jic->jbc", a.conj(), b))
    keep = ov[:, 0, 0] + ov[:, 1, 1]
    swap = ov[:, 0, 1] + ov[:, 1, 0]
    raw = swap > keep
    parity = np.r_[False, np.cumsum(raw) % 2 == 1]
    vals = np.where(parity[:, None], vals[:, ::-1], vals)
    vecs = np.where(parity[:, None, None], vecs[:, :, ::-1], vecs)
    step_ov = np.where(raw[:, None], np.stack([ov[:, 0, 1], ov[:, 1, 0]], 1),
                       np.stack([ov[:, 0, 0], ov[:, 1, 1]], 1)).min(axis=1)
    worst = float(step_ov.min()) if step_ov.size else 1.0
    if worst < min_overlap:
        j = int(np.argmin(step_ov)) + 1
        raise NumericsError(f"branch tracking failed at step {j}: overlap {worst:.3f}")
    return vals, vecs, worst


def dark_state_phase(model: ModelSpec, traj: TrajectorySpec, n_periods: int = 1,
                     steps_per_period: Optional[int] = None, branch: str = "dark") -> float:
    """Geometric phase of the followed eigenstate after ``n_periods`` loops.

    The initial state is the instantaneous eigenvector of ``H(k(0))`` with the
    larger imaginary eigenvalue (slower decay). The returned angle is
    ``arg <psi0 | psi(nT)>`` after dividing out ``exp(-i int lambda dt)`` of
    the branch followed by eigenvector continuity.
    """
    if steps_per_period is None:
        steps_per_period = propagate(model, traj).step_count_used
    period = traj.period
    total = n_periods * steps_per_period
    dt = period / steps_per_period
    tm = (np.arange(total) + 0.5) * dt
    h = hamiltonian_along(model, traj, tm)
    u = ordered_product(expm2_batch(-1j * dt * h))
    if not np.all(np.isfinite(u)):
        raise NumericsError("propagation overflowed")
    grid = np.r_[0.0, tm]
    vals, vecs, _ = track_branches(hamiltonian_along(model, traj, grid))
    b = int(np.argmax(vals[0].imag)) if branch == "dark" else int(np.argmin(vals[0].imag))
    psi0 = vecs[0, :, b]
    psi = u @ psi0
    # midpoint rule on the tracked branch (first grid point is t=0)
    dyn = np.sum(vals[1:, b]) * dt
    amp = np.vdot(psi0, psi) / np.exp(-1j * dyn)
    return float(np.angle(amp))
