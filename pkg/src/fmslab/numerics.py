"""Small dense complex linear algebra, quadrature, fitting and rational
approximation primitives.

Matrices are numpy ``complex128`` arrays of shape ``(n, n)`` with ``n <= 8``.
Everything here is a pure function of its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

MAX_DIM = 8


class NumericsError(RuntimeError):
    """Raised when a numerical kernel cannot deliver its stated accuracy."""


@dataclass(frozen=True)
class RealSeries:
    """Ordered ``(x, y)`` samples with strictly increasing ``x``."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("series values must be finite")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise ValueError("x must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.x.size


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    residual_rms: float


def _as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if a.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {a.shape[0]} exceeds {MAX_DIM}")
    if not np.all(np.isfinite(a)):
        raise NumericsError("matrix has non-finite entries")
    return a


# ---------------------------------------------------------------- eigen


def _eig2(a: np.ndarray):
    p, q = a[0, 0], a[0, 1]
    r, s = a[1, 0], a[1, 1]
    mean = 0.5 * (p + s)
    half = 0.5 * (p - s)
    root = np.sqrt(half * half + q * r)
    vals = [mean - root, mean + root]
    vecs = []
    for lam in vals:
        # pick the better conditioned of the two null-space candidates
        v1 = np.array([q, lam - p])
        v2 = np.array([lam - s, r])
        v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
        nv = np.linalg.norm(v)
        if nv == 0.0:
            # scalar matrix: any basis works
            v = np.array([1.0, 0.0], dtype=complex) if not vecs else np.array([0.0, 1.0], dtype=complex)
            nv = 1.0
        vecs.append(v / nv)
    if root == 0 and np.linalg.norm(a - mean * np.eye(2)) == 0:
        vecs = [np.array([1.0, 0.0], dtype=complex), np.array([0.0, 1.0], dtype=complex)]
    return vals, vecs


def _qr_eigenvalues(a: np.ndarray, max_iter: int) -> list:
    """Shifted QR iteration with deflation; returns eigenvalues."""
    h = a.copy()
    n = h.shape[0]
    vals = []
    it = 0
    scale = max(np.abs(h).max(), 1e-300)
    while n > 0:
        if n == 1:
            vals.append(h[0, 0])
            break
        if n == 2:
            v, _ = _eig2(h[:2, :2])
            vals.extend(v)
            break
        sub = abs(h[n - 1, n - 2])
        if sub <= 1e-16 * (abs(h[n - 1, n - 1]) + abs(h[n - 2, n - 2]) + scale * 1e-3):
            vals.append(h[n - 1, n - 1])
            h = h[: n - 1, : n - 1]
            n -= 1
            continue
        it += 1
        if it > max_iter:
            raise NumericsError(f"QR eigenvalue iteration did not converge in {max_iter} steps")
        tail, _ = _eig2(h[n - 2 :, n - 2 :])
        mu = min(tail, key=lambda z: abs(z - h[n - 1, n - 1]))
        if it % 11 == 0:
            mu = mu + 0.7 * sub  # exceptional shift against cycling
        qm, rm = np.linalg.qr(h - mu * np.eye(n))
        h = rm @ qm + mu * np.eye(n)
    return vals


def _inverse_iteration(a: np.ndarray, lam: complex, iters: int = 6):
    n = a.shape[0]
    scale = max(np.linalg.norm(a), 1.0)
    shift = lam + 1e-10 * scale * (1 + 1j)
    rng = np.random.default_rng(n)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(iters):
        try:
            w = np.linalg.solve(a - shift * np.eye(n), v)
        except np.linalg.LinAlgError:
            shift = shift + 1e-8 * scale
            continue
        v = w / np.linalg.norm(w)
    lam = np.vdot(v, a @ v)
    return lam, v


def eig_small(m, max_iter: int = 500):
    """Eigenpairs of a small complex matrix.

    Parameters
    ----------
    m : array_like
        Square matrix, dimension at most 8.
    max_iter : int
        Cap on QR sweeps for ``n > 2``.

    Returns
    -------
    list of (complex, ndarray)
        Eigenvalue and unit-norm right eigenvector, sorted by real part then
        imaginary part.
    """
    a = _as_matrix(m)
    n = a.shape[0]
    if n == 1:
        pairs = [(complex(a[0, 0]), np.ones(1, dtype=complex))]
    elif n == 2:
        vals, vecs = _eig2(a)
        pairs = [(complex(v), w) for v, w in zip(vals, vecs)]
    else:
        vals = _qr_eigenvalues(a, max_iter)
        tol = 1e-12 * max(1.0, np.linalg.norm(a))
        pairs = []
        for lam in vals:
            lam2, v = _inverse_iteration(a, lam)
            res = np.linalg.norm(a @ v - lam2 * v)
            if res > tol:
                raise NumericsError(f"eigenpair residual {res:.3e} above {tol:.1e}")
            pairs.append((complex(lam2), v))
    pairs.sort(key=lambda p: (p[0].real, p[0].imag))
    return pairs


# ---------------------------------------------------------------- expm

_PADE6 = [1.0, 1 / 2, 5 / 44, 1 / 66, 1 / 792, 1 / 15840, 1 / 665280]


def expm(m) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a [6/6] Pade kernel."""
    a = _as_matrix(m)
    n = a.shape[0]
    nrm = np.abs(a).sum(axis=0).max()
    if nrm > 700.0:
        raise NumericsError(f"expm: 1-norm {nrm:.3e} would overflow")
    s = 0 if nrm <= 0.5 else int(np.ceil(np.log2(nrm / 0.5)))
    x = a / 2.0**s
    eye = np.eye(n, dtype=complex)
    num = _PADE6[0] * eye
    den = _PADE6[0] * eye
    p = eye
    for j in range(1, 7):
        p = p @ x
        num = num + _PADE6[j] * p
        den = den + (-1) ** j * _PADE6[j] * p
    r = np.linalg.solve(den, num)
    for _ in range(s):
        r = r @ r
    return r


# ---------------------------------------------------------------- fits


def fit_loglog(s: RealSeries) -> FitResult:
    """Least-squares line through ``(ln x, ln y)``."""
    if len(s) < 4:
        raise ValueError("fit_loglog needs at least 4 points")
    if np.any(s.x <= 0) or np.any(s.y <= 0):
        raise ValueError("fit_loglog needs strictly positive data")
    lx, ly = np.log(s.x), np.log(s.y)
    mx, my = lx.mean(), ly.mean()
    slope = np.sum((lx - mx) * (ly - my)) / np.sum((lx - mx) ** 2)
    intercept = my - slope * mx
    resid = ly - (slope * lx + intercept)
    return FitResult(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))))


def find_peaks(s: RealSeries, prominence: float, periodic: bool = False) -> list:
    """Locations of local maxima whose prominence is at least ``prominence``.

    Prominence is the height above the higher of the two minima separating
    the peak from the nearest taller point (or the series end) on each side.
    With ``periodic=True`` the first and last samples are neighbours.
    """
    if prominence <= 0:
        raise ValueError("prominence must be positive")
    y = s.y
    n = y.size
    if n < 3:
        return []
    if periodic:
        shift = int(np.argmin(y))
        order = np.r_[np.arange(shift, n), np.arange(0, shift), shift]
    else:
        order = np.arange(n)
    yy = y[order]
    m = yy.size
    peaks = []
    i = 1
    while i < m - 1:
        if yy[i] > yy[i - 1]:
            # walk over a flat top
            j = i
            while j + 1 < m - 1 and yy[j + 1] == yy[i]:
                j += 1
            if yy[j + 1] < yy[i]:
                h = yy[i]
                k = i - 1
                left = h
                while k >= 0 and yy[k] <= h:
                    left = min(left, yy[k])
                    k -= 1
                k = j + 1
                right = h
                while k < m and yy[k] <= h:
                    right = min(right, yy[k])
                    k += 1
                if h - max(left, right) >= prominence:
                    peaks.append(float(s.x[order[(i + j) // 2]]))
            i = j + 1
        else:
            i += 1
    return sorted(peaks)


# ---------------------------------------------------------------- pade


def pade(coeffs: Sequence[float], m: int, n: int, rtol: float = 1e-12):
    """[m/n] Pade approximant from Taylor coefficients.

    Returns ``(p, q)`` coefficient arrays in ascending powers with ``q[0] = 1``,
    padded to lengths ``m+1`` and ``n+1``. A rank-deficient but consistent
    Hankel system means the approximant sits in a degenerate block of the
    Pade table; the order is then lowered along the diagonal, which leaves the
    rational function unchanged. An inconsistent system raises.
    """
    c = np.asarray(coeffs, dtype=float)
    if m < 0 or n < 0:
        raise ValueError("orders must be nonnegative")
    if c.size < m + n + 1:
        raise ValueError(f"need {m + n + 1} coefficients, got {c.size}")

    def coef(k):
        return c[k] if k >= 0 else 0.0

    mm, nn = m, n
    while True:
        if nn == 0:
            q = np.array([1.0])
            break
        h = np.array([[coef(mm + i - j) for j in range(1, nn + 1)] for i in range(1, nn + 1)])
        rhs = -np.array([coef(mm + i) for i in range(1, nn + 1)])
        sv = np.linalg.svd(h, compute_uv=False)
        scale = max(np.abs(c[: m + n + 1]).max(), 1e-300)
        full_rank = sv.size and sv[-1] > rtol * max(sv[0], scale)
        if full_rank:
            q = np.r_[1.0, np.linalg.solve(h, rhs)]
            break
        sol, *_ = np.linalg.lstsq(h, rhs, rcond=rtol)
        if np.linalg.norm(h @ sol - rhs) > 1e-9 * scale * (1 + np.linalg.norm(sol)):
            raise NumericsError(
                f"singular Hankel system for [{m}/{n}]; try [{m - 1}/{n - 1}]"
            )
        if mm == 0:
            raise NumericsError(f"degenerate Pade block at [{m}/{n}]; try [{m - 1}/{n - 1}]")
        mm, nn = mm - 1, nn - 1
    p = np.array([sum(q[j] * coef(i - j) for j in range(min(i, nn) + 1)) for i in range(mm + 1)])
    return np.r_[p, np.zeros(m - mm)], np.r_[q, np.zeros(n - nn)]


# ---------------------------------------------------------------- quadrature

_GK_X, _GK_WK, _GK_WG = None, None, None


def _gk_nodes():
    global _GK_X, _GK_WK, _GK_WG
    if _GK_X is None:
        # Gauss-Kronrod 7-15 nodes and weights on [-1, 1]
        xk = np.array([
            0.991455371120812639206854697526329,
            0.949107912342758524526189684047851,
            0.864864423359769072789712788640926,
            0.741531185599394439863864773280788,
            0.586087235467691130294144845693013,
            0.405845151377397166906606412076961,
            0.207784955007898467600689403773245,
            0.0,
        ])
        wk = np.array([
            0.022935322010529224963732008058970,
            0.063092092629978553290700663189204,
            0.104790010322250183839876322541518,
            0.140653259715525918745189590510238,
            0.169004726639267902826583426598550,
            0.190350578064785409913256402421014,
            0.204432940075298892414161999234649,
            0.209482141084727828012999174891714,
        ])
        wg = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327])
        _GK_X = np.r_[-xk[:-1], xk[::-1]]
        _GK_WK = np.r_[wk[:-1], wk[::-1]]
        wg_full = np.zeros(15)
        # Gauss nodes are the odd-indexed Kronrod nodes
        g_idx = [1, 3, 5, 7, 9, 11, 13]
        wg_full[g_idx] = np.r_[wg[:3], wg[3], wg[:3][::-1]]
        _GK_WG = wg_full
    return _GK_X, _GK_WK, _GK_WG


def _adaptive_gk(g: Callable, a: float, b: float, tol: float, depth: int = 0):
    x, wk, wg = _gk_nodes()
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    fx = g(mid + half * x)
    k = half * np.dot(wk, fx)
    err = abs(half * np.dot(wg, fx) - k)
    if err <= tol or depth > 30:
        return k, err
    k1, e1 = _adaptive_gk(g, a, mid, tol / 2, depth + 1)
    k2, e2 = _adaptive_gk(g, mid, b, tol / 2, depth + 1)
    return k1 + k2, e1 + e2


def integrate_ray(f: Callable, angle: float, tol: float = 1e-10, scale: float = 1.0) -> complex:
    """Integrate ``f`` from 0 to infinity along the ray ``arg z = angle``.

    The ray is cut into panels of geometrically growing length (first panel
    ``scale``); each panel is integrated with adaptive Gauss-Kronrod. The
    integration stops when two consecutive panels contribute less than
    ``tol`` relative to the running total.

    Raises
    ------
    NumericsError
        If panel contributions grow over successive panels (no decay) or the
        ray length limit is reached.
    """
    phase = np.exp(1j * angle)

    def g(r):
        return np.asarray(f(r * phase), dtype=complex) * phase

    total = 0.0 + 0.0j
    a, width = 0.0, float(scale)
    small, growing, prev = 0, 0, None
    for _ in range(200):
        b = a + width
        coarse, _ = _adaptive_gk(g, a, b, np.inf)
        ref = max(abs(total) + abs(coarse), 1e-300)
        part, _ = _adaptive_gk(g, a, b, 0.1 * tol * ref)
        if not np.isfinite(part):
            raise NumericsError("integrand is not finite along the ray")
        total += part
        mag = abs(part)
        if prev is not None and mag > prev * 1.5 and mag > tol * abs(total):
            growing += 1
            if growing >= 3:
                raise NumericsError("integrand does not decay along the ray")
        else:
            growing = 0
        small = small + 1 if mag <= tol * abs(total) else 0
        if small >= 2:
            return complex(total)
        prev = mag
        a = b
        width *= 1.5
    raise NumericsError("ray integration did not terminate")
