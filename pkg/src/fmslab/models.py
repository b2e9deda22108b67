"""Parametric non-Hermitian 2x2 Hamiltonian families and drive trajectories."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

FAMILIES = ("TransmonEP2", "RankK", "Rydberg", "PhotonicDimer")

_DEFAULTS = {
    "TransmonEP2": {"kappa": 1.0, "J0": None, "Delta0": 0.0},
    "RankK": {"k": 1, "delta": 0.0},
    "Rydberg": {"gamma_loss": 1.0, "Omega0": None, "Delta0": 0.0},
    "PhotonicDimer": {"beta": 0.0, "kappa_coupling": None, "gamma_A": 1.0, "gamma_B": 0.0, "Delta0": 0.0},
}


@dataclass(frozen=True)
class ModelSpec:
    """A Hamiltonian family plus its parameters.

    The complex control parameter ``lambda`` enters each family as

    * ``TransmonEP2``: ``J = Re lambda + J0``, ``Delta = Im lambda + Delta0``;
      ``J0`` defaults to ``kappa / 4`` so the exceptional point sits at 0.
    * ``RankK``: ``[[0, 1], [lambda**(k+1) + i*delta, 0]]``.
    * ``Rydberg``: ``Omega = Re lambda + Omega0``, ``Delta = Im lambda + Delta0``;
      ``Omega0`` defaults to ``gamma_loss / 2``.
    * ``PhotonicDimer``: ``[[beta - i gamma_A, kc], [kc, beta + Delta - i gamma_B]]``
      with ``kc = Re lambda + kappa_coupling`` and ``Delta = Im lambda + Delta0``;
      ``kappa_coupling`` defaults to ``|gamma_A - gamma_B| / 2``.
    """

    family: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        merged = dict(_DEFAULTS[self.family])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise ValueError(f"unknown parameters for {self.family}: {sorted(unknown)}")
        merged.update(self.params)
        if self.family == "TransmonEP2":
            if merged["kappa"] <= 0:
                raise ValueError("kappa must be positive")
            if merged["J0"] is None:
                merged["J0"] = merged["kappa"] / 4
        elif self.family == "RankK":
            if int(merged["k"]) != merged["k"] or merged["k"] < 1:
                raise ValueError("k must be a positive integer")
            merged["k"] = int(merged["k"])
        elif self.family == "Rydberg":
            if merged["gamma_loss"] <= 0:
                raise ValueError("gamma_loss must be positive")
            if merged["Omega0"] is None:
                merged["Omega0"] = merged["gamma_loss"] / 2
        else:
            if merged["kappa_coupling"] is None:
                merged["kappa_coupling"] = abs(merged["gamma_A"] - merged["gamma_B"]) / 2
        object.__setattr__(self, "params", merged)

    @property
    def rank(self) -> int:
        """Pole order minus one of the connection at the EP (0 for a tame EP2)."""
        return self.params["k"] if self.family == "RankK" else 0

    def hamiltonian_batch(self, lam) -> np.ndarray:
        """Vectorised :func:`hamiltonian` over an array of parameter values."""
        lam = np.asarray(lam, dtype=complex)
        p = self.params
        h = np.zeros(lam.shape + (2, 2), dtype=complex)
        if self.family == "RankK":
            h[..., 0, 1] = 1.0
            h[..., 1, 0] = lam ** (p["k"] + 1) + 1j * p["delta"]
        elif self.family == "TransmonEP2":
            j = lam.real + p["J0"]
            h[..., 0, 1] = j
            h[..., 1, 0] = j
            h[..., 1, 1] = lam.imag + p["Delta0"] - 0.5j * p["kappa"]
        elif self.family == "Rydberg":
            om = lam.real + p["Omega0"]
            h[..., 0, 1] = om
            h[..., 1, 0] = om
            h[..., 1, 1] = lam.imag + p["Delta0"] - 1j * p["gamma_loss"]
        else:
            kc = lam.real + p["kappa_coupling"]
            h[..., 0, 0] = p["beta"] - 1j * p["gamma_A"]
            h[..., 1, 1] = p["beta"] + lam.imag + p["Delta0"] - 1j * p["gamma_B"]
            h[..., 0, 1] = kc
            h[..., 1, 0] = kc
        return h

    def discriminant(self, lam) -> np.ndarray:
        """``(tr H)^2 - 4 det H``; its zeros are the exceptional points."""
        h = self.hamiltonian_batch(lam)
        tr = h[..., 0, 0] + h[..., 1, 1]
        det = h[..., 0, 0] * h[..., 1, 1] - h[..., 0, 1] * h[..., 1, 0]
        return tr * tr - 4 * det


def hamiltonian(model: ModelSpec, lam: complex) -> np.ndarray:
    """The 2x2 family member at control parameter ``lam``."""
    lam = complex(lam)
    if not np.isfinite(lam):
        raise ValueError("lambda must be finite")
    return model.hamiltonian_batch(lam)


@dataclass(frozen=True)
class EpLocation:
    position: complex
    order: int


def ep_location(model: ModelSpec) -> EpLocation:
    """Closed-form exceptional point in the control plane of ``model``."""
    if model.family == "RankK":
        k, delta = model.params["k"], model.params["delta"]
        if delta == 0:
            return EpLocation(0j, 2)
        roots = [(-1j * delta) ** (1 / (k + 1)) * np.exp(2j * np.pi * m / (k + 1)) for m in range(k + 1)]
        # nearest the positive real axis: smallest |arg|
        best = min(roots, key=lambda z: (abs(np.angle(z)), -z.real))
        return EpLocation(complex(best), 2)
    p = model.params
    if model.family == "TransmonEP2":
        pos = complex(p["kappa"] / 4 - p["J0"], -p["Delta0"])
    elif model.family == "Rydberg":
        pos = complex(p["gamma_loss"] / 2 - p["Omega0"], -p["Delta0"])
    else:
        pos = complex(abs(p["gamma_A"] - p["gamma_B"]) / 2 - p["kappa_coupling"], -p["Delta0"])
    return EpLocation(pos, 2)


@dataclass(frozen=True)
class TrajectorySpec:
    """Closed loop or linear sweep through the complex control plane.

    Loop: ``center + radius * exp(i * orientation * (start_angle - omega t))``.
    LinearSweep: ``velocity * (t - T/2) + offset``. In both cases the
    duration is ``T = 2 pi / omega`` and ``steps`` is a power of two.
    """

    kind: str = "Loop"
    center: complex = 0j
    radius: float = 0.0
    omega: float = 0.05
    start_angle: float = 0.0
    orientation: int = -1
    steps: int = 1024
    velocity: float = 0.0
    offset: complex = 0j

    def __post_init__(self):
        if self.kind not in ("Loop", "LinearSweep"):
            raise ValueError(f"unknown trajectory kind {self.kind!r}")
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        n = int(self.steps)
        if n < 64 or n & (n - 1):
            raise ValueError("steps must be a power of two >= 64")

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega

    def points(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "Loop":
            return self.center + self.radius * np.exp(1j * self.orientation * (self.start_angle - self.omega * t))
        return self.velocity * (t - self.period / 2) + self.offset

    def velocity_at(self, t) -> np.ndarray:
        """Time derivative of the trajectory point."""
        t = np.asarray(t, dtype=float)
        if self.kind == "Loop":
            return (-1j * self.orientation * self.omega) * (self.points(t) - self.center)
        return np.full(t.shape, complex(self.velocity))


def trajectory_point(traj: TrajectorySpec, t: float) -> complex:
    return complex(traj.points(t))
