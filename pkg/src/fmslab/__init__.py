"""Numerical laboratory for driven non-Hermitian two-level systems near
exceptional points: Floquet monodromy, Stokes invariants, singularity
invariants of polynomial germs and Borel-Pade resummation."""

__version__ = "0.1.0"

from .numerics import (
    NumericsError,
    RealSeries,
    FitResult,
    eig_small,
    expm,
    fit_loglog,
    find_peaks,
    pade,
    integrate_ray,
)
from .models import ModelSpec, TrajectorySpec, EpLocation, hamiltonian, ep_location, trajectory_point
from .floquet import (
    MonodromyResult,
    propagate,
    quasienergies,
    normalize,
    unipotent_part,
    stokes_invariant,
    monodromy_fidelity,
    dark_state_phase,
)
