import numpy as np
import pytest

from fmslab.models import ModelSpec, TrajectorySpec, ep_location, hamiltonian, trajectory_point


def test_transmon_at_ep():
    h = hamiltonian(ModelSpec("TransmonEP2", {"kappa": 1.0}), 0)
    assert np.allclose(h, [[0, 0.25], [0.25, -0.5j]])


def test_rankk_nilpotent_and_shifted():
    assert np.allclose(hamiltonian(ModelSpec("RankK", {"k": 2}), 0), [[0, 1], [0, 0]])
    assert np.allclose(hamiltonian(ModelSpec("RankK", {"k": 2, "delta": 0.1}), 1), [[0, 1], [1 + 0.1j, 0]])


def test_ep_locations():
    assert ep_location(ModelSpec("TransmonEP2")).position == 0
    ryd = ModelSpec("Rydberg", {"gamma_loss": 1.0})
    assert ryd.params["Omega0"] == 0.5 and ep_location(ryd).position == 0
    ph = ModelSpec("PhotonicDimer", {"gamma_A": 1.0, "gamma_B": 0.0})
    assert ph.params["kappa_coupling"] == 0.5 and ep_location(ph).position == 0


@pytest.mark.parametrize("spec", [ModelSpec("TransmonEP2"), ModelSpec("Rydberg", {"gamma_loss": 0.7}),
                                  ModelSpec("PhotonicDimer", {"gamma_A": 0.8, "gamma_B": 0.1}),
                                  ModelSpec("RankK", {"k": 2, "delta": 0.3})])
def test_discriminant_vanishes_at_ep(spec):
    assert abs(spec.discriminant(ep_location(spec).position)) < 1e-12


def test_model_validation():
    with pytest.raises(ValueError):
        ModelSpec("TransmonEP2", {"kappa": -1})
    with pytest.raises(ValueError):
        ModelSpec("RankK", {"k": 0})
    with pytest.raises(ValueError):
        ModelSpec("Nope")
    with pytest.raises(ValueError):
        hamiltonian(ModelSpec("TransmonEP2"), complex("nan"))


def test_loop_points():
    tr = TrajectorySpec(center=0.1 + 0.2j, radius=0.3, omega=0.5)
    assert trajectory_point(tr, 0) == pytest.approx(0.4 + 0.2j)
    assert trajectory_point(tr, tr.period / 2) == pytest.approx(-0.2 + 0.2j)
    assert trajectory_point(TrajectorySpec(center=0.7j, radius=0), 3.0) == 0.7j


def test_trajectory_validation():
    with pytest.raises(ValueError):
        TrajectorySpec(steps=1000)
    with pytest.raises(ValueError):
        TrajectorySpec(omega=0)
    with pytest.raises(ValueError):
        TrajectorySpec(orientation=2)
