import numpy as np
import pytest

from fmslab.models import ModelSpec, TrajectorySpec
from fmslab.scaling import (
    breakdown_gap,
    disorder_matrix,
    disorder_robustness,
    dynamic_gap_scaling,
    static_gap_scaling,
)

R_GRID = np.logspace(-3, -1, 21)


def test_static_transmon():
    rep = static_gap_scaling(ModelSpec("TransmonEP2"), R_GRID)
    assert rep.passed and abs(rep.fit.slope - 0.5) < 0.02


def test_static_rank2_matches_closed_form():
    rep = static_gap_scaling(ModelSpec("RankK", {"k": 2}), R_GRID)
    assert np.allclose(rep.series.y, 2 * R_GRID**1.5, rtol=1e-12)
    assert rep.fit.slope == pytest.approx(1.5, abs=1e-9)


def test_static_linear_gap():
    # k = 1: eigenvalues +-lambda, gap 2R
    rep = static_gap_scaling(ModelSpec("RankK", {"k": 1}), R_GRID)
    assert rep.fit.slope == pytest.approx(1.0, abs=1e-9)


def test_static_rejects_nonpositive_radius():
    with pytest.raises(ValueError):
        static_gap_scaling(ModelSpec("TransmonEP2"), [0.0, 0.1, 0.2, 0.3])


@pytest.mark.parametrize("k", [1, 2, 5])
def test_breakdown_gap_closed_form(k):
    # 2 ln gap = ln rate has the omega-free root z_c = ((k + 1) / sqrt(c))^(-1/k)
    c, r0 = 2.0, 1.0
    for w in (1e-3, 1e-2):
        zc = ((k + 1) / np.sqrt(c)) ** (-1 / k)
        assert breakdown_gap(k, w, c, r0) == pytest.approx(np.sqrt(c) * zc ** (-(k + 1)) * w * r0, rel=1e-10)


def test_tame_reference_slope():
    rep = dynamic_gap_scaling("tame", np.logspace(-4, -1, 16))
    assert rep.passed and abs(rep.fit.slope - 1.0) < 0.05


def test_dynamic_needs_two_decades():
    with pytest.raises(ValueError):
        dynamic_gap_scaling(1, np.linspace(0.01, 0.05, 8))


def test_disorder_matrix_counter_seeded():
    assert np.array_equal(disorder_matrix(7, 3), disorder_matrix(7, 3))
    assert not np.array_equal(disorder_matrix(7, 3), disorder_matrix(7, 4))
    g = disorder_matrix(11, 0)
    assert np.all(np.abs(g.real) <= 0.5) and np.all(np.abs(g.imag) <= 0.5)


def test_disorder_zero_strength():
    cur = disorder_robustness(ModelSpec("TransmonEP2"), TrajectorySpec(radius=0.15, omega=0.05), [0.0], trials=32)
    assert cur.fms.y[0] == 1 and cur.spectral.y[0] == 1


def test_disorder_needs_trials():
    with pytest.raises(ValueError):
        disorder_robustness(ModelSpec("TransmonEP2"), TrajectorySpec(radius=0.15), [0.1], trials=8)
