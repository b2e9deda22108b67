import json
from pathlib import Path

import pytest

from fmslab.cli import main, read_config, validate

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

TABLE_I = """
[experiment]
name = simulate

[model]
family = TransmonEP2
kappa = 1.0

[trajectory]
kind = Loop
radius = 0.15
omega = 0.05
steps = 1024
"""


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_validate_valid(tmp_path):
    assert validate(read_config(write(tmp_path, TABLE_I))) == []


def test_validate_negative_kappa(tmp_path):
    diags = validate(read_config(write(tmp_path, TABLE_I.replace("kappa = 1.0", "kappa = -1"))))
    assert len(diags) == 1 and diags[0].startswith("model.kappa")


def test_validate_steps(tmp_path):
    diags = validate(read_config(write(tmp_path, TABLE_I.replace("steps = 1024", "steps = 1000"))))
    assert len(diags) == 1 and diags[0].startswith("trajectory.steps")


def test_validate_reports_all(tmp_path):
    text = TABLE_I.replace("kappa = 1.0", "kappa = -1").replace("steps = 1024", "steps = 3")
    assert len(validate(read_config(write(tmp_path, text)))) == 2


def test_validate_command_exit(tmp_path, capsys):
    assert main(["validate", "--config", write(tmp_path, TABLE_I)]) == 0
    bad = write(tmp_path, TABLE_I.replace("kappa = 1.0", "kappa = -1"), "bad.ini")
    assert main(["validate", "--config", bad]) == 2
    assert "model.kappa" in capsys.readouterr().out


def test_simulate_json(tmp_path):
    out = tmp_path / "sim.json"
    assert main(["simulate", "--config", write(tmp_path, TABLE_I), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    res = doc["result"]
    for key in ("monodromy", "normalized", "quasienergies", "stokes_invariant", "converged", "isometry"):
        assert key in res
    assert doc["config"]["model"]["family"] == "TransmonEP2"
    man = json.loads((tmp_path / "sim.json.manifest.json").read_text())
    assert man["convergence_flags"] == [True] and len(man["sha256"]) == 64


def test_invariants_x9(tmp_path):
    out = tmp_path / "inv.json"
    assert main(["invariants", "--config", str(CONFIGS / "invariants_x9.ini"), "--out", str(out)]) == 0
    res = json.loads(out.read_text())["result"]
    assert res["milnor"] == 9 and res["tjurina"] == 9 and res["discrepancy"] is True


def test_empty_grid_exit_2(tmp_path):
    text = "[experiment]\nname = scaling-static\n[model]\nfamily = TransmonEP2\n[grids]\nR =\n"
    out = tmp_path / "s.csv"
    assert main(["scaling-static", "--config", write(tmp_path, text), "--out", str(out)]) == 2
    assert not out.exists()


def test_non_isolated_exit_3(tmp_path):
    text = "[experiment]\nname = invariants\n[options]\ngerm = x^2*y^2\n"
    assert main(["invariants", "--config", write(tmp_path, text), "--out", str(tmp_path / "o.json")]) == 3


def test_io_exit_4(tmp_path):
    out = tmp_path / "missing" / "o.csv"
    assert main(["scaling-static", "--config", str(CONFIGS / "scaling_static.ini"), "--out", str(out)]) == 4
    assert main(["simulate", "--config", str(tmp_path / "nope.ini"), "--out", str(out)]) == 4


def test_csv_format(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["scaling-static", "--config", str(CONFIGS / "scaling_static.ini"), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "R [control units],gap [energy units]"
    assert len(lines) == 22
    for cell in lines[1].split(","):
        assert format(float(cell), ".17g") == cell
    assert float(lines[1].split(",")[0]) == 1e-3


@pytest.mark.parametrize("experiment,config", [("resurge", "resurge.ini"), ("qgt-map", "qgt_rank2.ini")])
def test_workers_do_not_change_output(tmp_path, experiment, config):
    outs = []
    for w in (1, 4):
        out = tmp_path / f"{w}.csv"
        assert main([experiment, "--config", str(CONFIGS / config), "--out", str(out), "--workers", str(w)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_qgt_map_emits_splitting(tmp_path):
    out = tmp_path / "q.csv"
    assert main(["qgt-map", "--config", str(CONFIGS / "qgt_rank2.ini"), "--out", str(out)]) == 0
    header = out.read_text().splitlines()[0]
    assert "splitting_re [energy units]" in header
