"""Batch front-end: ``fmslab <experiment> --config run.ini --out result.csv``.

Config files are INI text, one experiment per file::

    [experiment]
    name = simulate
    seed = 1

    [model]
    family = TransmonEP2
    kappa = 1.0

    [trajectory]
    kind = Loop
    radius = 0.15
    omega = 0.05

    [grids]
    R = logspace(-3, -1, 21)

    [options]
    trials = 64

Grids are comma lists or ``linspace(a, b, n)`` / ``logspace(a, b, n)``
(decimal exponents); an optional fourth argument ``open`` drops the end
point. Complex scalars use Python syntax, e.g. ``0.1+0.2j``.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, is_dataclass
from fractions import Fraction
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .floquet import propagate
from .geometry import SingularStencilError, phantom_scan, qgt, saito_scan
from .invariants import NonIsolatedError, invariant_report, parse_germ
from .isometry import find_invariant_pairing
from .models import FAMILIES, ModelSpec, TrajectorySpec, _DEFAULTS
from .numerics import NumericsError
from .resurgence import euler_series, resummation_report
from .scaling import disorder_robustness, dynamic_gap_scaling, static_gap_scaling

EXPERIMENTS = ("simulate", "scaling-static", "scaling-dynamic", "disorder", "saito-scan",
               "phantom", "invariants", "resurge", "qgt-map")

EXIT_CONFIG, EXIT_NUMERICS, EXIT_IO = 2, 3, 4

# (needs model, needs trajectory, required grids, required options)
_REQUIREMENTS = {
    "simulate": (True, True, (), ()),
    "scaling-static": (True, False, ("R",), ()),
    "scaling-dynamic": (False, False, ("omega",), ("rank",)),
    "disorder": (True, True, ("W",), ()),
    "saito-scan": (True, True, (), ()),
    "phantom": (True, False, ("theta",), ()),
    "invariants": (False, False, (), ("germ",)),
    "resurge": (False, False, ("lambda",), ()),
    "qgt-map": (True, False, ("re", "im"), ()),
}

_TRAJ_FIELDS = {f.name: f for f in fields(TrajectorySpec)}


class ConfigError(ValueError):
    def __init__(self, diagnostics: List[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    model: Optional[ModelSpec]
    trajectory: Optional[TrajectorySpec]
    grids: Dict[str, np.ndarray]
    options: Dict[str, str]
    seed: int
    output_path: Optional[str]
    workers: int
    echo: Dict[str, Dict[str, str]] = field(default_factory=dict)


# ---------------------------------------------------------------- parsing


_RANGE = re.compile(r"^\s*(linspace|logspace)\s*\((.*)\)\s*$")


def parse_grid(text: str) -> np.ndarray:
    """Comma list, ``linspace(a, b, n[, open])`` or ``logspace(a, b, n[, open])``."""
    m = _RANGE.match(text)
    if m:
        args = [a.strip() for a in m.group(2).split(",")]
        if len(args) not in (3, 4) or (len(args) == 4 and args[3] != "open"):
            raise ValueError(f"bad range {text!r}")
        a, b, n = float(args[0]), float(args[1]), int(args[2])
        if n < 1:
            raise ValueError("range needs n >= 1")
        fn = np.linspace if m.group(1) == "linspace" else np.logspace
        return fn(a, b, n, endpoint=len(args) == 3)
    items = [s.strip() for s in text.split(",") if s.strip()]
    return np.array([float(s) for s in items], dtype=float)


def _scalar(text: str):
    text = text.strip()
    try:
        v = int(text)
        return v
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return complex(text.replace(" ", ""))


def read_config(path: str) -> Dict[str, Dict[str, str]]:
    """Sections of an INI file as nested plain dicts (keys keep their case)."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    return {s: dict(cp.items(s)) for s in cp.sections()}


def validate(raw: Dict[str, Dict[str, str]], experiment: str = None) -> List[str]:
    """All schema violations of a raw config, as ``section.key: message`` lines."""
    return _build(raw, experiment)[1]


def _build(raw, experiment=None, overrides=None):
    diags: List[str] = []
    overrides = overrides or {}
    exp_sec = raw.get("experiment", {})
    name = experiment or exp_sec.get("name")
    if name is None:
        diags.append("experiment.name: missing")
    elif name not in EXPERIMENTS:
        diags.append(f"experiment.name: unknown experiment {name!r}")
    elif exp_sec.get("name") not in (None, name):
        diags.append(f"experiment.name: config is for {exp_sec.get('name')!r}, not {name!r}")
    for sec in raw:
        if sec not in ("experiment", "model", "trajectory", "grids", "options"):
            diags.append(f"{sec}: unknown section")

    seed = overrides.get("seed", exp_sec.get("seed", "0"))
    try:
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError
    except (TypeError, ValueError):
        diags.append(f"experiment.seed: must be an unsigned 64-bit integer, got {seed!r}")
        seed = 0
    workers = overrides.get("workers", exp_sec.get("workers", "1"))
    try:
        workers = int(workers)
        if workers < 1:
            raise ValueError
    except (TypeError, ValueError):
        diags.append(f"experiment.workers: must be an integer >= 1, got {workers!r}")
        workers = 1
    out = overrides.get("out", exp_sec.get("output"))
    for key in exp_sec:
        if key not in ("name", "seed", "workers", "output"):
            diags.append(f"experiment.{key}: unknown key")

    needs_model, needs_traj, req_grids, req_opts = _REQUIREMENTS.get(name, (False, False, (), ()))

    model = None
    msec = raw.get("model")
    if msec is not None or needs_model:
        if msec is None:
            diags.append("model: section required")
        else:
            model = _build_model(msec, diags)

    traj = None
    tsec = raw.get("trajectory")
    if tsec is not None or needs_traj:
        if tsec is None:
            diags.append("trajectory: section required")
        else:
            traj = _build_traj(tsec, diags)

    grids = {}
    for key, text in raw.get("grids", {}).items():
        try:
            g = parse_grid(text)
        except ValueError as exc:
            diags.append(f"grids.{key}: {exc}")
            continue
        if g.size == 0:
            diags.append(f"grids.{key}: empty grid")
        elif not np.all(np.isfinite(g)):
            diags.append(f"grids.{key}: non-finite values")
        grids[key] = g
    for key in req_grids:
        if key not in raw.get("grids", {}):
            diags.append(f"grids.{key}: required for {name}")
    opts = dict(raw.get("options", {}))
    for key in req_opts:
        if key not in opts:
            diags.append(f"options.{key}: required for {name}")

    diags.extend(_experiment_checks(name, model, traj, grids, opts))
    cfg = ExperimentConfig(name, model, traj, grids, opts, seed, out, workers, raw)
    return cfg, diags


def _build_model(sec, diags):
    fam = sec.get("family")
    if fam not in FAMILIES:
        diags.append(f"model.family: must be one of {', '.join(FAMILIES)}, got {fam!r}")
        return None
    params = {}
    ok = True
    for key, text in sec.items():
        if key == "family":
            continue
        if key not in _DEFAULTS[fam]:
            diags.append(f"model.{key}: unknown parameter for {fam}")
            ok = False
            continue
        try:
            v = _scalar(text)
        except ValueError:
            diags.append(f"model.{key}: not a number: {text!r}")
            ok = False
            continue
        params[key] = v
    positive = {"TransmonEP2": ("kappa",), "Rydberg": ("gamma_loss",)}.get(fam, ())
    for key in positive:
        if key in params and not (isinstance(params[key], (int, float)) and params[key] > 0):
            diags.append(f"model.{key}: must be positive")
            ok = False
    if fam == "RankK" and "k" in params:
        k = params["k"]
        if not isinstance(k, int) or k < 1:
            diags.append("model.k: must be a positive integer")
            ok = False
    for key, v in params.items():
        if isinstance(v, complex) and not (fam == "RankK" and key == "delta"):
            diags.append(f"model.{key}: must be real")
            ok = False
    if not ok:
        return None
    try:
        return ModelSpec(fam, params)
    except ValueError as exc:
        diags.append(f"model: {exc}")
        return None


def _build_traj(sec, diags):
    kw = {}
    ok = True
    for key, text in sec.items():
        if key not in _TRAJ_FIELDS:
            diags.append(f"trajectory.{key}: unknown key")
            ok = False
            continue
        if key == "kind":
            kw[key] = text.strip()
            continue
        try:
            v = _scalar(text)
        except ValueError:
            diags.append(f"trajectory.{key}: not a number: {text!r}")
            ok = False
            continue
        kw[key] = v
    if kw.get("kind", "Loop") not in ("Loop", "LinearSweep"):
        diags.append(f"trajectory.kind: must be Loop or LinearSweep, got {kw['kind']!r}")
        ok = False
    if "steps" in kw:
        n = kw["steps"]
        if not isinstance(n, int) or n < 64 or n & (n - 1):
            diags.append(f"trajectory.steps: must be a power of two >= 64, got {n!r}")
            ok = False
    if "omega" in kw and not (isinstance(kw["omega"], (int, float)) and kw["omega"] > 0):
        diags.append("trajectory.omega: must be positive")
        ok = False
    if "radius" in kw and not (isinstance(kw["radius"], (int, float)) and kw["radius"] >= 0):
        diags.append("trajectory.radius: must be nonnegative")
        ok = False
    if "orientation" in kw and kw["orientation"] not in (1, -1):
        diags.append("trajectory.orientation: must be +1 or -1")
        ok = False
    for key in ("radius", "omega", "start_angle", "velocity"):
        if isinstance(kw.get(key), complex):
            diags.append(f"trajectory.{key}: must be real")
            ok = False
    if not ok:
        return None
    for key in ("center", "offset"):
        if key in kw:
            kw[key] = complex(kw[key])
    try:
        return TrajectorySpec(**kw)
    except (TypeError, ValueError) as exc:
        diags.append(f"trajectory: {exc}")
        return None


def _experiment_checks(name, model, traj, grids, opts):
    d = []
    if name in ("scaling-static",) and "R" in grids and np.any(grids["R"] <= 0):
        d.append("grids.R: values must be positive")
    if name == "scaling-dynamic":
        if "omega" in grids and np.any(grids["omega"] <= 0):
            d.append("grids.omega: values must be positive")
        r = opts.get("rank")
        if r is not None and r != "tame" and not (r.isdigit() and int(r) >= 1):
            d.append("options.rank: must be a positive integer or 'tame'")
    if name == "disorder":
        if "W" in grids and np.any(grids["W"] < 0):
            d.append("grids.W: values must be nonnegative")
        t = opts.get("trials", "64")
        if not (t.isdigit() and int(t) >= 32):
            d.append("options.trials: must be an integer >= 32")
    if name in ("simulate", "disorder", "saito-scan") and traj is not None and traj.kind != "Loop":
        d.append(f"trajectory.kind: {name} needs a Loop")
    if name == "phantom" and model is not None:
        if model.family != "RankK" or model.params["delta"] == 0:
            d.append("model: phantom needs a RankK model with delta != 0")
    if name == "resurge":
        if "lambda" in grids and np.any(grids["lambda"] <= 0):
            d.append("grids.lambda: values must be positive")
        if opts.get("series", "euler") not in ("euler", "euler-flipped"):
            d.append("options.series: must be euler or euler-flipped")
    if name == "invariants" and "germ" in opts:
        try:
            parse_germ(opts["germ"])
        except (ValueError, SyntaxError) as exc:
            d.append(f"options.germ: {exc}")
    return d


# ---------------------------------------------------------------- experiments


@dataclass
class Table:
    columns: List[str]
    rows: List[list]
    result: dict
    flags: List[bool]


def _cplx(z):
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def to_jsonable(obj):
    """Dataclasses, arrays and complex numbers as plain JSON values."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()] if obj.ndim else to_jsonable(obj.item())
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (complex, np.complexfloating)):
        return _cplx(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def _map(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _run_simulate(cfg):
    res = propagate(cfg.model, cfg.trajectory)
    iso = find_invariant_pairing(res.normalized)
    result = to_jsonable(res)
    result["isometry"] = to_jsonable(iso)
    rows = []
    for name, mat in (("monodromy", res.monodromy), ("normalized", res.normalized), ("unipotent", res.unipotent)):
        for i in range(2):
            for j in range(2):
                rows.append([f"{name}[{i},{j}]", mat[i, j].real, mat[i, j].imag])
    for n, e in enumerate(res.quasienergies):
        rows.append([f"quasienergy[{n}]", e.real, e.imag])
    rows.append(["stokes_invariant", res.stokes_invariant, 0.0])
    return Table(["quantity", "re [model units]", "im [model units]"], rows, result, [res.converged])


def _run_static(cfg):
    rep = static_gap_scaling(cfg.model, cfg.grids["R"])
    rows = [[x, y] for x, y in zip(rep.series.x, rep.series.y)]
    return Table(["R [control units]", "gap [energy units]"], rows, to_jsonable(rep), [True] * len(rows))


def _run_dynamic(cfg):
    o = cfg.options
    rank = o["rank"] if o["rank"] == "tame" else int(o["rank"])
    rep = dynamic_gap_scaling(rank, cfg.grids["omega"], float(o.get("c", 1.0)), float(o.get("r0", 1.0)))
    rows = [[x, y] for x, y in zip(rep.series.x, rep.series.y)]
    return Table(["omega [rate units]", "breakdown_gap [energy units]"], rows, to_jsonable(rep),
                 [True] * len(rows))


def _run_disorder(cfg):
    trials = int(cfg.options.get("trials", 64))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            cur = disorder_robustness(cfg.model, cfg.trajectory, cfg.grids["W"], trials, cfg.seed, ex)
    else:
        cur = disorder_robustness(cfg.model, cfg.trajectory, cfg.grids["W"], trials, cfg.seed)
    rows = [[w, f, fs, s, ss] for w, f, fs, s, ss in
            zip(cur.fms.x, cur.fms.y, cur.fms_stderr, cur.spectral.y, cur.spectral_stderr)]
    cols = ["W [model units]", "fms_fidelity [1]", "fms_stderr [1]", "spectral_fidelity [1]",
            "spectral_stderr [1]"]
    return Table(cols, rows, to_jsonable(cur), [True] * len(rows))


def _run_saito(cfg):
    theta = cfg.grids.get("theta")
    prom = float(cfg.options.get("prominence", 0.25))
    scan = saito_scan(cfg.model, cfg.trajectory, theta, prom)
    rows = [[t, s] for t, s in zip(scan.theta_grid, scan.signal)]
    return Table(["theta [rad]", "signal [1/rad]"], rows, to_jsonable(scan), [True])


def _phantom_point(args):
    model, th, v, hw, off, steps = args
    s, g = phantom_scan(model, [th], v, hw, off, steps)
    return float(s.y[0]), float(g.y[0])


def _run_phantom(cfg):
    o = cfg.options
    v = float(o.get("velocity", 0.2))
    hw = float(o.get("half_width", 4.0))
    off = complex(_scalar(o.get("offset", "0")))
    steps = int(o.get("steps", 4096))
    pts = _map(_phantom_point, [(cfg.model, th, v, hw, off, steps) for th in cfg.grids["theta"]], cfg.workers)
    rows = [[th, s, g] for th, (s, g) in zip(cfg.grids["theta"], pts)]
    result = {"theta": cfg.grids["theta"], "stokes_invariant": [p[0] for p in pts],
              "min_gap": [p[1] for p in pts]}
    return Table(["theta [rad]", "stokes_invariant [1]", "min_gap [energy units]"], rows,
                 to_jsonable(result), [True] * len(rows))


def _run_invariants(cfg):
    f = parse_germ(cfg.options["germ"])
    ref = cfg.options.get("reference_tjurina")
    rep = invariant_report(f, int(ref) if ref is not None else None)
    rows = [[k, v] for k, v in to_jsonable(rep).items() if not isinstance(v, list)]
    rows.append(["notes", " | ".join(rep.notes)])
    return Table(["field", "value"], rows, to_jsonable(rep), [True])


def _resurge_point(args):
    series, lam, n_max, pade_order = args
    from scipy.special import exp1, expi

    if series == "euler":
        s = euler_series(n_max, -1)
        oracle = np.exp(1 / lam) * exp1(1 / lam) / lam
    else:
        s = euler_series(n_max, 1)
        oracle = np.exp(-1 / lam) * expi(1 / lam) / lam
    return resummation_report(s, lam, oracle, pade_order=pade_order)


def _run_resurge(cfg):
    o = cfg.options
    series = o.get("series", "euler-flipped")
    n_max = int(o.get("n_max", 40))
    po = int(o["pade_order"]) if "pade_order" in o else None
    reps = _map(_resurge_point, [(series, float(l), n_max, po) for l in cfg.grids["lambda"]], cfg.workers)
    cols = ["lambda [1]", "optimal_truncation_value [1]", "optimal_order [1]", "lateral_plus_re [1]",
            "lateral_plus_im [1]", "lateral_minus_re [1]", "lateral_minus_im [1]", "ambiguity [1]",
            "action [1]", "stokes_constant [1]", "corrected_value [1]", "oracle_value [1]", "abs_error [1]"]
    rows = [[r.lam, r.optimal_truncation_value, r.optimal_order, r.lateral_plus.real, r.lateral_plus.imag,
             r.lateral_minus.real, r.lateral_minus.imag, r.ambiguity, r.action, r.stokes_constant,
             r.corrected_value, r.oracle_value, r.abs_error] for r in reps]
    return Table(cols, rows, to_jsonable({"reports": reps}), [True] * len(rows))


def _qgt_point(args):
    model, x, y = args
    lam = complex(x, y)
    h = model.hamiltonian_batch(lam)
    tr = h[0, 0] + h[1, 1]
    split = np.sqrt(complex(model.discriminant(lam)))
    try:
        q = qgt(model, lam)
        return [x, y, q.metric[0, 0], q.metric[0, 1], q.metric[1, 1], q.curvature, split.real, split.imag]
    except (SingularStencilError, NumericsError, np.linalg.LinAlgError):
        return [x, y, math.nan, math.nan, math.nan, math.nan, split.real, split.imag]


def _run_qgt(cfg):
    pts = [(cfg.model, float(x), float(y)) for y in cfg.grids["im"] for x in cfg.grids["re"]]
    rows = _map(_qgt_point, pts, cfg.workers)
    cols = ["re_lambda [control units]", "im_lambda [control units]", "g11 [1/control^2]",
            "g12 [1/control^2]", "g22 [1/control^2]", "curvature [1/control^2]",
            "splitting_re [energy units]", "splitting_im [energy units]"]
    flags = [bool(np.isfinite(r[2])) for r in rows]
    return Table(cols, rows, to_jsonable({"rows": rows}), flags)


_RUNNERS = {
    "simulate": _run_simulate,
    "scaling-static": _run_static,
    "scaling-dynamic": _run_dynamic,
    "disorder": _run_disorder,
    "saito-scan": _run_saito,
    "phantom": _run_phantom,
    "invariants": _run_invariants,
    "resurge": _run_resurge,
    "qgt-map": _run_qgt,
}


# ---------------------------------------------------------------- output


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    s = str(v)
    return '"' + s.replace('"', '""') + '"' if any(c in s for c in ',"\n') else s


def render(table: Table, cfg: ExperimentConfig, fmt: str) -> bytes:
    if fmt == "csv":
        lines = [",".join(_fmt(c) for c in table.columns)]
        lines += [",".join(_fmt(v) for v in row) for row in table.rows]
        return ("\n".join(lines) + "\n").encode("utf-8")
    doc = {"experiment": cfg.experiment, "config": cfg.echo, "seed": cfg.seed,
           "result": table.result}
    return (json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n").encode("utf-8")


def run(cfg: ExperimentConfig, fmt: str = None) -> dict:
    """Run one experiment, write the data file and its manifest, return the manifest."""
    if cfg.output_path is None:
        raise OSError("no output path: pass --out or set experiment.output")
    if fmt is None:
        fmt = "json" if cfg.output_path.endswith(".json") else "csv"
    t0 = time.perf_counter()
    table = _RUNNERS[cfg.experiment](cfg)
    data = render(table, cfg, fmt)
    wall = time.perf_counter() - t0
    manifest = {
        "experiment": cfg.experiment,
        "config": cfg.echo,
        "seed": cfg.seed,
        "workers": cfg.workers,
        "artifact_version": __version__,
        "wall_time_s": wall,
        "convergence_flags": table.flags,
        "output": os.path.basename(cfg.output_path),
        "format": fmt,
        "sha256": hashlib.sha256(data).hexdigest(),
    }
    tmp = cfg.output_path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, cfg.output_path)
    with open(cfg.output_path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fmslab", description="Floquet monodromy spectroscopy experiments")
    sub = p.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS + ("validate",):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--format", choices=("csv", "json"))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = read_config(args.config)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except configparser.Error as exc:
        print(f"config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    overrides = {k: v for k, v in (("seed", args.seed), ("workers", args.workers), ("out", args.out))
                 if v is not None}
    experiment = None if args.command == "validate" else args.command
    cfg, diags = _build(raw, experiment, overrides)
    if args.command == "validate":
        for d in diags:
            print(d)
        return EXIT_CONFIG if diags else 0
    if diags:
        for d in diags:
            print(f"config: {d}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = run(cfg, args.format)
    except (NumericsError, NonIsolatedError) as exc:
        print(f"numerics: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    except OSError as exc:
        print(f"io: {exc}", file=sys.stderr)
        return EXIT_IO
    print(json.dumps({"output": cfg.output_path, "sha256": manifest["sha256"]}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
