"""Command-line front end: ``simulate`` and ``verify <suite>``.

Settings come from, in increasing priority: built-in defaults, a JSON
document given with ``--config``, ``RB_<FLAG>`` environment variables,
and explicit flags.

Exit codes: 0 success, 1 configuration error, 2 integration failure,
3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import ChetaevError, StepRejected
from .flow import integrate_lie, invariants_report, rk4_integrate
from .rigidbody import InertiaTensor, RigidBodyState, as_rotation_matrix
from .verification import SUITES, run_suite

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATION, EXIT_VERIFY = 0, 1, 2, 3

CSV_COLUMNS = ("t", "R11", "R12", "R13", "R21", "R22", "R23", "R31", "R32", "R33",
               "M1", "M2", "M3", "H0", "M2norm", "s1", "s2", "s3", "orthodefect")

DEFAULTS = {
    "inertia": "2,3,4",
    "m0": "1,1,1",
    "r0": None,
    "t": 10.0,
    "dt": 0.1,
    "method": "lie",
    "order": 16,
    "surface": "so3",
    "samples": 20,
    "seed": 0,
    "tol": None,
    "out": None,
    "format": "csv",
}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    inertia: np.ndarray
    m0: np.ndarray
    r0: np.ndarray
    t_final: float
    step: float
    method: str = "lie"
    order: int = 16
    surface: str = "so3"
    samples: int = 20
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    out: str | None = None
    format: str = "csv"


def _floats(value, count, name):
    if isinstance(value, str):
        parts = [v for v in value.replace(";", ",").split(",") if v.strip()]
    else:
        parts = list(np.ravel(value))
    try:
        arr = np.array([float(v) for v in parts])
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected {count} comma-separated numbers, got {value!r}") from None
    if arr.shape != (count,) or not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name}: expected {count} finite numbers, got {value!r}")
    return arr


def _merge(args):
    settings = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config, encoding="utf8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
        unknown = set(doc) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        settings.update(doc)
    for key in DEFAULTS:
        env = os.environ.get("RB_" + key.upper())
        if env is not None:
            settings[key] = env
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def build_config(args):
    """Resolve and validate settings; raises ``ConfigError`` naming the violated invariant."""
    s = _merge(args)
    inertia = _floats(s["inertia"], 3, "inertia")
    try:
        InertiaTensor(inertia)
    except ChetaevError as exc:
        raise ConfigError(f"{type(exc).__name__}: {exc}") from None
    m0 = _floats(s["m0"], 3, "m0")
    r0 = np.eye(3) if s["r0"] in (None, "") else _floats(s["r0"], 9, "r0").reshape(3, 3)
    try:
        as_rotation_matrix(r0)
    except ChetaevError as exc:
        raise ConfigError(f"r0: {exc}") from None
    try:
        t_final, step = float(s["t"]), float(s["dt"])
        order, samples, seed = int(s["order"]), int(s["samples"]), int(s["seed"])
        tol = None if s["tol"] in (None, "") else float(s["tol"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed numeric setting: {exc}") from None
    if not t_final > 0:
        raise ConfigError(f"t_final must be positive, got {t_final}")
    if not step > 0:
        raise ConfigError(f"step must be positive, got {step}")
    if s["method"] not in ("lie", "rk4"):
        raise ConfigError(f"method must be 'lie' or 'rk4', got {s['method']!r}")
    if s["method"] == "lie" and order < 4:
        raise ConfigError(f"order must be at least 4 for the lie method, got {order}")
    if s["surface"] not in ("sphere", "so3"):
        raise ConfigError(f"surface must be 'sphere' or 'so3', got {s['surface']!r}")
    if samples < 1:
        raise ConfigError(f"samples must be positive, got {samples}")
    if s["format"] not in ("csv", "json"):
        raise ConfigError(f"format must be 'csv' or 'json', got {s['format']!r}")
    return RunConfig(inertia=inertia, m0=m0, r0=r0, t_final=t_final, step=step, method=s["method"],
                     order=order, surface=s["surface"], samples=samples, seed=seed,
                     tolerances={} if tol is None else {"all": tol}, out=s["out"], format=s["format"])


def _fmt(x):
    return format(float(x), ".17g")


def write_trajectory(traj, fh, fmt="csv"):
    rows = traj.rows()
    if fmt == "csv":
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    else:
        records = [{k: float(_fmt(v)) for k, v in zip(CSV_COLUMNS, row)} for row in rows]
        json.dump(records, fh, indent=1)
        fh.write("\n")


def cmd_simulate(cfg, stdout=sys.stdout, stderr=sys.stderr):
    state0 = RigidBodyState(cfg.r0, cfg.m0)
    try:
        if cfg.method == "lie":
            traj = integrate_lie(cfg.inertia, state0, cfg.t_final, cfg.step, cfg.order)
        else:
            traj = rk4_integrate(cfg.inertia, state0, cfg.t_final, cfg.step)
    except StepRejected as exc:
        stderr.write(f"StepRejected: {exc}\n")
        return EXIT_INTEGRATION
    summary_to = stderr
    if cfg.out:
        with open(cfg.out, "w", encoding="utf8", newline="") as fh:
            write_trajectory(traj, fh, cfg.format)
        summary_to = stdout
    else:
        write_trajectory(traj, stdout, cfg.format)
    report = invariants_report(traj).as_dict()
    summary_to.write(f"samples={len(traj)} method={cfg.method}\n")
    for key, value in report.items():
        summary_to.write(f"drift {key} {value:.6e}\n")
    return EXIT_OK


def _format_point(where):
    parts = []
    for key, value in where.items():
        if isinstance(value, np.ndarray):
            value = "[" + " ".join(_fmt(v) for v in value.ravel()) + "]"
        parts.append(f"{key}={value}")
    return " ".join(parts)


def cmd_verify(cfg, suite, stdout=sys.stdout):
    tol = cfg.tolerances.get("all")
    try:
        checks = run_suite(suite, surface=cfg.surface, samples=cfg.samples, seed=cfg.seed, tol=tol,
                           inertia=tuple(cfg.inertia), m0=cfg.m0, r0=cfg.r0, t_final=cfg.t_final,
                           step=cfg.step, method=cfg.method, order=cfg.order)
    except StepRejected as exc:
        stdout.write(f"StepRejected: {exc}\n")
        return EXIT_INTEGRATION
    lines = [f"suite={suite} surface={cfg.surface} samples={cfg.samples} seed={cfg.seed}"]
    worst = None
    for c in checks:
        lines.append(f"check {c.name} max_residual={c.residual:.6e} tol={c.tol:.1e} "
                     f"{'PASS' if c.passed else 'FAIL'}")
        if not c.passed and (worst is None or c.residual / c.tol > worst.residual / worst.tol):
            worst = c
    if worst is not None:
        lines.append(f"worst {worst.name} {_format_point(worst.worst)}")
    lines.append(f"result {'PASS' if worst is None else 'FAIL'}")
    text = "\n".join(lines) + "\n"
    stdout.write(text)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf8") as fh:
            fh.write(text)
    return EXIT_OK if worst is None else EXIT_VERIFY


def _add_common(p):
    p.add_argument("--config", help="JSON document with settings (keys mirror flag names)")
    p.add_argument("--inertia", help="principal moments I1,I2,I3")
    p.add_argument("--m0", help="initial body angular momentum M1,M2,M3")
    p.add_argument("--r0", help="initial rotation, 9 row-major values (default identity)")
    p.add_argument("--t", type=float, help="final time")
    p.add_argument("--dt", type=float, help="step size")
    p.add_argument("--method", choices=("lie", "rk4"))
    p.add_argument("--order", type=int, help="Taylor order for the lie method")
    p.add_argument("--surface", choices=("sphere", "so3"))
    p.add_argument("--samples", type=int, help="random sample points for verification")
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float, help="override every verification tolerance")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"))


def build_parser():
    parser = argparse.ArgumentParser(prog="chetaev", description="Free rigid body via the intermediate formalism")
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", help="integrate the Euler-Poisson equations")
    _add_common(sim)
    ver = sub.add_parser("verify", help="run a randomized property suite")
    ver.add_argument("suite", choices=SUITES)
    _add_common(ver)
    return parser


def main(argv=None, stdout=None, stderr=None):
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    if args.command == "simulate":
        return cmd_simulate(cfg, stdout, stderr)
    return cmd_verify(cfg, args.suite, stdout)


if __name__ == "__main__":
    sys.exit(main())
