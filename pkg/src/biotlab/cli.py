"""Command line entry point.

    biotlab terzaghi-space [--levels 10] [--timesteps 5000] [--out t1.csv]
    biotlab terzaghi-time  [--level 13] [--steps 5,10,20,40,80,160,320]
    biotlab cantilever     [--m 16] [--timesteps 5] [--samples 65]
    biotlab assumptions    [--mesh crisscross:4 | interval:4]
    biotlab infsup         [--n 4] [--timesteps 3]
    biotlab selftest

Every option may also be given in a flat ``key = value`` file passed with
``--config``; flags on the command line win.  Exit codes: 0 success,
2 configuration error, 3 failed check, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import bench, stability
from .assembly import assemble
from .errors import BiotError, ConfigError, DegenerateGram, NotSPD, SolverFailure, TooLarge, UnsupportedConfig
from .fespace import build_spaces
from .linalg import DENSE_LIMIT
from .mesh import crisscross_mesh, interval_mesh
from .params import (
    CANTILEVER_CONFIG,
    CANTILEVER_PARAMS,
    TERZAGHI_CONFIG,
    TERZAGHI_PARAMS,
    BiotParameters,
    select_spaces,
)
from .terzaghi import TerzaghiSetup

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_NUMERICAL = 0, 2, 3, 4

SCHEMAS = {
    "convergence": ("dofs", "error", "eoc"),
    "convergence-time": ("J", "error", "eoc"),
    "profile": ("x", "y", "p"),
    "assumptions": ("name", "value", "status"),
}

IBP_TOL = 1e-9
PARAM_KEYS = ("mu", "lam", "alpha", "sigma", "kappa", "T")


# ---------------------------------------------------------------------------
# configuration


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` file; '#' starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for number, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{number}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6e}"
    return str(v)


def emit_csv(rows, schema: str, path) -> None:
    header = SCHEMAS[schema]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row {row!r} does not match schema {header}")
            w.writerow([_fmt(v) for v in row])


def _table(header, rows) -> str:
    cells = [list(header)] + [[_fmt(v) or "-" for v in r] for r in rows]
    widths = [max(len(c[i]) for c in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(wd) for c, wd in zip(r, widths)) for r in cells)


def _int_list(text):
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma separated list of integers, got {text!r}") from None


def _mesh_spec(text):
    try:
        kind, size = str(text).split(":")
        size = int(size)
    except ValueError:
        raise ConfigError(f"mesh must look like interval:N or crisscross:M, got {text!r}") from None
    if kind == "interval":
        return interval_mesh(1.0, size), TERZAGHI_CONFIG, TERZAGHI_PARAMS
    if kind == "crisscross":
        return crisscross_mesh(size), CANTILEVER_CONFIG, CANTILEVER_PARAMS
    raise ConfigError(f"unknown mesh family {kind!r}")


def _params(opts, base: BiotParameters) -> BiotParameters:
    changes = {}
    for key in PARAM_KEYS:
        if opts.get(key) is not None:
            try:
                changes[key] = float(opts[key])
            except ValueError:
                raise ConfigError(f"{key} must be a number, got {opts[key]!r}") from None
    try:
        return base.with_(**changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# commands


def cmd_terzaghi_space(o) -> int:
    squared = o["error_convention"] == "squared"
    setup = TerzaghiSetup(params=_params(o, TERZAGHI_PARAMS))
    levels = range(int(o["levels"]) + 1)
    rows = bench.run_terzaghi_space_study(levels, int(o["timesteps"]), setup, squared)
    return _report_convergence(o, rows, "convergence")


def cmd_terzaghi_time(o) -> int:
    squared = o["error_convention"] == "squared"
    setup = TerzaghiSetup(params=_params(o, TERZAGHI_PARAMS))
    dofs, rows = bench.run_terzaghi_time_study(_int_list(o["steps"]), int(o["level"]), setup, squared)
    print(f"mesh DOFs: {dofs}")
    return _report_convergence(o, rows, "convergence-time")


def _report_convergence(o, rows, schema) -> int:
    table = [(r.size, r.error, r.eoc) for r in rows]
    print(_table(SCHEMAS[schema], table))
    if o.get("out"):
        emit_csv(table, schema, o["out"])
    bad = [r for r in rows if r.ibp_defect is not None and r.ibp_defect > IBP_TOL]
    if bad:
        print(f"integration by parts identity violated on {len(bad)} row(s)", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_cantilever(o) -> int:
    prm = _params(o, CANTILEVER_PARAMS)
    res = bench.run_cantilever(int(o["m"]), int(o["timesteps"]), prm, samples=int(o["samples"]))
    print(f"DOFs: {res.dofs}   runtime: {res.seconds:.2f} s")
    print(_table(("x", "extrema"), sorted(res.extrema.items())))
    if o.get("out"):
        emit_csv([(s.x, s.y, s.p) for s in res.profiles], "profile", o["out"])
    if max(res.extrema.values()) > 2 or res.ibp_defect > IBP_TOL:
        print("oscillation or identity check failed", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_assumptions(o) -> int:
    mesh, cfg, base = _mesh_spec(o["mesh"])
    prm = _params(o, base)
    system = assemble(build_spaces(mesh, cfg, select_spaces(cfg, prm.sigma)), prm)
    report = stability.assumption_report(system, limit=int(o["dense_limit"]))
    rows = report.rows()
    print(_table(SCHEMAS["assumptions"], rows))
    if o.get("out"):
        emit_csv(rows, "assumptions", o["out"])
    return EXIT_OK if report.passed else EXIT_CHECK


def cmd_infsup(o) -> int:
    sweep = stability.robustness_sweep(int(o["n"]), int(o["timesteps"]), float(o.get("T") or 1.0),
                                       int(o["dense_limit"]))
    rows = []
    for pt in sweep:
        label = f"lam={pt.lam:g};sigma={pt.sigma:g};kappa={pt.kappa:g}"
        rows.append((label + ";infsup", pt.infsup, "ok" if pt.infsup > 0 else "fail"))
        rows.append((label + ";ratio", pt.ratio, "ok" if pt.ratio > 0 else "fail"))
    infsup = np.array([pt.infsup for pt in sweep])
    ratio = np.array([pt.ratio for pt in sweep])
    spread = float(infsup.max() / infsup.min()) if infsup.min() > 0 else np.inf
    decades = float(np.log10(ratio.max() / ratio.min())) if ratio.min() > 0 else np.inf
    rows.append(("infsup_spread", spread, "ok" if spread <= 10 else "fail"))
    rows.append(("ratio_decades", decades, "ok" if decades <= 2 else "fail"))
    print(_table(SCHEMAS["assumptions"], rows))
    if o.get("out"):
        emit_csv(rows, "assumptions", o["out"])
    return EXIT_OK if all(r[2] == "ok" for r in rows) else EXIT_CHECK


def cmd_selftest(o) -> int:
    from .selftest import run_selftest

    seed = int(o["seed"])
    print(f"seed: {seed}")
    results = run_selftest(seed)
    rows = [(name, value, "ok" if ok else "fail") for name, value, ok in results]
    print(_table(SCHEMAS["assumptions"], rows))
    if o.get("out"):
        emit_csv(rows, "assumptions", o["out"])
    return EXIT_OK if all(ok for _, _, ok in results) else EXIT_CHECK


COMMANDS = {
    "terzaghi-space": (cmd_terzaghi_space, {"levels": "10", "timesteps": "5000"}),
    "terzaghi-time": (cmd_terzaghi_time, {"level": "13", "steps": "5,10,20,40,80,160,320"}),
    "cantilever": (cmd_cantilever, {"m": "16", "timesteps": "5", "samples": "65"}),
    "assumptions": (cmd_assumptions, {"mesh": "crisscross:4"}),
    "infsup": (cmd_infsup, {"n": "4", "timesteps": "3"}),
    "selftest": (cmd_selftest, {}),
}

COMMON = {"error_convention": "sqrt", "dense_limit": str(DENSE_LIMIT), "seed": "20240607", "out": None}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biotlab", description="Biot poroelasticity verification lab")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, defaults) in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key=value file")
        p.add_argument("--out", help="CSV output path")
        p.add_argument("--error-convention", choices=("sqrt", "squared"))
        p.add_argument("--dense-limit", type=int)
        p.add_argument("--seed", type=int)
        for key in PARAM_KEYS:
            p.add_argument(f"--{key}", type=float)
        for key in defaults:
            p.add_argument(f"--{key.replace('_', '-')}")
    return parser


def resolve(args) -> dict:
    """defaults < config file < command line."""
    _, defaults = COMMANDS[args.command]
    opts = {**COMMON, **{k: None for k in PARAM_KEYS}, **defaults}
    if args.config:
        file_opts = read_config(args.config)
        unknown = set(file_opts) - set(opts)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        opts.update(file_opts)
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        opts[key] = value
    if opts["error_convention"] not in ("sqrt", "squared"):
        raise ConfigError("error_convention must be sqrt or squared")
    return opts


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0) and EXIT_CONFIG
    try:
        opts = resolve(args)
        return COMMANDS[args.command][0](opts)
    except (ConfigError, UnsupportedConfig, TooLarge, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverFailure, NotSPD, DegenerateGram) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except BiotError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
