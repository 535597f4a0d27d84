"""Command-line entry point.

    twave check      --model gp|example43|example55|example56|FILE.toml
    twave profile    --model ... --c 1.0 [--branch lower] [--out DIR]
    twave dispersion --model ... --c-min 0.05 --c-max 1.35 --n 25 [--refine]
    twave emin1      --model ... --p-grid 64
    twave scan2d     --model ... --p 1.0 --lambda 0.05:4:geometric:12

Every command accepts ``--config FILE.toml``: its ``[model]`` table defines
the model and its ``[run]`` table supplies defaults for the flags (dashes
written as underscores). Outputs go to ``--out`` (default: current
directory); each file starts with a header naming the tool version, the
model hash and a hash of the run configuration.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dispersion1d import diagnostics, envelope, sweep_dispersion
from .errors import TwaveError
from .minimize2d import MinimizeOptions, lambda_scan, parse_lambda_grid
from .nonlinearity import Nonlinearity, check_assumptions, model_by_kind, tabulated
from .quadrature1d import SQRT2, build_profile, gp_oracle, wave_invariants

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_DEGENERATE, EXIT_NONCONVERGED = 0, 2, 3, 4, 5
BUILTIN_KINDS = ("gp", "example43", "example55", "example56")


class ConfigError(Exception):
    exit_code = EXIT_CONFIG


def _fmt(v) -> str:
    """Full-precision, locale-independent number formatting."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


# ---------------------------------------------------------------------------
# models and configs


def load_model_table(table: dict) -> Nonlinearity:
    if "kind" not in table:
        raise ConfigError("[model] needs a 'kind' key")
    kind = table["kind"]
    params = {k: v for k, v in table.items() if k not in ("kind", "name", "s", "f")}
    params.update(table.get("params", {}))
    params.pop("params", None)
    try:
        if kind == "table":
            if "s" not in table or "f" not in table:
                raise ConfigError("kind = 'table' needs arrays 's' and 'f'")
            return tabulated(table["s"], table["f"], name=table.get("name", "table"))
        if kind not in BUILTIN_KINDS:
            raise ConfigError(f"unknown model kind {kind!r}")
        if "name" in table and kind in ("example43", "example55", "example56"):
            params["name"] = table["name"]
        return model_by_kind(kind, **params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for kind {kind!r}: {exc}") from exc


def read_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"no such file: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: TOML parse error: {exc}") from exc


def resolve_model(spec) -> Nonlinearity:
    if spec is None:
        raise ConfigError("no model given (use --model or a [model] table in --config)")
    if isinstance(spec, dict):
        return load_model_table(spec)
    if spec in BUILTIN_KINDS:
        return model_by_kind(spec)
    doc = read_toml(spec)
    if "model" not in doc:
        raise ConfigError(f"{spec}: missing [model] table")
    return load_model_table(doc["model"])


def _config_hash(cmd: str, args: dict, model: Nonlinearity) -> str:
    payload = json.dumps({"command": cmd, "model": model.model_hash, **_jsonable(args)},
                         sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


class Output:
    def __init__(self, out_dir, cmd: str, model: Nonlinearity, run_args: dict):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.header = {
            "tool": "twave",
            "version": __version__,
            "model": model.name,
            "model_hash": model.model_hash,
            "config_hash": _config_hash(cmd, run_args, model),
        }
        self.written = []

    def csv(self, name: str, columns, rows):
        buf = io.StringIO()
        for k, v in self.header.items():
            buf.write(f"# {k}: {v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        path = self.dir / name
        path.write_text(buf.getvalue())
        self.written.append(str(path))
        return path

    def json(self, name: str, payload: dict):
        path = self.dir / name
        path.write_text(json.dumps(_jsonable({"header": self.header, **payload}), indent=2) + "\n")
        self.written.append(str(path))
        return path


# ---------------------------------------------------------------------------
# commands


def cmd_check(model, args, out):
    report = check_assumptions(model, s_max=args.s_max)
    payload = report.to_dict()
    out.json("assumptions.json", payload)
    print(json.dumps(_jsonable(payload), indent=2))
    return EXIT_OK if report.passed else EXIT_PRECONDITION


def cmd_profile(model, args, out):
    prof = build_profile(model, args.c, branch=args.branch, x_max=args.x_max, n_points=args.n_points)
    inv = wave_invariants(model, prof)
    psi = prof.psi
    out.csv("profile.csv", ["x", "rho", "theta", "re_psi", "im_psi"],
            zip(prof.x, prof.rho, prof.theta, psi.real, psi.imag))
    out.json("invariants.json", inv.to_dict())
    print(json.dumps(_jsonable(inv.to_dict()), indent=2))
    return EXIT_OK


def _gp_oracle_check(curve, rtol=1e-8):
    worst = 0.0
    for s in curve.finite_samples:
        ref = gp_oracle(s.c)
        worst = max(worst, abs(s.energy - ref.energy) / abs(ref.energy),
                    abs(s.p - ref.momentum) / abs(ref.momentum))
    return {"max_relative_error": worst, "rtol": rtol, "passed": bool(worst <= rtol)}


def _sweep(model, args):
    if args.c_min <= 0 or args.c_max <= args.c_min or args.n < 2:
        raise ConfigError("need 0 < c-min < c-max and n >= 2")
    grid = np.linspace(args.c_min, args.c_max, args.n)
    return sweep_dispersion(model, grid, refine=args.refine, jobs=args.jobs)


def cmd_dispersion(model, args, out):
    curve = _sweep(model, args)
    out.csv("curve.csv", ["c", "p", "energy", "finite_L"],
            ((s.c, s.p, s.energy, s.finite_L) for s in curve.samples))
    diag = diagnostics(curve).to_dict()
    if model.kind == "gp":
        diag["oracle_check"] = _gp_oracle_check(curve)
    out.json("diagnostics.json", diag)
    print(json.dumps(_jsonable(diag), indent=2))
    if model.kind == "gp" and not diag["oracle_check"]["passed"]:
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_emin1(model, args, out):
    if args.p_grid < 2:
        raise ConfigError("p-grid needs at least 2 points")
    curve = _sweep(model, args)
    env = envelope(curve, n=args.p_grid)
    left, right = env.slopes()
    rows = []
    below = []
    for k, p in enumerate(env.p):
        flags = list(env.flags[k])
        ok = env.energy[k] <= SQRT2 * p + 1e-12
        if ok:
            flags.append("below-sonic-line")
        if p >= 0.05:
            below.append(ok)
        rows.append((p, env.energy[k], left[k], right[k], ";".join(flags)))
    out.csv("envelope.csv", ["p", "emin1", "slope_left", "slope_right", "flags"], rows)
    summary = {"n": int(env.p.size), "threshold": curve.threshold,
               "below_sonic_line_for_p_ge_0.05": bool(all(below))}
    out.json("envelope.json", summary)
    print(json.dumps(_jsonable(summary), indent=2))
    return EXIT_OK


def cmd_scan2d(model, args, out):
    try:
        grid = parse_lambda_grid(args.lam)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    opts = MinimizeOptions(max_iter=args.max_iter, tol_e=args.tol_e)
    scan = lambda_scan(model, args.p, grid, nx=args.nx, ny=args.ny, x_max=args.x_max, opts=opts,
                       seed=args.seed, jobs=args.jobs, keep_fields=args.save_fields)
    out.csv("scan.csv", ["lambda", "energy", "two_dimensionality", "converged"],
            ((e.lam, e.energy, e.two_dimensionality, e.converged) for e in scan.entries))
    if args.save_fields:
        for k, e in enumerate(scan.entries):
            if e.result is None:
                continue
            f = e.result.field
            xx, yy = np.meshgrid(f.x, f.y, indexing="ij")
            out.csv(f"field_{k:03d}.csv", ["x", "y", "rho", "theta"],
                    zip(xx.ravel(), yy.ravel(), f.rho.ravel(), f.theta.ravel()))
    summary = {
        "p": scan.p,
        "status": scan.status,
        "lambda_s_bracket": list(scan.lambda_s_bracket) if scan.lambda_s_bracket else None,
        "reference_energy": scan.reference_energy,
        "grid_energy_1d": scan.grid_energy_1d,
        "grid_tol": scan.grid_tol,
        "margin": scan.margin,
        "entries": [{"lambda": e.lam, "energy": e.energy, "two_dimensionality": e.two_dimensionality,
                     "converged": e.converged, "init": e.init, "status": e.status,
                     "multiplier": e.multiplier} for e in scan.entries],
    }
    out.json("scan.json", summary)
    print(json.dumps(_jsonable({k: v for k, v in summary.items() if k != "entries"}), indent=2))
    stalled = [e.lam for e in scan.entries if not e.converged]
    if stalled:
        print(f"twave: warning: not converged at lambda = {stalled}", file=sys.stderr)
        if scan.status == "no reliable bracket":
            return EXIT_NONCONVERGED
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(p):
    p.add_argument("--model", help="builtin kind or TOML model file")
    p.add_argument("--config", help="TOML file with [model] and [run] tables")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=None,
                   help="worker threads (default: $TWAVE_JOBS or 1)")


def _add_sweep(p, c_min=0.02, c_max=1.4, n=200, refine=False):
    p.add_argument("--c-min", type=float, default=c_min)
    p.add_argument("--c-max", type=float, default=c_max)
    p.add_argument("--n", type=int, default=n)
    p.add_argument("--refine", action=argparse.BooleanOptionalAction, default=refine)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twave", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"twave {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="check the structural assumptions on F")
    _add_common(p)
    p.add_argument("--s-max", type=float, default=12.0)

    p = sub.add_parser("profile", help="traveling wave profile and invariants at speed c")
    _add_common(p)
    p.add_argument("--c", type=float, required=False)
    p.add_argument("--branch", choices=("lower", "upper"), default="lower")
    p.add_argument("--x-max", type=float, default=None)
    p.add_argument("--n-points", type=int, default=4001)

    p = sub.add_parser("dispersion", help="energy-momentum samples over a speed grid")
    _add_common(p)
    _add_sweep(p, c_min=0.05, c_max=1.35, n=25)

    p = sub.add_parser("emin1", help="least energy at fixed momentum on a p-grid")
    _add_common(p)
    _add_sweep(p, refine=True)
    p.add_argument("--p-grid", type=int, default=64)

    p = sub.add_parser("scan2d", help="2D fixed-momentum minima over a lambda grid")
    _add_common(p)
    p.add_argument("--p", type=float, required=False)
    p.add_argument("--lambda", dest="lam", default="0.05:4:geometric:12",
                   help="min:max:geometric|linear:n")
    p.add_argument("--nx", type=int, default=256)
    p.add_argument("--ny", type=int, default=16)
    p.add_argument("--x-max", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=4000)
    p.add_argument("--tol-e", type=float, default=1e-10)
    p.add_argument("--save-fields", action="store_true")
    ap.subcommands = dict(sub.choices)
    return ap


_RUN_KEYS_EXCLUDED = {"out", "jobs", "config", "command"}


def _apply_config(args, parser_defaults: dict):
    """Fill flags left at their defaults from the [run] table of --config."""
    model_spec = args.model
    if args.config:
        doc = read_toml(args.config)
        run = doc.get("run", {})
        for key, value in run.items():
            attr = "lam" if key == "lambda" else key.replace("-", "_")
            if not hasattr(args, attr):
                raise ConfigError(f"{args.config}: unknown [run] key {key!r}")
            if getattr(args, attr) == parser_defaults.get(attr):
                setattr(args, attr, value)
        if model_spec is None:
            model_spec = doc.get("model")
    if args.jobs is None:
        env = os.environ.get("TWAVE_JOBS")
        try:
            args.jobs = int(env) if env else 1
        except ValueError as exc:
            raise ConfigError(f"TWAVE_JOBS must be an integer, got {env!r}") from exc
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    return model_spec


def _validate(args):
    if args.command == "profile" and args.c is None:
        raise ConfigError("profile needs --c")
    if args.command == "scan2d":
        if args.p is None:
            raise ConfigError("scan2d needs --p")
        if args.nx < 8 or args.ny < 1 or args.max_iter < 1 or args.tol_e <= 0:
            raise ConfigError("bad grid or tolerance")


COMMANDS = {"check": cmd_check, "profile": cmd_profile, "dispersion": cmd_dispersion,
            "emin1": cmd_emin1, "scan2d": cmd_scan2d}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        defaults = vars(_defaults_for(parser, args.command))
        model_spec = _apply_config(args, defaults)
        _validate(args)
        model = resolve_model(model_spec)
        run_args = {k: v for k, v in vars(args).items() if k not in _RUN_KEYS_EXCLUDED and k != "model"}
        out = Output(args.out, args.command, model, run_args)
        code = COMMANDS[args.command](model, args, out)
    except ConfigError as exc:
        print(f"twave: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TwaveError as exc:
        print(f"twave: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return code


def _defaults_for(parser, command):
    return parser.subcommands[command].parse_args([])


if __name__ == "__main__":
    sys.exit(main())
