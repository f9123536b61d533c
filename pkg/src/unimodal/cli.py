"""Command-line interface: ``unimodal <command> [flags]``.

Every command prints (or writes to ``--out``) a JSON report; ``sweep`` writes
CSV by default.  Exit status is 0 on success, 2 on bad input and 3 on a
numerical failure, with a JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import numpy as np

from . import analysis, cascade, maps, telemann
from .errors import InputError, NumericalFailure, UnimodalError

SWEEP_FIELDS = ["t", "class", "n_central_returns", "depth_reached", "sigma_last",
                "scaling_sum", "summability_partial", "lyapunov", "seed"]


class UsageError(InputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _plain(obj):
    """Convert numpy values and non-finite floats into JSON-safe Python objects."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


# argument groups

def _common(p):
    p.add_argument("--t", type=float, help="quadratic-family parameter in [0, 1]")
    p.add_argument("--alpha", type=float, default=2.0, help="critical exponent")
    p.add_argument("--map", dest="map_file", help="JSON map descriptor instead of --t")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--config", help="JSON file supplying default flag values")


def _caps(p, return_time=10**6):
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--return-time", type=int, default=return_time)
    p.add_argument("--nice-check", type=int, default=1000)
    p.add_argument("--grid", type=int, default=4096)
    p.add_argument("--u-floor", type=float, default=1e-12)
    p.add_argument("--u1", type=float, help="starting nice point (default: fixed point)")


def _budget(p):
    b = analysis.Budget()
    p.add_argument("--iterates", type=int, default=b.iterates)
    p.add_argument("--kmax", type=int, default=b.summability_kmax)
    p.add_argument("--depth", type=int, default=b.depth)
    p.add_argument("--return-time", type=int, default=b.return_time)
    p.add_argument("--p-max", type=int, default=b.p_max)
    p.add_argument("--nest-max", type=int, default=b.nest_max)
    p.add_argument("--nest-threshold", type=int, default=b.nest_threshold)
    p.add_argument("--lyapunov-iters", type=int, default=b.lyapunov_iters)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="unimodal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cascade", help="central-interval cascade u_n, q_n, sigma_n")
    _common(p)
    _caps(p)

    p = sub.add_parser("branches", help="branches of the first return map to U_n")
    _common(p)
    _caps(p, return_time=200)
    p.add_argument("--level", type=int, default=1)

    p = sub.add_parser("telemann", help="decomposition of the critical orbit up to time k")
    _common(p)
    _caps(p)
    p.add_argument("--k", type=int, default=500)
    p.add_argument("--n0", type=int, default=2)
    p.add_argument("--injectivity", action="store_true",
                   help="also compare the signatures of every k' <= k")

    p = sub.add_parser("summability", help="partial sums of |Df^k(f(0))|^(-1/alpha)")
    _common(p)
    p.add_argument("--kmax", type=int, default=10_000)
    p.add_argument("--scaling", action="store_true",
                   help="also report the scaling-factor sum of the cascade")

    p = sub.add_parser("audit-prop31", help="derivative growth along returns to U_n")
    _common(p)
    _caps(p)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--s-max", type=int, default=50)

    p = sub.add_parser("mane", help="expansion rate outside a central interval")
    _common(p)
    _caps(p)
    p.add_argument("--u", type=float, help="half-width of the avoided interval "
                                          "(default: u at level --n0 of the cascade)")
    p.add_argument("--n0", type=int, default=2)
    p.add_argument("--r-max", type=int, default=20)
    p.add_argument("--samples", type=int, default=10_000)

    p = sub.add_parser("density", help="histogram of a long orbit")
    _common(p)
    p.add_argument("--iters", type=int, default=10_000_000)
    p.add_argument("--bins", type=int, default=200)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--x0", type=float, default=0.3)

    p = sub.add_parser("lyapunov", help="Lyapunov exponent along an orbit")
    _common(p)
    p.add_argument("--iters", type=int, default=1_000_000)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--x0", type=float, default=0.3)

    p = sub.add_parser("classify", help="label the map P, R, M_candidate, ...")
    _common(p)
    _budget(p)

    p = sub.add_parser("sweep", help="classify a grid of parameters")
    _common(p)
    _budget(p)
    p.add_argument("--t-min", type=float, default=0.55)
    p.add_argument("--t-max", type=float, default=1.0)
    p.add_argument("--grid", type=int, default=10, help="number of parameters")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(format="csv")
    return parser


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, ValueError) as err:
            raise InputError(f"cannot read config {args.config}: {err}") from err
        if not isinstance(cfg, dict):
            raise InputError("config must be a JSON object")
        known = vars(args)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        defaults = {}
        for key, value in cfg.items():
            dest = key.lstrip("-").replace("-", "_")
            dest = "map_file" if dest == "map" else dest
            if dest not in known or dest in ("command", "config"):
                raise InputError(f"unknown config key {key!r} for {args.command}")
            defaults[dest] = value
        # command-line flags still win over the config file
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


# helpers

def _map(args) -> maps.UnimodalMap:
    if args.map_file:
        try:
            with open(args.map_file) as fh:
                return maps.from_json(fh.read())
        except (OSError, ValueError, KeyError) as err:
            if isinstance(err, UnimodalError):
                raise
            raise InputError(f"cannot read map {args.map_file}: {err}") from err
    if args.t is None:
        raise InputError("either --t or --map is required")
    return maps.quadratic(args.t, args.alpha)


def _caps_of(args) -> cascade.Caps:
    return cascade.Caps(depth=args.depth, return_time=args.return_time,
                        nice_check=args.nice_check, grid=args.grid, u_floor=args.u_floor)


def _cascade(m, args) -> cascade.CentralCascade:
    return cascade.build_cascade(m, u1=args.u1, caps=_caps_of(args))


def _budget_of(args) -> analysis.Budget:
    return analysis.Budget(iterates=args.iterates, summability_kmax=args.kmax,
                           depth=args.depth, return_time=args.return_time, p_max=args.p_max,
                           nest_max=args.nest_max, nest_threshold=args.nest_threshold,
                           lyapunov_iters=args.lyapunov_iters, seed=args.seed)


# commands

def cmd_cascade(args):
    m = _map(args)
    caps = _caps_of(args)
    cas = _cascade(m, args)
    d = cas.to_dict()
    d["nice"] = cascade.certify_nice(m, cas, caps)
    return d


def cmd_branches(args):
    m = _map(args)
    cas = _cascade(m, args)
    if not 1 <= args.level <= cas.depth:
        raise InputError(f"level must lie in [1, {cas.depth}]")
    bs = cascade.return_branches(m, cas.u[args.level - 1], _caps_of(args))
    return {"t": m.t, "alpha": m.alpha, "level": args.level, "u": bs.u,
            "cap_exceeded": bs.cap_exceeded, "rejected": bs.rejected,
            "central_unresolved": bs.central_unresolved,
            "disjoint": cascade.branches_disjoint(bs),
            "branches": [{"interval": b.interval.to_list(), "return_time": b.return_time,
                          "kind": b.kind.value} for b in bs.branches]}


def cmd_telemann(args):
    m = _map(args)
    cas = _cascade(m, args)
    dec = telemann.decompose(m, cas, args.k, args.n0)
    d = dec.to_dict(telemann.chain_rule_residual(m, dec))
    if args.injectivity:
        d["injectivity"] = telemann.signature_injectivity(m, cas, args.k, args.n0).to_dict()
    return d


def cmd_summability(args):
    m = _map(args)
    d = analysis.summability(m, args.kmax).to_dict()
    if args.scaling:
        cas = cascade.build_cascade(m)
        d["scaling"] = analysis.scaling_summability(cas, m.alpha).to_dict()
    return d


def cmd_audit(args):
    m = _map(args)
    cas = _cascade(m, args)
    return analysis.prop31_audit(m, cas, args.n, args.samples, args.s_max, args.seed).to_dict()


def cmd_mane(args):
    m = _map(args)
    u = args.u
    if u is None:
        cas = _cascade(m, args)
        if cas.depth < args.n0:
            raise InputError(f"cascade depth {cas.depth} is below n0={args.n0}; pass --u")
        u = cas.u[args.n0 - 1]
    d = analysis.mane_estimate(m, u, args.r_max, args.samples, args.seed).to_dict()
    d["u"] = u
    return d


def cmd_density(args):
    m = _map(args)
    return analysis.invariant_density(m, args.iters, args.bins, args.burn_in, args.x0).to_dict()


def cmd_lyapunov(args):
    m = _map(args)
    return {"t": m.t, "alpha": m.alpha, "x0": args.x0, "iters": args.iters,
            "burn_in": args.burn_in,
            "lyapunov": analysis.lyapunov(m, args.x0, args.iters, args.burn_in)}


def cmd_classify(args):
    m = _map(args)
    return analysis.classify(m, _budget_of(args)).to_dict()


def _sweep_row(job):
    t, alpha, budget = job
    return analysis.classify(maps.quadratic(t, alpha), budget).row()


def sweep_rows(t_min: float, t_max: float, grid: int, alpha: float, budget: analysis.Budget,
               jobs: int = 1) -> list:
    if grid < 1:
        raise InputError("grid must be at least 1")
    if not 0.0 <= t_min <= t_max <= 1.0:
        raise InputError("need 0 <= t-min <= t-max <= 1")
    if jobs < 1:
        raise InputError("jobs must be at least 1")
    ts = [float(t) for t in np.linspace(t_min, t_max, grid)]
    work = [(t, alpha, budget) for t in ts]
    if jobs == 1:
        rows = [_sweep_row(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, work))
    return sorted(rows, key=lambda r: r["t"])


def cmd_sweep(args):
    return sweep_rows(args.t_min, args.t_max, args.grid, args.alpha, _budget_of(args),
                      args.jobs)


COMMANDS = {
    "cascade": cmd_cascade,
    "branches": cmd_branches,
    "telemann": cmd_telemann,
    "summability": cmd_summability,
    "audit-prop31": cmd_audit,
    "mane": cmd_mane,
    "density": cmd_density,
    "lyapunov": cmd_lyapunov,
    "classify": cmd_classify,
    "sweep": cmd_sweep,
}


def render(command: str, fmt: str, result) -> str:
    if fmt == "csv":
        if command != "sweep":
            raise InputError("CSV output is only available for sweep")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_FIELDS)
        for row in result:
            w.writerow([_csv_cell(row[k]) for k in SWEEP_FIELDS])
        return buf.getvalue()
    return json.dumps(_plain(result), indent=2) + "\n"


def _fail(err: Exception, code: int) -> int:
    obj = {"error": type(err).__name__, "message": str(err), "exit_code": code}
    sys.stderr.write(json.dumps(obj) + "\n")
    return code


def run(argv: Optional[list] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        result = COMMANDS[args.command](args)
        text = render(args.command, args.format, result)
        if args.out:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    except InputError as err:
        return _fail(err, 2)
    except NumericalFailure as err:
        return _fail(err, 3)
    except OSError as err:
        return _fail(err, 2)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
