"""Command-line front end.

Subcommands: ``moments``, ``simulate``, ``convergence``, ``lower-bound``,
``hitting`` and ``selftest``. Exit status is 0 on success, 1 on a usage or
parameter error and 2 on a numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import experiments as ex
from .model import BesselParams, CirParams, mean_at, to_bessel
from .paths import GridPath, sample_bm
from .sampling import SeedSpec, derive
from .schemes import SchemeError, SchemeKind, check_scheme, solve_path


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of integers, got {text!r}")


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass
class RunConfig:
    subcommand: str
    cir: Optional[dict]
    bessel: dict
    n_list: list = field(default_factory=list)
    eps_list: list = field(default_factory=list)
    reps: int = 0
    refine: int = 64
    fine_factor: int = 64
    scheme: str = "truncated-milstein"
    variant: str = "full-refill"
    seed: int = 0
    drop_smallest: int = 1
    t: float = 1.0
    mesh: float = 2.0**-12

    def echo(self) -> dict:
        return asdict(self)


def _params_from_args(args) -> tuple[Optional[CirParams], BesselParams]:
    cir_flags = [args.a, args.sigma, args.x0, args.T]
    bes_flags = [args.delta, args.z0]
    has_cir = any(v is not None for v in cir_flags)
    has_bes = any(v is not None for v in bes_flags)
    if has_cir == has_bes:
        raise UsageError("give exactly one parameterization: --a --b --sigma --x0 [--T]  or  --delta --b --z0")
    b = 0.0 if args.b is None else args.b
    try:
        if has_cir:
            if args.a is None or args.sigma is None:
                raise UsageError("CIR parameterization needs --a and --sigma")
            cir = CirParams(a=args.a, b=b, sigma=args.sigma, x0=args.x0 or 0.0, T=1.0 if args.T is None else args.T)
            return cir, to_bessel(cir)[0]
        if args.delta is None:
            raise UsageError("Bessel parameterization needs --delta")
        return None, BesselParams(delta=args.delta, b=b, z0=args.z0 or 0.0)
    except ValueError as err:
        raise UsageError(str(err))


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("model")
    g.add_argument("--a", type=float)
    g.add_argument("--b", type=float)
    g.add_argument("--sigma", type=float)
    g.add_argument("--x0", type=float)
    g.add_argument("--T", type=float)
    g.add_argument("--delta", type=float)
    g.add_argument("--z0", type=float)
    r = common.add_argument_group("run")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--out", type=Path)
    r.add_argument("--format", choices=["csv", "json", "both"], default="both")
    r.add_argument("--no-timing", action="store_true", help="write runtime_seconds as null (byte-reproducible JSON)")

    parser = _Parser(prog="cirlab", description="CIR / squared Bessel strong approximation laboratory")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)

    p = sub.add_parser("moments", parents=[common], help="closed-form mean vs Monte Carlo")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--reps", type=int, default=1_000_000)

    p = sub.add_parser("simulate", parents=[common], help="write solution paths to CSV")
    p.add_argument("--N", type=_int_list, default=[256])
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--scheme", default="truncated-milstein")

    p = sub.add_parser("convergence", parents=[common], help="strong error over an N list")
    p.add_argument("--N", type=_int_list, required=True)
    p.add_argument("--reps", type=int, default=20_000)
    p.add_argument("--refine", type=int, default=64)
    p.add_argument("--scheme", default="truncated-milstein")
    p.add_argument("--drop-smallest", type=int, default=1)

    p = sub.add_parser("lower-bound", parents=[common], help="coupled lower bound over an N list")
    p.add_argument("--N", type=_int_list, required=True)
    p.add_argument("--reps", type=int, default=20_000)
    p.add_argument("--fine-factor", type=int, default=64)
    p.add_argument("--variant", default="full-refill")
    p.add_argument("--drop-smallest", type=int, default=1)

    p = sub.add_parser("hitting", parents=[common], help="probability of staying positive on [eps, T]")
    p.add_argument("--eps", type=_float_list, required=True)
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--mesh", type=float, default=2.0**-12)

    p = sub.add_parser("selftest", parents=[common], help="reduced-scale invariant checks")
    p.add_argument("--reps", type=int, default=20_000)
    return parser


def _check_n_list(ns: list[int]) -> None:
    if not ns or any(n < 1 for n in ns) or any(b <= a for a, b in zip(ns, ns[1:])):
        raise UsageError("--N must be a strictly increasing list of positive integers")


def _config(args, cir, bes, **extra) -> RunConfig:
    return RunConfig(
        subcommand=args.subcommand,
        cir=asdict(cir) if cir else None,
        bessel=asdict(bes),
        seed=args.seed,
        reps=args.reps,
        **extra,
    )


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(args, header, rows, summary: dict) -> None:
    text = _csv_text(header, rows)
    js = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    if args.out is None:
        sys.stdout.write(text)
        if args.format in ("json", "both"):
            sys.stdout.write(js)
        return
    out = Path(args.out)
    if args.format == "csv":
        out.write_text(text)
    elif args.format == "json":
        out.write_text(js)
    else:
        out.write_text(text)
        out.with_suffix(".json").write_text(js)


def _fit_dict(points, drop: int):
    try:
        fit = ex.fit_rate(points, drop)
    except ValueError as err:
        return {"error": str(err)}
    return asdict(fit)


def _summary(args, cfg: RunConfig, header, rows, fit, started: float) -> dict:
    return {
        "config": cfg.echo(),
        "points": [dict(zip(header, [float(v) if not isinstance(v, int) else v for v in row])) for row in rows],
        "fit": fit,
        "runtime_seconds": None if args.no_timing else time.perf_counter() - started,
        "seed": args.seed,
    }


def _cmd_moments(args, cir, bes, started):
    cfg = _config(args, cir, bes, t=args.t)
    if args.t < 0:
        raise UsageError("--t must be >= 0")
    closed = mean_at(bes, args.t)
    mc, se = ex.mean_estimate(bes, args.t, args.reps, seed=args.seed, threads=args.threads) if args.t > 0 else (
        bes.z0,
        0.0,
    )
    ok = abs(mc - closed) <= 3 * se if se > 0 else mc == closed
    header = ["t", "reps", "closed_form_mean", "mc_mean", "std_error"]
    rows = [[args.t, args.reps, closed, mc, se]]
    print(f"closed-form mean {_fmt(closed)}  Monte Carlo {_fmt(mc)} +- {_fmt(se)}  within 3 se: {ok}", file=sys.stderr)
    _emit(args, header, rows, _summary(args, cfg, header, rows, None, started))
    return 0


def _cmd_simulate(args, cir, bes, started):
    kind = SchemeKind.from_name(args.scheme)
    n = args.N[0]
    g = derive(SeedSpec(args.seed, 7, 0))
    driver = sample_bm(g, n, 1.0 / n, batch=args.reps if args.reps > 1 else None)
    res = solve_path(kind, bes, bes.z0, driver, record=True, g=g)
    path = res.path
    if cir is not None:
        _, rho, T = to_bessel(cir)
        path = GridPath(0.0, T / n, path.values / rho)
    if args.out is None:
        buf = io.StringIO()
        vals = path.values.reshape(n + 1, -1)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "time", "value"] if vals.shape[1] == 1 else ["index", "time"] + [f"value_{k}" for k in range(vals.shape[1])])
        for i, row in enumerate(vals):
            w.writerow([i, _fmt(path.time_at(i))] + [_fmt(v) for v in row])
        sys.stdout.write(buf.getvalue())
    else:
        path.to_csv(args.out)
    return 0


def _cmd_rate(args, cir, bes, started, lower: bool):
    _check_n_list(args.N)
    p = cir if cir is not None else bes
    rows = []
    if lower:
        variant = ex.CouplingVariant.from_name(args.variant)
        cfg = _config(args, cir, bes, n_list=args.N, fine_factor=args.fine_factor, variant=variant.value,
                      drop_smallest=args.drop_smallest)
        for n in args.N:
            e = ex.lower_bound_coupling(p, n, args.reps, args.fine_factor, variant, args.seed, args.threads)
            rows.append([e.n_grid, e.reps, e.mean_abs_error, e.std_error])
    else:
        kind = SchemeKind.from_name(args.scheme)
        cfg = _config(args, cir, bes, n_list=args.N, refine=args.refine, scheme=kind.value,
                      drop_smallest=args.drop_smallest)
        for n in args.N:
            e = ex.strong_error(kind, p, n, args.reps, args.refine, args.seed, args.threads)
            rows.append([e.n_grid, e.reps, e.mean_abs_error, e.std_error])
    header = ["n_grid", "reps", "mean_abs_error", "std_error"]
    fit = _fit_dict([(r[0], r[2]) for r in rows], args.drop_smallest)
    _emit(args, header, rows, _summary(args, cfg, header, rows, fit, started))
    if "slope" in fit:
        print(f"fitted slope {fit['slope']:.4f} (r^2 {fit['r_squared']:.4f})", file=sys.stderr)
    return 0


def _cmd_hitting(args, cir, bes, started):
    scale = cir.T if cir is not None else 1.0
    eps = [e / scale for e in args.eps]
    cfg = _config(args, cir, bes, eps_list=args.eps, mesh=args.mesh)
    try:
        res = ex.hitting_probabilities(bes, eps, 1.0, args.reps, args.mesh, args.seed, args.threads)
    except ValueError as err:
        raise UsageError(str(err))
    header = ["eps", "reps", "prob_estimate", "std_error"]
    rows = [[e, r.reps, r.prob_estimate, r.std_error] for e, r in zip(args.eps, res)]
    fit = _fit_dict([(r[0], r[2]) for r in rows], 0) if len(rows) >= 3 else None
    _emit(args, header, rows, _summary(args, cfg, header, rows, fit, started))
    return 0


def _cmd_selftest(args, cir, bes, started):
    from .selftest import run_selftest

    ok = run_selftest(reps=args.reps, seed=args.seed, out=sys.stdout)
    return 0 if ok else 2


def run(argv=None) -> int:
    parser = _build_parser()
    started = time.perf_counter()
    try:
        args = parser.parse_args(argv)
        if args.subcommand is None:
            raise UsageError("missing subcommand")
        if args.threads < 1 or getattr(args, "reps", 1) < 1:
            raise UsageError("--threads and --reps must be >= 1")
        if args.subcommand == "selftest" and all(
            getattr(args, k) is None for k in ("a", "sigma", "x0", "T", "delta", "z0")
        ):
            cir, bes = None, BesselParams(1.0, 0.0, 0.0)
        else:
            cir, bes = _params_from_args(args)
        if args.subcommand in ("convergence", "simulate"):
            try:
                check_scheme(SchemeKind.from_name(args.scheme), bes)
            except ValueError as err:
                raise UsageError(str(err))
        if args.subcommand == "lower-bound":
            ex.CouplingVariant.from_name(args.variant)
        handler = {
            "moments": _cmd_moments,
            "simulate": _cmd_simulate,
            "convergence": lambda *a: _cmd_rate(*a, lower=False),
            "lower-bound": lambda *a: _cmd_rate(*a, lower=True),
            "hitting": _cmd_hitting,
            "selftest": _cmd_selftest,
        }[args.subcommand]
        return handler(args, cir, bes, started)
    except UsageError as err:
        print(f"cirlab: error: {err}", file=sys.stderr)
        return 1
    except SchemeError as err:
        print(f"cirlab: error: {err}", file=sys.stderr)
        return 1
    except (FloatingPointError, ArithmeticError) as err:
        print(f"cirlab: numerical failure: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"cirlab: error: {err}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


__all__ = ["RunConfig", "main", "run"]
