"""Command-line front end.

Exit status: 0 on success, 1 when a verification experiment records
failures, 2 on usage, validation or precondition errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import construct, core, quotient, verify

DEFAULT_SEED = 0


class UsageError(Exception):
    pass


def parse_lengths(text: str) -> core.EdgeLengths:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    try:
        return core.EdgeLengths([float(p) for p in parts])
    except ValueError:
        raise core.ValidationError(f"could not parse edge lengths {text!r}; use decimals like 1,1.5,2") from None


def _tolerances(args) -> core.ToleranceConfig:
    defaults = core.DEFAULT_TOL
    return core.ToleranceConfig(
        eps_rank=args.eps_rank if args.eps_rank is not None else defaults.eps_rank,
        eps_gram=args.eps_gram if args.eps_gram is not None else defaults.eps_gram,
        eps_align=args.eps_align if args.eps_align is not None else defaults.eps_align,
        eps_root=args.eps_root if args.eps_root is not None else defaults.eps_root,
        cond_floor=args.cond_floor if args.cond_floor is not None else defaults.cond_floor,
    )


def _read_polygon(path: str, tol: core.ToleranceConfig) -> core.Polygon:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    return core.Polygon.from_json(text, tol)


def _emit(args, text: str):
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.command} requires {', '.join(missing)}")


def cmd_check(args, tol):
    ell = parse_lengths(",".join(args.lengths))
    _emit(args, str(core.classify_feasibility(ell)))
    return 0


def cmd_build(args, tol):
    _require(args, "ell")
    d = args.d
    if args.kind == "planar":
        P = construct.build_planar(args.ell, tol)
        if d is not None:
            P = core.embed(P, d)
    elif args.kind == "degenerate":
        _require(args, "pattern")
        P = construct.build_degenerate(args.ell, construct.SignPattern.parse(args.pattern), d or 2, tol)
    else:
        _require(args, "k", "d")
        P = construct.raise_to_dimension(args.ell, args.k, d, tol, args.seed)
    _emit(args, P.to_json())
    return 0


def cmd_dim(args, tol):
    P = _read_polygon(args.input, tol)
    _emit(args, str(core.dimension(P, tol)))
    return 0


def cmd_bend(args, tol):
    P = _read_polygon(args.input, tol)
    sites = construct.bend_sites(P, tol)
    if args.index is None:
        if not sites:
            raise RuntimeError("no bendable vertex found")
        site = sites[0]
    else:
        matches = [s for s in sites if s.index == args.index]
        if not matches:
            usable = ", ".join(str(s.index) for s in sites) or "none"
            raise core.PreconditionError(f"vertex {args.index} is not bendable (bendable: {usable})")
        site = matches[0]
    rng = np.random.default_rng(args.seed)
    u = construct.random_complement_direction(site.span_basis, P.ambient_dim, rng)
    _emit(args, construct.bend(P, site, u, tol).to_json())
    return 0


def cmd_equiv(args, tol):
    P = _read_polygon(args.a, tol)
    Q = _read_polygon(args.b, tol)
    if args.group == "so":
        same = quotient.so_equivalent(P, Q, tol)
        residual, _ = quotient.align(P, Q, proper_only=True, tol=tol)
    else:
        same = quotient.o_equivalent(P, Q, tol)
        residual, _ = quotient.align(P, Q, proper_only=False, tol=tol)
    _emit(args, f"{'true' if same else 'false'} {residual!r}")
    return 0


def cmd_fiber(args, tol):
    P = _read_polygon(args.input, tol)
    d = args.from_d
    if d < 2:
        raise UsageError("--from-d must be at least 2")
    if P.ambient_dim > d + 1:
        raise core.PreconditionError(
            f"polygon lives in R^{P.ambient_dim}; the fibre of phi_{d} needs a polygon in R^{d + 1}"
        )
    image = quotient.moduli_point(core.embed(P, d + 1), tol)
    fiber = quotient.phi_fiber(image, tol)
    _emit(args, json.dumps([mp.to_dict() for mp in fiber]))
    return 0


def cmd_verify(args, tol):
    _require(args, "ell")
    name = args.experiment
    ell, seed = args.ell, args.seed
    if name in ("dimension-bound", "chirality", "fiber"):
        _require(args, "d")
        report = verify.EXPERIMENTS[name](ell, args.d, args.trials, seed, tol)
    elif name == "dimension-range":
        _require(args, "d")
        report = verify.verify_dimension_range(ell, args.d, seed, tol)
    elif name == "stabilization":
        report = verify.verify_stabilization(ell, args.trials, seed, tol)
    else:
        report = verify.verify_degenerate_classes(ell, seed, tol)
    _emit(args, report.to_json())
    if args.csv:
        path = Path(args.csv)
        new = not path.exists() or path.stat().st_size == 0
        with path.open("a") as fh:
            if new:
                fh.write(verify.CSV_HEADER)
            fh.write(report.csv_row())
    return 0 if report.passed else 1


def cmd_sample(args, tol):
    _require(args, "ell", "d")
    lines = [
        construct.sample(args.ell, args.d, construct.sub_seed(args.seed, i), tol).to_json()
        for i in range(args.count)
    ]
    _emit(args, "\n".join(lines))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", "-o", help="write output to this file instead of stdout")
    tolg = common.add_argument_group("tolerances")
    tolg.add_argument("--eps-rank", type=float)
    tolg.add_argument("--eps-gram", type=float)
    tolg.add_argument("--eps-align", type=float)
    tolg.add_argument("--eps-root", type=float)
    tolg.add_argument("--cond-floor", type=float)

    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help=f"random seed (default {DEFAULT_SEED})")

    parser = argparse.ArgumentParser(
        prog="polydim",
        description="Polygon spaces, polygon dimension and moduli of polygons.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="classify edge lengths")
    p.add_argument("lengths", nargs="+")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("build", parents=[common, seeded], help="construct a polygon")
    p.add_argument("kind", choices=["planar", "degenerate", "dim"])
    p.add_argument("--ell", type=parse_lengths)
    p.add_argument("--k", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--pattern")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("dim", parents=[common], help="dimension of a polygon")
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_dim)

    p = sub.add_parser("bend", parents=[common, seeded], help="bend a polygon up one dimension")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--index", type=int)
    p.set_defaults(func=cmd_bend)

    p = sub.add_parser("equiv", parents=[common], help="test rotation / reflection equivalence")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--group", choices=["so", "o"], default="so")
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("fiber", parents=[common], help="classes mapping onto a polygon's class")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--from-d", type=int, required=True)
    p.set_defaults(func=cmd_fiber)

    p = sub.add_parser("verify", parents=[common, seeded], help="run a verification experiment")
    p.add_argument("experiment", choices=sorted(verify.EXPERIMENTS))
    p.add_argument("--ell", type=parse_lengths)
    p.add_argument("--d", type=int)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--csv", help="append a CSV summary row to this file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sample", parents=[common, seeded], help="random polygons as JSON lines")
    p.add_argument("--ell", type=parse_lengths)
    p.add_argument("--d", type=int)
    p.add_argument("--count", type=int, default=1)
    p.set_defaults(func=cmd_sample)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        tol = _tolerances(args)
        return args.func(args, tol)
    except (UsageError, core.ValidationError, core.PreconditionError, OSError) as exc:
        print(f"polydim {args.command}: error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
