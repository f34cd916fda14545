"""Command-line interface: ``choquardlab <subcommand> [options]``.

Exit codes: 0 success, 1 solver failure or failed verification, 2 invalid arguments.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .functionals import ChoquardParams, NehariError
from .grid import GridSpec, write_field
from .limits import (
    ShootingError,
    SpectrumError,
    gamma_level,
    kappa_level,
    limit_groundstate_V,
    nls_groundstate,
    nondegeneracy_spectrum,
)
from .report import dumps, to_csv, write_json
from .riesz import hls_constant, hls_constant_unnormalized, riesz_constant, unnormalized_ratio
from .solvers import (
    SolverConfig,
    SolverError,
    fit_two_bumps,
    solve_groundstate,
    solve_nodal,
    symmetry_defect,
    two_bump_init,
)
from .suites import SUITES, run_suite
from .sweep import MODES, SweepConfig, run_sweep

log = logging.getLogger("choquardlab")


def _alpha_list(text: str) -> list[float]:
    try:
        return [float(a) for a in text.split(",") if a.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _common(p: argparse.ArgumentParser, alpha: bool = True) -> None:
    p.add_argument("--dim", type=int, default=1, help="space dimension N (1, 2 or 3)")
    p.add_argument("--p", type=float, default=2.0, help="exponent p")
    if alpha:
        p.add_argument("--alpha", type=float, default=0.5, help="Riesz order alpha in (0, N)")
    p.add_argument("--box", type=float, default=30.0, help="half box length L")
    p.add_argument("--points", type=int, default=1024, help="grid points per axis (power of two)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=20000)
    p.add_argument("--tol", type=float, default=1e-8, help="H^1 residual tolerance")
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="choquardlab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (("groundstate", "positive groundstate"), ("nodal", "least-energy nodal solution")):
        sp = sub.add_parser(name, help=f"solve for the {helptext}")
        _common(sp)
        sp.add_argument("--unnormalized", action="store_true", help="use |x|^(alpha-N) instead of I_alpha")
        sp.add_argument("--separation", type=float, default=8.0, help="initial bump distance (nodal)")

    sp = sub.add_parser("sweep", help="alpha-sweep toward 0 or N")
    _common(sp, alpha=False)
    sp.add_argument("--mode", choices=MODES, required=True)
    sp.add_argument("--alphas", type=_alpha_list, required=True, help="comma-separated alpha list")
    sp.add_argument("--restarts", type=int, default=1, help="seeded random-offset nodal restarts")
    sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("verify", help="run a verification suite")
    sp.add_argument("suite", choices=SUITES)
    sp.add_argument("--dim", type=int, default=1)
    sp.add_argument("--out", type=Path, default=None)
    sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("reference", help="limit-problem groundstates, levels and spectrum")
    sp.add_argument("--dim", type=int, default=1)
    sp.add_argument("--p", type=float, default=3.0, help="exponent of the nonlocal-coefficient problem")
    sp.add_argument("--q", type=float, default=None, help="NLS exponent (default 2p)")
    sp.add_argument("--mu", type=float, default=1.0)
    sp.add_argument("--box", type=float, default=30.0)
    sp.add_argument("--points", type=int, default=1024)
    sp.add_argument("--eigenvalues", type=int, default=3)
    sp.add_argument("--out", type=Path, default=None)

    sp = sub.add_parser("constants", help="Riesz and HLS constants")
    sp.add_argument("--dim", type=int, default=1)
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--alphas", type=_alpha_list, default=None)
    return parser


def _grid(parser, args) -> GridSpec:
    try:
        return GridSpec(args.dim, args.box, args.points)
    except ValueError as exc:
        parser.error(str(exc))


def _solver_config(parser, args) -> SolverConfig:
    try:
        return SolverConfig(max_iterations=args.max_iters, residual_tolerance=args.tol, seed=args.seed)
    except ValueError as exc:
        parser.error(str(exc))


def _emit(obj: dict, args, stem: str) -> None:
    text = dumps(obj)
    if args.out is not None:
        write_json(obj, args.out / f"{stem}.json")
    print(text, end="")


def _cmd_solve(parser, args) -> int:
    try:
        params = ChoquardParams(args.dim, args.p, args.alpha, normalized=not args.unnormalized)
    except ValueError as exc:
        parser.error(str(exc))
    grid = _grid(parser, args)
    config = _solver_config(parser, args)
    normalized_limit = not args.unnormalized
    try:
        if normalized_limit:
            W = nls_groundstate(args.dim, 2 * args.p, grid)
        else:
            if args.p <= 2:
                parser.error("the unnormalized problem needs p > 2 for its reference profile")
            W = limit_groundstate_V(args.dim, args.p, 1.0 if args.command == "groundstate" else 2.0, grid)
        if args.command == "groundstate":
            res = solve_groundstate(params, W, config)
        else:
            res = solve_nodal(params, two_bump_init(W, args.separation), config)
    except (SolverError, NehariError, ShootingError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1
    record = {
        "params": {"dimension": params.dimension, "p": params.p, "alpha": params.alpha, "normalized": params.normalized},
        "grid": {"half_length": grid.half_length, "points": grid.points_per_axis},
        "energy": res.energy,
        "residual_h1": res.residual_h1,
        "nehari_defects": list(res.nehari_defects),
        "iterations": res.iterations,
        "boundary_mass": res.boundary_mass,
        "converged": res.converged,
    }
    if args.command == "nodal":
        fit = fit_two_bumps(res.field, W)
        sd = symmetry_defect(res.field, fit=fit)
        record["bump_fit"] = {
            "xi_plus": fit.xi_plus.tolist(),
            "xi_minus": fit.xi_minus.tolist(),
            "fit_error_h1": fit.fit_error_h1,
            "separation": fit.separation,
        }
        record["symmetry_defect"] = sd.value
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        write_field(res.field, args.out / f"{args.command}.chqf")
    _emit(record, args, args.command)
    return 0 if res.converged else 1


def _cmd_sweep(parser, args) -> int:
    try:
        cfg = SweepConfig(
            mode=args.mode,
            alphas=tuple(args.alphas),
            dimension=args.dim,
            p=args.p,
            half_length=args.box,
            points=args.points,
            solver=SolverConfig(max_iterations=args.max_iters, residual_tolerance=args.tol, seed=args.seed),
            out_dir=None if args.out is None else str(args.out),
            restarts=args.restarts,
            workers=args.workers,
            formats=("json", args.format) if args.format == "csv" else ("json",),
        )
    except ValueError as exc:
        parser.error(str(exc))
    report = run_sweep(cfg).to_dict()
    if args.format == "csv":
        print(to_csv(report), end="")
    else:
        print(dumps(report["summary"]), end="")
    failed = report["summary"]["failed"] > 0 or any(
        "nodal_not_converged" in r.get("flags", []) or "groundstate_not_converged" in r.get("flags", [])
        for r in report["records"]
    )
    return 1 if failed else 0


def _cmd_verify(parser, args) -> int:
    try:
        res = run_suite(args.suite, args.dim)
    except ValueError as exc:
        parser.error(str(exc))
    for line in res.lines:
        print(line)
    print(f"{args.suite}: {'PASS' if res.passed else 'FAIL'}")
    if args.out is not None:
        write_json(res.to_dict(), args.out / f"verify_{args.suite}.json")
    return 0 if res.passed else 1


def _cmd_reference(parser, args) -> int:
    q = args.q if args.q is not None else 2 * args.p
    try:
        grid = GridSpec(args.dim, args.box, args.points)
        if args.mu <= 0:
            raise ValueError("mu must be positive")
        U = nls_groundstate(args.dim, q, grid)
        gamma = gamma_level(args.dim, q)
        kappa = kappa_level(args.dim, args.p, args.mu)
        V = limit_groundstate_V(args.dim, args.p, args.mu, grid) if args.p > 2 else None
    except ValueError as exc:
        parser.error(str(exc))
    except ShootingError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1
    try:
        eig = nondegeneracy_spectrum(U, q, args.eigenvalues)
    except SpectrumError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1
    record = {"q": q, "p": args.p, "mu": args.mu, "gamma": gamma, "kappa": kappa, "eigenvalues": np.asarray(eig).tolist()}
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        write_field(U, args.out / "U.chqf")
        if V is not None:
            write_field(V, args.out / "V.chqf")
        write_json(record, args.out / "reference.json")
    print(dumps(record), end="")
    return 0


def _cmd_constants(parser, args) -> int:
    N = args.dim
    if args.alphas is not None:
        alphas = args.alphas
    elif args.alpha is not None:
        alphas = [args.alpha]
    else:
        alphas = [1e-4, 0.1, 0.5 * N, 0.9 * N, N - 1e-4]
    print(f"{'alpha':>10} {'A_alpha':>16} {'1/A_alpha':>16} {'C':>16} {'C~':>16}")
    for a in alphas:
        try:
            row = (riesz_constant(N, a), unnormalized_ratio(N, a), hls_constant(N, a), hls_constant_unnormalized(N, a))
        except ValueError as exc:
            parser.error(str(exc))
        print(f"{a:10.6g} " + " ".join(f"{v:16.10g}" for v in row))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "dim", 1) not in (1, 2, 3):
        parser.error(f"--dim must be 1, 2 or 3, got {args.dim}")
    handlers = {
        "groundstate": _cmd_solve,
        "nodal": _cmd_solve,
        "sweep": _cmd_sweep,
        "verify": _cmd_verify,
        "reference": _cmd_reference,
        "constants": _cmd_constants,
    }
    return handlers[args.command](parser, args)


if __name__ == "__main__":
    sys.exit(main())
