"""Command-line interface. Every subcommand writes CSV to stdout or ``--out``."""

from __future__ import annotations

import argparse
import sys
from itertools import product

from . import encoder
from .coding import DEFAULT_CUTOFF, CodingScheme, Scheme
from .csvout import render
from .estimation import CollisionCount, build_table, estimate_rho
from .figures import FIGURES, figure_data
from .projection import ProjectionStream
from .simulate import SimulationConfig, reports_csv, simulate_collision, simulate_estimator, sweep
from .theory import RHO_SINGULAR, TheoryModel, optimum_w

DEFAULT_SEED = 42
SCHEMES = [s.value for s in Scheme]


class UsageError(Exception):
    pass


def _scheme(args, w=None) -> CodingScheme:
    kind = Scheme(args.scheme)
    w = args.w if w is None else w
    if kind is not Scheme.SIGN and w is None:
        raise UsageError(f"--w is required for --scheme {kind.value}")
    try:
        return CodingScheme(kind, w, args.cutoff)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _ws(args):
    if args.scheme == Scheme.SIGN.value:
        return [None]
    if not args.w:
        raise UsageError(f"--w is required for --scheme {args.scheme}")
    return args.w


def _check_rhos(rhos, lo=0.0, hi=1.0):
    for rho in rhos:
        if not lo <= rho <= hi:
            raise UsageError(f"--rho must lie in [{lo:g}, {hi:g}], got {rho:g}")


def cmd_prob(args):
    _check_rhos(args.rho)
    rows = []
    for w, rho in product(_ws(args), args.rho):
        model = TheoryModel(_scheme(args, w))
        dp = model.dprob(rho) if rho <= RHO_SINGULAR else None
        rows.append((args.scheme, w, rho, model.prob(rho), dp))
    return render(("scheme", "w", "rho", "p", "dp_drho"), rows)


def cmd_variance(args):
    _check_rhos(args.rho)
    rows = []
    for w, rho in product(_ws(args), args.rho):
        res = TheoryModel(_scheme(args, w)).variance(rho)
        rows.append((args.scheme, w, rho, res.p, res.v, res.near_singular))
    return render(("scheme", "w", "rho", "p", "v", "near_singular"), rows)


def cmd_optw(args):
    if args.scheme == Scheme.SIGN.value:
        raise UsageError("optw needs a scheme with a bin width")
    _check_rhos(args.rho, hi=RHO_SINGULAR)
    rows = []
    for rho in args.rho:
        opt = optimum_w(args.scheme, rho, (args.wmin, args.wmax), args.grid)
        rows.append((args.scheme, rho, opt.w_star, opt.v_star, opt.at_boundary))
    return render(("scheme", "rho", "w_star", "v_star", "at_boundary"), rows)


def cmd_table(args):
    table = build_table(_scheme(args), args.resolution, args.rho_min)
    return render(("rho", "p"), zip(table.rho, table.p))


def cmd_estimate(args):
    if args.k < 1 or not 0 <= args.matches <= args.k:
        raise UsageError("need 0 <= --matches <= --k and --k >= 1")
    table = build_table(_scheme(args), args.resolution, args.rho_min)
    rho_hat = estimate_rho(table, CollisionCount(args.matches, args.k))
    return render(("scheme", "w", "matches", "k", "rho_hat"), [(args.scheme, args.w, args.matches, args.k, rho_hat)])


def cmd_simulate(args):
    _check_rhos([args.rho])
    cfg = SimulationConfig(
        _scheme(args), args.rho, n=args.n, k=args.k, m=args.m or 1, seed=args.seed, workers=args.workers
    )
    report = simulate_estimator(cfg) if args.m else simulate_collision(cfg)
    return reports_csv([report])


def cmd_sweep(args):
    _check_rhos(args.rho)
    base = SimulationConfig(
        CodingScheme(Scheme.SIGN, None, args.cutoff),
        0.0, n=args.n, k=args.k, m=args.m or 1, seed=args.seed, workers=args.workers,
    )
    reports = sweep(args.schemes, args.rho, args.w, base, estimator=bool(args.m))
    return reports_csv(reports)


def cmd_encode(args):
    scheme = _scheme(args)
    data = encoder.read_sparse(args.input)
    stream = ProjectionStream(args.seed, max(data.dim, 1), args.k)
    enc = encoder.encode_dataset(data, scheme, stream)
    encoder.write_sparse(enc, args.output)
    return render(
        ("examples", "skipped", "k", "dim"), [(len(enc), enc.skipped, enc.k, enc.dim)]
    )


def cmd_figure(args):
    return figure_data(args.figure)


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rpcoding",
        description="Coded random projections: collision probabilities, variances, "
        "estimation, Monte Carlo checks and dataset encoding. Output is CSV.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, multi=False, need_rho=True):
        p.add_argument("--scheme", choices=SCHEMES, required=True, help="coding scheme")
        if multi:
            p.add_argument("--w", type=float, nargs="+", help="bin width(s); not used by sign")
        else:
            p.add_argument("--w", type=float, help="bin width; not used by sign")
        if need_rho:
            p.add_argument("--rho", type=float, nargs="+" if multi else None, required=True,
                           help="similarity (inner product of unit vectors)")
        p.add_argument("--cutoff", type=float, default=DEFAULT_CUTOFF,
                       help="clamp bound for uniform/offset codes (default %(default)s)")
        p.add_argument("--out", help="write CSV here instead of stdout")

    def sim_flags(p):
        p.add_argument("--n", type=_positive_int, default=10**6, help="pairs for collision runs (default %(default)s)")
        p.add_argument("--k", type=_positive_int, default=100, help="projections per replication (default %(default)s)")
        p.add_argument("--m", type=_positive_int, help="replications; switches to estimator-variance mode")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="random seed (default %(default)s)")
        p.add_argument("--workers", type=_positive_int, default=1, help="worker threads (default %(default)s)")

    p = sub.add_parser("prob", help="collision probability and its rho-derivative")
    common(p, multi=True)
    p.set_defaults(func=cmd_prob)

    p = sub.add_parser("variance", help="asymptotic variance factor V")
    common(p, multi=True)
    p.set_defaults(func=cmd_variance)

    p = sub.add_parser("optw", help="bin width minimizing V at fixed rho")
    p.add_argument("--scheme", choices=[s for s in SCHEMES if s != "sign"], required=True)
    p.add_argument("--rho", type=float, nargs="+", required=True, help="similarity value(s)")
    p.add_argument("--wmin", type=float, default=0.0, help="search lower end; <=0 means wmax/1000 (default %(default)s)")
    p.add_argument("--wmax", type=float, default=20.0, help="search upper end (default %(default)s)")
    p.add_argument("--grid", type=_positive_int, default=400, help="coarse grid size (default %(default)s)")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_optw)

    for name, func, helptext in (
        ("table", cmd_table, "inversion table rho -> P"),
        ("estimate", cmd_estimate, "estimate rho from a collision count"),
    ):
        p = sub.add_parser(name, help=helptext)
        common(p, need_rho=False)
        p.add_argument("--resolution", type=float, default=1e-3, help="table step in rho (default %(default)s)")
        p.add_argument("--rho-min", type=float, default=0.0, help="lowest tabulated rho (default %(default)s)")
        if name == "estimate":
            p.add_argument("--matches", type=int, required=True, help="number of agreeing codes")
            p.add_argument("--k", type=_positive_int, required=True, help="number of projections")
        p.set_defaults(func=func)

    p = sub.add_parser("simulate", help="Monte Carlo check of P (or of Var(rho_hat) with --m)")
    common(p)
    sim_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="simulate a grid of schemes x rho x w")
    p.add_argument("--schemes", choices=SCHEMES, nargs="+", required=True)
    p.add_argument("--rho", type=float, nargs="+", required=True)
    p.add_argument("--w", type=float, nargs="+", required=True)
    p.add_argument("--cutoff", type=float, default=DEFAULT_CUTOFF)
    p.add_argument("--out", help="write CSV here instead of stdout")
    sim_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("encode", help="project, code and one-hot expand a sparse dataset")
    p.add_argument("--scheme", choices=SCHEMES, required=True)
    p.add_argument("--w", type=float, help="bin width; not used by sign")
    p.add_argument("--k", type=_positive_int, required=True, help="number of projections")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="projection seed (default %(default)s)")
    p.add_argument("--cutoff", type=float, default=DEFAULT_CUTOFF)
    p.add_argument("--out", help="write the summary CSV here instead of stdout")
    p.add_argument("input", help="sparse 'label idx:val' input file")
    p.add_argument("output", help="encoded output file")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("figure", help="data behind one of the theory figures")
    p.add_argument("figure", choices=list(FIGURES))
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_figure)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"rpcoding {args.command}: error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
