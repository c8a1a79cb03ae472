"""Command-line front end.

Exit codes: 0 success, 1 usage or validation error, 2 numerical
certification failure, 3 result disagrees with the proved count.

Every file written starts with ``#`` comment lines recording the package
version, the command line and the fully resolved options.  Options may also
come from ``--config FILE`` holding ``key=value`` lines; flags given on the
command line override the file.

Sweep CSV columns: ``theta,count_positive,x_1,y_1,...,x_m,y_m`` where the
(x_i, y_i) are the positive fixed points at that theta (the constant one
first, then by decreasing y) and short rows are padded with empty fields.
"""

from __future__ import annotations

import argparse
import shlex
import sys
from pathlib import Path

from . import __version__
from .bifurcation import is_conjectural, refine_threshold, sweep
from .errors import CertificationError, NoSuchBranchError, TreeGibbsError
from .hammerstein import (
    SampledDensity,
    apply_hammerstein,
    consistency_map,
    hammerstein_residual,
)
from .kernel import ModelParams
from .reduction import (
    ROOT_TOL,
    analytic_fixed_points,
    enumerate_fixed_points,
    predicted_count,
    to_density,
)
from .treesim import BoundaryField, TreeSpec, dlr_check, observable, sample_tree

EXIT_OK, EXIT_USAGE, EXIT_CERT, EXIT_MISMATCH = 0, 1, 2, 3
RESIDUAL_TOL = 1e-10
DLR_TOL = 1e-7


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _header(args, argv) -> str:
    opts = " ".join(f"{k}={v}" for k, v in sorted(vars(args).items()) if k not in ("func", "config"))
    return "\n".join(
        [
            f"treegibbs {__version__}",
            "command: treegibbs " + " ".join(shlex.quote(a) for a in argv),
            f"resolved: {opts}",
        ]
    )


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, newline="\n")
    else:
        sys.stdout.write(text)


def _params(args) -> ModelParams:
    return ModelParams(args.k, args.theta)


def _report(args, params):
    if getattr(args, "method", "analytic") == "newton":
        return enumerate_fixed_points(params, grid_density=args.grid_density, dedupe_tol=args.dedupe_tol)
    return analytic_fixed_points(params)


def _branch(params: ModelParams, index: int):
    rep = analytic_fixed_points(params) if params.k in (2, 3) else enumerate_fixed_points(params)
    branches = rep.positive_branches()
    if not 0 <= index < len(branches):
        raise NoSuchBranchError(
            f"branch {index} requested but only {len(branches)} positive fixed point(s) exist"
        )
    return branches[index]


def cmd_verify(args, argv) -> int:
    if args.k not in (2, 3):
        raise UsageError("verify supports k = 2 or 3")
    params = _params(args)
    rep = analytic_fixed_points(params)
    print("# " + _header(args, argv).replace("\n", "\n# "))
    print(rep.to_table())
    failed = [
        fp
        for fp in rep.points
        if fp.residual_vk >= RESIDUAL_TOL
        or hammerstein_residual(to_density(fp.pair, params), args.residual_grid) >= RESIDUAL_TOL
    ]
    count = rep.count_positive
    expected = predicted_count(args.k, args.theta)
    print(f"gibbs_measures={count}")
    print(f"predicted={expected}")
    if failed:
        print(f"certification failed for {len(failed)} root(s)", file=sys.stderr)
        return EXIT_CERT
    if count != expected:
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_fixed_points(args, argv) -> int:
    params = _params(args)
    rep = _report(args, params)
    if args.format == "structured":
        body = rep.to_json() + "\n"
        if args.out:
            body = "".join(f"# {l}\n" for l in _header(args, argv).splitlines()) + body
    else:
        body = "".join(f"# {l}\n" for l in _header(args, argv).splitlines()) + rep.to_table() + "\n"
    _emit(body, args.out)
    if any(fp.residual_vk >= ROOT_TOL for fp in rep.points):
        return EXIT_CERT
    return EXIT_OK


def cmd_sweep(args, argv) -> int:
    params = ModelParams(args.k, args.theta_min)
    table = sweep(params, args.theta_min, args.theta_max, args.step, args.method, args.mode, args.jobs)
    estimate = None
    if table.threshold_bracket and args.refine:
        estimate = refine_threshold(params, table.threshold_bracket, args.tol, args.method)
    header = _header(args, argv)
    if is_conjectural(args.k):
        header += "\nconjectural: no proved threshold for this k"
    _emit(table.to_csv(header, estimate), args.out)
    if args.out:
        if table.threshold_bracket:
            lo, hi = table.threshold_bracket
            print(f"threshold_bracket={lo:.17g},{hi:.17g}")
        else:
            print("threshold_bracket=none")
        if estimate is not None:
            print(f"threshold_estimate={estimate:.17g}")
        if is_conjectural(args.k):
            print("conjectural")
    return EXIT_OK


def cmd_sample(args, argv) -> int:
    params = _params(args)
    field = BoundaryField(_branch(params, args.branch))
    spec = TreeSpec(args.depth, args.k, args.root_degree)
    samples = sample_tree(field, spec, args.seed, args.n, args.jobs)
    header = _header(args, argv)
    if args.out:
        Path(args.out).write_text(samples.to_csv(header), newline="\n")
    print("name,estimate,std_error")
    for which in ("mean_spin", "mean_basis"):
        est = observable(samples, which)
        se = "undefined" if est.std_error is None else f"{est.std_error:.17g}"
        print(f"{which},{est.estimate:.17g},{se}")
    return EXIT_OK


def cmd_dlr_check(args, argv) -> int:
    params = _params(args)
    field = BoundaryField(_branch(params, args.branch))
    spec = TreeSpec(args.depth, args.k, args.root_degree)
    res = dlr_check(field, spec, args.order)
    print(f"compatibility={res.compatibility:.3e}")
    print(f"gibbs_vs_markov={res.gibbs_vs_markov:.3e}")
    return EXIT_OK if max(res) < DLR_TOL else EXIT_CERT


def cmd_apply(args, argv) -> int:
    params = _params(args)
    dens = SampledDensity.from_csv(Path(args.input).read_text())
    if args.normalized:
        out = consistency_map(dens, params)
    else:
        out = SampledDensity(dens.grid, apply_hammerstein(dens, dens.grid, params))
    _emit(out.to_csv(_header(args, argv)), args.out)
    return EXIT_OK


def _read_config(path: str) -> dict:
    conf = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        conf[key.strip().replace("-", "_")] = value.strip()
    return conf


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="treegibbs", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="key=value file; command-line flags take precedence")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def model(p, theta=True):
        p.add_argument("--k", type=int, default=2, help="branching order")
        if theta:
            p.add_argument("--theta", type=float, default=0.9, help="coupling in [0, 1)")

    p = sub.add_parser("verify", help="count Gibbs measures at (k, theta) and check the proved value")
    model(p)
    p.add_argument("--residual-grid", type=int, default=129)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fixed-points", help="list fixed points of the reduction map")
    model(p)
    p.add_argument("--method", choices=("analytic", "newton"), default="analytic")
    p.add_argument("--format", choices=("table", "structured"), default="table")
    p.add_argument("--grid-density", type=int, default=16)
    p.add_argument("--dedupe-tol", type=float, default=1e-8)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fixed_points)

    p = sub.add_parser(
        "sweep",
        help="count positive fixed points over a theta grid",
        description="Writes CSV with columns theta,count_positive,x_1,y_1,... (blank-padded).",
    )
    model(p, theta=False)
    p.add_argument("--theta-min", type=float, default=0.0)
    p.add_argument("--theta-max", type=float, default=0.99)
    p.add_argument("--step", type=float, default=0.005)
    p.add_argument("--method", choices=("analytic", "newton"), default="analytic")
    p.add_argument("--mode", choices=("serial", "parallel"), default="serial")
    p.add_argument("--refine", action="store_true", help="bisect the bracket to --tol")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sample", help="Monte Carlo draws on a finite ball")
    model(p)
    p.add_argument("--branch", type=int, default=0, help="0 = constant fixed point")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--root-degree", type=int, default=None)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("dlr-check", help="brute-force finite-volume consistency check")
    model(p)
    p.add_argument("--branch", type=int, default=0)
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--root-degree", type=int, default=None)
    p.add_argument("--order", type=int, default=32)
    p.set_defaults(func=cmd_dlr_check)

    p = sub.add_parser("apply", help="evaluate H_k (or the normalized map) on a CSV density")
    model(p)
    p.add_argument("--input", required=True, help="CSV with columns t,value")
    p.add_argument("--normalized", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_apply)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return exc.code if isinstance(exc.code, int) else EXIT_USAGE
        if args.config:
            conf = _read_config(args.config)
            sub = parser._subparsers._group_actions[0].choices[args.command]
            known = {a.dest: a for a in sub._actions}
            unknown = set(conf) - set(known)
            if unknown:
                raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
            defaults = {}
            for key, value in conf.items():
                act = known[key]
                if isinstance(act, argparse._StoreTrueAction):
                    defaults[key] = value.lower() in ("1", "true", "yes")
                else:
                    defaults[key] = act.type(value) if act.type else value
            sub.set_defaults(**defaults)
            try:
                args = parser.parse_args(argv)
            except SystemExit as exc:
                return exc.code if isinstance(exc.code, int) else EXIT_USAGE
        return args.func(args, argv)
    except CertificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (UsageError, TreeGibbsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
