"""Command-line front-end.

Every subcommand prints one JSON document (or CSV with a header row) on
standard output.  Exit codes: 0 success, 1 a bound was violated, 2 usage
error, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Sequence
from fractions import Fraction

from . import cohomology, morse_bounds, prob_annex, strat_tree, upsilon
from .errors import MorseTruncError
from .reporting import csv_text, json_value
from .strat_tree import BundleCombo, parse_rational

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_USAGE = 2
EXIT_INPUT = 3


class InputError(Exception):
    pass


# --------------------------------------------------------------------------
# argument helpers


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _multidegree(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad multidegree {text!r}") from exc


def _multidegrees(text: str) -> list[tuple[int, ...]]:
    return [_multidegree(chunk) for chunk in text.split(",") if chunk.strip()]


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except MorseTruncError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _point(text: str) -> list:
    out = []
    for chunk in text.split(","):
        try:
            out.append(parse_rational(chunk))
        except MorseTruncError:
            try:
                out.append(float(chunk))
            except ValueError as exc:
                raise argparse.ArgumentTypeError(f"bad coordinate {chunk!r}") from exc
    return out


def _labels(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--samples", type=int, default=1_000_000)
    common.add_argument(
        "--threads", type=int, default=None, help="worker threads (default $MORSETRUNC_THREADS or 1)"
    )
    return common


def _add_tree(p: argparse.ArgumentParser, required: bool = True) -> None:
    group = p.add_mutually_exclusive_group(required=required)
    group.add_argument("--tree", metavar="FILE", help="tree JSON file")
    group.add_argument(
        "--tree-builtin",
        metavar="SPEC",
        help="siu:n,a,b | flag:n,d | product-flag:P1xP1=1:1,2:-1",
    )


def _add_levels(p: argparse.ArgumentParser) -> None:
    p.add_argument("--level", type=int, default=None)
    p.add_argument("--all-levels", action="store_true")


def _add_upsilon_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--labels", type=_labels, default=(), help="coordinate bundle labels in order")
    p.add_argument("--twist", default=None, help="tree label carrying the twist marking")
    p.add_argument("--twist-scale", type=_rational, default=Fraction(1))


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="morsetrunc",
        description="Truncated Chern numbers, simplex integrals and Morse-type bound checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("chern", parents=[common], help="truncated Chern numbers of a tree")
    _add_tree(p)
    p.add_argument("--combo", default=None, help='bundle combination, e.g. "F+G"')
    _add_levels(p)

    p = sub.add_parser("upsilon-eval", parents=[common], help="evaluate the path functional")
    _add_tree(p)
    _add_upsilon_args(p)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--point", type=_point, required=True, help="comma-separated coordinates")
    p.add_argument("--weights", type=_int_list, default=None)

    p = sub.add_parser("upsilon-int", parents=[common], help="mean of the functional on a simplex")
    _add_tree(p)
    _add_upsilon_args(p)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--weights", type=_int_list, default=None)
    p.add_argument("--method", choices=("exact", "monte_carlo"), default="exact")

    p = sub.add_parser("morse-bound", parents=[common], help="leading coefficient of a bound")
    p.add_argument(
        "--theorem",
        choices=("morse", "integral", "twisted", "comparison", "volume"),
        required=True,
    )
    _add_tree(p, required=False)
    p.add_argument("--combo", default=None)
    _add_upsilon_args(p)
    _add_levels(p)
    p.add_argument("--weights", type=_int_list, default=None)
    p.add_argument("--method", choices=("exact", "monte_carlo"), default="exact")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--c", type=_rational, default=Fraction(1))
    p.add_argument("--vol", type=float, default=1.0)

    p = sub.add_parser("verify-pn", parents=[common], help="Morse inequalities for L^m")
    p.add_argument("--space", required=True, help="P2, P1xP1, ...")
    p.add_argument("--degree", type=_multidegree, required=True, help="multidegree a:b")
    _add_tree(p, required=False)
    p.add_argument("--combo", default=None)
    _add_levels(p)
    p.add_argument("--mmin", type=int, default=1)
    p.add_argument("--mmax", type=int, default=40)

    p = sub.add_parser("verify-sym", parents=[common], help="integral bound for symmetric powers")
    p.add_argument("--space", required=True)
    p.add_argument("--bundles", type=_multidegrees, required=True, help="e.g. 1,-1 or 1:0,0:-1")
    p.add_argument("--weights", type=_int_list, default=None)
    _add_levels(p)
    p.add_argument("--mmin", type=int, default=1)
    p.add_argument("--mmax", type=int, default=64)
    p.add_argument("--twist-degree", type=_multidegree, default=None)
    p.add_argument("--twist-scale", type=_rational, default=Fraction(1))
    p.add_argument("--method", choices=("exact", "monte_carlo"), default="exact")

    p = sub.add_parser("annex", parents=[common], help="Monte Carlo checks on Delta_k")
    p.add_argument(
        "--check",
        choices=("moments", "marginals", "independence", "mean", "variance", "deviation"),
        default="moments",
    )
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--d", type=lambda s: [parse_rational(x) for x in s.split(",")], default=None)
    p.add_argument("--p", type=_rational, default=Fraction(0))
    p.add_argument("--j", type=int, default=0)
    _add_tree(p, required=False)
    p.add_argument("--labels", type=_labels, default=())
    p.add_argument("--twist", default=None)

    p = sub.add_parser("asympt", parents=[common], help="large-k trace of the scaled integral")
    _add_tree(p)
    p.add_argument("--labels", type=_labels, default=())
    p.add_argument("--twist", default=None)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--k-list", type=_int_list, default=[4, 8, 16, 32])

    p = sub.add_parser("gg-rank", parents=[common], help="graded rank of weighted symmetric powers")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    return parser


# --------------------------------------------------------------------------
# command bodies


def _load_tree(args) -> strat_tree.MarkedTree:
    if getattr(args, "tree", None):
        return strat_tree.load_tree(args.tree)
    if getattr(args, "tree_builtin", None):
        return strat_tree.parse_builtin(args.tree_builtin)
    raise InputError("a tree is required (--tree FILE or --tree-builtin SPEC)")


def _combo(args) -> BundleCombo | None:
    return BundleCombo.parse(args.combo) if args.combo else None


def _levels(args, n: int) -> list[int]:
    if args.level is not None and not args.all_levels:
        strat_tree.check_level(args.level, n)
        return [args.level]
    return list(range(n + 1))


def _weights(args, r: int) -> list[int]:
    return list(args.weights) if args.weights else [1] * r


def _uspec(args, tree, level: int) -> upsilon.UpsilonSpec:
    return upsilon.UpsilonSpec(tree, level, tuple(args.labels), args.twist, args.twist_scale)


def _cmd_chern(args):
    tree = _load_tree(args)
    combo = _combo(args)
    vec = strat_tree.truncated_chern_paths(tree, combo)
    label = combo.label() if combo else tree.single_label
    levels = _levels(args, vec.dimension)
    rows = [(i, vec.by_index[i], vec.cumulative[i]) for i in levels]
    result = {
        "combo": label,
        "levels": levels,
        "by_index": [json_value(vec.by_index[i]) for i in levels],
        "cumulative": [json_value(vec.cumulative[i]) for i in levels],
    }
    return result, (("level", "by_index", "cumulative"), rows), None


def _cmd_upsilon_eval(args):
    tree = _load_tree(args)
    spec = _uspec(args, tree, args.level)
    value = upsilon.upsilon_eval(spec, args.point, args.weights)
    result = {"level": args.level, "point": [json_value(x) for x in args.point], "value": json_value(value)}
    return result, (("level", "value"), [(args.level, value)]), None


def _cmd_upsilon_int(args):
    tree = _load_tree(args)
    spec = _uspec(args, tree, args.level)
    res = upsilon.upsilon_integral(
        spec, _weights(args, spec.r), args.method, args.seed, args.samples, args.threads
    )
    return (
        res.to_json(),
        (("level", "value", "method", "stderr", "samples"), [(args.level, res.value, res.method, res.stderr, res.samples)]),
        None,
    )


def _bound_rows(reports):
    return morse_bounds.BOUND_COLUMNS, [rep.csv_row() for rep in reports]


def _overall(reports) -> str:
    verdicts = [rep.verdict for rep in reports]
    if "violated" in verdicts:
        return "violated"
    if "inconclusive" in verdicts:
        return "inconclusive"
    return "holds"


def _cmd_morse_bound(args):
    theorem = args.theorem
    if theorem in ("comparison", "volume"):
        if args.n is None or args.k is None:
            raise InputError(f"--theorem {theorem} needs --n and --k")
        if theorem == "comparison":
            if args.r is None:
                raise InputError("--theorem comparison needs --r")
            value = morse_bounds.comparison_leading(args.n, args.r, args.k, args.c)
        else:
            value = morse_bounds.volume_lower_bound(args.n, args.k, args.vol)
        rep = morse_bounds.BoundReport(theorem, args.n, value, None, None, None)
        return rep.to_json(), _bound_rows([rep]), None
    tree = _load_tree(args)
    reports = []
    if theorem == "morse":
        vec = strat_tree.truncated_chern_paths(tree, _combo(args))
        for i in _levels(args, vec.dimension):
            rhs = morse_bounds.morse_rhs_leading(tree, i, _combo(args))
            reports.append(morse_bounds.BoundReport("morse", i, rhs, None, None, None))
    else:
        if theorem == "twisted" and not args.twist:
            raise InputError("--theorem twisted needs --twist LABEL")
        for i in _levels(args, tree.dimension):
            spec = _uspec(args, tree, i)
            res = morse_bounds.integral_bound_leading(
                spec, _weights(args, spec.r), args.method, args.seed, args.samples, args.threads
            )
            tag = "twisted_integral" if args.twist else "integral"
            reports.append(
                morse_bounds.BoundReport(
                    tag, i, res.value, None, None, None, stderr=res.stderr,
                    extra={"method": res.method, "integral": res.extra["integral"]},
                )
            )
    return [rep.to_json() for rep in reports], _bound_rows(reports), None


def _cmd_verify_pn(args):
    factors = strat_tree.parse_space(args.space)
    spec = cohomology.CohomSpec(factors)
    degree = args.degree
    spec.check_multidegree(degree, "--degree")
    if args.tree or args.tree_builtin:
        tree = _load_tree(args)
    else:
        tree = strat_tree.product_flag_tree(factors, {"L": list(degree)})
    reports = [
        morse_bounds.verify_morse(spec, degree, tree, i, (args.mmin, args.mmax), _combo(args))
        for i in _levels(args, spec.dimension)
    ]
    return [rep.to_json() for rep in reports], _bound_rows(reports), _overall(reports)


def _cmd_verify_sym(args):
    factors = strat_tree.parse_space(args.space)
    spec = cohomology.CohomSpec(factors)
    bundles = args.bundles
    for md in bundles:
        spec.check_multidegree(md, "--bundles entry")
    twist = None
    if args.twist_degree is not None:
        spec.check_multidegree(args.twist_degree, "--twist-degree")
        twist = (args.twist_degree, args.twist_scale)
    reports = [
        morse_bounds.verify_integral_bound(
            spec,
            bundles,
            _weights(args, len(bundles)),
            i,
            m_range=(args.mmin, args.mmax),
            twist=twist,
            method=args.method,
            seed=args.seed,
            samples=args.samples,
            threads=args.threads,
        )
        for i in _levels(args, spec.dimension)
    ]
    return [rep.to_json() for rep in reports], _bound_rows(reports), _overall(reports)


def _cmd_annex(args):
    k, check = args.k, args.check
    common = {"samples": args.samples, "seed": args.seed, "threads": args.threads}
    if check in ("moments", "marginals", "independence"):
        if args.r is None:
            raise InputError(f"--check {check} needs --r")
        fn = {
            "moments": prob_annex.verify_moments,
            "marginals": prob_annex.verify_marginals,
            "independence": prob_annex.verify_independence,
        }[check]
        reports = fn(k, args.r, **common)
    elif check in ("mean", "variance"):
        if args.d is None:
            raise InputError(f"--check {check} needs --d")
        if check == "mean":
            reports = [prob_annex.verify_mean_identity(k, args.d, args.p, **common)]
        else:
            reports = [prob_annex.verify_variance_bound(k, len(args.d), args.d, **common)]
    else:
        tree = _load_tree(args)
        reports = [
            prob_annex.verify_product_deviation(
                tree, k, args.j, bundles=args.labels or None, twist=args.twist, **common
            )
        ]
    return (
        [rep.to_json() for rep in reports],
        (prob_annex.MOMENT_COLUMNS, [rep.csv_row() for rep in reports]),
        _overall(reports),
    )


def _cmd_asympt(args):
    tree = _load_tree(args)
    trace = morse_bounds.asymptotic_trace(
        tree,
        args.level,
        args.k_list,
        samples=args.samples,
        seed=args.seed,
        bundles=args.labels or None,
        twist=args.twist,
        threads=args.threads,
    )
    return trace.to_json(), (morse_bounds.TRACE_COLUMNS, list(trace.rows)), None


def _cmd_gg_rank(args):
    value = cohomology.gg_rank(args.n, args.k, args.m)
    return (
        {"n": args.n, "k": args.k, "m": args.m, "rank": value},
        (("n", "k", "m", "rank"), [(args.n, args.k, args.m, value)]),
        None,
    )


COMMANDS = {
    "chern": _cmd_chern,
    "upsilon-eval": _cmd_upsilon_eval,
    "upsilon-int": _cmd_upsilon_int,
    "morse-bound": _cmd_morse_bound,
    "verify-pn": _cmd_verify_pn,
    "verify-sym": _cmd_verify_sym,
    "annex": _cmd_annex,
    "asympt": _cmd_asympt,
    "gg-rank": _cmd_gg_rank,
}


def _render(args, result, table, overall) -> str:
    if args.format == "csv":
        header, rows = table
        header = tuple(header) + ("seed", "samples")
        return csv_text(header, [tuple(row) + (args.seed, args.samples) for row in rows])
    doc = {
        "command": args.command,
        "seed": args.seed,
        "samples": args.samples,
        "result": result,
    }
    if overall is not None:
        doc["verdict"] = overall
    return json.dumps(doc, indent=2) + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.samples < 1:
            parser.error("--samples must be >= 1")
        if args.threads is not None and args.threads < 1:
            parser.error("--threads must be >= 1")
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 after --help
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        result, table, overall = COMMANDS[args.command](args)
    except (MorseTruncError, InputError, OSError, ValueError) as exc:
        print(f"morsetrunc {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(_render(args, result, table, overall))
    return EXIT_VIOLATED if overall == "violated" else EXIT_OK


run = main


if __name__ == "__main__":
    sys.exit(main())
