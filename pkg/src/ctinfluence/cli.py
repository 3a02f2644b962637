"""``ctinfluence`` command line.

Exit codes: 0 success, 1 usage error, 2 data or validation error, 3 resource
budget exceeded. Every failure writes one line to stderr of the form
``ctinfluence: error kind=<usage|data|budget> code=<n>: <message>``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from pathlib import Path

from .closure import DEFAULT_MAX_STATES, StateBudgetExceeded
from .ctmc import DEFAULT_TOL
from .influence import EvalOptions, EvaluationError, InfluenceEvaluator
from .network import (
    Network,
    NetworkError,
    RateDistribution,
    assign_rates,
    drop_isolated,
    dumps_network,
    generate_forest_fire,
    generate_kronecker,
    kronecker_seed_for_density,
    load_network,
    members,
)
from .optimize import (
    ExhaustiveBudgetExceeded,
    baseline_select,
    exhaustive_search,
    greedy,
    online_bound,
)
from .simulate import mc_influence

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt(x: float) -> str:
    """Human-readable float: 7 digits after the decimal point."""
    return f"{x:.7f}"


# -- argument types ---------------------------------------------------------

def _source_ids(text: str) -> list[int]:
    try:
        ids = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated node ids, got {text!r}") from None
    if not ids:
        raise argparse.ArgumentTypeError("empty source list")
    return ids


def _seed_matrix(text: str) -> list[list[float]]:
    try:
        rows = [[float(x) for x in row.split(",")] for row in text.split(";")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'a,b;c,d', got {text!r}") from None
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise argparse.ArgumentTypeError(f"expected a 2x2 matrix 'a,b;c,d', got {text!r}")
    return rows


def _rate_dist(text: str) -> RateDistribution:
    try:
        return RateDistribution.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


# -- parser -----------------------------------------------------------------

def _add_eval_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--ltp", type=int, metavar="M", help="limit transmission paths to M nodes")
    g.add_argument("--lsn", type=int, metavar="M", help="drop sources more than M nodes from each sink")
    p.add_argument("--max-states", type=_positive_int, default=DEFAULT_MAX_STATES)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ctinfluence", description="Exact influence in continuous-time diffusion networks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="generate a synthetic network")
    p.add_argument("--model", choices=("kronecker", "forestfire"), required=True)
    p.add_argument("--seed-matrix", type=_seed_matrix, default=[[0.9, 0.5], [0.5, 0.3]])
    p.add_argument("--iterations", type=_positive_int, default=8)
    p.add_argument("--edges-per-node", type=float, default=None,
                   help="rescale the seed matrix to this expected edge density")
    p.add_argument("--drop-isolated", action="store_true")
    p.add_argument("--n", type=_positive_int, default=1024)
    p.add_argument("--p-fw", type=float, default=0.3)
    p.add_argument("--p-bw", type=float, default=0.24)
    p.add_argument("--rate-dist", type=_rate_dist, default=RateDistribution(0.0, 5.0))
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--out", type=Path)

    for name, help_ in (("influence", "exact influence of a source set"),
                        ("bound", "online upper bound on the best k-set")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--network", type=Path, required=True)
        p.add_argument("--sources", type=_source_ids, required=True)
        p.add_argument("--horizon", type=float, required=True)
        if name == "bound":
            p.add_argument("-k", type=_positive_int, required=True)
        _add_eval_flags(p)
        p.add_argument("--out", type=Path)

    p = sub.add_parser("maximize", help="select k sources")
    p.add_argument("--network", type=Path, required=True)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--method", choices=("greedy", "exhaustive", "random", "degree"), default="greedy")
    p.add_argument("--lazy", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--bound", action="store_true", help="also compute the online bound")
    p.add_argument("--step-bounds", action="store_true", help="online bound after every greedy pick")
    p.add_argument("--rng-seed", type=int, default=0)
    _add_eval_flags(p)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("simulate", help="Monte-Carlo influence estimate")
    p.add_argument("--network", type=Path, required=True)
    p.add_argument("--sources", type=_source_ids, required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--runs", type=_positive_int, default=10_000)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--compare", action="store_true", help="include the exact report in the JSON output")
    _add_eval_flags(p)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("sweep", help="CSV of sigma against k for greedy and the baselines")
    p.add_argument("--network", type=Path, required=True)
    p.add_argument("-k", type=_positive_int, required=True, help="largest k")
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--lazy", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--rng-seed", type=int, default=0)
    _add_eval_flags(p)
    p.add_argument("--out", type=Path)
    return parser


# -- helpers ----------------------------------------------------------------

def _options(args) -> EvalOptions:
    if args.ltp is not None:
        mode, m = "ltp", args.ltp
    elif args.lsn is not None:
        mode, m = "lsn", args.lsn
    else:
        mode, m = "exact", None
    try:
        return EvalOptions(mode=mode, m=m, max_states=args.max_states, tol=args.tol, threads=args.threads)
    except ValueError as exc:
        raise DataError(str(exc)) from None


def _network(args) -> Network:
    try:
        return load_network(args.network)
    except OSError as exc:
        raise DataError(f"{args.network}: {exc.strerror or exc}") from None
    except NetworkError as exc:
        raise DataError(f"{args.network}: {exc}") from None


def _horizon(args) -> float:
    T = args.horizon
    if not (T >= 0 and T != float("inf")):
        raise DataError(f"horizon must be finite and nonnegative, got {T}")
    return T


def _sources(args, net: Network) -> int:
    bad = [a for a in args.sources if not 0 <= a < net.node_count]
    if bad:
        raise DataError(f"source id {bad[0]} outside [0, {net.node_count})")
    return sum(1 << a for a in args.sources)


def _k(args, net: Network) -> int:
    if not 0 <= args.k <= net.node_count:
        raise DataError(f"k must lie in [0, {net.node_count}], got {args.k}")
    return args.k


def _write_json(args, doc: dict) -> None:
    if args.out is not None:
        args.out.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


# -- subcommands ------------------------------------------------------------

def cmd_generate(args, out) -> None:
    try:
        if args.model == "kronecker":
            seed = args.seed_matrix
            if args.edges_per_node is not None:
                seed = kronecker_seed_for_density(seed, args.iterations, args.edges_per_node)
            topo = generate_kronecker(seed, args.iterations, args.rng_seed)
        else:
            topo = generate_forest_fire(args.n, args.p_fw, args.p_bw, args.rng_seed)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    if args.drop_isolated:
        topo = drop_isolated(topo)
    net = assign_rates(topo, args.rate_dist, args.rng_seed)
    text = dumps_network(net)
    if args.out is not None:
        args.out.write_text(text, encoding="utf-8")
        print(f"nodes {net.node_count} edges {net.edge_count}", file=out)
    else:
        out.write(text)


def cmd_influence(args, out) -> None:
    net = _network(args)
    A = _sources(args, net)
    ev = InfluenceEvaluator(net, _horizon(args), _options(args))
    report = ev.report(A)
    print(f"sigma {fmt(report.sigma)}", file=out)
    _write_json(args, report.to_dict())


def cmd_bound(args, out) -> None:
    net = _network(args)
    A = _sources(args, net)
    T = _horizon(args)
    ev = InfluenceEvaluator(net, T, _options(args))
    b = online_bound(net, A, args.k, T, evaluator=ev)
    sigma = float(ev.sigma(A)[0])
    print(f"sigma {fmt(sigma)}", file=out)
    print(f"bound {fmt(b)}", file=out)
    _write_json(args, {"sources": members(A), "k": args.k, "horizon": T, "sigma": sigma, "bound": b})


def cmd_maximize(args, out) -> None:
    net = _network(args)
    T = _horizon(args)
    k = _k(args, net)
    ev = InfluenceEvaluator(net, T, _options(args))
    doc: dict = {"method": args.method}
    if args.method == "greedy":
        trace = greedy(net, k, T, lazy=args.lazy, evaluator=ev, bound=args.bound, step_bounds=args.step_bounds)
        A = trace.sources
        doc.update(trace.to_dict())
        for p in trace.picks:
            print(f"pick {p.node} delta {fmt(p.delta)} sigma {fmt(p.sigma)}", file=out)
    else:
        if args.method == "exhaustive":
            A = exhaustive_search(ev, k)[0][0] if k else 0
        else:
            A = baseline_select(net, k, "random" if args.method == "random" else "out_degree", args.rng_seed)
        doc["bound"] = online_bound(net, A, max(k, 1), T, evaluator=ev) if args.bound else None
    sigma = float(ev.sigma(A)[0])
    doc.update({"sources": members(A), "sigma": sigma, "horizon": T})
    print("sources " + ",".join(map(str, members(A))), file=out)
    print(f"sigma {fmt(sigma)}", file=out)
    if doc.get("bound") is not None:
        print(f"bound {fmt(doc['bound'])}", file=out)
    _write_json(args, doc)


def cmd_simulate(args, out) -> None:
    net = _network(args)
    A = _sources(args, net)
    T = _horizon(args)
    est = mc_influence(net, A, T, args.runs, args.rng_seed)
    print(f"sigma_hat {fmt(est.sigma_hat)} stderr {fmt(est.stderr)}", file=out)
    doc = {"mc": est.to_dict()}
    if args.compare:
        report = InfluenceEvaluator(net, T, _options(args)).report(A)
        print(f"sigma {fmt(report.sigma)}", file=out)
        doc["exact"] = report.to_dict()
    _write_json(args, doc if args.compare else est.to_dict())


def cmd_sweep(args, out) -> None:
    net = _network(args)
    T = _horizon(args)
    k_max = _k(args, net)
    opts = _options(args)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "k", "sigma", "seconds", "bound"])
    for k in range(1, k_max + 1):
        t0 = time.perf_counter()
        ev = InfluenceEvaluator(net, T, opts)
        trace = greedy(net, k, T, lazy=args.lazy, evaluator=ev)
        seconds = time.perf_counter() - t0
        b = online_bound(net, trace.sources, k, T, evaluator=ev)
        w.writerow(["greedy", k, repr(trace.sigma), repr(seconds), repr(b)])
    for method, kind in (("random", "random"), ("degree", "out_degree")):
        ev = InfluenceEvaluator(net, T, opts)
        for k in range(1, k_max + 1):
            t0 = time.perf_counter()
            A = baseline_select(net, k, kind, args.rng_seed)
            sigma = float(ev.sigma(A)[0])
            w.writerow([method, k, repr(sigma), repr(time.perf_counter() - t0), ""])
    if args.out is not None:
        args.out.write_text(buf.getvalue(), encoding="utf-8")
    else:
        out.write(buf.getvalue())


_COMMANDS = {
    "generate": cmd_generate,
    "influence": cmd_influence,
    "bound": cmd_bound,
    "maximize": cmd_maximize,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def _fail(err, kind: str, code: int, message: str) -> int:
    message = " ".join(str(message).split())
    print(f"ctinfluence: error kind={kind} code={code}: {message}", file=err)
    return code


def run_cli(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail(err, "usage", EXIT_USAGE, exc)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        _COMMANDS[args.command](args, out)
    except (StateBudgetExceeded, ExhaustiveBudgetExceeded) as exc:
        return _fail(err, "budget", EXIT_BUDGET, exc)
    except EvaluationError as exc:
        if exc.budget_exceeded:
            return _fail(err, "budget", EXIT_BUDGET, exc)
        return _fail(err, "data", EXIT_DATA, exc)
    except (DataError, NetworkError, ValueError) as exc:
        return _fail(err, "data", EXIT_DATA, exc)
    except OSError as exc:
        return _fail(err, "data", EXIT_DATA, f"{getattr(exc, 'filename', '') or ''} {exc.strerror or exc}")
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
