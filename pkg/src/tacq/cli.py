"""Command-line front end (``tacq``).

Exit status: 0 on success, 2 on invalid arguments, 1 when a command fails
at run time.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import bounds, cutoff, embedding, experiments, game
from .graph import make_rng, read_edge_list, format_edge_list, sample_gnp, sample_random_tree


class UsageError(ValueError):
    pass


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _record(args, rec: dict) -> str:
    """One flat record as CSV (header + row) or JSON."""
    if args.format == "json":
        return json.dumps(rec, sort_keys=False) + "\n"
    return _table(args, list(rec), [list(rec.values())])


def _table(args, header: list[str], rows: list[list]) -> str:
    if args.format == "json":
        return json.dumps([dict(zip(header, r)) for r in rows]) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _probability(args) -> float:
    if args.p is not None and args.p_mult is not None:
        raise UsageError("give --p or --p-mult, not both")
    if args.p is not None:
        p = args.p
    elif args.p_mult is not None:
        p = args.p_mult * experiments.threshold_p(args.n)
    else:
        raise UsageError("one of --p or --p-mult is required")
    if not 0 <= p <= 1:
        raise UsageError(f"p must lie in [0, 1], got {p}")
    return p


def _params(args) -> cutoff.ParamSet:
    try:
        return cutoff.ParamSet(args.n, eps=args.eps, sigma=args.sigma, alpha=args.alpha, beta=args.beta)
    except ValueError as e:
        raise UsageError(str(e)) from None


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_gnp(args):
    if args.n < 1:
        raise UsageError("--n must be positive")
    g = sample_gnp(args.n, _probability(args), make_rng(args.seed))
    _emit(args, format_edge_list(g))


def cmd_tree(args):
    if args.n < 2:
        raise UsageError("--n must be >= 2")
    _emit(args, format_edge_list(sample_random_tree(args.n, make_rng(args.seed))))


def cmd_solve(args):
    g = read_edge_list(args.graph)
    if args.method == "exact":
        try:
            r = game.exact_at(g, budget=args.budget)
            rec = {"method": "exact", "n": g.n, "value": r.value, "exact": True,
                   "lower_bound": r.lower_bound, "expanded": r.expanded}
            witness = r.witness
        except game.BudgetExceeded as e:
            rec = {"method": "exact", "n": g.n, "value": e.upper_bound, "exact": False,
                   "lower_bound": bounds.certified_lower_bound(g), "expanded": e.expanded}
            witness = e.witness
    else:
        r = game.greedy_at(g, make_rng(args.seed), restarts=args.restarts)
        rec = {"method": "greedy", "n": g.n, "value": r.upper_bound, "exact": False,
               "lower_bound": bounds.certified_lower_bound(g), "expanded": ""}
        witness = r.witness
    if args.protocol_out:
        game.write_protocol(witness, args.protocol_out)
    _emit(args, _record(args, rec))


def cmd_bound(args):
    g = read_edge_list(args.graph)
    phi = bounds.capacity_vector(g)
    rec = {"n": g.n, "certified_lower_bound": bounds.certified_lower_bound(g, phi),
           "max_phi": max(phi, default=0), "long_leaves": "", "long_leaf_bound": ""}
    try:
        rec["long_leaves"] = len(bounds.long_leaves(g))
        rec["long_leaf_bound"] = bounds.long_leaf_lower_bound(g)
    except bounds.BoundNotCertified:
        pass
    except ValueError:
        pass  # not a tree
    _emit(args, _record(args, rec))


def cmd_ctree(args):
    if args.action == "build":
        p = _params(args)
        table = cutoff.calibrate(p) if not args.uncalibrated else _uncalibrated(p)
        if args.tree_out:
            t = cutoff.build_tree(table)
            if args.pruned:
                t = cutoff.prune_bereft(t)
            t.write(args.tree_out)
        header = ["j", "c_star", "c", "rho", "b", "istar"]
        rows = []
        for j in range(1, table.m + 1):
            has_cap = j < table.m
            rows.append([j, table.c_star[j - 1] if has_cap else "", table.c[j - 1] if has_cap else "",
                         table.rho[j - 1], table.b[j - 1], table.istar[j - 1] if has_cap else ""])
        _emit(args, _table(args, header, rows))
        return
    t = cutoff.CutoffTree.read(args.tree)
    if args.action == "check":
        rec = {"size": t.size, "bereft": t.num_bereft, "cutoff": cutoff.check_cutoff(t),
               "absorbable": cutoff.check_absorbable(t)}
        _emit(args, _record(args, rec))
    else:
        _emit(args, game.format_protocol(cutoff.extract_protocol(t)))


def _uncalibrated(p: cutoff.ParamSet) -> cutoff.SequenceTable:
    m = cutoff.choose_depth(p)
    return cutoff.table_from_caps(cutoff.star_caps(p, m - 1), p.sigma, m)


def cmd_pipeline(args):
    p = _probability(args)
    params = _params(args)
    rng = make_rng(args.seed)
    if args.kind == "single":
        rep = embedding.witness_pipeline(args.n, p, params, rng, seed=args.seed)
        rec = rep.to_dict()
    else:
        if args.c is None or not 0 < args.c < 1:
            raise UsageError("--c in (0, 1) is required for multi")
        bound, rep = embedding.multi_root_pipeline(args.n, p, args.c, params, rng, seed=args.seed)
        rec = rep.to_dict()
        rec["upper_bound"] = bound
    if args.protocol_out and rep.protocol is not None:
        game.write_protocol(rep.protocol, args.protocol_out)
    _emit(args, json.dumps(rec) + "\n")


def cmd_sweep(args):
    try:
        cfg = experiments.SweepConfig(
            n_list=tuple(args.n), multipliers=tuple(args.mult), trials=args.trials,
            base_seed=args.seed, params=dict(eps=args.eps, sigma=args.sigma, alpha=args.alpha, beta=args.beta),
            greedy=not args.no_greedy, timing=args.timing,
        )
    except ValueError as e:
        raise UsageError(str(e)) from None
    rows = experiments.run_sweep(cfg)
    if args.format == "json":
        _emit(args, json.dumps([r.__dict__ for r in rows]) + "\n")
    else:
        _emit(args, experiments.format_sweep(rows))


def cmd_treestats(args):
    if any(n < 6 for n in args.n) or args.trials < 1:
        raise UsageError("--n must be >= 6 and --trials >= 1")
    stats = [experiments.run_tree_stats(n, args.trials, args.seed) for n in args.n]
    if args.format == "json":
        recs = [{"n": s.n, "trials": s.trials, "mean_fraction": s.mean, "variance": s.variance,
                 "target": s.target, "bound_fraction": s.bound / s.n,
                 "frac_at_least_bound": s.frac_at_least_bound} for s in stats]
        _emit(args, json.dumps(recs) + "\n")
    else:
        _emit(args, experiments.format_tree_stats(stats))


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _nonneg_seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2^64)")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_nonneg_seed, default=0)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", metavar="PATH")

    prob = argparse.ArgumentParser(add_help=False)
    prob.add_argument("--p", type=float)
    prob.add_argument("--p-mult", type=float, help="multiple of log2(n)/n")

    par = argparse.ArgumentParser(add_help=False)
    par.add_argument("--eps", type=float, default=2.0)
    par.add_argument("--sigma", type=int, default=None, help="default ceil(4/eps^2)")
    par.add_argument("--alpha", type=float, default=0.04)
    par.add_argument("--beta", type=float, default=0.14)

    ap = argparse.ArgumentParser(prog="tacq", description="Total acquisition toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gnp", parents=[common, prob], help="sample G(n, p) as an edge list")
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_gnp)

    s = sub.add_parser("tree", help="tree samplers")
    tsub = s.add_subparsers(dest="kind", required=True)
    r = tsub.add_parser("random", parents=[common], help="uniform labeled tree")
    r.add_argument("--n", type=int, required=True)
    r.set_defaults(func=cmd_tree)

    s = sub.add_parser("solve", parents=[common], help="total acquisition number of a graph file")
    s.add_argument("method", choices=("exact", "greedy"))
    s.add_argument("graph")
    s.add_argument("--budget", type=int, default=2_000_000)
    s.add_argument("--restarts", type=int, default=8)
    s.add_argument("--protocol-out", metavar="PATH")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("bound", parents=[common], help="certified lower bounds for a graph file")
    s.add_argument("graph")
    s.set_defaults(func=cmd_bound)

    s = sub.add_parser("ctree", help="cut-off tree tools")
    csub = s.add_subparsers(dest="action", required=True)
    b = csub.add_parser("build", parents=[common, par], help="sequence table (and tree file)")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--uncalibrated", action="store_true")
    b.add_argument("--tree-out", metavar="PATH")
    b.add_argument("--pruned", action="store_true")
    b.set_defaults(func=cmd_ctree)
    for action, text in (("check", "structural checks"), ("protocol", "absorbing protocol")):
        c = csub.add_parser(action, parents=[common], help=text)
        c.add_argument("tree")
        c.set_defaults(func=cmd_ctree)

    s = sub.add_parser("pipeline", help="one embedding pipeline run (JSON)")
    psub = s.add_subparsers(dest="kind", required=True)
    for kind in ("single", "multi"):
        q = psub.add_parser(kind, parents=[common, prob, par])
        q.add_argument("--n", type=int, required=True)
        q.add_argument("--protocol-out", metavar="PATH")
        if kind == "multi":
            q.add_argument("--c", type=float)
        q.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("sweep", parents=[common, par], help="threshold sweep (CSV)")
    s.add_argument("--n", type=int, nargs="+", default=[1 << 12, 1 << 13, 1 << 14, 1 << 15, 1 << 16])
    s.add_argument("--mult", type=float, nargs="+", default=[0.6, 0.8, 1.0, 1.2, 1.4])
    s.add_argument("--trials", type=int, default=30)
    s.add_argument("--no-greedy", action="store_true", help="skip the greedy residual bound")
    s.add_argument("--timing", action="store_true", help="record wall-clock times (nondeterministic)")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("treestats", parents=[common], help="long-leaf statistics of random trees (CSV)")
    s.add_argument("--n", type=int, nargs="+", default=[10_000])
    s.add_argument("--trials", type=int, default=200)
    s.set_defaults(func=cmd_treestats)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        args.func(args)
    except UsageError as e:
        print(f"tacq: error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # runtime failure
        print(f"tacq: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
