"""Command-line front end.

Subcommands: ``verify``, ``mine-clauses``, ``export-lp``, ``gen-subsetsum``,
``distance``, ``compare``.  Exit codes for ``verify``: 0 = sensitive,
1 = not sensitive, 2 = timeout; every error path (usage or runtime) exits 3.
"""

import argparse
import json
import math
import sys

from . import __version__
from .dataaware import (
    Dataset,
    MarginalTable,
    clauses_from_json,
    clauses_to_json,
    estimate_marginals,
    mine_clauses,
)
from .encoding import (
    STRICT_EPS,
    SensitivityQuery,
    TriviallyUnsensitiveError,
    encode,
    export_lp,
)
from .metrics import compare_modes, region_distance
from .model import build_guard_index, dump_model, load_model
from .reductions import SubsetSumInstance, gen_subsetsum_ensemble
from .solver import (
    NOT_SENSITIVE,
    SENSITIVE,
    TIMEOUT,
    Budget,
    CounterexamplePair,
    brute_force_oracle,
    check_pair,
    solve,
)

ERROR_EXIT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print("%s: error: %s" % (self.prog, message), file=sys.stderr)
        raise SystemExit(ERROR_EXIT)


def _load_model(path):
    with open(path, "rb") as fh:
        return load_model(fh)


def _parse_features(spec, ensemble):
    if spec.startswith("@"):
        with open(spec[1:], "r", encoding="utf-8") as fh:
            tokens = fh.read().replace(",", " ").split()
    else:
        tokens = [t for t in spec.split(",") if t]
    if not tokens:
        raise ValueError("empty feature selector")
    return frozenset(ensemble.feature_index(t) for t in tokens)


def _build_query(args, ensemble, gi):
    marginals = None
    dataset = None
    if getattr(args, "data", None):
        dataset = Dataset.from_csv(args.data)
    if getattr(args, "marginals", None):
        with open(args.marginals, "r", encoding="utf-8") as fh:
            marginals = MarginalTable.from_json(json.load(fh))
    elif dataset is not None:
        marginals = estimate_marginals(gi, dataset, alpha=args.alpha)

    clauses = None
    if getattr(args, "clauses", None):
        with open(args.clauses, "r", encoding="utf-8") as fh:
            clauses = tuple(clauses_from_json(json.load(fh), gi))

    mode = getattr(args, "mode", "none")
    if mode in ("prob", "probclause") and marginals is None:
        raise ValueError("mode %r needs --data or --marginals" % mode)
    if mode in ("clause", "probclause") and clauses is None:
        raise ValueError("mode %r needs --clauses" % mode)

    features = _parse_features(args.features, ensemble)
    classes = None
    if getattr(args, "classes", None):
        parts = args.classes.split(",")
        if len(parts) != 2:
            raise ValueError("--classes takes exactly two comma-separated class ids")
        classes = (int(parts[0]), int(parts[1]))

    kwargs = dict(features=features, classes=classes, mode=mode,
                  clauses=clauses, marginals=marginals)
    if args.gap_prob is not None:
        if getattr(args, "strict_zero", False):
            from .encoding import delta_from_gap

            kwargs["raw_gap"] = delta_from_gap(args.gap_prob) + STRICT_EPS
        else:
            kwargs["prob_gap"] = args.gap_prob
    elif args.gap_raw is not None:
        raw = args.gap_raw
        if getattr(args, "strict_zero", False):
            raw += STRICT_EPS
        kwargs["raw_gap"] = raw
    elif args.gap_ratio is not None:
        kwargs["ratio_gap"] = args.gap_ratio
    else:
        raise ValueError("one of --gap-prob, --gap-raw, --gap-ratio is required")
    query = SensitivityQuery(**kwargs)
    query.validate_for(ensemble)
    return query, dataset


def _bound_out(v):
    # unbounded interval sides serialize as null so reports stay strict JSON
    return None if v in (float("inf"), float("-inf")) else v


def _region_out(region):
    return {str(f): [_bound_out(lo), _bound_out(hi)] for f, (lo, hi) in sorted(region.items())}


def _region_in(obj):
    out = {}
    for f, (lo, hi) in obj.items():
        out[int(f)] = (float("-inf") if lo is None else float(lo),
                       float("inf") if hi is None else float(hi))
    return out


def _pair_json(pair):
    if pair is None:
        return None
    return {
        "x1": pair.x1,
        "x2": pair.x2,
        "region1": _region_out(pair.region1),
        "region2": _region_out(pair.region2),
        "raw1": pair.raw1,
        "raw2": pair.raw2,
        "prob1": pair.prob1,
        "prob2": pair.prob2,
        "utility_log": _finite_or_none(pair.utility_log),
        "objective": _finite_or_none(pair.objective),
    }


def _finite_or_none(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def _pair_from_json(obj):
    return CounterexamplePair(
        x1=[float(v) for v in obj["x1"]],
        x2=[float(v) for v in obj["x2"]],
        region1=_region_in(obj["region1"]),
        region2=_region_in(obj["region2"]),
        raw1=obj.get("raw1", []),
        raw2=obj.get("raw2", []),
        prob1=obj.get("prob1", []),
        prob2=obj.get("prob2", []),
        utility_log=obj.get("utility_log"),
        objective=obj.get("objective", 0.0),
    )


def _feature_label(ensemble, f):
    if ensemble.feature_names is not None:
        return ensemble.feature_names[f]
    return "f%d" % f


def _print_pair(ensemble, query, pair):
    print("  %-4s %-18s %16s %16s" % ("id", "feature", "x1", "x2"))
    for f in range(ensemble.num_features):
        mark = " *" if f in query.features else ""
        print("  %-4d %-18s %16.6g %16.6g%s"
              % (f, _feature_label(ensemble, f), pair.x1[f], pair.x2[f], mark))
    print("  raw scores:   x1=%s  x2=%s"
          % (["%.6g" % v for v in pair.raw1], ["%.6g" % v for v in pair.raw2]))
    print("  class probs:  x1=%s  x2=%s"
          % (["%.6g" % v for v in pair.prob1], ["%.6g" % v for v in pair.prob2]))
    if pair.utility_log is not None:
        print("  utility_log:  %.9g" % pair.utility_log)
    print("  objective:    %.9g" % pair.objective)


def cmd_verify(args):
    ensemble = _load_model(args.model)
    gi = build_guard_index(ensemble)
    query, dataset = _build_query(args, ensemble, gi)
    budget = Budget(time_limit=args.timeout, node_limit=args.node_limit)
    if args.oracle:
        outcome = brute_force_oracle(ensemble, gi, query)
    else:
        outcome = solve(ensemble, gi, query, budget=budget, level=args.level)

    report = {
        "verdict": outcome.verdict,
        "mode": query.mode,
        "level": args.level,
        "stats": {
            "nodes": outcome.stats.nodes,
            "pruned_bound": outcome.stats.pruned_bound,
            "pruned_clause": outcome.stats.pruned_clause,
            "runtime_ms": outcome.stats.wall_time * 1000.0,
        },
        "pair": _pair_json(outcome.pair),
    }
    if outcome.pair is not None:
        certificate = check_pair(ensemble, query, outcome.pair)
        report["certificate_ok"] = bool(certificate)
        if dataset is not None:
            rep = region_distance(dataset, outcome.pair, query.features, dataset.minmax_scaler())
            report["distance"] = rep.distance
            report["nearest_row_index"] = rep.nearest_row_index

    if args.json:
        text = json.dumps(report, indent=2)
        if args.output:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        else:
            print(text)
    else:
        print("verdict: %s" % outcome.verdict)
        print("nodes: %d  pruned_bound: %d  pruned_clause: %d  runtime: %.1f ms"
              % (outcome.stats.nodes, outcome.stats.pruned_bound,
                 outcome.stats.pruned_clause, outcome.stats.wall_time * 1000.0))
        if outcome.pair is not None:
            _print_pair(ensemble, query, outcome.pair)
            if "distance" in report:
                print("  distance to data (insensitive features): %.9g" % report["distance"])
        if args.output:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(json.dumps(report, indent=2) + "\n")

    return {SENSITIVE: 0, NOT_SENSITIVE: 1, TIMEOUT: 2}[outcome.verdict]


def cmd_mine_clauses(args):
    ensemble = _load_model(args.model)
    gi = build_guard_index(ensemble)
    dataset = Dataset.from_csv(args.data)
    clauses = mine_clauses(gi, dataset, max_width=args.max_width,
                           max_clauses=args.max_clauses,
                           feature_budget=args.feature_budget)
    payload = clauses_to_json(clauses)
    with open(args.output, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    hist = {}
    for c in clauses:
        hist[c.width] = hist.get(c.width, 0) + 1
    print("%d clauses" % len(clauses))
    for w in sorted(hist):
        print("  width %d: %d" % (w, hist[w]))
    return 0


def cmd_export_lp(args):
    ensemble = _load_model(args.model)
    gi = build_guard_index(ensemble)
    query, _ = _build_query(args, ensemble, gi)
    artifact = encode(ensemble, gi, query, level=args.level)
    with open(args.output, "wb") as fh:
        export_lp(artifact, fh)
    counts = artifact.family_counts()
    print("wrote %s (%d rows: %s)" % (
        args.output, len(artifact.rows),
        " ".join("%s=%d" % (k, counts[k]) for k in sorted(counts))))
    return 0


def cmd_gen_subsetsum(args):
    values = [int(v) for v in args.set.split(",") if v]
    inst = SubsetSumInstance(tuple(values), args.target)
    ensemble, query = gen_subsetsum_ensemble(inst)
    doc = dump_model(ensemble)
    with open(args.output, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print("wrote %s (%d stumps; query: --features f_prime --gap-raw 0)"
          % (args.output, len(ensemble.trees)))
    return 0


def cmd_distance(args):
    ensemble = _load_model(args.model)
    dataset = Dataset.from_csv(args.data)
    with open(args.pair, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if isinstance(obj, dict) and "pair" in obj:
        obj = obj["pair"]
    if obj is None:
        raise ValueError("pair file holds no counterexample pair")
    pair = _pair_from_json(obj)
    features = _parse_features(args.features, ensemble)
    rep = region_distance(dataset, pair, features, dataset.minmax_scaler())
    report = {
        "distance": rep.distance,
        "nearest_row_index": rep.nearest_row_index,
        "contributions": {str(f): v for f, v in sorted(rep.contributions.items())},
    }
    print(json.dumps(report, indent=2))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(report, indent=2) + "\n")
    return 0


def cmd_compare(args):
    distances = {}
    for path in args.reports:
        with open(path, "r", encoding="utf-8") as fh:
            records = json.load(fh)
        if not isinstance(records, list):
            raise ValueError("%s: a mode report must be a JSON list of records" % path)
        for rec in records:
            mode = rec["mode"]
            distances.setdefault(mode, []).append(
                rec.get("distance") if rec.get("verdict", SENSITIVE) == SENSITIVE else None
            )
    table = compare_modes(distances)
    text = json.dumps(table, indent=2)
    print(text)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return 0


def _add_query_flags(p, multiclass_ok=True):
    p.add_argument("--model", required=True, help="canonical model JSON")
    p.add_argument("--features", required=True,
                   help="comma list of feature names/indices, or @file")
    p.add_argument("--gap-prob", type=float, default=None,
                   help="probability gap g in [0, 0.5)")
    p.add_argument("--gap-raw", type=float, default=None,
                   help="raw-score gap delta >= 0")
    p.add_argument("--gap-ratio", type=float, default=None,
                   help="multiclass probability-ratio gap g >= 1")
    if multiclass_ok:
        p.add_argument("--classes", default=None, help="c1,c2 class pair (multiclass)")
    p.add_argument("--mode", choices=("none", "prob", "clause", "probclause"),
                   default="none")
    p.add_argument("--data", default=None, help="dataset CSV (header + numeric cells)")
    p.add_argument("--marginals", default=None, help="marginal-table JSON")
    p.add_argument("--clauses", default=None, help="clause JSON file")
    p.add_argument("--alpha", type=float, default=1.0,
                   help="marginal smoothing pseudo-count (default 1)")
    p.add_argument("--strict-zero", action="store_true",
                   help="add a small epsilon to the raw gap to force strict sign flips")


def build_parser():
    parser = _Parser(prog="treesense",
                     description="Exact feature-sensitivity verification for tree ensembles")
    parser.add_argument("--version", action="version", version="treesense %s" % __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="decide a sensitivity query")
    _add_query_flags(p)
    p.add_argument("--level", choices=("base", "+unaff", "+aff", "full", "unaff", "aff"),
                   default="full", help="optimization tier")
    p.add_argument("--timeout", type=float, default=3600.0, help="seconds (default 3600)")
    p.add_argument("--node-limit", type=int, default=None)
    p.add_argument("--oracle", action="store_true",
                   help="use the brute-force oracle instead of branch-and-bound")
    p.add_argument("--json", action="store_true", help="print a JSON report")
    p.add_argument("--output", default=None, help="also write the JSON report here")
    p.add_argument("--seed", type=int, default=None, help="accepted for harness parity")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("mine-clauses", help="mine empty-cavity clause summaries")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--max-width", type=int, default=3)
    p.add_argument("--max-clauses", type=int, default=1500)
    p.add_argument("--feature-budget", type=int, default=64)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_mine_clauses)

    p = sub.add_parser("export-lp", help="export the MILP encoding in LP format")
    _add_query_flags(p)
    p.add_argument("--level", choices=("base", "+unaff", "+aff", "full", "unaff", "aff"),
                   default="full")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("gen-subsetsum", help="generate a subset-sum benchmark model")
    p.add_argument("--set", required=True, help="comma list of positive integers")
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_gen_subsetsum)

    p = sub.add_parser("distance", help="distance from data to a pair's region")
    p.add_argument("--model", required=True)
    p.add_argument("--pair", required=True, help="verify JSON report or bare pair JSON")
    p.add_argument("--data", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("compare", help="aggregate mode reports into win/draw/loss rates")
    p.add_argument("reports", nargs="+", help="mode-report JSON files")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    if hasattr(args, "level") and args.level:
        args.level = args.level.lstrip("+")
    try:
        return args.func(args)
    except TriviallyUnsensitiveError as exc:
        # foregone conclusion, still an unsensitive verdict for verify
        if args.command == "verify":
            print("verdict: %s (%s)" % (NOT_SENSITIVE, exc))
            return 1
        print("error: %s" % exc, file=sys.stderr)
        return ERROR_EXIT
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return ERROR_EXIT


if __name__ == "__main__":
    sys.exit(main())
