"""Command-line surface: preprocess, solve, train, export-lp, eval-model,
and bench subcommands. Results print as JSON on stdout; errors go to stderr
with a nonzero exit code. "No solution found" is a success that prints
size 0."""

from __future__ import annotations

import argparse
import json
import math
import sys

from .bench import bench, load_bench_spec
from .errors import PlexboundError
from .features import FEATURE_NAMES, read_trace, write_trace
from .graph import load_edge_list
from .learn import encode_milp, export_lp, load_model, model_bounds
from .pipeline import default_plan, load_plan, train
from .preprocess import PreprocessParams, preprocess
from .search import SearchConfig, search


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plexbound",
        description="Branch-and-bound maximum k-plex search with a learned bound.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_pre = sub.add_parser(
        "preprocess", help="reduce a graph for (k, lb) and print the report"
    )
    p_pre.add_argument("graph", help="edge-list file")
    p_pre.add_argument("--k", type=int, required=True)
    p_pre.add_argument("--lb", type=int, required=True)

    p_solve = sub.add_parser(
        "solve", help="search a graph for a maximum k-plex of size >= lb"
    )
    p_solve.add_argument("graph", help="edge-list file")
    p_solve.add_argument("--k", type=int, required=True)
    p_solve.add_argument("--lb", type=int, required=True)
    p_solve.add_argument(
        "--time-limit", type=float, default=None, help="seconds; omit to exhaust"
    )
    p_solve.add_argument(
        "--strategy",
        choices=("basic", "learned", "none"),
        default="basic",
        help="bound strategy (default: basic)",
    )
    p_solve.add_argument("--model", help="model JSON (required for --strategy learned)")
    p_solve.add_argument("--trace-out", help="record bound evaluations to this file")

    p_train = sub.add_parser("train", help="run the training pipeline")
    p_train.add_argument("--plan", help="training plan JSON (defaults when omitted)")
    p_train.add_argument("--model-out", required=True, help="where to save the model")

    p_export = sub.add_parser(
        "export-lp", help="encode a trace and write the LP-format file"
    )
    p_export.add_argument("--trace", required=True, help="trace file to encode")
    p_export.add_argument("--out", required=True, help="LP file to write")
    p_export.add_argument(
        "--constraints", type=int, default=1, help="simultaneous constraints (default 1)"
    )
    p_export.add_argument(
        "--soft",
        action="store_true",
        help="coverage-maximizing objective instead of hard coverage rows",
    )

    p_eval = sub.add_parser(
        "eval-model", help="replay a model over a trace and print the counts"
    )
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--trace", required=True)

    p_bench = sub.add_parser("bench", help="run a benchmark spec to CSV")
    p_bench.add_argument("--spec", required=True, help="bench spec JSON")
    p_bench.add_argument("--jobs", type=int, default=1, help="parallel rows (default 1)")
    p_bench.add_argument(
        "--no-plots", action="store_true", help="skip rendering figures next to the CSV"
    )

    return parser


def _cmd_preprocess(args) -> int:
    g = load_edge_list(args.graph)
    report = preprocess(g, PreprocessParams(k=args.k, lb=args.lb))
    print(json.dumps(report.summary()))
    return 0


def _cmd_solve(args) -> int:
    if args.strategy == "learned" and not args.model:
        print("solve: --strategy learned requires --model", file=sys.stderr)
        return 1
    g = load_edge_list(args.graph)
    reduced = preprocess(g, PreprocessParams(k=args.k, lb=args.lb)).result
    if args.strategy == "learned":
        model = load_model(args.model)
        if model.term_spec.n != len(FEATURE_NAMES):
            print(
                f"solve: model expects {model.term_spec.n} features but the "
                f"search produces {len(FEATURE_NAMES)}",
                file=sys.stderr,
            )
            return 1
        bound = model
    else:
        bound = {"basic": "familiarity", "none": "none"}[args.strategy]
    cfg = SearchConfig(
        k=args.k,
        lb=args.lb,
        time_limit=math.inf if args.time_limit is None else args.time_limit,
        bound=bound,
        record_trace=args.trace_out is not None,
        graph_id=args.graph,
    )
    result = search(reduced, cfg)
    if args.trace_out is not None:
        write_trace(result.trace or [], args.trace_out)
    if result.best is not None:
        print(json.dumps(result.best.to_json(reduced)))
    else:
        elapsed_ms = int(result.stats.elapsed * 1000)
        print(json.dumps({"size": 0, "vertices": [], "elapsed_ms": elapsed_ms}))
    return 0


def _cmd_train(args) -> int:
    plan = load_plan(args.plan) if args.plan else default_plan()
    model = train(plan, model_out=args.model_out)
    print(
        json.dumps(
            {
                "model": args.model_out,
                "examples": model.meta.get("examples_total"),
                "coverage": model.meta.get("coverage"),
                "phase": model.meta.get("phase"),
            }
        )
    )
    return 0


def _cmd_export_lp(args) -> int:
    examples = read_trace(args.trace)
    problem = encode_milp(examples, num_constraints=args.constraints)
    export_lp(problem, args.out, soft=args.soft)
    print(
        json.dumps(
            {
                "out": args.out,
                "rows": problem.num_rows,
                "continuous": problem.num_continuous,
                "binary": problem.num_binary,
            }
        )
    )
    return 0


def _cmd_eval_model(args) -> int:
    model = load_model(args.model)
    examples = read_trace(args.trace)
    positives = sum(1 for e in examples if e.label)
    negatives = len(examples) - positives
    violations = sum(1 for e in examples if e.label and model_bounds(model, e.features))
    covered = sum(
        1 for e in examples if not e.label and model_bounds(model, e.features)
    )
    print(
        json.dumps(
            {
                "positives": positives,
                "positive_violations": violations,
                "negatives": negatives,
                "negatives_covered": covered,
                "coverage": 1.0 if negatives == 0 else covered / negatives,
            }
        )
    )
    return 0


def _cmd_bench(args) -> int:
    spec = load_bench_spec(args.spec)
    rows = bench(spec, jobs=args.jobs, plots=not args.no_plots)
    print(json.dumps({"output": spec.output, "rows": len(rows)}))
    return 0


_HANDLERS = {
    "preprocess": _cmd_preprocess,
    "solve": _cmd_solve,
    "train": _cmd_train,
    "export-lp": _cmd_export_lp,
    "eval-model": _cmd_eval_model,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (PlexboundError, OSError, ValueError) as e:
        print(f"plexbound {args.command}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
