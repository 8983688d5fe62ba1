"""End-to-end training: generate graphs, run budgeted traced searches,
fit the bound model, and run searches under it."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, fields, replace

from .errors import DegenerateTraceError, ModelFormatError
from .features import FEATURE_NAMES, Example
from .graph import Graph
from .learn import ConstraintModel, encode_milp, save_model, solve
from .preprocess import PreprocessParams, preprocess
from .search import SearchConfig, Solution, search

# Per-run ceiling on recorded examples. Keeps a full training collection
# memory-bounded and, when it binds before the wall clock does, makes the
# collected dataset machine-independent.
DEFAULT_TRACE_CAP = 50_000


@dataclass(frozen=True)
class TrainingPlan:
    graph_sizes: tuple[int, ...] = (100, 150, 200, 250)
    graphs_per_size: int = 2
    k_values: tuple[int, ...] = (2, 4)
    lb_values: tuple[int, ...] = (5,)
    per_run_budget: float = 60.0  # seconds of traced search per (graph, k, lb)
    solver_budget: float = 300.0  # seconds for the constraint fit
    edge_probability: float = 0.15
    seed: int = 0
    trace_cap: int = DEFAULT_TRACE_CAP

    def __post_init__(self):
        for name in ("graph_sizes", "k_values", "lb_values"):
            vals = tuple(getattr(self, name))
            object.__setattr__(self, name, vals)
            if not vals:
                raise ValueError(f"{name} must be non-empty")
            if any((not isinstance(v, int)) or v < 1 for v in vals):
                raise ValueError(f"{name} must be positive integers, got {vals}")
        if self.graphs_per_size < 1:
            raise ValueError(f"graphs_per_size must be >= 1, got {self.graphs_per_size}")
        if not self.per_run_budget > 0:
            raise ValueError(f"per_run_budget must be > 0, got {self.per_run_budget}")
        if not self.solver_budget > 0:
            raise ValueError(f"solver_budget must be > 0, got {self.solver_budget}")
        if not 0.0 < self.edge_probability < 1.0:
            raise ValueError(
                f"edge_probability must be in (0, 1), got {self.edge_probability}"
            )
        if self.trace_cap < 1:
            raise ValueError(f"trace_cap must be >= 1, got {self.trace_cap}")

    def to_dict(self) -> dict:
        return {
            "graph_sizes": list(self.graph_sizes),
            "graphs_per_size": self.graphs_per_size,
            "k_values": list(self.k_values),
            "lb_values": list(self.lb_values),
            "per_run_budget": self.per_run_budget,
            "solver_budget": self.solver_budget,
            "edge_probability": self.edge_probability,
            "seed": self.seed,
            "trace_cap": self.trace_cap,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainingPlan":
        if not isinstance(doc, dict):
            raise ValueError(f"plan must be an object, got {type(doc).__name__}")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ValueError(f"unknown plan fields: {', '.join(unknown)}")
        kwargs = dict(doc)
        for name in ("graph_sizes", "k_values", "lb_values"):
            if name in kwargs:
                kwargs[name] = tuple(kwargs[name])
        return cls(**kwargs)


def default_plan() -> TrainingPlan:
    return TrainingPlan()


def load_plan(path) -> TrainingPlan:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}: not valid JSON: {e}") from e
    try:
        return TrainingPlan.from_dict(doc)
    except (TypeError, ValueError) as e:
        raise ValueError(f"{path}: {e}") from e


def gen_random_graph(n: int, edge_probability: float, seed: int) -> Graph:
    """Erdős–Rényi G(n, p), sampled deterministically from the seed."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 <= edge_probability <= 1.0:
        raise ValueError(f"edge_probability must be in [0, 1], got {edge_probability}")
    rng = random.Random(seed)
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < edge_probability:
                edges.append((u, v))
    return Graph(n, edges)


def _graph_seed(plan: TrainingPlan, n: int, index: int) -> int:
    return plan.seed * 1_000_003 + n * 101 + index


def _collect(plan: TrainingPlan) -> tuple[list[Example], list[dict]]:
    examples: list[Example] = []
    runs: list[dict] = []
    for n in plan.graph_sizes:
        for g_idx in range(plan.graphs_per_size):
            g = gen_random_graph(n, plan.edge_probability, _graph_seed(plan, n, g_idx))
            graph_tag = f"er-n{n}-i{g_idx}"
            for k in plan.k_values:
                for lb in plan.lb_values:
                    report = preprocess(g, PreprocessParams(k=k, lb=lb))
                    reduced = report.result
                    record = {
                        "graph": graph_tag,
                        "n": n,
                        "k": k,
                        "lb": lb,
                        "reduced_vertices": reduced.n,
                        "reduced_edges": reduced.edge_count,
                        "examples": 0,
                        "positives": 0,
                        "negatives": 0,
                        "nodes": 0,
                        "exhausted": True,
                    }
                    if reduced.n > 0:
                        cfg = SearchConfig(
                            k=k,
                            lb=lb,
                            time_limit=plan.per_run_budget,
                            bound="familiarity",
                            record_trace=True,
                            graph_id=f"{graph_tag}-k{k}-lb{lb}",
                            max_trace=plan.trace_cap,
                        )
                        result = search(reduced, cfg)
                        trace = result.trace or []
                        pos = sum(1 for e in trace if e.label)
                        record.update(
                            examples=len(trace),
                            positives=pos,
                            negatives=len(trace) - pos,
                            nodes=result.stats.nodes,
                            exhausted=not result.stats.expired,
                        )
                        examples.extend(trace)
                    runs.append(record)
    positives = sum(r["positives"] for r in runs)
    negatives = sum(r["negatives"] for r in runs)
    if positives == 0 or negatives == 0:
        detail = ", ".join(
            f"{r['graph']} k={r['k']} lb={r['lb']}: "
            f"{r['positives']}+/{r['negatives']}- of {r['examples']}"
            for r in runs[:8]
        )
        more = "" if len(runs) <= 8 else f", ... ({len(runs)} runs total)"
        raise DegenerateTraceError(
            f"degenerate trace: {positives} positive and {negatives} negative "
            f"examples collected; a usable dataset needs both labels. "
            f"Per-run counts: {detail}{more}"
        )
    return examples, runs


def collect_training_data(plan: TrainingPlan) -> list[Example]:
    """Run every (graph, k, lb) combination of the plan with the handcrafted
    bound and tracing on, and concatenate the recorded examples in plan
    order. Raises DegenerateTraceError when either label class is absent."""
    examples, _ = _collect(plan)
    return examples


def train(plan: TrainingPlan, model_out=None) -> ConstraintModel:
    """collect_training_data -> encode (one constraint) -> solve within the
    plan's solver budget. The returned model's meta records the plan, the
    per-run collection summary, and the fit report; when model_out is given
    the model is also saved there."""
    examples, runs = _collect(plan)
    problem = encode_milp(examples, num_constraints=1)
    model, report = solve(problem, time_limit=plan.solver_budget, seed=plan.seed)
    meta = dict(model.meta)
    meta["plan"] = plan.to_dict()
    meta["runs"] = runs
    meta["feature_order"] = list(FEATURE_NAMES)
    meta["examples_total"] = len(examples)
    meta["negatives_covered"] = report.negatives_covered
    model = replace(model, meta=meta)
    if model_out is not None:
        save_model(model, model_out)
    return model


def learned_search(
    g: Graph, k: int, lb: int, time_limit: float | None, model: ConstraintModel
) -> Solution | None:
    """Search g under the model's bound; identical to search() with the
    model as the bound strategy. Returns the best solution found, or None."""
    if model.term_spec.n != len(FEATURE_NAMES):
        raise ModelFormatError(
            f"model expects {model.term_spec.n} features but the search "
            f"produces {len(FEATURE_NAMES)}"
        )
    cfg = SearchConfig(k=k, lb=lb, time_limit=time_limit, bound=model)
    return search(g, cfg).best
