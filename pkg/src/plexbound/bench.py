"""Strategy-comparison harness over edge-list graph files.

Emits one CSV row per (dataset, k, lb, time_limit, strategy). The CSV is the
product of record and the harness is resumable: rerunning with an existing
output file skips rows whose key tuple is already present. Learned rows run
to exhaustion additionally report bound accuracy — the fraction of the
model's prunes that do not cut off any maximum solution — measured against
an exhaustive no-bound reference run on the same reduced graph.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, fields

from .errors import ModelFormatError
from .features import FEATURE_NAMES
from .graph import Graph, load_edge_list
from .learn import ConstraintModel, load_model
from .preprocess import PreprocessParams, preprocess
from .search import SearchConfig, search

CSV_COLUMNS = (
    "dataset",
    "k",
    "lb",
    "time_limit",
    "strategy",
    "size",
    "wall_time_s",
    "nodes",
    "bound_calls",
    "bound_prunes",
    "accuracy",
)

STRATEGIES = ("basic", "learned", "none")


@dataclass(frozen=True)
class BenchSpec:
    datasets: tuple[str, ...]
    k_values: tuple[int, ...]
    lb_values: tuple[int, ...]
    time_limits: tuple[float | None, ...]  # None = run to exhaustion
    strategies: tuple[str, ...]
    model_path: str | None = None
    output: str = "bench.csv"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(self, "k_values", tuple(self.k_values))
        object.__setattr__(self, "lb_values", tuple(self.lb_values))
        object.__setattr__(
            self,
            "time_limits",
            tuple(None if t is None else float(t) for t in self.time_limits),
        )
        object.__setattr__(self, "strategies", tuple(self.strategies))
        if not self.datasets:
            raise ValueError("datasets must be non-empty")
        for name in ("k_values", "lb_values"):
            vals = getattr(self, name)
            if not vals or any((not isinstance(v, int)) or v < 1 for v in vals):
                raise ValueError(f"{name} must be non-empty positive integers")
        if not self.time_limits:
            raise ValueError("time_limits must be non-empty")
        if any(t is not None and not t > 0 for t in self.time_limits):
            raise ValueError("time limits must be positive (or null for none)")
        if not self.strategies:
            raise ValueError("strategies must be non-empty")
        unknown = [s for s in self.strategies if s not in STRATEGIES]
        if unknown:
            raise ValueError(
                f"unknown strategies {unknown}; valid: {', '.join(STRATEGIES)}"
            )
        if "learned" in self.strategies and not self.model_path:
            raise ValueError("strategy 'learned' requires model_path")

    @classmethod
    def from_dict(cls, doc: dict) -> "BenchSpec":
        if not isinstance(doc, dict):
            raise ValueError(f"bench spec must be an object, got {type(doc).__name__}")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ValueError(f"unknown bench spec fields: {', '.join(unknown)}")
        return cls(**doc)


def load_bench_spec(path) -> BenchSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}: not valid JSON: {e}") from e
    try:
        return BenchSpec.from_dict(doc)
    except (TypeError, ValueError) as e:
        raise ValueError(f"{path}: {e}") from e


def _tl_str(tl: float | None) -> str:
    return "none" if tl is None else f"{tl:g}"


def _row_key(dataset: str, k: int, lb: int, tl: float | None, strategy: str):
    return (dataset, str(k), str(lb), _tl_str(tl), strategy)


def _mask(vertices) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


def _reduced_graph(dataset: str, k: int, lb: int, cache: dict) -> Graph:
    gkey = ("graph", dataset)
    if gkey not in cache:
        cache[gkey] = load_edge_list(dataset)
    rkey = ("reduced", dataset, k, lb)
    if rkey not in cache:
        cache[rkey] = preprocess(cache[gkey], PreprocessParams(k=k, lb=lb)).result
    return cache[rkey]


def _max_solution_masks(dataset: str, k: int, lb: int, cache: dict) -> set[int]:
    """All maximum solutions of the reduced graph, from an exhaustive
    no-bound run, as vertex bitmasks. Empty when no solution reaches lb."""
    key = ("reference", dataset, k, lb)
    if key in cache:
        return cache[key]
    reduced = _reduced_graph(dataset, k, lb, cache)
    state = {"best": 0, "masks": set()}

    def hook(vs):
        s = len(vs)
        if s > state["best"]:
            state["best"] = s
            state["masks"] = set()
        if s == state["best"]:
            state["masks"].add(_mask(vs))

    search(reduced, SearchConfig(k=k, lb=lb, bound="none"), on_solution=hook)
    cache[key] = state["masks"]
    return cache[key]


def _execute_row(
    dataset: str,
    k: int,
    lb: int,
    tl: float | None,
    strategy: str,
    model: ConstraintModel | None,
    cache: dict,
) -> dict:
    reduced = _reduced_graph(dataset, k, lb, cache)
    bound = {"basic": "familiarity", "none": "none"}.get(strategy, model)
    want_accuracy = strategy == "learned" and tl is None
    prune_log: list[tuple[int, int]] = []
    on_prune = None
    if want_accuracy:

        def on_prune(vs, va):
            prune_log.append((_mask(vs), _mask(va)))

    cfg = SearchConfig(
        k=k, lb=lb, time_limit=math.inf if tl is None else tl, bound=bound
    )
    result = search(reduced, cfg, on_prune=on_prune)

    accuracy = None
    if want_accuracy:
        if not prune_log:
            accuracy = 1.0
        else:
            maxima = _max_solution_masks(dataset, k, lb, cache)
            wrong = 0
            for vs_mask, va_mask in prune_log:
                reach = vs_mask | va_mask
                for m in maxima:
                    if m & vs_mask == vs_mask and m | reach == reach:
                        wrong += 1
                        break
            accuracy = 1.0 - wrong / len(prune_log)

    return {
        "dataset": dataset,
        "k": k,
        "lb": lb,
        "time_limit": tl,
        "strategy": strategy,
        "size": result.best.size if result.best else 0,
        "wall_time_s": result.stats.elapsed,
        "nodes": result.stats.nodes,
        "bound_calls": result.stats.bound_calls,
        "bound_prunes": result.stats.bound_prunes,
        "accuracy": accuracy,
    }


def _worker_row(task) -> dict:
    dataset, k, lb, tl, strategy, model_path = task
    model = load_model(model_path) if strategy == "learned" else None
    return _execute_row(dataset, k, lb, tl, strategy, model, cache={})


def _format_row(row: dict) -> dict:
    out = dict(row)
    out["time_limit"] = _tl_str(row["time_limit"])
    out["wall_time_s"] = f"{row['wall_time_s']:.6f}"
    out["accuracy"] = "" if row["accuracy"] is None else f"{row['accuracy']:.6f}"
    return out


def _parse_row(raw: dict) -> dict:
    tl = raw["time_limit"]
    acc = raw.get("accuracy", "")
    return {
        "dataset": raw["dataset"],
        "k": int(raw["k"]),
        "lb": int(raw["lb"]),
        "time_limit": None if tl == "none" else float(tl),
        "strategy": raw["strategy"],
        "size": int(raw["size"]),
        "wall_time_s": float(raw["wall_time_s"]),
        "nodes": int(raw["nodes"]),
        "bound_calls": int(raw["bound_calls"]),
        "bound_prunes": int(raw["bound_prunes"]),
        "accuracy": None if acc == "" else float(acc),
    }


def _read_existing(path) -> dict:
    existing: dict = {}
    if not os.path.exists(path) or os.path.getsize(path) == 0:
        return existing
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
            raise ValueError(
                f"{path}: existing CSV header {reader.fieldnames} does not match "
                f"the current schema {list(CSV_COLUMNS)}"
            )
        for raw in reader:
            row = _parse_row(raw)
            existing[
                _row_key(
                    row["dataset"], row["k"], row["lb"], row["time_limit"], row["strategy"]
                )
            ] = row
    return existing


def bench(spec: BenchSpec, jobs: int = 1, plots: bool = True) -> list[dict]:
    """Run (or resume) the spec and return every row it covers, in spec
    order. Figures are rendered next to the CSV unless plots=False."""
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    model = None
    if "learned" in spec.strategies:
        model = load_model(spec.model_path)
        if model.term_spec.n != len(FEATURE_NAMES):
            raise ModelFormatError(
                f"{spec.model_path}: model expects {model.term_spec.n} features "
                f"but the search produces {len(FEATURE_NAMES)}"
            )
    for dataset in spec.datasets:
        if not os.path.exists(dataset):
            raise FileNotFoundError(f"dataset not found: {dataset}")

    plan = [
        (dataset, k, lb, tl, strategy)
        for dataset in spec.datasets
        for k in spec.k_values
        for lb in spec.lb_values
        for tl in spec.time_limits
        for strategy in spec.strategies
    ]
    existing = _read_existing(spec.output)
    pending = [p for p in plan if _row_key(*p) not in existing]

    out_dir = os.path.dirname(os.path.abspath(spec.output))
    os.makedirs(out_dir, exist_ok=True)
    new_file = not os.path.exists(spec.output) or os.path.getsize(spec.output) == 0
    results: dict = dict(existing)
    with open(spec.output, "a", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(CSV_COLUMNS))
        if new_file:
            writer.writeheader()
            fh.flush()

        def record(row: dict):
            results[
                _row_key(
                    row["dataset"], row["k"], row["lb"], row["time_limit"], row["strategy"]
                )
            ] = row
            writer.writerow(_format_row(row))
            fh.flush()

        if jobs == 1 or len(pending) <= 1:
            cache: dict = {}
            for dataset, k, lb, tl, strategy in pending:
                record(_execute_row(dataset, k, lb, tl, strategy, model, cache))
        else:
            tasks = [
                (dataset, k, lb, tl, strategy, spec.model_path)
                for dataset, k, lb, tl, strategy in pending
            ]
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_worker_row, t) for t in tasks]
                for fut in as_completed(futures):
                    record(fut.result())

    rows = [results[_row_key(*p)] for p in plan]
    if plots:
        from .plots import render_bench_figures

        render_bench_figures(rows, spec.output)
    return rows
