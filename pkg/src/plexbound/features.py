"""Search-state feature vectors and labeled-example persistence.

A feature vector summarizes one branch-and-bound state in 10 numbers, all
readable in O(1) from the search state's cached aggregates and the graph's
precomputed degree stats — extraction never touches adjacency lists.
Labeled examples (continue vs. bound) are persisted as JSONL for training.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Sequence

from .errors import TraceFormatError
from .graph import Graph, stats

FEATURE_NAMES = (
    "lb",
    "ub",
    "k",
    "vs_size",
    "n_vs_max",
    "n_vs_sum",
    "va_size",
    "inter_edge",
    "avg_deg",
    "max_deg",
)
TRACE_SCHEMA_VERSION = 1


@dataclass(frozen=True, slots=True)
class FeatureVector:
    """Fixed-order state summary; see FEATURE_NAMES for the wire order.

    ub is the vertex count of the searched (preprocessed) graph — a per-graph
    constant, deliberately looser than the per-node |V_S|+|V_A| cap used by
    the handcrafted bound. n_vs_max / n_vs_sum count neighbors *within* V_S.
    """

    lb: int
    ub: int
    k: int
    vs_size: int
    n_vs_max: int
    n_vs_sum: int
    va_size: int
    inter_edge: int
    avg_deg: float
    max_deg: int

    def __post_init__(self):
        vals = self.values()
        for name, v in zip(FEATURE_NAMES, vals):
            if v < 0:
                raise ValueError(f"feature {name} must be nonnegative, got {v}")
        if self.vs_size == 0 and (self.n_vs_max or self.n_vs_sum):
            raise ValueError("n_vs_max and n_vs_sum must be 0 when V_S is empty")
        if self.n_vs_max > max(0, self.vs_size - 1):
            raise ValueError(
                f"n_vs_max {self.n_vs_max} exceeds vs_size-1 = {self.vs_size - 1}"
            )
        if self.n_vs_sum > self.vs_size * self.n_vs_max:
            raise ValueError(
                f"n_vs_sum {self.n_vs_sum} exceeds vs_size*n_vs_max "
                f"= {self.vs_size * self.n_vs_max}"
            )
        if self.inter_edge > self.vs_size * self.va_size:
            raise ValueError(
                f"inter_edge {self.inter_edge} exceeds vs_size*va_size "
                f"= {self.vs_size * self.va_size}"
            )

    def values(self) -> list:
        return [
            self.lb,
            self.ub,
            self.k,
            self.vs_size,
            self.n_vs_max,
            self.n_vs_sum,
            self.va_size,
            self.inter_edge,
            self.avg_deg,
            self.max_deg,
        ]

    @classmethod
    def from_values(cls, vals: Sequence) -> "FeatureVector":
        if len(vals) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} features, got {len(vals)}")
        ints = []
        for i, v in enumerate(vals):
            if i == 8:  # avg_deg is the only non-integer component
                ints.append(float(v))
                continue
            if float(v) != int(v):
                raise ValueError(f"feature {FEATURE_NAMES[i]} must be integral, got {v}")
            ints.append(int(v))
        return cls(*ints)


@dataclass(frozen=True, slots=True)
class ExampleMeta:
    """Provenance of one recorded example. node_index is the bound-evaluation
    ordinal within its run; it is not persisted, so it does not participate
    in equality."""

    graph_id: str | int
    k: int
    lb: int
    node_index: int = field(default=0, compare=False)


@dataclass(frozen=True, slots=True)
class Example:
    features: FeatureVector
    label: bool  # True = continue exploring (positive), False = bound (negative)
    meta: ExampleMeta


def extract_features(g_prime: Graph, st, cfg) -> FeatureVector:
    """Read the 10 components from cached aggregates — O(1), no adjacency access.

    ``st`` is a search state exposing vs, va, n_vs_max, sum_deg_in_vs and
    inter_edge_total; ``cfg`` supplies k and lb. avg/max degree come from the
    graph's memoized stats (compute them once per graph before hot loops).
    """
    gs = stats(g_prime)
    return FeatureVector(
        lb=cfg.lb,
        ub=g_prime.n,
        k=cfg.k,
        vs_size=len(st.vs),
        n_vs_max=st.n_vs_max,
        n_vs_sum=st.sum_deg_in_vs,
        va_size=len(st.va),
        inter_edge=st.inter_edge_total,
        avg_deg=gs.avg_degree,
        max_deg=gs.max_degree,
    )


def _header_line() -> str:
    return json.dumps(
        {"schema": TRACE_SCHEMA_VERSION, "order": list(FEATURE_NAMES)},
        separators=(",", ":"),
    )


def write_trace(examples: Sequence[Example], path) -> int:
    """Append examples as JSONL; returns the number written.

    A header line {"schema":1,"order":[...]} is emitted first whenever the
    file is new or empty. An empty example list writes nothing at all.
    """
    if not examples:
        return 0
    need_header = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", encoding="utf-8") as fh:
        if need_header:
            fh.write(_header_line() + "\n")
        for ex in examples:
            rec = {
                "f": ex.features.values(),
                "y": 1 if ex.label else 0,
                "g": ex.meta.graph_id,
                "k": ex.meta.k,
                "lb": ex.meta.lb,
            }
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
    return len(examples)


def read_trace(path) -> list[Example]:
    """Inverse of write_trace. Empty file → empty list; otherwise the first
    line must be a matching schema header. node_index is regenerated as the
    example's ordinal within the file."""
    examples: list[Example] = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        return examples
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise TraceFormatError(path, 1, f"bad header JSON: {e}") from e
    if not isinstance(header, dict) or header.get("schema") != TRACE_SCHEMA_VERSION:
        raise TraceFormatError(
            path, 1, f"unsupported schema {header.get('schema') if isinstance(header, dict) else header!r}"
        )
    if header.get("order") != list(FEATURE_NAMES):
        raise TraceFormatError(path, 1, "feature order mismatch")
    for line_no, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise TraceFormatError(path, line_no, f"bad JSON: {e}") from e
        try:
            f = rec["f"]
            y = rec["y"]
            gid = rec["g"]
            k = rec["k"]
            lb = rec["lb"]
        except (KeyError, TypeError) as e:
            raise TraceFormatError(path, line_no, f"missing field: {e}") from e
        if not isinstance(f, list) or len(f) != len(FEATURE_NAMES):
            raise TraceFormatError(
                path, line_no, f"expected {len(FEATURE_NAMES)} features, got {len(f) if isinstance(f, list) else type(f).__name__}"
            )
        if y not in (0, 1):
            raise TraceFormatError(path, line_no, f"label must be 0 or 1, got {y!r}")
        try:
            fv = FeatureVector.from_values(f)
        except ValueError as e:
            raise TraceFormatError(path, line_no, str(e)) from e
        meta = ExampleMeta(graph_id=gid, k=k, lb=lb, node_index=len(examples))
        examples.append(Example(features=fv, label=bool(y), meta=meta))
    return examples
