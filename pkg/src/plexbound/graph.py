"""Undirected simple-graph container with edge-list I/O.

Vertices are dense internal ids 0..n-1. External ids from input files are
kept in ``labels`` and survive induced subgraphs, so solutions can always be
reported in the caller's vocabulary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EdgeListParseError

COMMENT_CHARS = ("#", "%")


@dataclass(frozen=True)
class GraphStats:
    """Degree summary: avg_degree = 2|E|/|V| (0.0 for the empty graph)."""

    avg_degree: float
    max_degree: int


class Graph:
    """Immutable adjacency-list graph. Self-loops and duplicate edges are
    dropped at construction."""

    __slots__ = ("n", "adj", "adj_sets", "edge_count", "labels", "_stats")

    def __init__(
        self,
        n: int,
        edges: Iterable[tuple[int, int]],
        labels: Sequence[str | int] | None = None,
    ):
        if n < 0:
            raise ValueError(f"vertex count must be >= 0, got {n}")
        if labels is not None and len(labels) != n:
            raise ValueError(f"labels has {len(labels)} entries for {n} vertices")
        neigh: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                continue
            neigh[u].add(v)
            neigh[v].add(u)
        self.n = n
        self.adj = [sorted(s) for s in neigh]
        self.adj_sets = neigh
        self.edge_count = sum(len(a) for a in self.adj) // 2
        self.labels = list(labels) if labels is not None else None
        self._stats: GraphStats | None = None

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def neighbors(self, v: int) -> list[int]:
        return self.adj[v]

    def label(self, v: int) -> str | int:
        return self.labels[v] if self.labels is not None else v

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Graph(n={self.n}, m={self.edge_count})"


def stats(g: Graph) -> GraphStats:
    """Degree statistics, computed once and cached on the graph."""
    if g._stats is None:
        if g.n == 0:
            s = GraphStats(0.0, 0)
        else:
            s = GraphStats(2.0 * g.edge_count / g.n, max(len(a) for a in g.adj))
        g._stats = s
    return g._stats


def load_edge_list(path) -> Graph:
    """Parse a whitespace-delimited edge list.

    One edge per line as two tokens; lines starting with '#' or '%' and blank
    lines are skipped. Vertices are numbered densely in first-appearance
    order; the original tokens land in ``labels``. Self-loops are dropped but
    still register their endpoint, so a vertex mentioned only in a loop line
    is kept (isolated). Duplicate edges collapse. Anything else is a
    parse error carrying the 1-based line number.
    """
    ids: dict[str, int] = {}
    edges: list[tuple[int, int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line[0] in COMMENT_CHARS:
                continue
            tokens = line.split()
            if len(tokens) != 2:
                raise EdgeListParseError(
                    path, line_no, f"expected 2 tokens, got {len(tokens)}"
                )
            a, b = tokens
            u = ids.setdefault(a, len(ids))
            v = ids.setdefault(b, len(ids))
            edges.append((u, v))
    labels: list[str | int] = list(ids.keys())
    return Graph(len(labels), edges, labels)


def write_edge_list(g: Graph, path) -> None:
    """Write one "label_u label_v" line per edge (internal order, u < v).

    Isolated vertices are emitted as self-loop lines so that
    load_edge_list(write_edge_list(g)) preserves the vertex set.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for u in range(g.n):
            lu = g.label(u)
            if not g.adj[u]:
                fh.write(f"{lu} {lu}\n")
                continue
            for v in g.adj[u]:
                if v > u:
                    fh.write(f"{lu} {g.label(v)}\n")


def induced_subgraph(g: Graph, keep: Iterable[int]) -> Graph:
    """Subgraph on ``keep``, remapped to dense ids in ascending old-id order.

    Original external labels are preserved. Out-of-range ids are an error.
    """
    kept = sorted(set(keep))
    for v in kept:
        if not (0 <= v < g.n):
            raise ValueError(f"vertex {v} out of range for n={g.n}")
    remap = {old: new for new, old in enumerate(kept)}
    edges = []
    for old_u in kept:
        for old_v in g.adj[old_u]:
            if old_v > old_u and old_v in remap:
                edges.append((remap[old_u], remap[old_v]))
    labels = [g.label(old) for old in kept]
    return Graph(len(kept), edges, labels)
