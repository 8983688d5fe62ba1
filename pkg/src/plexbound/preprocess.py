"""Graph reduction before search.

Two sound filters shrink the input to G' without losing any k-plex of size
>= lb: coreness (a member of such a plex keeps degree >= lb-k inside it, so
the (lb-k)-core retains it) and cliqueness (every member sits in a clique of
size >= ceil(lb/k) within the plex). Cliqueness membership is tested in the
coreness-reduced graph — tighter than testing in the input and still sound,
because a surviving plex's witness clique survives coreness with it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graph import Graph, induced_subgraph


@dataclass(frozen=True)
class PreprocessParams:
    k: int
    lb: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.lb < 1:
            raise ValueError(f"lb must be >= 1, got {self.lb}")


@dataclass(frozen=True)
class PreprocessReport:
    removed_by_coreness: int
    removed_by_cliqueness: int
    result: Graph

    def summary(self) -> dict:
        return {
            "removed_by_coreness": self.removed_by_coreness,
            "removed_by_cliqueness": self.removed_by_cliqueness,
            "vertices": self.result.n,
            "edges": self.result.edge_count,
        }


def coreness_prune(g: Graph, p: PreprocessParams) -> Graph:
    """The (lb-k)-core: iteratively peel vertices of degree < lb-k.

    Threshold peeling with a worklist reaches the same fixpoint as a full
    bucket-queue core decomposition cut at lb-k. lb-k <= 0 keeps g unchanged.
    """
    threshold = p.lb - p.k
    if threshold <= 0:
        return g
    deg = [len(a) for a in g.adj]
    removed = [False] * g.n
    work = [v for v in range(g.n) if deg[v] < threshold]
    while work:
        v = work.pop()
        if removed[v]:
            continue
        removed[v] = True
        for w in g.adj[v]:
            if not removed[w]:
                deg[w] -= 1
                if deg[w] == threshold - 1:
                    work.append(w)
    if not any(removed):
        return g
    return induced_subgraph(g, [v for v in range(g.n) if not removed[v]])


def _witness_clique(g: Graph, root: int, q: int) -> list[int] | None:
    """Find any clique of size q containing root, or None.

    Depth-first search over common neighborhoods with the classic pivot rule
    (branch only on candidates missed by the best-connected pivot) and an
    early exit on the first witness. Candidates with degree < q-1 can never
    help and are dropped up front.
    """
    adjs = g.adj_sets
    if len(g.adj[root]) < q - 1:
        return None
    clique = [root]
    cand = {w for w in g.adj[root] if len(g.adj[w]) >= q - 1}

    def dfs(p: set[int], x: set[int]) -> bool:
        if len(clique) == q:
            return True
        if len(clique) + len(p) < q:
            return False
        pivot = max(p | x, key=lambda u: (len(adjs[u] & p), -u))
        for w in sorted(p - adjs[pivot]):
            clique.append(w)
            if dfs(p & adjs[w], x & adjs[w]):
                return True
            clique.pop()
            p = p - {w}
            x = x | {w}
        return False

    return clique if dfs(cand, set()) else None


def cliqueness_prune(g: Graph, p: PreprocessParams) -> Graph:
    """Drop vertices not contained in any clique of size >= ceil(lb/k).

    Single pass; membership is tested in the input graph (removals do not
    cascade). Vertices of a found witness clique are all marked as survivors
    at once, which skips their own searches without changing the result set.
    """
    q = -(-p.lb // p.k)
    if q <= 1:
        return g
    if q == 2:
        keep = [v for v in range(g.n) if g.adj[v]]
        return g if len(keep) == g.n else induced_subgraph(g, keep)
    survivor = [False] * g.n
    for v in range(g.n):
        if survivor[v]:
            continue
        witness = _witness_clique(g, v, q)
        if witness:
            for u in witness:
                survivor[u] = True
    if all(survivor):
        return g
    return induced_subgraph(g, [v for v in range(g.n) if survivor[v]])


def preprocess(g: Graph, p: PreprocessParams) -> PreprocessReport:
    """Coreness then cliqueness; the report attributes removals per phase."""
    after_core = coreness_prune(g, p)
    after_clique = cliqueness_prune(after_core, p)
    return PreprocessReport(
        removed_by_coreness=g.n - after_core.n,
        removed_by_cliqueness=after_core.n - after_clique.n,
        result=after_clique,
    )
