"""Anytime branch-and-bound search for maximum k-plexes.

The searcher grows an intermediate solution V_S by binary include/exclude
branching on a heuristically chosen candidate, keeps the candidate set V_A
filtered to vertices that preserve the k-plex property (lossless, since
k-plexes are hereditary), and asks a pluggable bound predicate whether each
child state is worth exploring. Bound decisions can be recorded as labeled
examples for training a replacement bound.
"""

from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .features import FEATURE_NAMES, Example, ExampleMeta, extract_features
from .graph import Graph, stats
from .learn import ConstraintModel

TIME_CHECK_INTERVAL = 1024

# When set, every bound evaluation re-derives the state aggregates from
# scratch and asserts they match the incremental caches. Test hook; far too
# slow for real runs.
PARANOID_CACHE_CHECKS = False


@dataclass
class SearchConfig:
    k: int
    lb: int
    time_limit: float = math.inf  # seconds; math.inf = run to exhaustion
    bound: "str | ConstraintModel | Callable" = "familiarity"  # "none" | "familiarity" | model | callable(state)->bool
    record_trace: bool = False
    graph_id: str | int = ""
    # Optional cap on recorded trace rows. When the cap is reached the kept
    # rows are thinned to every other one and the recording stride doubles,
    # so a long run yields an evenly spaced sample of at most max_trace
    # bound evaluations instead of an unbounded prefix.
    max_trace: int | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.lb < 1:
            raise ValueError(f"lb must be >= 1, got {self.lb}")
        if self.time_limit is None:
            self.time_limit = math.inf
        if not self.time_limit > 0:
            raise ValueError(f"time_limit must be > 0, got {self.time_limit}")
        if self.max_trace is not None and self.max_trace < 1:
            raise ValueError(f"max_trace must be >= 1, got {self.max_trace}")


@dataclass(frozen=True)
class Solution:
    vertices: tuple[int, ...]  # internal ids of the searched graph, sorted
    size: int
    found_at: float  # seconds since search start

    def to_json(self, g: Graph) -> dict:
        return {
            "size": self.size,
            "vertices": [g.label(v) for v in self.vertices],
            "elapsed_ms": int(self.found_at * 1000),
        }


@dataclass
class SearchStats:
    nodes: int = 0
    bound_calls: int = 0
    bound_prunes: int = 0
    elapsed: float = 0.0
    expired: bool = False


@dataclass
class SearchResult:
    best: Optional[Solution]
    solutions: list[Solution]  # strictly-improving best-so-far history
    trace: Optional[list[Example]]
    stats: SearchStats


class SearchState:
    """The pair (V_S, V_A) plus incrementally maintained aggregates.

    cnt_vs[x] counts x's neighbors inside V_S for *every* vertex x: for
    members it is their internal degree |N_x^{V_S}|; for candidates it drives
    both branch selection and the k-plex filter. sum_deg_in_vs and n_vs_max
    aggregate the member values; inter_edge_total counts V_S-V_A edges and
    is refreshed whenever the candidate list is replaced.
    """

    __slots__ = (
        "g",
        "vs",
        "va",
        "va_set",
        "in_vs",
        "cnt_vs",
        "sum_deg_in_vs",
        "n_vs_max",
        "inter_edge_total",
    )

    def __init__(self, g: Graph, vs: Sequence[int] = (), va: Sequence[int] | None = None):
        self.g = g
        self.vs = list(vs)
        self.in_vs = bytearray(g.n)
        for v in self.vs:
            self.in_vs[v] = 1
        adjs = g.adj_sets
        vs_set = set(self.vs)
        self.cnt_vs = [len(adjs[x] & vs_set) for x in range(g.n)]
        self.sum_deg_in_vs = sum(self.cnt_vs[v] for v in self.vs)
        self.n_vs_max = max((self.cnt_vs[v] for v in self.vs), default=0)
        if va is None:
            va = [v for v in range(g.n) if not self.in_vs[v]]
        self.set_candidates(sorted(va))

    @classmethod
    def root(cls, g: Graph) -> "SearchState":
        return cls(g)

    def set_candidates(
        self,
        va: list[int],
        va_set: set[int] | None = None,
        inter_edge_total: int | None = None,
    ) -> None:
        """Replace V_A; refreshes va_set and inter_edge_total unless the
        caller already computed them in the same pass."""
        self.va = va
        self.va_set = set(va) if va_set is None else va_set
        if inter_edge_total is None:
            cnt = self.cnt_vs
            inter_edge_total = sum(cnt[v] for v in va)
        self.inter_edge_total = inter_edge_total

    def add(self, u: int) -> None:
        """Move u into V_S, updating member counts and aggregates (V_A is the
        caller's to replace via set_candidates)."""
        cnt = self.cnt_vs
        base = cnt[u]
        self.vs.append(u)
        self.in_vs[u] = 1
        self.sum_deg_in_vs += 2 * base
        m = self.n_vs_max
        if base > m:
            m = base
        in_vs = self.in_vs
        for w in self.g.adj[u]:
            c = cnt[w] + 1
            cnt[w] = c
            if in_vs[w] and c > m:
                m = c
        self.n_vs_max = m

    def pop(self, saved_n_vs_max: int) -> int:
        """Undo the latest add. n_vs_max can shrink, so the caller restores
        the value it saved before add."""
        u = self.vs.pop()
        self.in_vs[u] = 0
        cnt = self.cnt_vs
        for w in self.g.adj[u]:
            cnt[w] -= 1
        self.sum_deg_in_vs -= 2 * cnt[u]
        self.n_vs_max = saved_n_vs_max
        return u

    def deg_in_vs(self, v: int) -> int:
        """|N_v ∩ V_S| (meaningful for members of V_S)."""
        return self.cnt_vs[v]

    def inter_edges(self, v: int) -> int:
        """Edges from v into V_A (meaningful for members of V_S)."""
        return len(self.g.adj_sets[v] & self.va_set)

    def aggregates_from_scratch(self) -> dict:
        """Recompute the cached aggregates directly from adjacency (slow)."""
        g = self.g
        vs_set = set(self.vs)
        va_set = set(self.va)
        deg_in = {v: len(g.adj_sets[v] & vs_set) for v in self.vs}
        return {
            "sum_deg_in_vs": sum(deg_in.values()),
            "n_vs_max": max(deg_in.values(), default=0),
            "inter_edge_total": sum(len(g.adj_sets[v] & va_set) for v in self.vs),
        }

    def assert_caches(self) -> None:
        fresh = self.aggregates_from_scratch()
        cached = {
            "sum_deg_in_vs": self.sum_deg_in_vs,
            "n_vs_max": self.n_vs_max,
            "inter_edge_total": self.inter_edge_total,
        }
        if fresh != cached:
            raise AssertionError(f"cache drift: cached={cached} fresh={fresh}")


def is_kplex(g: Graph, s, k: int) -> bool:
    """True iff every v in s has >= |s|-k neighbors inside s (empty set: yes)."""
    ss = set(s)
    for v in ss:
        if not (0 <= v < g.n):
            raise ValueError(f"vertex {v} out of range for n={g.n}")
    need = len(ss) - k
    if need <= 0:
        return True
    adjs = g.adj_sets
    return all(len(adjs[v] & ss) >= need for v in ss)


def branch_score(g: Graph, u: int) -> float:
    """Average degree over u's neighborhood; 0 for an isolated vertex."""
    nbrs = g.adj[u]
    if not nbrs:
        return 0.0
    return sum(len(g.adj[v]) for v in nbrs) / len(nbrs)


def select_branch_vertex(g: Graph, st: SearchState, scores: Sequence[float] | None = None) -> int:
    """Candidate to branch on: max neighbor count into V_S, or max
    branch_score while V_S is empty. Ties go to the smallest id (va is kept
    ascending, so the first strict maximum wins)."""
    va = st.va
    if not va:
        raise ValueError("select_branch_vertex needs a nonempty candidate set")
    if st.vs:
        cnt = st.cnt_vs
        best_v = va[0]
        best_c = cnt[best_v]
        for v in va:
            c = cnt[v]
            if c > best_c:
                best_v, best_c = v, c
        return best_v
    best_v = va[0]
    best_s = scores[best_v] if scores is not None else branch_score(g, best_v)
    for v in va:
        s = scores[v] if scores is not None else branch_score(g, v)
        if s > best_s:
            best_v, best_s = v, s
    return best_v


def familiarity_bound(st: SearchState, cfg: SearchConfig, ub: int) -> bool:
    """True = prune: no growth target p in [max(lb, |V_S|+1), ub] survives
    the average-familiarity test

        (1/p)[ sum_deg_in_vs + (p-|V_S|)*max_{v in V_A}|N_v^{V_A}|
               + 2*inter_edge_total ]  <  p - k - 1.

    The bracketed sum upper-bounds the total within-solution degree of any
    completion of V_S to size p, so the test failing at p certifies that no
    size-p completion exists. The subtree below a state contains only
    solutions strictly larger than V_S (children extend it) and no smaller
    than lb, so those are the only sizes worth testing; V_S itself was
    already accepted at node entry if it qualified. An empty p-range keeps
    a state that reached lb (complete, nothing left to grow) and prunes one
    that did not (lb is unreachable). Multiplying by p > 0 turns
    "p infeasible" into positivity of the convex integer quadratic
    g(p) = p^2 - (k+1+m)p + (s*m - A - 2I), so the for-all-p check needs
    only g at the range ends and the clamped integer vertex — exact integer
    arithmetic, no p loop.
    """
    s = len(st.vs)
    lo = max(cfg.lb, s + 1)
    if ub < lo:
        return s < cfg.lb
    va = st.va
    if va:
        adjs = st.g.adj_sets
        va_set = st.va_set
        m = max(len(adjs[v] & va_set) for v in va)
    else:
        m = 0
    b = cfg.k + 1 + m
    c0 = s * m - st.sum_deg_in_vs - 2 * st.inter_edge_total
    half = b // 2
    for p in (lo, ub, min(max(half, lo), ub), min(max(half + 1, lo), ub)):
        if p * p - b * p + c0 <= 0:
            return False
    return True


class _Expired(Exception):
    pass


def _compile_model_predicate(g: Graph, cfg: SearchConfig, model: ConstraintModel):
    """Specialize a learned model's decision for one (graph, config) pair.

    Generates and compiles a dedicated function whose body is the decision
    dot product written out term by term, with the five per-run-constant
    features (lb, ub, k, avg_deg, max_deg) and all weights inlined as exact
    repr literals (repr of a float round-trips exactly). The surviving terms
    keep their original order in a left-associated sum, which matches the
    sequential accumulation of the reference dot product; adding a
    zero-weight term contributes only a signed zero and never changes the
    value of an IEEE-754 running sum that starts at +0.0, so the returned
    predicate decides exactly like
    model_bounds(model, extract_features(g, st, cfg)) while skipping the
    per-call object construction, validation, and term dispatch.
    """
    gs = stats(g)
    const_exprs = {
        0: repr(float(cfg.lb)),
        1: repr(float(g.n)),
        2: repr(float(cfg.k)),
        8: repr(float(gs.avg_degree)),
        9: repr(float(gs.max_degree)),
    }
    state_exprs = {3: "_vs", 4: "_nvm", 5: "_nvs", 6: "_va", 7: "_iet"}

    def factor(idx: int) -> str:
        return const_exprs.get(idx) or state_exprs[idx]

    parts = []
    for w, t in zip(model.weights, model.term_spec.terms):
        w = float(w)
        if w == 0.0:
            continue
        term = factor(t[0]) if len(t) == 1 else f"({factor(t[0])} * {factor(t[1])})"
        parts.append(f"{w!r} * {term}")
    total = " + ".join(parts) if parts else "0.0"
    src = (
        "def predicate(st):\n"
        "    _vs = float(len(st.vs))\n"
        "    _nvm = float(st.n_vs_max)\n"
        "    _nvs = float(st.sum_deg_in_vs)\n"
        "    _va = float(len(st.va))\n"
        "    _iet = float(st.inter_edge_total)\n"
        f"    return ({total}) > {float(model.offset)!r}\n"
    )
    namespace: dict = {}
    exec(compile(src, "<model-predicate>", "exec"), namespace)
    return namespace["predicate"]


def _resolve_bound(g: Graph, cfg: SearchConfig):
    """Normalize cfg.bound to (mode, predicate)."""
    bound = cfg.bound
    if bound == "none" or bound is None:
        return "none", None
    if bound == "familiarity":
        return "familiarity", None
    if isinstance(bound, ConstraintModel):
        if bound.term_spec.n != len(FEATURE_NAMES):
            raise ValueError(
                f"model expects {bound.term_spec.n} features, search states "
                f"provide {len(FEATURE_NAMES)}"
            )
        return "learned", _compile_model_predicate(g, cfg, bound)
    if callable(bound):
        return "learned", bound
    raise ValueError(f"unknown bound strategy {bound!r}")


def search(
    g: Graph,
    cfg: SearchConfig,
    on_solution: Callable[[tuple[int, ...]], None] | None = None,
    on_prune: Callable[[tuple[int, ...], tuple[int, ...]], None] | None = None,
) -> SearchResult:
    """Anytime maximum-k-plex search on g (assumed already preprocessed).

    Returns the best (largest) k-plex of size >= lb found before the time
    limit, the strictly-improving solution history, the recorded trace (when
    cfg.record_trace and a bound strategy is active), and run counters.
    ``on_solution`` observes every qualifying state; ``on_prune`` observes
    every pruned child state as (vs, va) tuples. Both hooks are for analysis
    and default to None.
    """
    mode, predicate = _resolve_bound(g, cfg)
    # With bound "none" there are no bound evaluations, so a requested trace
    # stays empty rather than absent.
    trace: list[Example] | None = [] if cfg.record_trace else None
    st_stats = SearchStats()
    result = SearchResult(best=None, solutions=[], trace=trace, stats=st_stats)
    if g.n == 0:
        return result
    stats(g)  # memoize degree stats before the hot loop
    start = time.perf_counter()
    deadline = start + cfg.time_limit if math.isfinite(cfg.time_limit) else None

    deg = [len(a) for a in g.adj]
    scores = [
        (sum(deg[w] for w in g.adj[v]) / deg[v]) if deg[v] else 0.0
        for v in range(g.n)
    ]

    st = SearchState.root(g)
    adj = g.adj
    adjs = g.adj_sets
    cnt = st.cnt_vs
    k = cfg.k
    lb = cfg.lb
    max_trace = cfg.max_trace
    trace_stride = 1
    best_size = 0
    node_counter = 0

    depth_cap = g.n + 100
    if sys.getrecursionlimit() < depth_cap + 1000:
        sys.setrecursionlimit(depth_cap + 1000)

    def node() -> None:
        nonlocal node_counter, best_size, trace_stride
        node_counter += 1
        if deadline is not None and node_counter % TIME_CHECK_INTERVAL == 0:
            if time.perf_counter() >= deadline:
                raise _Expired
        s = len(st.vs)
        if s >= lb:
            # V_S is a k-plex by construction of the candidate filter.
            if on_solution is not None:
                on_solution(tuple(st.vs))
            if s > best_size:
                best_size = s
                sol = Solution(
                    vertices=tuple(sorted(st.vs)),
                    size=s,
                    found_at=time.perf_counter() - start,
                )
                result.best = sol
                result.solutions.append(sol)
        va = st.va
        while va:
            # -- select u (ties to smallest id; va stays ascending)
            if s:
                u = va[0]
                best_c = cnt[u]
                for v in va:
                    c = cnt[v]
                    if c > best_c:
                        u, best_c = v, c
            else:
                u = va[0]
                best_s = scores[u]
                for v in va:
                    sc = scores[v]
                    if sc > best_s:
                        u, best_s = v, sc
            va.remove(u)

            # -- include branch: child state (V_S + u, filtered V_A)
            saved_sum = st.sum_deg_in_vs
            saved_max = st.n_vs_max
            saved_va = va
            saved_va_set = st.va_set
            saved_inter = st.inter_edge_total
            st.add(u)
            s_new = s + 1
            tight_bar = s_new - k  # members at the k-plex floor need the new vertex adjacent
            tight = [w for w in st.vs if cnt[w] == tight_bar]
            need = s_new + 1 - k
            inter = 0
            if tight:
                common = adjs[tight[0]]
                for w in tight[1:]:
                    common = common & adjs[w]
                child_va = []
                for v in va:
                    if cnt[v] >= need and v in common:
                        child_va.append(v)
                        inter += cnt[v]
            else:
                child_va = []
                for v in va:
                    if cnt[v] >= need:
                        child_va.append(v)
                        inter += cnt[v]
            st.set_candidates(child_va, None, inter)

            # -- bound the child
            if mode == "none":
                pruned = False
            else:
                if PARANOID_CACHE_CHECKS:
                    st.assert_caches()
                if mode == "familiarity":
                    pruned = familiarity_bound(st, cfg, s_new + len(child_va))
                else:
                    pruned = predicate(st)
                st_stats.bound_calls += 1
                if pruned:
                    st_stats.bound_prunes += 1
                    if on_prune is not None:
                        on_prune(tuple(st.vs), tuple(child_va))
                if trace is not None and (st_stats.bound_calls - 1) % trace_stride == 0:
                    trace.append(
                        Example(
                            features=extract_features(g, st, cfg),
                            label=not pruned,
                            meta=ExampleMeta(
                                graph_id=cfg.graph_id,
                                k=k,
                                lb=lb,
                                node_index=st_stats.bound_calls - 1,
                            ),
                        )
                    )
                    if max_trace is not None and len(trace) >= max_trace:
                        del trace[1::2]
                        trace_stride *= 2
            if not pruned:
                node()

            # -- restore and continue with u excluded from this subtree
            st.pop(saved_max)
            st.sum_deg_in_vs = saved_sum
            st.va = saved_va
            st.va_set = saved_va_set
            st.inter_edge_total = saved_inter
            va = saved_va

    try:
        node()
    except _Expired:
        st_stats.expired = True
    st_stats.nodes = node_counter
    st_stats.elapsed = time.perf_counter() - start
    return result
