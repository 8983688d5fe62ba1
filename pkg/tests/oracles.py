"""Independent slow-route references used to cross-check the package.

Everything here recomputes from first principles (bitmask enumeration,
literal per-target loops, direct adjacency recounts) and deliberately shares
no code with the implementations under test.
"""

from __future__ import annotations

import numpy as np

from plexbound.graph import Graph


def adjacency_masks(g: Graph) -> list[int]:
    """Per-vertex neighborhood as a python-int bitmask."""
    masks = [0] * g.n
    for u in range(g.n):
        m = 0
        for v in g.adj[u]:
            m |= 1 << v
        masks[u] = m
    return masks


def mask_vertices(mask: int) -> tuple[int, ...]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return tuple(out)


def mask_is_kplex(masks: list[int], subset: int, k: int) -> bool:
    """Every member has >= size-k neighbors inside the subset."""
    size = subset.bit_count()
    need = size - k
    if need <= 0:
        return True
    m = subset
    while m:
        v = (m & -m).bit_length() - 1
        if (masks[v] & subset).bit_count() < need:
            return False
        m &= m - 1
    return True


def enumerate_kplexes(g: Graph, k: int, min_size: int) -> tuple[np.ndarray, np.ndarray]:
    """All vertex subsets (as uint32 masks) that are k-plexes of size >= min_size.

    Vectorized over all 2^n subsets; intended for n <= 20.
    """
    n = g.n
    if n > 20:
        raise ValueError(f"exhaustive enumeration capped at 20 vertices, got {n}")
    masks = adjacency_masks(g)
    subs = np.arange(1 << n, dtype=np.uint32)
    sizes = np.bitwise_count(subs).astype(np.int64)
    ok = np.ones(1 << n, dtype=bool)
    for v in range(n):
        member = (subs >> np.uint32(v)) & np.uint32(1)
        deg_in = np.bitwise_count(subs & np.uint32(masks[v])).astype(np.int64)
        ok &= (member == 0) | (deg_in >= sizes - k)
    sel = ok & (sizes >= min_size)
    return subs[sel], sizes[sel]


def max_kplex_size(g: Graph, k: int, lb: int) -> int:
    """Size of a maximum k-plex of size >= lb; 0 when none exists."""
    _, sizes = enumerate_kplexes(g, k, lb)
    return int(sizes.max()) if len(sizes) else 0


def maximum_kplex_masks(g: Graph, k: int, lb: int) -> list[int]:
    """Every maximum k-plex (size >= lb) as a python-int mask."""
    subs, sizes = enumerate_kplexes(g, k, lb)
    if not len(sizes):
        return []
    mx = sizes.max()
    return [int(s) for s in subs[sizes == mx]]


def kplex_masks_at_least(g: Graph, k: int, lb: int) -> set[int]:
    """Every k-plex of size >= lb as a set of python-int masks."""
    subs, _ = enumerate_kplexes(g, k, lb)
    return {int(s) for s in subs}


def recount_state(g: Graph, vs, va) -> dict:
    """The search state's cached aggregates, recomputed from adjacency."""
    vs_set = set(vs)
    va_set = set(va)
    deg_in = {v: len(g.adj_sets[v] & vs_set) for v in vs}
    return {
        "sum_deg_in_vs": sum(deg_in.values()),
        "n_vs_max": max(deg_in.values(), default=0),
        "inter_edge_total": sum(len(g.adj_sets[v] & va_set) for v in vs),
    }


def familiarity_prune_loop(g: Graph, vs, va, k: int, lb: int) -> bool:
    """Literal per-growth-target form of the average-familiarity test.

    A target size p in [max(lb, |V_S|+1), |V_S|+|V_A|] stays plausible when

        A + 2*I + (p - |V_S|) * m  >=  p * (p - k - 1),

    with A the total internal degree of V_S, I the V_S-V_A edge count and m
    the largest candidate-to-candidate neighbor count. Prune when no target
    survives; an empty target range keeps exactly the states that already
    reached lb. Exact integer arithmetic throughout.
    """
    s = len(vs)
    ub = s + len(va)
    lo = max(lb, s + 1)
    if ub < lo:
        return s < lb
    agg = recount_state(g, vs, va)
    a_tot = agg["sum_deg_in_vs"]
    i_tot = agg["inter_edge_total"]
    va_set = set(va)
    m = max((len(g.adj_sets[v] & va_set) for v in va), default=0)
    for p in range(lo, ub + 1):
        if a_tot + 2 * i_tot + (p - s) * m >= p * (p - k - 1):
            return False
    return True


def check_solution_reachable(masks_vs: int, masks_union: int, target: int) -> bool:
    """True iff target extends vs within vs|va: vs <= target <= vs|va."""
    return (masks_vs & ~target) == 0 and (target & ~masks_union) == 0
