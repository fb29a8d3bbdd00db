"""Minimum set cover by depth-first branch and bound on bitmask sets.

Two lower bounds prune the search.  At every node, a greedy packing of
elements no two of which share a covering set (each needs its own set).  At
the root, the LP relaxation solved by HiGHS; its dual is rescaled to be
feasible so the bound holds regardless of solver tolerances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix

from .errors import UsageError


@dataclass(frozen=True)
class CoverResult:
    size: int
    chosen: tuple[int, ...]
    exact: bool
    greedy_size: int
    nodes: int
    lower_bound: int


def _lowbit(x: int) -> int:
    return (x & -x).bit_length() - 1


def greedy_cover(universe: int, sets: list[int]) -> list[int]:
    chosen, left = [], universe
    while left:
        best, gain = -1, 0
        for i, s in enumerate(sets):
            g = (s & left).bit_count()
            if g > gain:
                best, gain = i, g
        if best < 0:
            raise UsageError("sets do not cover the universe")
        chosen.append(best)
        left &= ~sets[best]
    return chosen


def _prune_dominated(sets: list[int]) -> list[int]:
    """Indices of sets not strictly contained in (or duplicating) another set."""
    order = sorted(range(len(sets)), key=lambda i: (-sets[i].bit_count(), i))
    kept: list[int] = []
    for i in order:
        s = sets[i]
        if s == 0:
            continue
        if any(s | sets[k] == sets[k] for k in kept):
            continue
        kept.append(i)
    return sorted(kept)


def lp_lower_bound(nbits: int, masks: list[int], universe: int) -> int:
    """Certified ``ceil`` of the LP relaxation value via a rescaled dual solution."""
    rows, cols = [], []
    for j, m in enumerate(masks):
        x = m
        while x:
            rows.append(_lowbit(x))
            cols.append(j)
            x &= x - 1
    elems = [e for e in range(nbits) if universe >> e & 1]
    if not elems:
        return 0
    A = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(nbits, len(masks)))[elems]
    res = linprog(np.ones(len(masks)), A_ub=-A, b_ub=-np.ones(len(elems)), bounds=(0, 1), method="highs")
    if res.status != 0:
        return 0
    y = np.maximum(-res.ineqlin.marginals, 0.0)
    load = float((A.T @ y).max())
    if load <= 0:
        return 0
    return max(0, math.ceil(math.fsum(y) / load - 1e-9))


def min_set_cover(universe: int, sets: list[int], node_limit: int = 2_000_000) -> CoverResult:
    """Exact minimum cover of ``universe`` (a bitmask) by ``sets``.

    If ``node_limit`` search nodes are exhausted the best cover found so far
    is returned with ``exact=False``.
    """
    greedy = greedy_cover(universe, sets)
    keep = _prune_dominated(sets)
    masks = [sets[i] & universe for i in keep]
    nbits = universe.bit_length()
    cov: list[list[int]] = [[] for _ in range(nbits)]
    for j, m in enumerate(masks):
        x = m
        while x:
            e = _lowbit(x)
            cov[e].append(j)
            x &= x - 1
    reach = [0] * nbits
    for e in range(nbits):
        r = 0
        for j in cov[e]:
            r |= masks[j]
        reach[e] = r

    def packing(U: int) -> int:
        lb = 0
        while U:
            lb += 1
            U &= ~reach[_lowbit(U)]
        return lb

    best_size = len(greedy)
    best = tuple(greedy)
    root_lb = max(packing(universe), lp_lower_bound(nbits, masks, universe))
    nodes = 0
    exact = True
    if root_lb >= best_size:
        return CoverResult(best_size, best, True, len(greedy), 0, root_lb)
    # iterative DFS: frames of (uncovered, chosen, candidate list, position)
    stack = [(universe, (), None, 0)]
    while stack:
        U, chosen, cands, pos = stack.pop()
        if cands is None:
            nodes += 1
            if nodes > node_limit:
                exact = False
                break
            if U == 0:
                if len(chosen) < best_size:
                    best_size, best = len(chosen), tuple(keep[j] for j in chosen)
                    if best_size <= root_lb:
                        break
                continue
            if len(chosen) + packing(U) >= best_size:
                continue
            e = _lowbit(U)
            opts = sorted(cov[e], key=lambda j: -(masks[j] & U).bit_count())
            eff = []
            for j in opts:
                mj = masks[j] & U
                if not any(mj | (masks[k] & U) == (masks[k] & U) for k in eff):
                    eff.append(j)
            cands = eff
            pos = 0
        if pos < len(cands):
            j = cands[pos]
            stack.append((U, chosen, cands, pos + 1))
            stack.append((U & ~masks[j], chosen + (j,), None, 0))
    return CoverResult(best_size, best, exact, len(greedy), nodes, root_lb)
