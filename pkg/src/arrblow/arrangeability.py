"""Arrangeable orderings: measuring, verifying, and the stable-ending reordering."""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

from .errors import ConstructionFailed, DimensionError
from .graph_core import Graph, RPartitionedGraph


def _positions(n: int, order) -> list[int]:
    order = list(order)
    if sorted(order) != list(range(n)):
        raise DimensionError("order is not a permutation of the vertex set")
    pos = [0] * n
    for i, v in enumerate(order):
        pos[v] = i
    return pos


def arrangeability_profile(h: Graph, order) -> list[int]:
    """|N(N(x_i, Right_i), Left_i)| for every position i."""
    pos = _positions(h.n, order)
    # neighbours of each vertex sorted by position, so the "left of i" part is a prefix
    by_pos = [sorted(h.neighbors(v), key=pos.__getitem__) for v in range(h.n)]
    profile = []
    for i, x in enumerate(order):
        reach: set[int] = set()
        for y in h.neighbors(x):
            if pos[y] <= i:
                continue
            for w in by_pos[y]:
                if pos[w] > i:
                    break
                reach.add(w)
        profile.append(len(reach))
    return profile


def arrangeability_of_ordering(h: Graph, order) -> int:
    """Smallest a for which ``order`` witnesses a-arrangeability of ``h``."""
    return max(arrangeability_profile(h, order), default=0)


def verify_arrangeable(h: Graph, order, a: int) -> bool:
    return arrangeability_of_ordering(h, order) <= a


@dataclass(frozen=True)
class ArrangeableOrdering:
    order: tuple[int, ...]
    a: int
    left_neighbors: tuple[tuple[int, ...], ...] = field(repr=False)
    right_neighbors: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def position(self) -> list[int]:
        pos = [0] * len(self.order)
        for i, v in enumerate(self.order):
            pos[v] = i
        return pos

    def to_json(self) -> str:
        return json.dumps(list(self.order))


def make_ordering(h: Graph, order) -> ArrangeableOrdering:
    """Wrap a permutation with its measured arrangeability and N^-/N^+ lists."""
    order = tuple(int(v) for v in order)
    pos = _positions(h.n, order)
    left = tuple(tuple(sorted((y for y in h.neighbors(x) if pos[y] < pos[x]), key=pos.__getitem__))
                 for x in range(h.n))
    right = tuple(tuple(sorted((y for y in h.neighbors(x) if pos[y] > pos[x]), key=pos.__getitem__))
                  for x in range(h.n))
    return ArrangeableOrdering(order, arrangeability_of_ordering(h, order), left, right)


def smallest_last_order(h: Graph) -> list[int]:
    """Degeneracy ordering: repeatedly delete a minimum-degree vertex, then reverse.

    Ties go to the vertex of smaller original degree, then smaller index, so
    high-degree hubs (star centres) are deleted last and emitted first.
    """
    deg = h.degrees()
    orig = list(deg)
    alive = [True] * h.n
    heap = [(deg[v], orig[v], v) for v in range(h.n)]
    heapq.heapify(heap)
    removed = []
    while heap:
        d, _, v = heapq.heappop(heap)
        if not alive[v] or d != deg[v]:
            continue
        alive[v] = False
        removed.append(v)
        for w in h.neighbors(v):
            if alive[w]:
                deg[w] -= 1
                heapq.heappush(heap, (deg[w], orig[w], w))
    removed.reverse()
    return removed


def heuristic_ordering(h: Graph) -> ArrangeableOrdering:
    return make_ordering(h, smallest_last_order(h))


@dataclass(frozen=True)
class StableEnding:
    ordering: ArrangeableOrdering
    mu: float
    W: tuple[int, ...]
    bound: float

    def to_json(self) -> str:
        return json.dumps({"order": list(self.ordering.order), "a": self.ordering.a,
                           "mu": self.mu, "W": list(self.W)})


def lemma_mu(a: int, kappa: float, delta_R: int) -> float:
    """μ = 1/(10a(κΔ_R)²); an edgeless target (a = 0) is treated as a = 1."""
    return 1.0 / (10 * max(a, 1) * (kappa * delta_R) ** 2)


def stable_ending_reorder(h: RPartitionedGraph, order: ArrangeableOrdering, kappa: float,
                          delta_R: int, mu: float | None = None) -> StableEnding:
    """Greedy stable-ending construction.

    ``mu`` defaults to the lemma's value. A larger explicit ``mu`` keeps the
    arrangeability guarantee (it only depends on W being stable and
    low-degree) but may run out of candidates, which raises
    ConstructionFailed.
    """
    g = h.graph
    classes = h.partition.classes
    owner = h.partition.class_of(g.n)
    a = order.a
    a_eff = max(a, 1)
    if mu is None:
        mu = lemma_mu(a, kappa, delta_R)
    bound = 5 * a * a * kappa * delta_R
    pos = order.position
    deg_cap = 4 * a_eff * kappa * delta_R

    # W'_i as position-sorted lists; picks come from the back (latest vertex)
    pool = [sorted((v for v in cls if g.degree(v) <= deg_cap), key=pos.__getitem__)
            for cls in classes]
    alive = [True] * g.n
    sizes = [len(c) for c in classes]
    target = [min(math.ceil(mu * s - 1e-12), s) for s in sizes]
    count = [0] * len(classes)
    W: list[int] = []

    while True:
        pending = [i for i in range(len(classes)) if count[i] < target[i]]
        if not pending:
            break
        i = min(pending, key=lambda j: (count[j] / sizes[j], j))
        lst = pool[i]
        while lst and not alive[lst[-1]]:
            lst.pop()
        if not lst:
            raise ConstructionFailed(
                f"W'_{i} emptied with {count[i]} of {target[i]} vertices chosen")
        v = lst.pop()
        alive[v] = False
        W.append(v)
        count[owner[v]] += 1
        for w in g.neighbors(v):
            alive[w] = False

    in_w = set(W)
    new_order = [v for v in order.order if v not in in_w] + sorted(W, key=pos.__getitem__)
    result = make_ordering(g, new_order)
    if result.a > bound:
        raise ConstructionFailed(f"reordered arrangeability {result.a} exceeds {bound}")
    return StableEnding(result, mu, tuple(sorted(W, key=pos.__getitem__)), bound)
