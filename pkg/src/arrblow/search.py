"""Exhaustive embedding search for tiny instances.

Internal vertices are placed by backtracking; vertices whose only neighbour
is internal (pendant leaves) are assigned by bipartite matching, which is
exact because leaves constrain nothing but their own slot. After every
placement a matching of all pending leaves is attempted, so infeasible
partial maps are cut as early as the leaf counting allows.
"""

from __future__ import annotations

from dataclasses import dataclass
from collections import deque

from .graph_core import Graph


@dataclass
class SearchResult:
    embedding: dict | None
    nodes: int
    exhausted: bool

    @property
    def found(self) -> bool:
        return self.embedding is not None


def _kuhn(left, allowed, used):
    """Match every item of ``left`` to a distinct vertex of allowed[item] avoiding ``used``."""
    owner: dict[int, int] = {}

    def augment(u, seen):
        for v in allowed[u]:
            if v in used or v in seen:
                continue
            seen.add(v)
            if v not in owner or augment(owner[v], seen):
                owner[v] = u
                return True
        return False

    for u in left:
        if not augment(u, set()):
            return None
    return {u: v for v, u in owner.items()}


def _subtree_signatures(h: Graph, parent: dict, children: dict, roots) -> dict:
    sig: dict[int, str] = {}

    def visit(v):
        kids = sorted(visit(c) for c in children.get(v, ()))
        sig[v] = "(" + "".join(kids) + ")"
        return sig[v]

    for r in roots:
        visit(r)
    return sig


def find_embedding(h: Graph, g: Graph, restrictions: dict | None = None,
                   node_limit: int | None = None) -> SearchResult:
    """Search for an injective homomorphism of ``h`` into ``g``.

    ``restrictions`` maps h-vertices to allowed g-vertex sets. Sibling
    subtrees with identical shape are placed in increasing image order when
    ``h`` is a forest and the subtree carries no restriction.
    """
    restrictions = {k: frozenset(v) for k, v in (restrictions or {}).items()}
    everything = frozenset(range(g.n))
    allow = lambda x: restrictions.get(x, everything)  # noqa: E731

    leaves = {}
    for v in range(h.n):
        if h.degree(v) == 1:
            (u,) = h.neighbors(v)
            if h.degree(u) > 1 or (h.degree(u) == 1 and u < v):
                leaves[v] = u
    isolated = [v for v in range(h.n) if h.degree(v) == 0]
    internal = [v for v in range(h.n) if h.degree(v) > 0 and v not in leaves]

    # BFS order over internal vertices, highest degree first per component
    order, parent, children, roots = [], {}, {}, []
    seen = set()
    for start in sorted(internal, key=lambda v: (-h.degree(v), v)):
        if start in seen:
            continue
        roots.append(start)
        seen.add(start)
        q = deque([start])
        while q:
            v = q.popleft()
            order.append(v)
            for w in sorted(h.neighbors(v)):
                if w in leaves:
                    children.setdefault(v, []).append(w)
                    parent[w] = v
                elif w not in seen:
                    seen.add(w)
                    parent[w] = v
                    children.setdefault(v, []).append(w)
                    q.append(w)
    is_forest = h.m == h.n - _components(h)
    twin_prev = {}
    if is_forest:
        sig = _subtree_signatures(h, parent, children, roots)

        def clean(v):
            return v not in restrictions and all(clean(c) for c in children.get(v, ()))

        for v, kids in children.items():
            last = {}
            for c in kids:
                if c in leaves:
                    continue
                key = sig[c]
                if key in last and clean(c) and clean(last[key]):
                    twin_prev[c] = last[key]
                last[key] = c

    phi: dict[int, int] = {}
    used: set[int] = set()
    nodes = 0
    pending_leaves: list[int] = list(isolated)
    leaf_allowed = {v: allow(v) for v in isolated}

    def leaf_match():
        return _kuhn(pending_leaves, leaf_allowed, used)

    def rec(idx):
        nonlocal nodes
        if node_limit is not None and nodes > node_limit:
            raise _Budget
        if idx == len(order):
            m = leaf_match()
            if m is None:
                return None
            out = dict(phi)
            out.update(m)
            return out
        x = order[idx]
        placed_nb = [phi[w] for w in h.neighbors(x) if w in phi]
        if placed_nb:
            cand = set(g.neighbors(placed_nb[0]))
            for v in placed_nb[1:]:
                cand &= g.neighbors(v)
        else:
            cand = set(range(g.n))
        cand &= allow(x)
        cand -= used
        if x in twin_prev:
            lo = phi[twin_prev[x]]
            cand = {v for v in cand if v > lo}
        need = h.degree(x)
        my_leaves = [c for c in children.get(x, ()) if c in leaves]
        for v in sorted(cand):
            if g.degree(v) < need:
                continue
            nodes += 1
            phi[x] = v
            used.add(v)
            for c in my_leaves:
                leaf_allowed[c] = g.neighbors(v) & allow(c)
                pending_leaves.append(c)
            if leaf_match() is not None:
                res = rec(idx + 1)
                if res is not None:
                    return res
            del pending_leaves[len(pending_leaves) - len(my_leaves):]
            used.discard(v)
            del phi[x]
        return None

    try:
        emb = rec(0)
    except _Budget:
        return SearchResult(None, nodes, False)
    return SearchResult(emb, nodes, True)


class _Budget(Exception):
    pass


def _components(h: Graph) -> int:
    seen = [False] * h.n
    count = 0
    for s in range(h.n):
        if seen[s]:
            continue
        count += 1
        seen[s] = True
        stack = [s]
        while stack:
            v = stack.pop()
            for w in h.neighbors(v):
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
    return count
