"""Second stage: auxiliary candidate graphs, their monitoring, and the perfect-matching completion."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, asdict

import networkx as nx
import numpy as np

from .errors import MatchEdgeInvalid, StabilityViolation, Unbalanced
from .graph_core import Graph
from .regularity import (BipartitePairView, TestReport, WeightedPair, sample_regularity_probe,
                         weighted_degcodeg_test)
from .rga import EmbeddingState


@dataclass
class AuxiliaryGraph:
    """Bipartite graph x ~ v iff v ∈ C_{t,x}; rows follow ``left``, columns ``right``."""

    i: int
    t: int
    left: list[int]
    right: list[int]
    matrix: np.ndarray
    weights: np.ndarray
    pi: np.ndarray

    def degrees(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def weighted_degrees(self) -> np.ndarray:
        return self.weights * self.degrees()

    def neighbours(self, row: int) -> list[int]:
        return [self.right[k] for k in np.flatnonzero(self.matrix[row])]

    def as_pair(self) -> BipartitePairView:
        nl, nr = len(self.left), len(self.right)
        big = np.zeros((nl + nr, nl + nr), dtype=bool)
        big[:nl, nl:] = self.matrix
        big[nl:, :nl] = self.matrix.T
        return BipartitePairView(Graph.from_matrix(big), range(nl), range(nl, nl + nr))

    def to_dict(self) -> dict:
        return {"class": self.i, "t": self.t, "left": self.left, "right": self.right,
                "edges": [[self.left[a], self.right[b]] for a, b in zip(*np.nonzero(self.matrix))],
                "weights": self.weights.tolist()}


def build_auxiliary(state: EmbeddingState, i: int, t: int | None = None) -> AuxiliaryGraph:
    """F_i(t), recomputed from the embedding times so any t ≤ clock+1 works.

    ``t`` is the step about to be taken: C_{t,x} reflects the predecessors
    embedded at steps 1..t-1. ``None`` means the current clock.
    """
    if t is None:
        t = state.t + 1
    if t > state.t + 1 or t < 1:
        raise ValueError(f"t = {t} outside [1, {state.t + 1}]")
    inst = state.instance
    adj = inst.g.adjacency_matrix()
    Vi = state.V[i]
    X = state.X[i]
    mat = np.ones((len(X), len(Vi)), dtype=bool)
    pi = np.zeros(len(X), dtype=np.int64)
    for row, x in enumerate(X):
        if x in state.restricted:
            mat[row] = state.restricted[x]
        for y in state.pred[x]:
            ty = state.time_of.get(y)
            if ty is not None and ty < t:
                mat[row] &= adj[state.phi[y], Vi]
                pi[row] += 1
    led = state.ledger
    weights = led.f("delta") ** (led.a - pi).astype(float)
    return AuxiliaryGraph(i, t, list(X), list(Vi), mat, np.minimum(weights, 1.0), pi)


@dataclass
class MonitorReport:
    passed: bool
    degcodeg: dict
    probe: dict
    thresholds_source: str
    envelope_violations: int

    def to_dict(self) -> dict:
        return asdict(self)


def practical_thresholds(eps_prime: float) -> dict:
    return {"deg_dev": eps_prime, "deg_count": eps_prime, "codeg_dev": eps_prime,
            "codeg_count": eps_prime}


def monitor_Ri(aux: AuxiliaryGraph, eps_prime: float, thresholds: dict | None = None,
               trials: int = 300, rng_seed=0, delta: float | None = None, eps: float | None = None,
               a: int | None = None) -> MonitorReport:
    """Weighted-regularity diagnostic for F_i(t).

    The degree/co-degree test runs verbatim when the size floor allows it and
    otherwise with ``thresholds`` (default ε′ for all four cut-offs). A
    sample probe at ε′ on the weighted density backs it up. With δ, ε and a
    given, the weighted-degree envelope (1 ± √ε/3)δ^a·n is counted too.
    """
    n = len(aux.left)
    if n == 0 or len(aux.right) == 0:
        return MonitorReport(True, {}, {}, "empty", 0)
    pair = aux.as_pair()
    wp = WeightedPair(pair, aux.weights)
    source = "override"
    rep: TestReport | None = None
    if len(aux.left) == len(aux.right):
        if thresholds is None and n >= eps_prime ** -6:
            rep = weighted_degcodeg_test(wp, eps_prime)
            source = "verbatim"
        else:
            rep = weighted_degcodeg_test(wp, eps_prime, thresholds or practical_thresholds(eps_prime))
    probe = sample_regularity_probe(pair, eps_prime, trials, rng_seed, omega=aux.weights)
    env = 0
    if delta is not None and eps is not None and a is not None:
        target = delta ** a * len(aux.right)
        wd = aux.weighted_degrees()
        env = int(np.sum(np.abs(wd - target) > math.sqrt(eps) / 3 * target + 1e-9))
    ok = probe.passed and (rep is None or rep.passed)
    return MonitorReport(bool(ok), rep.to_dict() if rep else {}, probe.to_dict(), source, env)


def leftover_sets(state: EmbeddingState, i: int) -> tuple[list[int], list[int]]:
    """(L_i, V_i^Free): unembedded target vertices and unused host vertices of class i."""
    return state.unembedded(i), state.free_vertices(i)


def restrict_to_free(aux: AuxiliaryGraph, state: EmbeddingState, spanning: bool = True) -> AuxiliaryGraph:
    """F_i* = F_i(T)[L_i ∪ V_i^Free(T)]."""
    i = aux.i
    rows = [k for k, x in enumerate(aux.left) if not state.embedded[x]]
    cols = np.flatnonzero(state.free[i])
    if spanning and len(rows) != len(cols):
        raise Unbalanced(f"class {i}: {len(rows)} leftover target vertices vs {len(cols)} free host vertices")
    mat = aux.matrix[np.ix_(rows, cols)] if rows and len(cols) else np.zeros((len(rows), len(cols)), bool)
    return AuxiliaryGraph(i, aux.t, [aux.left[k] for k in rows], [aux.right[k] for k in cols], mat,
                          aux.weights[rows], aux.pi[rows])


@dataclass
class MatchingResult:
    matching: list[tuple[int, int]]
    perfect: bool
    hall_violator: list[int] | None = None
    violator_neighbourhood: list[int] | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def perfect_matching(aux: AuxiliaryGraph) -> MatchingResult:
    """Maximum matching by Hopcroft–Karp; a Hall violator certifies imperfection.

    The violator is the set of left vertices reachable by alternating paths
    from an unmatched left vertex; its neighbourhood is exactly the reachable
    right side, which is one smaller per unmatched vertex reached.
    """
    nl, nr = len(aux.left), len(aux.right)
    if nl == 0:
        return MatchingResult([], nr == 0)
    b = nx.Graph()
    L = [("L", k) for k in range(nl)]
    b.add_nodes_from(L)
    b.add_nodes_from(("R", k) for k in range(nr))
    rows, cols = np.nonzero(aux.matrix)
    b.add_edges_from((("L", int(r)), ("R", int(c))) for r, c in zip(rows, cols))
    mate = nx.bipartite.hopcroft_karp_matching(b, top_nodes=L)
    pairs = [(aux.left[k], aux.right[mate[("L", k)][1]]) for k in range(nl) if ("L", k) in mate]
    if len(pairs) == nl and nl == nr:
        return MatchingResult(pairs, True)
    free_left = [k for k in range(nl) if ("L", k) not in mate]
    if not free_left:
        return MatchingResult(pairs, False)  # left side saturated but right side larger
    seen_l, seen_r = set(free_left), set()
    q = deque(free_left)
    while q:
        k = q.popleft()
        for c in np.flatnonzero(aux.matrix[k]):
            c = int(c)
            if c in seen_r:
                continue
            seen_r.add(c)
            partner = mate.get(("R", c))
            if partner is not None and partner[1] not in seen_l:
                seen_l.add(partner[1])
                q.append(partner[1])
    S = sorted(aux.left[k] for k in seen_l)
    N = sorted(aux.right[c] for c in seen_r)
    assert len(N) < len(S)
    return MatchingResult(pairs, False, S, N)


def hall_violator_is_genuine(aux: AuxiliaryGraph, S) -> bool:
    rows = [aux.left.index(x) for x in S]
    nbr = np.any(aux.matrix[rows], axis=0) if rows else np.zeros(len(aux.right), bool)
    return int(nbr.sum()) < len(S)


@dataclass
class Embedding:
    phi: list[int]

    def to_json_obj(self) -> list[int]:
        return list(self.phi)


def complete_embedding(state: EmbeddingState, instance, matchings: dict[int, MatchingResult]) -> Embedding:
    """Extend φ by the per-class matchings into a bijection V(H) → V(G)."""
    h = instance.h
    leftover = [x for x in range(h.n) if not state.embedded[x]]
    lset = set(leftover)
    for x in leftover:
        for y in h.neighbors(x):
            if y in lset:
                raise StabilityViolation(f"leftover vertices {x} and {y} are adjacent")
    phi = dict(state.phi)
    for i, res in matchings.items():
        col = {v: k for k, v in enumerate(state.V[i])}
        for x, v in res.matching:
            if state.embedded[x] or not state.C(x)[col[v]] or not state.free[i][col[v]]:
                raise MatchEdgeInvalid(f"matched pair ({x}, {v}) is not a free candidate")
            phi[x] = v
    missing = [x for x in leftover if x not in phi]
    if missing:
        raise MatchEdgeInvalid(f"{len(missing)} leftover vertices were not matched")
    return Embedding([phi[x] for x in range(h.n)])


@dataclass
class VerifyReport:
    ok: bool
    violations: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"pass": self.ok, "violations": self.violations}


def verify_embedding(h: Graph, g: Graph, phi, h_part=None, g_part=None, restrictions=None,
                     partial: bool = False) -> VerifyReport:
    """Independent check of injectivity, class placement, edges and image restrictions.

    ``partial`` accepts unmapped target vertices (almost-spanning runs).
    """
    if isinstance(phi, Embedding):
        phi = phi.phi
    m = dict(enumerate(phi)) if not isinstance(phi, dict) else dict(phi)
    out = []
    missing = [x for x in range(h.n) if x not in m]
    if missing and not partial:
        out.append(f"{len(missing)} target vertices unmapped")
    for x, v in m.items():
        if not 0 <= v < g.n:
            out.append(f"vertex {x} mapped outside the host")
    images = list(m.values())
    if len(set(images)) != len(images):
        out.append("map is not injective")
    for x, y in h.edges():
        if x in m and y in m and not g.has_edge(m[x], m[y]):
            out.append(f"edge {x}-{y} not preserved")
    if h_part is not None and g_part is not None:
        g_owner = g_part.class_of(g.n)
        for i, Xi in enumerate(h_part.classes):
            for x in Xi:
                if x in m and 0 <= m[x] < g.n and g_owner[m[x]] != i:
                    out.append(f"vertex {x} left its class {i}")
    if restrictions is not None:
        for x in restrictions.assignment:
            allowed = restrictions.allowed(x)
            if x in m and m[x] not in allowed:
                out.append(f"vertex {x} violates its image restriction")
    return VerifyReport(not out, out)
