"""Instance generators: random graphs, blow-up hosts, optimality constructions."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, TooSparse
from .graph_core import Graph, Partition, RPartitionedGraph, disjoint_union
from .regularity import BipartitePairView, super_regular_check


def gnp(n: int, p: float, rng_seed=None) -> Graph:
    """Erdős–Rényi G(n, p), reproducible from the seed."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = np.random.default_rng(rng_seed)
    iu, iv = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    return Graph(n, zip(iu[keep].tolist(), iv[keep].tolist()))


def random_bipartite(nA: int, nB: int, p: float, rng_seed=None) -> Graph:
    """Random bipartite graph with A = 0..nA-1 and B = nA..nA+nB-1."""
    rng = np.random.default_rng(rng_seed)
    mask = rng.random((nA, nB)) < p
    a, b = np.nonzero(mask)
    return Graph(nA + nB, zip(a.tolist(), (b + nA).tolist()))


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class BlowupHostSpec:
    reduced: Graph
    cluster_sizes: tuple[int, ...]
    pair_density: float
    rng_seed: int | None = None


@dataclass(frozen=True)
class BlowupHost(RPartitionedGraph):
    pair_flags: dict = field(default_factory=dict)


def consecutive_partition(sizes) -> Partition:
    classes, start = [], 0
    for s in sizes:
        classes.append(range(start, start + s))
        start += s
    return Partition(classes)


def blowup_host(spec: BlowupHostSpec, check_eps: float | None = 0.1,
                check_trials: int = 200) -> BlowupHost:
    """Independent p-random bipartite graphs on every reduced edge, nothing else.

    Clusters are consecutive index blocks. With ``check_eps`` set, each pair
    gets a super-regularity flag at (check_eps, p/2).
    """
    sizes = tuple(int(s) for s in spec.cluster_sizes)
    if len(sizes) != spec.reduced.n:
        raise DimensionError("one cluster size per reduced vertex required")
    part = consecutive_partition(sizes)
    rng = np.random.default_rng(spec.rng_seed)
    edges = []
    for i, j in spec.reduced.edges():
        ci, cj = part.classes[i], part.classes[j]
        mask = rng.random((len(ci), len(cj))) < spec.pair_density
        a, b = np.nonzero(mask)
        edges.extend(zip((a + ci[0]).tolist(), (b + cj[0]).tolist()) if ci and cj else [])
    g = Graph(sum(sizes), edges)
    flags = {}
    if check_eps is not None:
        for k, (i, j) in enumerate(spec.reduced.edges()):
            view = BipartitePairView(g, part.classes[i], part.classes[j])
            rep = super_regular_check(view, check_eps, spec.pair_density / 2, check_trials,
                                      rng_seed=None if spec.rng_seed is None else spec.rng_seed + k)
            flags[(i, j)] = bool(rep)
    return BlowupHost(g, spec.reduced, part, flags)


def normalize_density(pair: BipartitePairView, delta: float, rng_seed=None) -> tuple[Graph, dict]:
    """Delete uniformly random crossing edges until exactly ⌊δ|A||B|⌋ remain.

    Returns the new host graph and a report with the resulting density and
    whether every vertex still has ≥ ½δ of the other side as neighbours.
    """
    mat = pair.matrix()
    nA, nB = mat.shape
    target = math.floor(delta * nA * nB + 1e-9)
    have = int(mat.sum())
    if have < target:
        raise TooSparse(f"pair has {have} edges, needs {target}")
    rng = np.random.default_rng(rng_seed)
    ai, bi = np.nonzero(mat)
    drop = rng.choice(have, have - target, replace=False)
    A, B = np.asarray(pair.A), np.asarray(pair.B)
    removed = set(zip(A[ai[drop]].tolist(), B[bi[drop]].tolist()))
    removed |= {(v, u) for u, v in removed}
    g = Graph(pair.host.n, (e for e in pair.host.edges() if e not in removed))
    new = BipartitePairView(g, pair.A, pair.B).matrix()
    flag = bool(new.sum(axis=1).min() >= 0.5 * delta * nB and new.sum(axis=0).min() >= 0.5 * delta * nA)
    return g, {"density": target / (nA * nB), "edges": target, "min_degree_flag": flag}


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class OptimalityInstance:
    host: Graph
    tree: Graph
    W: tuple[tuple[int, ...], ...]
    U: tuple[tuple[int, ...], ...]
    n: int
    k: int
    roots: tuple[int, int]
    restricted_star: Graph | None = None
    star_restrictions: dict | None = None

    @property
    def V1(self) -> range:
        return range(self.n)

    @property
    def V2(self) -> range:
        return range(self.n, 2 * self.n)


def double_rooted_tree(n: int) -> tuple[Graph, tuple[int, int]]:
    """Two copies of T' (root with s-1 children, s leaves per child, s = ⌊√n⌋) joined at the roots."""
    s = math.isqrt(n)
    if s < 1:
        raise DimensionError("n must be positive")
    edges = []
    nxt = 0

    def half():
        nonlocal nxt
        root = nxt
        nxt += 1
        for _ in range(s - 1):
            child = nxt
            nxt += 1
            edges.append((root, child))
            for _ in range(s):
                edges.append((child, nxt))
                nxt += 1
        return root

    x1 = half()
    x2 = half()
    edges.append((x1, x2))
    return Graph(nxt, edges), (x1, x2)


def optimality_gk(n: int, k: int, rng_seed=None, with_restricted: bool = True) -> OptimalityInstance:
    """Bipartite G_k on V1 = 0..n-1, V2 = n..2n-1 plus the double-rooted tree.

    V1 is cut into k consecutive blocks W_i; for odd i a random half U_i of V2
    is drawn and U_{i+1} is its complement; W_i is joined completely to U_i.
    The restricted variant is the star K_{1,k} whose i-th leaf may only land
    in V2 ∖ U_i.
    """
    if k <= 0 or k % 2 or n % k or n % 2:
        raise DimensionError(f"need even k dividing n and even n (got n={n}, k={k})")
    rng = np.random.default_rng(rng_seed)
    size = n // k
    W = tuple(tuple(range(i * size, (i + 1) * size)) for i in range(k))
    V2 = np.arange(n, 2 * n)
    U = []
    for _ in range(k // 2):
        pick = np.zeros(n, bool)
        pick[rng.choice(n, n // 2, replace=False)] = True
        U.append(tuple(V2[pick].tolist()))
        U.append(tuple(V2[~pick].tolist()))
    edges = [(w, u) for Wi, Ui in zip(W, U) for w in Wi for u in Ui]
    host = Graph(2 * n, edges)
    tree, roots = double_rooted_tree(n)
    star = restr = None
    if with_restricted:
        star = Graph(k + 1, [(0, i + 1) for i in range(k)])
        v2 = set(V2.tolist())
        restr = {i + 1: frozenset(v2 - set(U[i])) for i in range(k)}
    return OptimalityInstance(host, tree, W, tuple(U), n, k, roots, star, restr)


def bfs_distance(g: Graph, sources, targets) -> float:
    """Graph distance between two vertex sets (inf if disconnected)."""
    targets = set(targets)
    frontier = set(sources)
    if frontier & targets:
        return 0
    seen = set(frontier)
    d = 0
    while frontier:
        d += 1
        nxt = set()
        for v in frontier:
            nxt |= g.neighbors(v)
        nxt -= seen
        if nxt & targets:
            return d
        seen |= nxt
        frontier = nxt
    return math.inf


# ---------------------------------------------------------------------------
def f_factor_target(f: Graph, copies: int) -> Graph:
    return disjoint_union([f] * copies)


def triangle_factor_instance(copies: int) -> tuple[Graph, Partition]:
    """``copies`` disjoint triangles; vertex 3t+j lies in class j."""
    h = f_factor_target(Graph(3, [(0, 1), (1, 2), (0, 2)]), copies)
    return h, Partition([range(j, 3 * copies, 3) for j in range(3)])


def random_forest(n: int, max_degree: int, components: int, rng_seed=None) -> Graph:
    """Random forest by attaching each vertex to an earlier one of spare degree."""
    rng = np.random.default_rng(rng_seed)
    perm = rng.permutation(n)
    deg = [0] * n
    roots = set(perm[:max(1, components)].tolist())
    edges = []
    placed: list[int] = []
    for v in perm.tolist():
        if v not in roots:
            open_ = [u for u in placed if deg[u] < max_degree]
            if open_:
                u = open_[rng.integers(len(open_))]
                edges.append((u, v))
                deg[u] += 1
                deg[v] += 1
        placed.append(v)
    return Graph(n, edges)


def random_bounded_degree(n: int, max_degree: int, avg_degree: float, rng_seed=None) -> Graph:
    """Random graph with Δ ≤ max_degree: random edges in random order, skipping saturated ends."""
    rng = np.random.default_rng(rng_seed)
    target = int(avg_degree * n / 2)
    deg = [0] * n
    edges = set()
    tries = 0
    while len(edges) < target and tries < 50 * target + 100:
        tries += 1
        u, v = rng.integers(n, size=2).tolist()
        if u == v or deg[u] >= max_degree or deg[v] >= max_degree:
            continue
        e = (min(u, v), max(u, v))
        if e in edges:
            continue
        edges.add(e)
        deg[u] += 1
        deg[v] += 1
    return Graph(n, edges)


def path_power(n: int, k: int) -> Graph:
    return Graph(n, ((u, v) for u in range(n) for v in range(u + 1, min(n, u + k + 1))))


# ---------------------------------------------------------------------------
@dataclass
class DominationResult:
    lower: int
    upper: int
    exact: bool
    printed_bound: float | None = None
    certified_up_to: int = 0
    greedy_set: list[int] = field(default_factory=list)

    def __iter__(self):
        yield self.lower
        yield self.upper


def _closed_masks(g: Graph) -> list[int]:
    return [(1 << v) | sum(1 << w for w in g.neighbors(v)) for v in range(g.n)]


def greedy_dominating_set(g: Graph) -> list[int]:
    """Max-coverage greedy with lowest-index tie-break."""
    masks = _closed_masks(g)
    full = (1 << g.n) - 1
    covered, chosen = 0, []
    while covered != full:
        best, gain = -1, -1
        for v in range(g.n):
            c = bin(masks[v] & ~covered).count("1")
            if c > gain:
                best, gain = v, c
        chosen.append(best)
        covered |= masks[best]
    return chosen


def _dominates_with(masks, base, size, full, pool) -> bool:
    for combo in itertools.combinations(pool, size):
        acc = base
        for v in combo:
            acc |= masks[v]
        if acc == full:
            return True
    return False


def domination_number(g: Graph, exact_limit: int = 24, eps: float = 0.1, p: float | None = None,
                      budget: int = 2_000_000) -> DominationResult:
    """Domination number bounds.

    Exact by increasing-size subset search when n ≤ exact_limit. Otherwise the
    greedy set gives the upper bound and all subsets up to size
    ⌈(1−ε)p log n⌉ (within ``budget`` combinations) are ruled out for the
    lower bound. ``printed_bound`` is (1−ε)p log n when p is given.
    """
    n = g.n
    if n == 0:
        return DominationResult(0, 0, True)
    masks = _closed_masks(g)
    full = (1 << n) - 1
    greedy = greedy_dominating_set(g)
    upper = len(greedy)
    printed = (1 - eps) * p * math.log(n) if p is not None else None
    forced = [v for v in range(n) if g.degree(v) == 0]
    base = 0
    for v in forced:
        base |= masks[v]
    pool = [v for v in range(n) if g.degree(v) > 0]
    if n <= exact_limit:
        for size in range(0, upper + 1 - len(forced)):
            if _dominates_with(masks, base, size, full, pool):
                exact = size + len(forced)
                return DominationResult(exact, exact, True, printed, exact - 1, greedy)
        return DominationResult(upper, upper, True, printed, upper - 1, greedy)
    cap = math.ceil(printed) if printed is not None else upper - 1
    certified, spent = len(forced) - 1, 0
    lower = max(len(forced), math.ceil(n / (g.max_degree() + 1)))
    for size in range(0, min(cap, upper - 1) - len(forced) + 1):
        spent += math.comb(len(pool), size)
        if spent > budget:
            break
        if _dominates_with(masks, base, size, full, pool):
            break
        certified = size + len(forced)
    lower = max(lower, certified + 1)
    return DominationResult(min(lower, upper), upper, lower >= upper, printed, certified, greedy)
