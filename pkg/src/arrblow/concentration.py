"""Monte-Carlo validators for Chernoff-type bounds and an equitable colouring utility."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Callable, Sequence

import networkx as nx
import numpy as np

from .arrangeability import smallest_last_order
from .errors import ConstructionFailed
from .graph_core import Graph, Partition

Z_SLACK = 3.0  # one-sided Wilson interval width, in standard errors


def wilson_interval(successes: int, trials: int, z: float = Z_SLACK) -> tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    ph = successes / trials
    denom = 1 + z * z / trials
    centre = (ph + z * z / (2 * trials)) / denom
    half = z * math.sqrt(ph * (1 - ph) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class BoundCheck:
    bound: float
    estimate: float
    ci: tuple[float, float]
    trials: int
    passed: bool
    kind: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        d["ci"] = list(self.ci)
        return d


def _upper_bound_check(hits: int, trials: int, bound: float, kind: str) -> BoundCheck:
    """P ≤ bound is refuted only if the one-sided lower confidence limit exceeds it."""
    lo, hi = wilson_interval(hits, trials)
    return BoundCheck(bound, hits / trials, (lo, hi), trials, lo <= bound, kind)


def _lower_bound_check(hits: int, trials: int, bound: float, kind: str) -> BoundCheck:
    lo, hi = wilson_interval(hits, trials)
    return BoundCheck(bound, hits / trials, (lo, hi), trials, hi >= bound, kind)


# ---------------------------------------------------------------------------
Rule = Callable[[int, np.ndarray, np.ndarray, np.random.Generator], np.ndarray]


@dataclass
class DependentBernoulliProcess:
    """0/1 sequence whose i-th conditional success probability is produced by ``rule``.

    ``rule(i, hist, sums, rng)`` sees the first i outcomes of every trial
    (``hist[:, :i]``) and the running sums, and returns one probability per
    trial. ``envelope`` gives the admissible range per draw; by default the
    constant range [p1, p2]. Every emitted probability is checked against it.
    """

    n: int
    p1: float
    p2: float
    rule: Rule
    name: str = "process"
    envelope: Callable | None = None

    def simulate(self, trials: int, rng: np.random.Generator) -> np.ndarray:
        hist = np.zeros((trials, self.n), dtype=bool)
        sums = np.zeros(trials, dtype=np.int64)
        for i in range(self.n):
            probs = np.broadcast_to(np.asarray(self.rule(i, hist, sums, rng), dtype=float), (trials,))
            if self.envelope is None:
                lo, hi = self.p1, self.p2
            else:
                lo, hi = self.envelope(i, hist)
            if np.any(probs < np.asarray(lo) - 1e-12) or np.any(probs > np.asarray(hi) + 1e-12):
                raise AssertionError(f"{self.name}: conditional probability left its envelope at step {i}")
            draw = rng.random(trials) < probs
            hist[:, i] = draw
            sums += draw
        return hist


def independent_process(n: int, p: float) -> DependentBernoulliProcess:
    return DependentBernoulliProcess(n, p, p, lambda i, h, s, rng: p, "independent")


def markov_alternating(n: int, p1: float, p2: float) -> DependentBernoulliProcess:
    """Success probability p2 after a success, p1 after a failure."""
    def rule(i, hist, sums, rng):
        if i == 0:
            return np.full(hist.shape[0], p1)
        return np.where(hist[:, i - 1], p2, p1)
    return DependentBernoulliProcess(n, p1, p2, rule, "markov-alternating")


def momentum_process(n: int, p1: float, p2: float) -> DependentBernoulliProcess:
    """Rich-get-richer: p2 while ahead of the midpoint rate, p1 while behind; widens both tails."""
    mid = (p1 + p2) / 2
    def rule(i, hist, sums, rng):
        return np.where(sums >= mid * i, p2, p1)
    return DependentBernoulliProcess(n, p1, p2, rule, "momentum")


def hidden_block_process(n: int, p1: float, p2: float, block: int = 25) -> DependentBernoulliProcess:
    """Each block of ``block`` steps uses p1 or p2 according to a hidden fair coin."""
    def rule(i, hist, sums, rng):
        if i % block == 0:
            rule.coin = rng.random(hist.shape[0]) < 0.5
        return np.where(rule.coin, p2, p1)
    return DependentBernoulliProcess(n, p1, p2, rule, "hidden-block")


def adversarial_processes(n: int, p1: float, p2: float) -> list[DependentBernoulliProcess]:
    return [markov_alternating(n, p1, p2), momentum_process(n, p1, p2),
            hidden_block_process(n, p1, p2)]


@dataclass
class ChernoffReport:
    process: str
    lower: BoundCheck
    upper: BoundCheck

    @property
    def passed(self) -> bool:
        return self.lower.passed and self.upper.passed

    def to_dict(self) -> dict:
        return {"process": self.process, "pass": self.passed,
                "lower": self.lower.to_dict(), "upper": self.upper.to_dict()}


def pseudo_chernoff_validate(process: DependentBernoulliProcess, c: float, trials: int,
                             rng_seed=None) -> ChernoffReport:
    """Estimate P[A ≤ (1−c)p1 n] and P[A ≥ (1+c)p2 n] against exp(−c² p n/3)."""
    if not 0 < c <= 1:
        raise ValueError("c must lie in (0, 1]")
    rng = np.random.default_rng(rng_seed)
    total = process.simulate(trials, rng).sum(axis=1)
    n, p1, p2 = process.n, process.p1, process.p2
    low = int(np.sum(total <= (1 - c) * p1 * n + 1e-9))
    high = int(np.sum(total >= (1 + c) * p2 * n - 1e-9))
    return ChernoffReport(
        process.name,
        _upper_bound_check(low, trials, math.exp(-c * c / 3 * p1 * n), "lower-tail"),
        _upper_bound_check(high, trials, math.exp(-c * c / 3 * p2 * n), "upper-tail"),
    )


def chernoff_validate(n: int, p: float, c: float, trials: int, rng_seed=None) -> BoundCheck:
    """Classical two-sided bound P[|A − pn| ≥ c·pn] ≤ exp(−c² pn/3) for independent trials."""
    if not 0 < c <= 1.5:
        raise ValueError("c must lie in (0, 3/2]")
    rng = np.random.default_rng(rng_seed)
    total = rng.binomial(n, p, size=trials)
    hits = int(np.sum(np.abs(total - p * n) >= c * p * n - 1e-9))
    return _upper_bound_check(hits, trials, math.exp(-c * c * p * n / 3), "two-sided")


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class DisjointFamily:
    sets: tuple[tuple[int, ...], ...]

    def __init__(self, sets: Sequence[Sequence[int]], n: int | None = None):
        sets = tuple(tuple(int(v) for v in s) for s in sets)
        seen: set[int] = set()
        for s in sets:
            if not s:
                raise ValueError("family members must be nonempty")
            if seen & set(s) or len(set(s)) != len(s):
                raise ValueError("family members must be disjoint")
            if n is not None and not all(0 <= v < n for v in s):
                raise ValueError("family member outside [n]")
            seen |= set(s)
        object.__setattr__(self, "sets", sets)

    @property
    def m(self) -> int:
        return len(self.sets)

    @property
    def a(self) -> int:
        return max((len(s) for s in self.sets), default=0)


def consecutive_family(m: int, a: int) -> DisjointFamily:
    return DisjointFamily([range(j * a, (j + 1) * a) for j in range(m)])


def _family_index(n: int, family: DisjointFamily):
    owner = np.full(n, -1)
    earlier = [[] for _ in range(n)]
    for j, s in enumerate(family.sets):
        for pos, v in enumerate(sorted(s)):
            owner[v] = j
            earlier[v] = sorted(s)[:pos]
    return owner, earlier


def tuple_envelope(n: int, family: DisjointFamily, p: float):
    """Lower bound p only where every earlier member of the own set succeeded."""
    owner, earlier = _family_index(n, family)

    def env(i, hist):
        if owner[i] < 0:
            return 0.0, 1.0
        prev = earlier[i]
        ok = hist[:, prev].all(axis=1) if prev else np.ones(hist.shape[0], bool)
        return np.where(ok, p, 0.0), 1.0
    return env


def tuple_adversaries(n: int, family: DisjointFamily, p: float) -> list[DependentBernoulliProcess]:
    """Three processes meeting the tuple lemma's restricted conditioning and nothing more."""
    owner, earlier = _family_index(n, family)
    env = tuple_envelope(n, family, p)

    def chain_ok(i, hist):
        prev = earlier[i]
        return hist[:, prev].all(axis=1) if prev else np.ones(hist.shape[0], bool)

    def kill_after_failure(i, hist, sums, rng):
        # p while the own set is intact, 0 once it has failed; outside the family: 1
        if owner[i] < 0:
            return 1.0
        return np.where(chain_ok(i, hist), p, 0.0)

    def punish_history(i, hist, sums, rng):
        # exactly p on qualifying draws, and 0 otherwise, also 0 off-family
        if owner[i] < 0:
            return 0.0
        return np.where(chain_ok(i, hist), p, 0.0)

    def contagion(i, hist, sums, rng):
        # a failure in the previous set forces the minimum p; success lifts to 1
        if owner[i] < 0:
            return 0.5
        j = owner[i]
        base = np.where(chain_ok(i, hist), p, 0.0)
        if j == 0:
            return base
        prev = family.sets[j - 1]
        good = hist[:, list(prev)].all(axis=1)
        return np.where(good & chain_ok(i, hist), np.minimum(1.0, 2 * p), base)

    return [
        DependentBernoulliProcess(n, 0.0, 1.0, kill_after_failure, "kill-after-failure", env),
        DependentBernoulliProcess(n, 0.0, 1.0, punish_history, "punish-history", env),
        DependentBernoulliProcess(n, 0.0, 1.0, contagion, "contagion", env),
    ]


@dataclass
class TupleReport:
    process: str
    check: BoundCheck
    threshold: float

    @property
    def passed(self) -> bool:
        return self.check.passed

    def to_dict(self) -> dict:
        return {"process": self.process, "pass": self.passed, "threshold": self.threshold,
                **self.check.to_dict()}


def tuple_chernoff_validate(process: DependentBernoulliProcess, family: DisjointFamily, p: float,
                            trials: int, rng_seed=None) -> TupleReport:
    """Estimate P[#{I : all A_i = 1} ≥ ½p^a m] against 1 − 2exp(−p^a m/12)."""
    rng = np.random.default_rng(rng_seed)
    hist = process.simulate(trials, rng)
    a, m = family.a, family.m
    full = np.zeros(trials, dtype=np.int64)
    for s in family.sets:
        full += hist[:, list(s)].all(axis=1)
    threshold = 0.5 * p ** a * m
    hits = int(np.sum(full >= threshold - 1e-9))
    bound = 1 - 2 * math.exp(-(p ** a) * m / 12)
    return TupleReport(process.name, _lower_bound_check(hits, trials, bound, "tuple"), threshold)


# ---------------------------------------------------------------------------
@dataclass
class ColoringResult:
    partition: Partition
    repaired_by: str


def _is_equitable(classes, n, k) -> bool:
    lo, hi = n // k, -(-n // k)
    return all(lo <= len(c) <= hi for c in classes)


def equitable_coloring(g: Graph, k: int | None = None, max_rounds: int = 10_000,
                       return_details: bool = False, below_bound: bool = False):
    """Partition into k ≥ Δ+1 stable classes of sizes ⌊n/k⌋ or ⌈n/k⌉.

    Balanced greedy colouring, then repair by shifting single vertices
    along paths of the class digraph (X → Y when some vertex of X has no
    neighbour in Y) from an oversized to an undersized class. If no such
    path exists the Kierstead–Kostochka recolouring procedure from
    networkx finishes the job.

    ``below_bound`` admits k ≤ Δ, where no colouring is guaranteed: only the
    greedy and path-shift stages run and ConstructionFailed reports a miss.
    """
    n = g.n
    k = g.max_degree() + 1 if k is None else k
    if k < 1 or (k < g.max_degree() + 1 and not below_bound):
        raise ValueError("need at least Δ+1 classes")
    if n == 0:
        part = Partition([[] for _ in range(k)])
        return ColoringResult(part, "trivial") if return_details else part
    colour = [-1] * n
    classes: list[set[int]] = [set() for _ in range(k)]
    order = smallest_last_order(g) if below_bound else sorted(range(n), key=lambda v: (-g.degree(v), v))
    for v in order:
        banned = {colour[w] for w in g.neighbors(v)}
        free = [c for c in range(k) if c not in banned]
        if not free:
            raise ConstructionFailed(f"greedy colouring needs more than {k} colours")
        c = min(free, key=lambda c: (len(classes[c]), c))
        colour[v] = c
        classes[c].add(v)

    lo, hi = n // k, -(-n // k)
    how = "greedy"
    rounds = 0
    while not _is_equitable(classes, n, k) and rounds < max_rounds:
        rounds += 1
        how = "path-shift"
        if any(len(c) > hi for c in classes):
            big = [c for c in range(k) if len(classes[c]) > hi]
            small = {c for c in range(k) if len(classes[c]) < hi}
        else:
            big = [c for c in range(k) if len(classes[c]) > lo]
            small = {c for c in range(k) if len(classes[c]) < lo}
        path = _shift_path(g, classes, big, small, colour)
        if path is None:
            break
        for c_from, c_to, v in reversed(path):
            classes[c_from].discard(v)
            classes[c_to].add(v)
            colour[v] = c_to
    if not _is_equitable(classes, n, k) and k < g.max_degree() + 1:
        raise ConstructionFailed(f"no equitable {k}-colouring found")
    if not _is_equitable(classes, n, k):
        how = "kierstead-kostochka"
        nxg = nx.Graph()
        nxg.add_nodes_from(range(n))
        nxg.add_edges_from(g.edges())
        col = nx.algorithms.coloring.equitable_color(nxg, k)
        classes = [set() for _ in range(k)]
        for v, c in col.items():
            classes[c].add(v)
    part = Partition([sorted(c) for c in classes])
    return ColoringResult(part, how) if return_details else part


def _shift_path(g, classes, sources, sinks, colour):
    """BFS in the class digraph; returns [(from, to, vertex), ...] or None."""
    k = len(classes)
    prev: dict[int, tuple[int, int]] = {}
    frontier = list(sources)
    seen = set(sources)
    while frontier:
        nxt = []
        for x in frontier:
            for v in sorted(classes[x]):
                touched = {colour[w] for w in g.neighbors(v)}
                for y in range(k):
                    if y in seen or y in touched:
                        continue
                    seen.add(y)
                    prev[y] = (x, v)
                    if y in sinks:
                        path = []
                        cur = y
                        while cur in prev:
                            px, pv = prev[cur]
                            path.append((px, cur, pv))
                            cur = px
                        return path[::-1]
                    nxt.append(y)
        frontier = nxt
    return None


def verify_equitable(g: Graph, part: Partition, k: int) -> list[str]:
    problems = []
    sizes = part.sizes
    if len(sizes) > k:
        problems.append(f"{len(sizes)} classes > {k}")
    if sizes and max(sizes) - min(sizes) > 1:
        problems.append(f"class sizes {min(sizes)}..{max(sizes)} differ by more than 1")
    owner = part.class_of(g.n)
    for u, v in g.edges():
        if owner[u] == owner[v]:
            problems.append(f"edge {u}-{v} inside class {owner[u]}")
    return problems
