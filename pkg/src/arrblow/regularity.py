"""Densities, (weighted) regularity tests, and the tuple condition."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from .errors import DimensionError, EmptySide, SizeError, TooSmall
from .graph_core import Graph, RPartitionedGraph


@dataclass(frozen=True)
class BipartitePairView:
    host: Graph
    A: tuple[int, ...]
    B: tuple[int, ...]

    def __init__(self, host: Graph, A: Sequence[int], B: Sequence[int]):
        A, B = tuple(int(v) for v in A), tuple(int(v) for v in B)
        if set(A) & set(B):
            raise DimensionError("A and B must be disjoint")
        object.__setattr__(self, "host", host)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    def matrix(self) -> np.ndarray:
        """|A| x |B| boolean bi-adjacency matrix."""
        return self.host.adjacency_matrix()[np.ix_(self.A, self.B)]

    def edge_count(self) -> int:
        return int(self.matrix().sum())


@dataclass(frozen=True)
class WeightedPair:
    pair: BipartitePairView
    omega: np.ndarray
    eps_bound: float | None = None  # regularity inherited through subpair()

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        if w.shape != (len(self.pair.A),):
            raise DimensionError("one weight per A-vertex required")
        if np.any(w < 0) or np.any(w > 1):
            raise ValueError("weights must lie in [0, 1]")
        object.__setattr__(self, "omega", w)


def _nonempty(*sides):
    for s in sides:
        if len(s) == 0:
            raise EmptySide("both sides of a pair must be nonempty")


def density(p: BipartitePairView) -> float:
    """d(A, B) = e(A, B)/(|A||B|)."""
    _nonempty(p.A, p.B)
    return p.edge_count() / (len(p.A) * len(p.B))


def weighted_density(wp: WeightedPair, Aprime=None, Bprime=None) -> float:
    """d_ω(A', B') = Σ_{x∈A'} ω(x)|N(x, B')| / (|A'||B'|); defaults to the full pair."""
    A, B = wp.pair.A, wp.pair.B
    Aprime = A if Aprime is None else list(Aprime)
    Bprime = B if Bprime is None else list(Bprime)
    _nonempty(Aprime, Bprime)
    ia = {v: k for k, v in enumerate(A)}
    try:
        rows = [ia[v] for v in Aprime]
    except KeyError as exc:
        raise DimensionError(f"{exc.args[0]} is not in A") from None
    bset = set(B)
    if not set(Bprime) <= bset:
        raise DimensionError("B' must be a subset of B")
    sub = wp.pair.host.adjacency_matrix()[np.ix_([A[r] for r in rows], list(Bprime))]
    return float(wp.omega[rows] @ sub.sum(axis=1)) / (len(Aprime) * len(Bprime))


# ---------------------------------------------------------------------------
# randomized regularity probe
@dataclass
class ProbeReport:
    passed: bool
    max_deviation: float
    witness_A: list[int] | None
    witness_B: list[int] | None
    thresholds: dict
    trials: int
    seed: int | None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def _probe_core(mat: np.ndarray, omega: np.ndarray, eps: float, trials: int, rng) -> tuple:
    """Shared probe loop over a dense |A| x |B| matrix.

    Half of the trials draw A' and B' by independent uniform inclusion at a
    random rate and reject those below the size floor. The other half are
    seeded by neighbourhoods: A' is N(b) or its complement for a random b,
    and B' is N(a) or its complement for a random a ∈ A'. Uniform subsets
    alone average out planted structure, the seeded trials do not.
    """
    nA, nB = mat.shape
    fm = mat.astype(np.float64)
    wrow = omega @ fm  # weighted column sums
    full = float(wrow.sum()) / (nA * nB)
    floor_a, floor_b = math.ceil(eps * nA - 1e-9), math.ceil(eps * nB - 1e-9)
    floor_a, floor_b = max(floor_a, 1), max(floor_b, 1)
    best, wit = 0.0, None
    for t in range(trials):
        ma = mb = None
        if t % 2 == 1 and nA and nB:
            b = rng.integers(nB)
            ma = mat[:, b].copy()
            if rng.random() < 0.5:
                ma = ~ma
            if ma.sum() >= floor_a:
                a = rng.choice(np.flatnonzero(ma))
                mb = mat[a].copy()
                if rng.random() < 0.5:
                    mb = ~mb
                if mb.sum() < floor_b:
                    mb = None
            else:
                ma = None
        if ma is None or mb is None:
            for _ in range(64):
                qa, qb = rng.uniform(eps, 1.0), rng.uniform(eps, 1.0)
                ma = rng.random(nA) < qa
                mb = rng.random(nB) < qb
                if ma.sum() >= floor_a and mb.sum() >= floor_b:
                    break
            else:
                ma = np.zeros(nA, bool)
                ma[rng.choice(nA, floor_a, replace=False)] = True
                mb = np.zeros(nB, bool)
                mb[rng.choice(nB, floor_b, replace=False)] = True
        sa, sb = int(ma.sum()), int(mb.sum())
        d = float((omega * ma) @ fm @ mb) / (sa * sb)
        dev = abs(d - full)
        if dev > best:
            best = dev
            wit = (np.flatnonzero(ma), np.flatnonzero(mb))
    return full, best, wit


def sample_regularity_probe(p: BipartitePairView, eps: float, trials: int, rng_seed=None,
                            omega=None) -> ProbeReport:
    """Randomized falsifier for (weighted) ε-regularity.

    Passing is evidence only. ``omega`` switches to the weighted density.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    _nonempty(p.A, p.B)
    if eps >= 1:
        # only the full pair (or nothing) meets the size floor: vacuously regular
        return ProbeReport(True, 0.0, None, None, {"eps": eps}, trials, rng_seed)
    rng = np.random.default_rng(rng_seed)
    w = np.ones(len(p.A)) if omega is None else np.asarray(omega, dtype=float)
    _, best, wit = _probe_core(p.matrix(), w, eps, trials, rng)
    violated = best > eps
    return ProbeReport(
        passed=not violated,
        max_deviation=best,
        witness_A=[p.A[i] for i in wit[0]] if violated else None,
        witness_B=[p.B[i] for i in wit[1]] if violated else None,
        thresholds={"eps": eps},
        trials=trials,
        seed=rng_seed,
    )


# ---------------------------------------------------------------------------
# degree / co-degree test
VERBATIM = "verbatim"


def verbatim_thresholds(eps: float) -> dict:
    return {"deg_dev": eps ** 14, "deg_count": eps ** 12,
            "codeg_dev": eps ** 9, "codeg_count": eps ** 6}


def czygrinow_rodl_bound(xi: float, eps: float) -> float:
    """Deviation bound 2ξ²/ε + √(5ξ)/(ε² − εξ²) granted by the degree/co-degree conditions."""
    if not (0 < xi < 1 and 0 < eps < 1 and xi * xi < eps):
        raise ValueError("need ξ, ε in (0,1) and ξ² < ε")
    return 2 * xi * xi / eps + math.sqrt(5 * xi) / (eps * eps - eps * xi * xi)


@dataclass
class TestReport:
    passed: bool
    condition_i: bool
    condition_ii: bool
    deviating_vertices: int
    deviating_pairs: int
    weighted_density: float
    implied_eps: float | None
    clamped: int
    mode: str
    thresholds: dict
    max_deviation: float | None = None
    witness_A: list[int] | None = None
    witness_B: list[int] | None = None
    trials: int = 0
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def weighted_degcodeg_test(wp: WeightedPair, eps: float, thresholds: dict | None = None) -> TestReport:
    """Sufficient degree/co-degree test for weighted regularity.

    With ``thresholds=None`` the ε^14, ε^12, ε^9, ε^6 cut-offs are used and
    n ≥ ε^-6 is required; a pass then certifies weighted 3ε-regularity
    (2·3ε if weights had to be raised to ε). With explicit thresholds
    (keys deg_dev, deg_count, codeg_dev, codeg_count, all as multiples of
    n or C(n,2)) the size floor is skipped and no verdict is implied.
    """
    n = len(wp.pair.A)
    if len(wp.pair.B) != n:
        raise DimensionError("the test needs |A| = |B|")
    _nonempty(wp.pair.A)
    verbatim = thresholds is None
    if verbatim:
        if n < eps ** -6:
            raise SizeError(f"n = {n} < ε^-6 = {eps ** -6:.4g}")
        thresholds = verbatim_thresholds(eps)
    w = np.asarray(wp.omega, dtype=float)
    clamped = int(np.sum(w < eps))
    w = np.maximum(w, eps)
    fm = wp.pair.matrix().astype(np.float64)
    deg = fm.sum(axis=1)
    d_w = float(w @ deg) / (n * n)
    dev_v = int(np.sum(np.abs(w * deg - d_w * n) > thresholds["deg_dev"] * n))
    cond_i = dev_v < thresholds["deg_count"] * n
    wm = w[:, None] * fm
    codeg = wm @ wm.T
    iu = np.triu_indices(n, 1)
    dev_p = int(np.sum(np.abs(codeg[iu] - d_w * d_w * n) >= thresholds["codeg_dev"] * n))
    cond_ii = dev_p <= thresholds["codeg_count"] * (n * (n - 1) / 2)
    passed = bool(cond_i and cond_ii)
    implied = None
    if verbatim and passed:
        implied = 3 * eps * (2 if clamped else 1)
    return TestReport(passed, bool(cond_i), bool(cond_ii), dev_v, dev_p, d_w, implied,
                      clamped, VERBATIM if verbatim else "override", dict(thresholds))


def subpair(wp: WeightedPair, Aprime, Bprime, gamma: float, eps: float) -> WeightedPair:
    """Restriction to (A', B') carrying ε' = max{2ε, ε/γ} as ``eps_bound``."""
    if gamma < eps:
        raise TooSmall(f"γ = {gamma} must be at least ε = {eps}")
    Aprime, Bprime = list(Aprime), list(Bprime)
    A, B = wp.pair.A, wp.pair.B
    if len(Aprime) < gamma * len(A) or len(Bprime) < gamma * len(B):
        raise TooSmall("subpair sides below γ-fraction")
    ia = {v: k for k, v in enumerate(A)}
    if not set(Bprime) <= set(B) or not set(Aprime) <= set(ia):
        raise DimensionError("subpair sides must be subsets of the pair")
    omega = wp.omega[[ia[v] for v in Aprime]]
    return WeightedPair(BipartitePairView(wp.pair.host, Aprime, Bprime), omega,
                        max(2 * eps, eps / gamma))


@dataclass
class SuperRegularReport:
    min_degree_ok: bool
    regular: bool
    half_delta_floor: bool
    min_degree_A: int
    min_degree_B: int
    probe: ProbeReport

    def __bool__(self) -> bool:
        return self.min_degree_ok and self.regular

    @property
    def passed(self) -> bool:
        return bool(self)


def super_regular_check(p: BipartitePairView, eps: float, delta: float, trials: int = 500,
                        rng_seed=0) -> SuperRegularReport:
    """(ε,δ)-super-regularity: exact min-degree sides plus the randomized probe.

    ``half_delta_floor`` is the weaker min-degree condition ≥ ½δ|other side|.
    """
    _nonempty(p.A, p.B)
    mat = p.matrix()
    dA = int(mat.sum(axis=1).min())
    dB = int(mat.sum(axis=0).min())
    nA, nB = len(p.A), len(p.B)
    min_ok = dA >= delta * nB and dB >= delta * nA
    half = dA >= 0.5 * delta * nB and dB >= 0.5 * delta * nA
    probe = sample_regularity_probe(p, eps, trials, rng_seed)
    return SuperRegularReport(bool(min_ok), probe.passed, bool(half), dA, dB, probe)


# ---------------------------------------------------------------------------
# tuple condition
@dataclass
class TupleReport:
    passed: bool
    min_fraction: float
    witnesses: list
    exhaustive: bool
    tuples_checked: int
    iota: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def tuple_condition_check(host: RPartitionedGraph, a: int, iota: float, sample: int,
                          rng_seed=None, max_witnesses: int = 10) -> TupleReport:
    """Common neighbourhoods of (a+1)-tuples outside each class V_i.

    Every tuple from V ∖ V_i must have ≥ ι|V_i| common neighbours in V_i.
    Exhaustive when C(n, a+1)·r ≤ 10^7, else ``sample`` uniform tuples per class.
    """
    if sample < 1:
        raise ValueError("sample must be >= 1")
    g = host.graph
    mat = g.adjacency_matrix()
    classes = host.partition.classes
    r = len(classes)
    k = a + 1
    exhaustive = math.comb(g.n, k) * r <= 10 ** 7
    rng = np.random.default_rng(rng_seed)
    owner = host.owner()
    best = 1.0
    witnesses = []
    checked = 0
    for i, cls in enumerate(classes):
        if not cls:
            continue
        outside = np.array([v for v in range(g.n) if owner[v] != i], dtype=int)
        if len(outside) < k:
            continue
        sub = mat[np.ix_(outside, list(cls))]
        size = len(cls)
        if exhaustive and k == 2:
            f = sub.astype(np.float64)
            co = f @ f.T
            iu = np.triu_indices(len(outside), 1)
            vals = co[iu] / size
            checked += len(vals)
            lo = float(vals.min())
            best = min(best, lo)
            for idx in np.flatnonzero(vals < iota)[: max_witnesses - len(witnesses)]:
                witnesses.append((i, [int(outside[iu[0][idx]]), int(outside[iu[1][idx]])],
                                  float(vals[idx])))
            continue
        if exhaustive:
            combos = itertools.combinations(range(len(outside)), k)
        else:
            combos = (rng.choice(len(outside), k, replace=False) for _ in range(sample))
        for tup in combos:
            common = np.logical_and.reduce(sub[list(tup)], axis=0)
            frac = int(common.sum()) / size
            checked += 1
            if frac < best:
                best = frac
            if frac < iota and len(witnesses) < max_witnesses:
                witnesses.append((i, [int(outside[j]) for j in tup], frac))
    return TupleReport(best >= iota, best, witnesses, exhaustive, checked, iota)
