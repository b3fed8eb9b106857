"""Randomized greedy embedding of an almost spanning subgraph, with its constants ledger."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Iterable

import mpmath
import numpy as np

from .errors import (ChainViolation, DimensionError, EmptyPool, InitFailure, NotEnoughVertices,
                     QueueOverflow)
from .graph_core import Graph, Partition, check_r_partition

PAPER, PRACTICAL = "paper", "practical"
_DPS = 60


def _exact(x) -> mpmath.mpf:
    """Decimal inputs such as 0.3 are read as written, not as their binary float value."""
    return mpmath.mpf(str(x)) if isinstance(x, float) else mpmath.mpf(x)


# ---------------------------------------------------------------------------
# constants ledger
@dataclass
class ConstantsLedger:
    mode: str
    C: int
    a: int
    delta_R: int
    kappa: float
    delta: float
    c: float
    mu: float
    gamma: float
    lam: float
    eps_prime: float
    eps: float
    alpha: float
    xi: float
    r: int | None = None
    iota: float | None = None
    n0: object = None
    n0_floors: tuple = ()
    n0_overflow: bool = False
    # practical knobs; in paper mode sp_fraction = μ/10 and eps_check = ε
    sp_fraction: float | None = None
    eps_check: float | None = None

    def __post_init__(self):
        if self.sp_fraction is None:
            self.sp_fraction = self.mu / 10
        if self.eps_check is None:
            self.eps_check = self.eps

    def chain(self) -> list[tuple[str, object]]:
        return [("xi", self.xi), ("eps", self.eps), ("alpha", self.alpha),
                ("eps_prime", self.eps_prime), ("lam", self.lam), ("gamma", self.gamma)]

    def chain_problems(self) -> list[str]:
        out = []
        ch = self.chain()
        for name, val in ch + [("mu", self.mu), ("delta", self.delta)]:
            if not val > 0:
                out.append(f"{name} must be positive")
        for (n1, v1), (n2, v2) in zip(ch, ch[1:]):
            if not v1 < v2:
                out.append(f"{n1} < {n2} fails")
        if not (self.gamma < self.mu and self.gamma < self.delta):
            out.append("gamma < min(mu, delta) fails")
        if self.mu > 1 or self.delta > 1:
            out.append("mu, delta <= 1 fails")
        return out

    def eps1_consequence(self) -> bool:
        """(δ−ε)^a ≥ (9/10)·δ^a."""
        return (self.delta - self.eps) ** self.a >= mpmath.mpf(9) / 10 * self.delta ** self.a

    def f(self, name: str) -> float:
        return float(getattr(self, name))

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, mpmath.mpf):
                d[k] = mpmath.nstr(v, 17)
        d["n0_floors"] = [mpmath.nstr(mpmath.mpf(x), 17) for x in self.n0_floors]
        return d


def paper_constants(C, a, delta_R, kappa, delta, c, mu, r):
    """Evaluate the defining formulas in high precision; returns a dict of mpf."""
    with mpmath.workdps(_DPS):
        delta, c, mu, kappa = (_exact(x) for x in (delta, c, mu, kappa))
        gamma = c / 2 * mu / 10 * delta ** a
        lam = delta * gamma / (25 * a)
        eps_prime = min((lam * delta ** a / (6 * mpmath.mpf(2) ** (a * a + 1) * mpmath.mpf(3) ** a)) ** 2,
                        (7 * gamma / 30) ** 2)
        eps = min(eps_prime / (delta_R * (1 + C) * mpmath.mpf(2) ** (a + 1)), (eps_prime / 3) ** 36)
        alpha = mpmath.sqrt(eps) / 6
        xi = 8 * eps ** 2 / (9 * gamma ** 2 * kappa * r)
        f1 = (48 * mpmath.mpf(3) ** a * mpmath.mpf(2) ** (a * a + 1) * a * kappa * r / (lam * delta ** a)) ** 2
        K = 60 * kappa * r / (eps ** 2 * delta * mu)
        f2 = K
        for _ in range(200):  # n ≥ K·log(12 n²) by fixed-point iteration
            nxt = K * mpmath.log(12 * f2 ** 2)
            if nxt <= f2 * (1 + mpmath.mpf(10) ** (-40)):
                f2 = max(f2, nxt)
                break
            f2 = nxt
        f3 = mpmath.exp(36 * mpmath.mpf(2) ** (a * a) * a * a * kappa * r / lam)
        return dict(gamma=+gamma, lam=+lam, eps_prime=+eps_prime, eps=+eps, alpha=+alpha,
                    xi=+xi, floors=(f1, f2, f3))


def make_ledger(mode: str, *, C: int = 0, a: int, delta_R: int, kappa: float = 1, delta: float,
                c: float = 1.0, mu: float, r: int | None = None, iota: float | None = None,
                gamma=None, lam=None, eps_prime=None, eps=None, alpha=None, xi=None,
                sp_fraction: float | None = None, eps_check: float | None = None,
                check_chain: bool = True) -> ConstantsLedger:
    """Build the constants ledger.

    Paper mode derives γ, λ, ε′, ε, α, ξ and the n_0 floors from the base
    constants (high-precision values). Practical mode takes them as given
    and only checks positivity and the ordering ξ < ε < α < ε′ < λ < γ < μ, δ ≤ 1.
    Practical mode may also decouple the special-pool fraction (default μ/10)
    and the host tolerance used by the initialisation and Step 1 checks
    (default ε).
    """
    if mode == PAPER:
        if min(a, delta_R, kappa, delta, c, mu) <= 0 or C < 0:
            raise ValueError("paper mode needs positive base constants")
        rr = r if r is not None else delta_R
        k = paper_constants(C, a, delta_R, kappa, delta, c, mu, rr)
        n0 = max(k["floors"])
        led = ConstantsLedger(PAPER, C, a, delta_R, kappa, _exact(delta), _exact(c), _exact(mu),
                              k["gamma"], k["lam"], k["eps_prime"], k["eps"],
                              k["alpha"], k["xi"], rr, iota, n0, k["floors"], n0 > 2 ** 63)
        problems = led.chain_problems()
        if problems or not led.eps1_consequence():
            raise ChainViolation("paper-mode constants break the ordering: " + "; ".join(problems))
        return led
    if mode != PRACTICAL:
        raise ValueError(f"unknown ledger mode {mode!r}")
    vals = dict(gamma=gamma, lam=lam, eps_prime=eps_prime, eps=eps, alpha=alpha, xi=xi)
    missing = [k for k, v in vals.items() if v is None]
    if missing:
        raise ValueError(f"practical mode needs {', '.join(missing)}")
    led = ConstantsLedger(PRACTICAL, C, a, delta_R, kappa, float(delta), float(c), float(mu),
                          *(float(vals[k]) for k in ("gamma", "lam", "eps_prime", "eps", "alpha", "xi")),
                          r=r, iota=iota, sp_fraction=sp_fraction, eps_check=eps_check)
    if check_chain:
        problems = led.chain_problems()
        if problems:
            raise ChainViolation("; ".join(problems))
    return led


# ---------------------------------------------------------------------------
# instances and image restrictions
@dataclass
class ImageRestrictions:
    """Per-class restriction families and the assignment x ↦ I(x)."""

    families: dict[int, list[frozenset]]
    assignment: dict[int, tuple[int, int]]  # h-vertex -> (class, family index)

    def allowed(self, x: int) -> frozenset | None:
        if x not in self.assignment:
            return None
        i, j = self.assignment[x]
        return self.families[i][j]

    def S(self, i: int | None = None) -> set[int]:
        if i is None:
            return set(self.assignment)
        return {x for x, (k, _) in self.assignment.items() if k == i}

    def problems(self, instance: "BlowupInstance", alpha: float, c: float) -> list[str]:
        out = []
        h = instance.h
        for i, Xi in enumerate(instance.h_part.classes):
            Si = self.S(i)
            if not Si <= set(Xi):
                out.append(f"S_{i} not inside X_{i}")
            ni = len(Xi)
            if len(Si) > alpha * ni + 1e-9:
                out.append(f"|S_{i}| = {len(Si)} > α·n_{i}")
            nbr = h.neighborhood(Si)
            for j in instance.reduced.neighbors(i):
                Xj = instance.h_part.classes[j]
                if len(nbr & set(Xj)) > alpha * len(Xj) + 1e-9:
                    out.append(f"|N(S_{i}) ∩ X_{j}| > α·n_{j}")
            Vi = set(instance.g_part.classes[i])
            for fam in self.families.get(i, []):
                if len(fam) < c * len(Vi) - 1e-9 or not fam <= Vi:
                    out.append(f"restriction set of class {i} too small or outside V_{i}")
        return out

    def to_dict(self) -> dict:
        return {"families": {str(i): [sorted(s) for s in fams] for i, fams in self.families.items()},
                "assignment": {str(x): list(v) for x, v in self.assignment.items()}}

    @classmethod
    def from_dict(cls, d: dict) -> "ImageRestrictions":
        fams = {int(i): [frozenset(s) for s in v] for i, v in d["families"].items()}
        asg = {int(x): tuple(v) for x, v in d["assignment"].items()}
        return cls(fams, asg)


@dataclass
class BlowupInstance:
    h: Graph
    h_part: Partition
    g: Graph
    g_part: Partition
    reduced: Graph
    order: list[int]
    restrictions: ImageRestrictions | None = None

    def validate(self, spanning: bool = True) -> None:
        if not check_r_partition(self.h, self.reduced, self.h_part):
            raise DimensionError("target is not R-partitioned by h_part")
        if not check_r_partition(self.g, self.reduced, self.g_part) and False:
            pass  # host edges inside clusters or off R are allowed; they are ignored
        self.g_part.class_of(self.g.n)
        if self.h_part.r != self.g_part.r:
            raise DimensionError("target and host partitions differ in class count")
        for Xi, Vi in zip(self.h_part.classes, self.g_part.classes):
            if (spanning and len(Xi) != len(Vi)) or len(Xi) > len(Vi):
                raise DimensionError("cluster sizes do not match class sizes")
        if sorted(self.order) != list(range(self.h.n)):
            raise DimensionError("order is not a permutation of V(H)")


@dataclass
class ImportantSets:
    L_star: dict[int, list[int]]
    X_star_i: dict[int, set[int]]
    X_star: set[int]
    bound_ok: bool
    bound_detail: dict


def important_sets(instance: BlowupInstance, ledger: ConstantsLedger, ordering=None) -> ImportantSets:
    """L*_i = last ⌈λn_i⌉ vertices of X_i ∖ N(S); X*_i = N^-(L*_i) ∪ S_i."""
    order = instance.order if ordering is None else list(ordering)
    pos = {v: k for k, v in enumerate(order)}
    h = instance.h
    restr = instance.restrictions
    S = restr.S() if restr else set()
    NS = h.neighborhood(S)
    lam, a, alpha = ledger.f("lam"), ledger.a, ledger.f("alpha")
    L, Xs, detail = {}, {}, {}
    ok = True
    for i, Xi in enumerate(instance.h_part.classes):
        ni = len(Xi)
        want = math.ceil(lam * ni - 1e-12)
        pool = sorted((x for x in Xi if x not in NS), key=pos.__getitem__)
        if len(pool) < want:
            raise NotEnoughVertices(f"class {i}: |X_i ∖ N(S)| = {len(pool)} < λn_i = {want}",
                                    context={"class": i})
        Li = pool[len(pool) - want:] if want else []
        L[i] = Li
        pred = {y for x in Li for y in h.neighbors(x) if pos[y] < pos[x]}
        Xs[i] = pred | (restr.S(i) if restr else set())
        bound = a * want + alpha * ni
        detail[i] = (len(Xs[i]), bound)
        ok &= len(Xs[i]) <= bound + 1e-9
    X_star = set().union(*Xs.values()) if Xs else set()
    return ImportantSets(L, Xs, X_star, ok, detail)


# ---------------------------------------------------------------------------
# state
@dataclass
class EmbedReport:
    success: bool
    t_reached: int
    T: int
    queue_sizes: list[int]
    pool_sizes_min: list[int]
    violations: list[str] = field(default_factory=list)
    failure: str | None = None
    failure_message: str | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


class EmbeddingState:
    """Mutable RGA state; candidate sets are boolean rows, one matrix per class."""

    def __init__(self, instance: BlowupInstance, ledger: ConstantsLedger):
        self.instance = instance
        self.ledger = ledger
        h, g = instance.h, instance.g
        self.X = [list(c) for c in instance.h_part.classes]
        self.V = [list(c) for c in instance.g_part.classes]
        self.r = len(self.X)
        self.h_owner = instance.h_part.class_of(h.n)
        self.h_local = [0] * h.n
        for cls in self.X:
            for k, x in enumerate(cls):
                self.h_local[x] = k
        self.pos = [0] * h.n
        for k, x in enumerate(instance.order):
            self.pos[x] = k
        adj = g.adjacency_matrix()
        self.block = {}
        self.block32 = {}
        for i, j in instance.reduced.edges():
            for p, q in ((i, j), (j, i)):
                b = adj[np.ix_(self.V[p], self.V[q])]
                self.block[p, q] = b
                self.block32[p, q] = b.astype(np.float32)
        self.succ = [[y for y in h.neighbors(x) if self.pos[y] > self.pos[x]] for x in range(h.n)]
        self.pred = [[y for y in h.neighbors(x) if self.pos[y] < self.pos[x]] for x in range(h.n)]
        self.t = 0  # number of vertices embedded so far; the next step is t+1
        self.phi: dict[int, int] = {}
        self.phi_local: dict[int, int] = {}
        self.time_of: dict[int, int] = {}
        self.embedded = np.zeros(h.n, dtype=bool)
        self.pi = np.zeros(h.n, dtype=np.int64)
        self.cand = [np.ones((len(self.X[i]), len(self.V[i])), dtype=bool) for i in range(self.r)]
        self.free = [np.ones(len(self.V[i]), dtype=bool) for i in range(self.r)]
        self.sp = [np.zeros(len(self.V[i]), dtype=bool) for i in range(self.r)]
        self.aord = [np.zeros(len(self.X[i]), dtype=np.int64) for i in range(self.r)]
        self.in_queue = np.zeros(h.n, dtype=bool)
        self.queue_time: dict[int, int] = {}
        self.queue_count = [0] * self.r
        self.important: ImportantSets | None = None
        self.imp_mask = np.zeros(h.n, dtype=bool)
        self.sequence: list[int] = []
        self.restricted: dict[int, np.ndarray] = {}
        self.pool_min = [math.inf] * self.r
        self.choice_sizes: list[int] = []
        self.candidate_size_violations: list[str] = []
        self.small_choice_steps = 0
        self.sp0 = [0] * self.r
        self.ord0 = [0] * self.r
        self.diag: dict = {}

    # -- views ----------------------------------------------------------
    def C(self, x: int) -> np.ndarray:
        i = self.h_owner[x]
        return self.cand[i][self.h_local[x]]

    def candidate_set(self, x: int) -> set[int]:
        i = self.h_owner[x]
        row = self.cand[i][self.h_local[x]]
        return {self.V[i][k] for k in np.flatnonzero(row)}

    def A_ord_size(self, x: int) -> int:
        i = self.h_owner[x]
        return int((self.C(x) & self.free[i] & ~self.sp[i]).sum())

    def special_vertices(self, i: int) -> list[int]:
        return [self.V[i][k] for k in np.flatnonzero(self.sp[i])]

    def queue(self) -> set[int]:
        return set(np.flatnonzero(self.in_queue).tolist())

    def free_vertices(self, i: int) -> list[int]:
        return [self.V[i][k] for k in np.flatnonzero(self.free[i])]

    def unembedded(self, i: int) -> list[int]:
        return [x for x in self.X[i] if not self.embedded[x]]

    @property
    def done(self) -> bool:
        return self.t >= len(self.sequence)


def initialise(instance: BlowupInstance, ledger: ConstantsLedger,
               restrictions: ImageRestrictions | None = None, rng_seed=None,
               embed_set: Iterable[int] | None = None, spanning: bool = True,
               extended: bool = False, rng: np.random.Generator | None = None) -> EmbeddingState:
    """Sample special vertices, set C_1, run the two initial checks."""
    if restrictions is not None:
        instance.restrictions = restrictions
    instance.validate(spanning=spanning)
    st = EmbeddingState(instance, ledger)
    st.rng = rng if rng is not None else np.random.default_rng(rng_seed)
    rng = st.rng
    eps = ledger.f("eps_check")
    frac = ledger.f("sp_fraction")
    restr = instance.restrictions
    if restr is not None:
        probs = restr.problems(instance, ledger.f("alpha"), ledger.f("c"))
        if probs:
            raise InitFailure("image restrictions violate their invariants: " + "; ".join(probs[:3]),
                              t=0, context={"problems": probs})
    for i in range(st.r):
        ni = len(st.V[i])
        k = math.floor(frac * ni + 1e-9)
        if k:
            st.sp[i][rng.choice(ni, k, replace=False)] = True
        st.sp0[i] = k
        st.ord0[i] = ni - k
    # special neighbourhood ratios must track full ratios
    worst = 0.0
    for (i, j), b in st.block.items():
        nsp = st.sp0[j]
        if nsp == 0:
            continue
        full = b.sum(axis=1) / b.shape[1]
        part = b[:, st.sp[j]].sum(axis=1) / nsp
        dev = np.abs(part - full)
        m = int(np.argmax(dev))
        worst = max(worst, float(dev[m]))
        if dev[m] > eps + 1e-12:
            raise InitFailure(f"special-neighbourhood check fails for vertex {st.V[i][m]} towards class {j}",
                              t=0, context={"vertex": st.V[i][m], "class": j, "deviation": float(dev[m])})
    st.diag["special_ratio_max_deviation"] = worst
    # restricted candidate sets and their special share
    c = ledger.f("c")
    if restr is not None:
        for x, (i, _) in restr.assignment.items():
            allowed = restr.allowed(x)
            row = np.array([v in allowed for v in st.V[i]], dtype=bool)
            st.cand[i][st.h_local[x]] = row
            st.restricted[x] = row
            if int((row & st.sp[i]).sum()) < c / 2 * frac * len(st.V[i]) - 1e-9:
                raise InitFailure(f"restricted vertex {x} sees too few special vertices", t=0,
                                  context={"vertex": x, "class": i})
    imp = important_sets(instance, ledger)
    st.important = imp
    for x in imp.X_star:
        st.imp_mask[x] = True
    st.diag["important_bound_ok"] = imp.bound_ok
    if extended and ledger.iota is not None:
        from .regularity import tuple_condition_check
        from .graph_core import RPartitionedGraph
        rep = tuple_condition_check(RPartitionedGraph(instance.g, instance.reduced, instance.g_part),
                                    ledger.a, ledger.f("iota"), sample=2000,
                                    rng_seed=int(rng.integers(2 ** 31)))
        st.diag["tuple_condition"] = {"pass": rep.passed, "min_fraction": rep.min_fraction,
                                      "exhaustive": rep.exhaustive}
    for i in range(st.r):
        st.aord[i] = (st.cand[i] & (st.free[i] & ~st.sp[i])).sum(axis=1)
    wanted = set(range(instance.h.n)) if embed_set is None else set(embed_set)
    st.sequence = [x for x in instance.order if x in wanted]
    st.T = len(st.sequence)
    return st


def _feasible_mask(st: EmbeddingState, x: int, idx: np.ndarray) -> np.ndarray:
    """Eqs (7)-(8) for every successor of x, over candidate positions ``idx``."""
    i = st.h_owner[x]
    delta, eps = st.ledger.f("delta"), st.ledger.f("eps_check")
    ok = np.ones(len(idx), dtype=bool)
    for y in st.succ[x]:
        j = st.h_owner[y]
        rows = st.block32[i, j][idx]
        cy = st.cand[j][st.h_local[y]]
        for part in (cy & ~st.sp[j], cy & st.sp[j]):
            size = int(part.sum())
            if size == 0:
                continue
            cnt = rows @ part.astype(np.float32)
            ok &= (cnt >= (delta - eps) * size - 1e-6) & (cnt <= (delta + eps) * size + 1e-6)
    return ok


@dataclass
class StepOutcome:
    x: int
    v: int
    t: int
    pool: str
    choice_size: int
    new_critical: list[int]


def embed_step(st: EmbeddingState, instance=None, ledger=None, rng=None) -> StepOutcome:
    """One RGA step: choose φ(x_t), shrink successors' candidates, update the queue."""
    rng = st.rng if rng is None else rng
    led = st.ledger
    x = st.sequence[st.t]
    t = st.t + 1
    i = st.h_owner[x]
    xl = st.h_local[x]
    special = bool(st.imp_mask[x] or st.in_queue[x])
    pool_mask = st.sp[i] if special else ~st.sp[i]
    avail = st.cand[i][xl] & st.free[i] & pool_mask
    idx = np.flatnonzero(avail)
    if len(idx):
        idx = idx[_feasible_mask(st, x, idx)]
    size = len(idx)
    st.choice_sizes.append(size)
    st.pool_min[i] = min(st.pool_min[i], size)
    ni = len(st.V[i])
    if size < led.f("gamma") / 2 * ni:
        st.small_choice_steps += 1
    if size == 0:
        raise EmptyPool(f"no admissible image for vertex {x} at step {t}", t=t,
                        context={"vertex": x, "class": i, "special": special})
    vl = int(idx[rng.integers(size)])
    v = st.V[i][vl]
    st.phi[x] = v
    st.phi_local[x] = vl
    st.time_of[x] = t
    st.embedded[x] = True
    st.free[i][vl] = False
    if not st.sp[i][vl]:
        st.aord[i] -= st.cand[i][:, vl]
    # Step 2
    delta, eps = led.f("delta"), led.f("eps_check")
    for y in st.succ[x]:
        j = st.h_owner[y]
        yl = st.h_local[y]
        st.cand[j][yl] &= st.block[i, j][vl]
        st.pi[y] += 1
        row = st.cand[j][yl]
        st.aord[j][yl] = int((row & st.free[j] & ~st.sp[j]).sum())
        if y not in st.restricted:
            k = int(st.pi[y])
            for name, part, base in (("ord", row & ~st.sp[j], st.ord0[j]), ("sp", row & st.sp[j], st.sp0[j])):
                s = int(part.sum())
                lo, hi = base * (delta - eps) ** k, base * (delta + eps) ** k
                if not (lo - 1e-6 <= s <= hi + 1e-6):
                    st.candidate_size_violations.append(f"t={t} y={y} {name}: {s} outside [{lo:.2f}, {hi:.2f}]")
    # Step 3
    gamma = led.f("gamma")
    new = []
    for j in range(st.r):
        Xj = st.X[j]
        if not Xj:
            continue
        idxs = np.asarray(Xj)
        crit = (st.aord[j] < gamma * len(st.V[j])) & ~st.embedded[idxs] & ~st.imp_mask[idxs] & ~st.in_queue[idxs]
        for k in np.flatnonzero(crit):
            y = Xj[k]
            st.in_queue[y] = True
            st.queue_time[y] = t + 1
            st.queue_count[j] += 1
            new.append(y)
    st.t = t
    eps_p = led.f("eps_prime")
    for j in range(st.r):
        if st.queue_count[j] > eps_p * len(st.V[j]) + 1e-9:
            raise QueueOverflow(f"queue of class {j} holds {st.queue_count[j]} > ε′·n_{j}", t=t,
                                context={"class": j, "size": st.queue_count[j]})
    return StepOutcome(x, v, t, "special" if special else "ordinary", size, new)


def almost_spanning_set(instance: BlowupInstance, stop_fraction: float) -> set[int]:
    """First (1−μ)n_i vertices of each class in the ordering."""
    pos = {v: k for k, v in enumerate(instance.order)}
    keep = set()
    for Xi in instance.h_part.classes:
        ordered = sorted(Xi, key=pos.__getitem__)
        leave = min(len(ordered), math.ceil(stop_fraction * len(ordered) - 1e-12))
        keep.update(ordered[: len(ordered) - leave])
    return keep


def run_rga(instance: BlowupInstance, ledger: ConstantsLedger, embed_set, rng_seed=None,
            spanning: bool = True, extended: bool = False, on_step=None) -> tuple[EmbeddingState | None, EmbedReport]:
    """Initialise and loop embed_step over ``embed_set``; failures become report data."""
    from .errors import EmbeddingFailure
    st = None
    try:
        st = initialise(instance, ledger, None, rng_seed, embed_set, spanning, extended)
        while not st.done:
            out = embed_step(st)
            if on_step is not None:
                on_step(st, out)
    except EmbeddingFailure as exc:
        return st, _report(st, instance, False, type(exc).__name__, str(exc), exc.t)
    return st, _report(st, instance, True)


def run_almost_spanning(instance: BlowupInstance, ledger: ConstantsLedger,
                        restrictions: ImageRestrictions | None, stop_fraction: float,
                        rng_seed=None, extended: bool = False):
    if restrictions is not None:
        instance.restrictions = restrictions
    return run_rga(instance, ledger, almost_spanning_set(instance, stop_fraction), rng_seed,
                   spanning=False, extended=extended)


def _report(st, instance, ok, kind=None, msg=None, t=None) -> EmbedReport:
    if st is None:
        r = instance.h_part.r
        return EmbedReport(False, 0, 0, [0] * r, [0] * r, [], kind, msg)
    violations = []
    violations += homomorphism_violations(st)
    violations += restriction_violations(st)
    diag = dict(st.diag)
    diag["candidate_size_violations"] = len(st.candidate_size_violations)
    diag["candidate_size_examples"] = st.candidate_size_violations[:5]
    diag["small_choice_steps"] = st.small_choice_steps
    diag["choice_min"] = min(st.choice_sizes) if st.choice_sizes else None
    pool_min = [int(p) if p != math.inf else 0 for p in st.pool_min]
    return EmbedReport(ok and not violations, st.t if t is None else t, st.T, list(st.queue_count),
                       pool_min, violations, kind, msg, diag)


# ---------------------------------------------------------------------------
# oracles
def homomorphism_violations(st: EmbeddingState) -> list[str]:
    g = st.instance.g
    out = []
    for x, v in st.phi.items():
        for y in st.instance.h.neighbors(x):
            if y in st.phi and x < y and not g.has_edge(v, st.phi[y]):
                out.append(f"edge {x}-{y} not mapped to an edge")
    if len(set(st.phi.values())) != len(st.phi):
        out.append("φ is not injective")
    return out


def restriction_violations(st: EmbeddingState) -> list[str]:
    restr = st.instance.restrictions
    if restr is None:
        return []
    return [f"vertex {x} placed outside I(x)" for x, v in st.phi.items()
            if restr.allowed(x) is not None and v not in restr.allowed(x)]


def recompute_candidates(st: EmbeddingState, x: int, before_t: int | None = None) -> set[int]:
    """C_{t,x} from scratch: V_i ∩ ⋂ N(φ(y)) over predecessors embedded before t (∩ I(x))."""
    g = st.instance.g
    i = st.h_owner[x]
    out = set(st.V[i])
    restr = st.instance.restrictions
    if restr is not None and restr.allowed(x) is not None:
        out &= restr.allowed(x)
    for y in st.instance.h.neighbors(x):
        if y in st.phi and st.pos[y] < st.pos[x]:
            if before_t is None or st.time_of[y] < before_t:
                out &= g.neighbors(st.phi[y])
    return out


def candidate_mismatches(st: EmbeddingState) -> list[int]:
    return [x for x in range(st.instance.h.n)
            if not st.embedded[x] and recompute_candidates(st, x) != st.candidate_set(x)]
