"""End-to-end runs: ordering, stable ending, greedy stage, monitoring, matching, verification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .arrangeability import heuristic_ordering, stable_ending_reorder
from .completion import (build_auxiliary, complete_embedding, monitor_Ri, perfect_matching,
                         restrict_to_free, verify_embedding)
from .concentration import equitable_coloring
from .errors import ArrBlowError, ConstructionFailed, DimensionError, EmbeddingFailure
from .generators import BlowupHostSpec, blowup_host, f_factor_target, gnp
from .graph_core import Graph, Partition, RPartitionedGraph, complete_graph
from .rga import (BlowupInstance, ConstantsLedger, ImageRestrictions, almost_spanning_set,
                  candidate_mismatches, run_rga)


@dataclass
class Attempt:
    seed: int
    report: dict
    stage: str
    matchings: dict = field(default_factory=dict)
    monitors: list = field(default_factory=list)


@dataclass
class PipelineResult:
    success: bool
    phi: list[int] | None
    attempts: list[Attempt]
    verification: dict | None
    ordering_a: int | None = None
    W: list[int] | None = None
    candidate_mismatches: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["attempts_used"] = len(self.attempts)
        return d


def attempt_seed(seed: int, attempt: int) -> int:
    return int(np.random.SeedSequence([int(seed), attempt]).generate_state(1)[0])


def random_restrictions(h_part: Partition, g_part: Partition, per_class: int, set_size: int,
                        families: int, rng_seed=None, exclude=()) -> ImageRestrictions:
    """Pick ``per_class`` target vertices per class and ``families`` random host subsets per class."""
    rng = np.random.default_rng(rng_seed)
    exclude = set(exclude)
    fams, asg = {}, {}
    for i, (Xi, Vi) in enumerate(zip(h_part.classes, g_part.classes)):
        Vi = list(Vi)
        fams[i] = [frozenset(rng.choice(Vi, min(set_size, len(Vi)), replace=False).tolist())
                   for _ in range(families)]
        pool = [x for x in Xi if x not in exclude]
        k = min(per_class, len(pool))
        for x in rng.choice(pool, k, replace=False) if k else []:
            asg[int(x)] = (i, int(rng.integers(families)))
    return ImageRestrictions(fams, asg)


def embed_pipeline(h: Graph, h_part: Partition, g: Graph, g_part: Partition, reduced: Graph,
                   ledger: ConstantsLedger, restrictions: ImageRestrictions | None = None,
                   seed: int = 0, retries: int = 3, spanning: bool = True,
                   stop_fraction: float | None = None, monitor: bool = False,
                   monitor_eps: float | None = None, order=None,
                   check_candidates: bool = False) -> PipelineResult:
    """Run the full embedding with up to ``retries`` fresh-seed attempts.

    Spanning mode reorders for a stable ending of fraction ``ledger.mu``,
    runs the greedy stage on everything outside it and closes with one
    perfect matching per class. Almost-spanning mode embeds the first
    (1 − stop_fraction)·n_i vertices of each class and stops.
    """
    ordering = heuristic_ordering(h) if order is None else order
    rp = RPartitionedGraph(h, reduced, h_part)
    W: list[int] = []
    if spanning:
        try:
            se = stable_ending_reorder(rp, ordering, ledger.f("kappa"), ledger.delta_R, mu=ledger.f("mu"))
        except ConstructionFailed as exc:
            rep = {"success": False, "failure": "ConstructionFailed", "failure_message": str(exc)}
            return PipelineResult(False, None, [Attempt(seed, rep, "stable-ending")], None, ordering.a)
        ordering = se.ordering
        W = list(se.W)
        embed_set = set(range(h.n)) - set(W)
    inst = BlowupInstance(h, h_part, g, g_part, reduced, list(ordering.order), restrictions)
    if not spanning:
        embed_set = almost_spanning_set(inst, ledger.f("mu") if stop_fraction is None else stop_fraction)
    attempts = []
    mism = 0
    for k in range(max(1, retries)):
        s = attempt_seed(seed, k)
        st, rep = run_rga(inst, ledger, embed_set, rng_seed=s, spanning=spanning)
        att = Attempt(s, rep.to_dict(), "greedy")
        attempts.append(att)
        if st is not None and check_candidates:
            mism += len(candidate_mismatches(st))
        if not rep.success:
            continue
        if monitor:
            eps_m = ledger.f("eps_prime") if monitor_eps is None else monitor_eps
            for frac in (0.25, 0.5, 0.75, 1.0):
                t = max(1, min(st.t + 1, math.ceil(frac * st.t) + (frac == 1.0)))
                for i in range(st.r):
                    aux = build_auxiliary(st, i, t)
                    m = monitor_Ri(aux, eps_m, rng_seed=s + i, delta=ledger.f("delta"),
                                   eps=ledger.f("eps"), a=ledger.a)
                    att.monitors.append({"t": t, "class": i, "pass": m.passed,
                                         "envelope_violations": m.envelope_violations})
        if not spanning:
            phi = dict(st.phi)
            ver = verify_embedding(h, g, phi, h_part, g_part, restrictions, partial=True)
            if ver.ok:
                return PipelineResult(True, [phi.get(x, -1) for x in range(h.n)], attempts,
                                      ver.to_dict(), ordering.a, None, mism)
            att.stage = "verify"
            continue
        att.stage = "matching"
        matchings, ok = {}, True
        for i in range(st.r):
            aux = restrict_to_free(build_auxiliary(st, i), st)
            res = perfect_matching(aux)
            matchings[i] = res
            att.matchings[i] = {"perfect": res.perfect, "size": len(res.matching), "left": len(aux.left),
                                "min_degree": int(aux.degrees().min()) if len(aux.left) else None,
                                "hall_violator": res.hall_violator}
            ok &= res.perfect
        if not ok:
            att.report["success"] = False
            att.report["failure"] = "ImperfectMatching"
            continue
        try:
            emb = complete_embedding(st, inst, matchings)
        except ArrBlowError as exc:
            att.report["success"] = False
            att.report["failure"] = type(exc).__name__
            att.report["failure_message"] = str(exc)
            continue
        ver = verify_embedding(h, g, emb.phi, h_part, g_part, restrictions)
        att.stage = "verify"
        if ver.ok:
            return PipelineResult(True, emb.phi, attempts, ver.to_dict(), ordering.a, W, mism)
        att.report["success"] = False
        att.report["violations"] = ver.violations
    return PipelineResult(False, None, attempts, None, ordering.a, W or None, mism)


# ---------------------------------------------------------------------------
# F-factors
def r_colouring(f: Graph, r: int) -> list[int]:
    """A proper colouring of ``f`` with colours 0..r-1 found by backtracking."""
    order = sorted(range(f.n), key=lambda v: -f.degree(v))
    col = [-1] * f.n

    def rec(k):
        if k == len(order):
            return True
        v = order[k]
        used = {col[w] for w in f.neighbors(v)}
        for c in range(r):
            if c not in used:
                col[v] = c
                if rec(k + 1):
                    return True
        col[v] = -1
        return False

    if not rec(0):
        raise DimensionError(f"F is not {r}-colourable")
    return col


def equitable_parts(n: int, k: int, r: int) -> list[list[int]]:
    """m_{i,j}: an r-equitable split of n into k·r parts."""
    q, rem = divmod(n, k * r)
    flat = [q + (1 if t < rem else 0) for t in range(k * r)]
    return [flat[i * r:(i + 1) * r] for i in range(k)]


def chunk_lengths(m: list[list[int]], fsize: int) -> list[int]:
    """ℓ_1..ℓ_{k-1} keeping every |m_ij − ℓ_i|F|| and every running sum within |F|."""
    k, r = len(m), len(m[0])
    ells, run = [], [0] * r
    for i in range(k - 1):
        target = sum(run[j] + m[i][j] for j in range(r)) / r
        ell = max(0, round(target / fsize))
        for j in range(r):
            run[j] += m[i][j] - ell * fsize
            if abs(m[i][j] - ell * fsize) > fsize or abs(run[j]) > fsize:
                raise ConstructionFailed("chunk accounting cannot meet the |F| tolerance")
        ells.append(ell)
    return ells


@dataclass
class FactorChunk:
    copies: int
    class_sizes: list[int]
    result: PipelineResult | None = None


def ffactor_run(f: Graph, r: int, k: int, cluster_size: int, p: float, ledger_factory, seed: int = 0,
                retries: int = 3) -> dict:
    """Embed an F-factor on n = k·r·cluster_size vertices into k independent K_r blow-ups.

    ``ledger_factory(a, delta_R)`` returns the ledger for a chunk. Chunks
    1..k-1 hold r·ℓ_i copies of F with colour classes of exactly ℓ_i|F|;
    the last chunk takes what is left, coloured as evenly as rotation allows.
    """
    fsize = f.n
    n = k * r * cluster_size
    copies_total = n // fsize
    col = r_colouring(f, r)
    m = equitable_parts(copies_total * fsize, k, r)
    ells = chunk_lengths(m, fsize)
    counts = [r * e for e in ells]
    counts.append(copies_total - sum(counts))
    if counts[-1] < 0:
        raise ConstructionFailed("chunk lengths exceed the number of copies")
    chunks, copy_start = [], 0
    rng = np.random.default_rng(seed)
    reduced = complete_graph(r)
    all_ok = True
    for i, cnt in enumerate(counts):
        h = f_factor_target(f, cnt)
        classes = [[] for _ in range(r)]
        for c in range(cnt):
            for v in range(fsize):
                classes[(col[v] + c) % r].append(c * fsize + v)
        h_part = Partition(classes)
        sizes = [len(c) for c in classes]
        host = blowup_host(BlowupHostSpec(reduced, tuple(sizes), p, int(rng.integers(2 ** 31))),
                           check_eps=None)
        a = heuristic_ordering(h).a
        res = embed_pipeline(h, h_part, host.graph, host.partition, reduced, ledger_factory(a, r - 1),
                             seed=int(rng.integers(2 ** 31)), retries=retries)
        chunks.append({"copies": cnt, "class_sizes": sizes, "success": res.success,
                       "attempts": len(res.attempts),
                       "failures": [a_.report.get("failure") for a_ in res.attempts if not a_.report.get("success")]})
        all_ok &= res.success
        copy_start += cnt
    return {"n": n, "F_order": fsize, "copies": copies_total, "ell": ells, "chunk_copies": counts,
            "m": m, "covered_vertices": sum(counts) * fsize, "uncovered": n - sum(counts) * fsize,
            "chunks": chunks, "success": bool(all_ok)}


# ---------------------------------------------------------------------------
# universality
def universality_classes(h: Graph, k: int | None = None, k_min: int = 2) -> Partition:
    """Equitable colouring of ``h``; with ``k=None`` the fewest classes the heuristic manages.

    Fewer classes mean larger clusters, which is what the greedy stage needs
    at small n. The search starts at ``k_min`` and never passes Δ+1, where
    an equitable colouring always exists.
    """
    if k is not None:
        return equitable_coloring(h, k, below_bound=True)
    top = h.max_degree() + 1
    for kk in range(max(1, k_min), top):
        try:
            return equitable_coloring(h, kk, below_bound=True)
        except ConstructionFailed:
            continue
    return equitable_coloring(h, max(top, k_min))


def universality_instance(h: Graph, g: Graph, k: int | None, rng_seed=None, k_min: int = 2):
    """Target classes from an equitable colouring, host classes a random split with matching sizes, R = K_k."""
    classes = [list(c) for c in universality_classes(h, k, k_min).classes]
    rng = np.random.default_rng(rng_seed)
    perm = rng.permutation(g.n).tolist()
    g_classes, start = [], 0
    for c in classes:
        g_classes.append(sorted(perm[start:start + len(c)]))
        start += len(c)
    return Partition(classes), Partition(g_classes), complete_graph(len(classes))


def universality_run(n: int, p: float, targets: list[Graph], ledger_factory, seed: int = 0,
                     retries: int = 3, k: int | None = None, k_min: int = 2) -> dict:
    g = gnp(n, p, seed)
    rows = []
    for idx, h in enumerate(targets):
        if h.n != n:
            raise DimensionError("targets must have the host's order")
        hp, gp, R = universality_instance(h, g, k, attempt_seed(seed, 1000 + idx), k_min)
        ordering = heuristic_ordering(h)
        try:
            led = ledger_factory(ordering.a, R.n - 1, hp)
        except ArrBlowError as exc:
            rows.append({"target": idx, "success": False, "error": str(exc)})
            continue
        res = embed_pipeline(h, hp, g, gp, R, led, seed=attempt_seed(seed, idx), retries=retries,
                             order=ordering)
        rows.append({"target": idx, "n": h.n, "m": h.m, "max_degree": h.max_degree(), "a": ordering.a,
                     "classes": hp.r, "success": res.success, "attempts": len(res.attempts),
                     "failures": [a_.report.get("failure") for a_ in res.attempts if not a_.report.get("success")]})
    rate = sum(r["success"] for r in rows) / len(rows) if rows else 1.0
    return {"n": n, "p": p, "targets": rows, "success_rate": rate}
