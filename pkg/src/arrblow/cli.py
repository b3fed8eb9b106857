"""Command-line experiment runner. Every subcommand writes JSON; graphs use the edge-list format."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .arrangeability import arrangeability_of_ordering, heuristic_ordering, stable_ending_reorder
from .completion import verify_embedding
from .concentration import (adversarial_processes, consecutive_family, independent_process,
                            pseudo_chernoff_validate, tuple_adversaries, tuple_chernoff_validate,
                            tuple_envelope, DependentBernoulliProcess)
from .errors import ArrBlowError
from .generators import (BlowupHostSpec, blowup_host, bfs_distance, domination_number, gnp,
                         optimality_gk, path_power, random_bounded_degree, random_forest,
                         triangle_factor_instance)
from .graph_core import (Graph, Partition, RPartitionedGraph, check_r_partition, complete_graph,
                         dump_edge_list, load_edge_list)
from .pipeline import embed_pipeline, ffactor_run, random_restrictions, universality_run
from .presets import PRESETS
from .regularity import BipartitePairView, sample_regularity_probe
from .rga import ImageRestrictions, make_ledger
from .search import find_embedding


class SpecError(Exception):
    """Bad command-line input or experiment spec."""


# -- helpers ---------------------------------------------------------------
def _read_graph(path) -> Graph:
    try:
        return load_edge_list(Path(path).read_text())
    except OSError as exc:
        raise SpecError(f"cannot read graph {path}: {exc}") from None


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read JSON {path}: {exc}") from None


def _write(out: Path, name: str, obj) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    p = out / name
    if isinstance(obj, str):
        p.write_text(obj)
    else:
        p.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable))
    return p


def _jsonable(o):
    if hasattr(o, "tolist"):
        return o.tolist()
    if isinstance(o, (set, frozenset, tuple)):
        return sorted(o) if isinstance(o, (set, frozenset)) else list(o)
    return str(o)


def _seeds(args) -> list[int]:
    if args.seeds:
        out = []
        for part in args.seeds.split(","):
            if "-" in part:
                lo, hi = part.split("-")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
        return out
    return [args.seed + k for k in range(args.runs)]


def _ledger(args, a: int, delta_R: int, delta: float, kappa: float = 1.0, C: int = 0, c: float = 1.0,
            preset: str = "spanning"):
    consts = dict(_read_json(args.constants)) if getattr(args, "constants", None) else {}
    if args.mode == "paper":
        base = {k: consts.get(k, v) for k, v in dict(C=C, a=max(a, 1), delta_R=delta_R, kappa=kappa,
                                                     delta=delta, c=c, mu=PRESETS[preset]["mu"]).items()}
        return make_ledger("paper", **base)
    vals = dict(PRESETS[getattr(args, "preset", None) or preset])
    vals.update({k: v for k, v in consts.items() if k in vals})
    base = dict(C=C, a=a, delta_R=delta_R, kappa=kappa, delta=delta, c=c)
    base.update({k: v for k, v in consts.items() if k in base})
    return make_ledger("practical", **base, **vals)


def _pool_map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# -- embed -----------------------------------------------------------------
def _embed_instance(args, seed: int):
    if args.instance == "triangle-factor":
        n_i = args.cluster_size
        h, hp = triangle_factor_instance(n_i)
        R = complete_graph(3)
        host = blowup_host(BlowupHostSpec(R, (n_i,) * 3, args.density, seed), check_eps=None)
        return h, hp, host.graph, host.partition, R
    if args.instance == "files":
        need = [args.target, args.target_partition, args.host, args.host_partition, args.reduced]
        if not all(need):
            raise SpecError("--instance files needs --target, --target-partition, --host, "
                            "--host-partition and --reduced")
        h, g = _read_graph(args.target), _read_graph(args.host)
        hp = Partition(_read_json(args.target_partition))
        gp = Partition(_read_json(args.host_partition))
        return h, hp, g, gp, _read_graph(args.reduced)
    raise SpecError(f"unknown instance kind {args.instance!r}")


def _embed_one(payload):
    args, seed = payload
    h, hp, g, gp, R = _embed_instance(args, seed)
    delta = args.delta if args.delta is not None else args.density
    kappa = max(hp.sizes) / max(1, min(hp.sizes))
    spanning = args.stop_fraction is None
    led = _ledger(args, heuristic_ordering(h).a, R.max_degree(), delta, kappa,
                  C=args.families if args.restrict else 0, c=args.restrict_c,
                  preset="spanning" if spanning else "almost")
    restr = None
    if args.restrictions:
        restr = ImageRestrictions.from_dict(_read_json(args.restrictions))
    elif args.restrict:
        size = max(1, -(-min(gp.sizes) // 2))
        restr = random_restrictions(hp, gp, args.restrict, size, args.families, seed)
    res = embed_pipeline(h, hp, g, gp, R, led, restr, seed=seed, retries=args.retries,
                         spanning=spanning, stop_fraction=args.stop_fraction, monitor=args.monitor)
    rep = res.to_dict()
    rep["seed"] = seed
    rep["ledger"] = led.to_dict()
    return rep


def cmd_embed(args) -> dict:
    seeds = _seeds(args)
    if not seeds:
        raise SpecError("seed list is empty")
    reports = _pool_map(_embed_one, [(args, s) for s in seeds], args.threads)
    out = Path(args.out)
    for rep in reports:
        _write(out, f"embed_seed{rep['seed']}.json", rep)
    agg = {"kind": "embed", "seeds": seeds, "successes": sum(r["success"] for r in reports),
           "success_rate": sum(r["success"] for r in reports) / len(reports),
           "attempts": {str(r["seed"]): r["attempts_used"] for r in reports}}
    _write(out, "embed_aggregate.json", agg)
    return agg


# -- ffactor ---------------------------------------------------------------
_FACTORS = {"edge": Graph(2, [(0, 1)]), "k3": complete_graph(3), "k4": complete_graph(4),
            "p3": Graph(3, [(0, 1), (1, 2)]), "c4": Graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])}


def cmd_ffactor(args) -> dict:
    f = _FACTORS.get(args.factor) if args.factor in _FACTORS else _read_graph(args.factor)
    delta = args.delta if args.delta is not None else args.density
    rows = []
    for seed in _seeds(args):
        def factory(a, dR):
            return _ledger(args, a, dR, delta)
        rep = ffactor_run(f, args.r, args.k, args.cluster_size, args.density, factory, seed, args.retries)
        rep["seed"] = seed
        rows.append(rep)
        _write(Path(args.out), f"ffactor_seed{seed}.json", rep)
    agg = {"kind": "ffactor", "success_rate": sum(r["success"] for r in rows) / len(rows),
           "seeds": [r["seed"] for r in rows]}
    _write(Path(args.out), "ffactor_aggregate.json", agg)
    return agg


# -- universality ----------------------------------------------------------
def universality_targets(n: int, forests: int, bounded: int, max_degree: int, avg_degree: float,
                         seed: int) -> list[Graph]:
    return ([random_forest(n, min(3, max_degree), 5, seed * 1000 + s) for s in range(forests)]
            + [random_bounded_degree(n, max_degree, avg_degree, seed * 1000 + 500 + s) for s in range(bounded)])


def cmd_universality(args) -> dict:
    rows = []
    delta = args.delta if args.delta is not None else args.p
    for seed in _seeds(args):
        targets = universality_targets(args.n, args.forests, args.bounded, args.max_degree,
                                       args.avg_degree, seed)
        if args.targets:
            targets += [_read_graph(t) for t in args.targets]

        def factory(a, dR, hp):
            kappa = max(hp.sizes) / max(1, min(hp.sizes))
            return _ledger(args, a, dR, delta, kappa, preset="universality")
        rep = universality_run(args.n, args.p, targets, factory, seed, args.retries, args.classes)
        rep["seed"] = seed
        rows.append(rep)
        _write(Path(args.out), f"universality_seed{seed}.json", rep)
    agg = {"kind": "universality", "success_rate": sum(r["success_rate"] for r in rows) / len(rows)}
    _write(Path(args.out), "universality_aggregate.json", agg)
    return agg


# -- optimality ------------------------------------------------------------
def optimality_report(n: int, k: int, seed: int, probe_eps: float = 0.1, probe_trials: int = 2000,
                      search: bool = True, dom_n: int = 25, dom_p: float = 0.9) -> dict:
    inst = optimality_gk(n, k, seed)
    g = inst.host
    degs = g.degrees()
    probe = sample_regularity_probe(BipartitePairView(g, inst.V1, inst.V2), probe_eps, probe_trials, seed)
    rep = {"n": n, "k": k, "seed": seed,
           "all_degrees_half": all(d == n // 2 for d in degs),
           "degree_range": [min(degs), max(degs)],
           "distance_W1_W2": bfs_distance(g, inst.W[0], inst.W[1]),
           "regularity_probe": probe.to_dict()}
    if search:
        t = find_embedding(inst.tree, g, node_limit=5_000_000)
        s = find_embedding(inst.restricted_star, g, inst.star_restrictions, node_limit=5_000_000)
        rep["tree_embeds"] = t.found if t.exhausted or t.found else None
        rep["tree_search_nodes"] = t.nodes
        rep["restricted_star_embeds"] = s.found if s.exhausted or s.found else None
    hg = gnp(dom_n, dom_p, seed)
    dom = domination_number(hg, eps=0.1, p=dom_p)
    rep["domination"] = {"n": dom_n, "p": dom_p, "lower": dom.lower, "upper": dom.upper,
                         "exact": dom.exact, "printed_bound": dom.printed_bound}
    return rep


def cmd_optimality(args) -> dict:
    rows = []
    for seed in _seeds(args):
        rows.append(optimality_report(args.n, args.k, seed, args.probe_eps, args.probe_trials,
                                      search=args.n <= args.search_limit, dom_n=args.dom_n, dom_p=args.dom_p))
    table = {"kind": "optimality", "rows": rows}
    _write(Path(args.out), "optimality.json", table)
    return table


# -- validate --------------------------------------------------------------
def validation_suite(n: int, trials: int, seed: int, p1: float = 0.3, p2: float = 0.5, c: float = 0.5,
                     a: int = 2, p: float = 0.5) -> dict:
    procs = [independent_process(n, p1)] + adversarial_processes(n, p1, p2)
    cher = [pseudo_chernoff_validate(pr, c, trials, seed + k).to_dict() for k, pr in enumerate(procs)]
    fam = consecutive_family(n // a, a)
    env = tuple_envelope(n, fam, p)
    base = DependentBernoulliProcess(n, p, 1.0, lambda i, hist, sums, rng: p, "independent", env)
    tup = [tuple_chernoff_validate(pr, fam, p, trials, seed + 10 + k).to_dict()
           for k, pr in enumerate([base] + tuple_adversaries(n, fam, p))]
    ok = all(r["pass"] for r in cher + tup)
    return {"n": n, "trials": trials, "pass": ok, "pseudo_chernoff": cher, "tuple_chernoff": tup}


def cmd_validate(args) -> dict:
    rep = validation_suite(args.n, args.trials, args.seed)
    _write(Path(args.out), "validate.json", rep)
    return rep


# -- gen / order / check ---------------------------------------------------
def cmd_gen(args) -> dict:
    out = Path(args.out)
    meta: dict = {"kind": args.kind, "seed": args.seed}
    if args.kind == "gnp":
        g = gnp(args.n, args.p, args.seed)
    elif args.kind == "forest":
        g = random_forest(args.n, args.max_degree, args.components, args.seed)
    elif args.kind == "bounded":
        g = random_bounded_degree(args.n, args.max_degree, args.avg_degree, args.seed)
    elif args.kind == "path-power":
        g = path_power(args.n, args.power)
    elif args.kind == "triangle-factor":
        g, part = triangle_factor_instance(args.n)
        _write(out, f"{args.name}.partition.json", part.to_json())
        _write(out, f"{args.name}.reduced.txt", dump_edge_list(complete_graph(3)))
    elif args.kind == "blowup":
        R = complete_graph(args.r)
        host = blowup_host(BlowupHostSpec(R, (args.n,) * args.r, args.p, args.seed), check_eps=0.1)
        g = host.graph
        _write(out, f"{args.name}.partition.json", host.partition.to_json())
        _write(out, f"{args.name}.reduced.txt", dump_edge_list(R))
        meta["super_regular_flags"] = {f"{i}-{j}": v for (i, j), v in host.pair_flags.items()}
    elif args.kind == "optimality":
        inst = optimality_gk(args.n, args.k, args.seed)
        g = inst.host
        _write(out, f"{args.name}.tree.txt", dump_edge_list(inst.tree))
        meta.update({"W": inst.W, "U": inst.U, "roots": inst.roots})
    else:
        raise SpecError(f"unknown generator {args.kind!r}")
    path = _write(out, f"{args.name}.txt", dump_edge_list(g))
    meta.update({"graph": str(path), "n": g.n, "m": g.m})
    _write(out, f"{args.name}.meta.json", meta)
    return meta


def cmd_order(args) -> dict:
    h = _read_graph(args.graph)
    ordering = heuristic_ordering(h)
    rep = {"order": list(ordering.order), "a": ordering.a}
    if args.partition:
        if not args.reduced:
            raise SpecError("--partition needs --reduced")
        part = Partition(_read_json(args.partition))
        R = _read_graph(args.reduced)
        kappa = max(part.sizes) / max(1, min(part.sizes))
        se = stable_ending_reorder(RPartitionedGraph(h, R, part), ordering, kappa, R.max_degree(), mu=args.mu)
        rep.update({"order": list(se.ordering.order), "a": se.ordering.a, "mu": se.mu, "W": list(se.W),
                    "bound": se.bound, "source_a": ordering.a})
    _write(Path(args.out), "order.json", rep)
    return rep


def cmd_check(args) -> dict:
    if args.what == "ordering":
        h = _read_graph(args.graph)
        order = _read_json(args.order)
        order = order["order"] if isinstance(order, dict) else order
        if sorted(order) != list(range(h.n)):
            raise SpecError("ordering is not a permutation")
        rep = {"a": arrangeability_of_ordering(h, order), "edges": h.m, "n": h.n}
        rep["edge_bound_holds"] = h.m <= rep["a"] * h.n
    elif args.what == "embedding":
        h, g = _read_graph(args.target), _read_graph(args.graph)
        phi = _read_json(args.phi)
        phi = phi["phi"] if isinstance(phi, dict) else phi
        restr = ImageRestrictions.from_dict(_read_json(args.restrictions)) if args.restrictions else None
        hp = Partition(_read_json(args.target_partition)) if args.target_partition else None
        gp = Partition(_read_json(args.partition)) if args.partition else None
        rep = verify_embedding(h, g, phi, hp, gp, restr).to_dict()
    elif args.what == "partition":
        g = _read_graph(args.graph)
        rep = {"r_partition": check_r_partition(g, _read_graph(args.reduced),
                                                Partition(_read_json(args.partition)))}
    elif args.what == "regularity":
        g = _read_graph(args.graph)
        part = Partition(_read_json(args.partition))
        i, j = args.pair
        rep = sample_regularity_probe(BipartitePairView(g, part.classes[i], part.classes[j]),
                                      args.eps, args.trials, args.seed).to_dict()
    else:
        raise SpecError(f"unknown check {args.what!r}")
    _write(Path(args.out), f"check_{args.what}.json", rep)
    return rep


# -- parser ----------------------------------------------------------------
def _global_flags(parser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=d(0), help="base seed (default 0)")
    parser.add_argument("--mode", choices=["paper", "practical"], default=d("practical"),
                        help="constants ledger mode")
    parser.add_argument("--out", default=d("out"), help="output directory")
    parser.add_argument("--threads", type=int, default=d(1), help="worker processes for seed fan-out")


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    p = argparse.ArgumentParser(prog="arrblow",
                                description="Randomized greedy embeddings into blown-up hosts.")
    _global_flags(p, suppress=False)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def seeds_opts(sp, runs=1):
        sp.add_argument("--seeds", help="comma list or ranges, e.g. 0-19")
        sp.add_argument("--runs", type=int, default=runs, help="number of consecutive seeds from --seed")
        sp.add_argument("--retries", type=int, default=3)
        sp.add_argument("--constants", help="JSON file overriding ledger constants")
        sp.add_argument("--preset", choices=sorted(PRESETS))

    e = sub.add_parser("embed", parents=[common], help="full embedding pipeline")
    e.add_argument("--instance", choices=["triangle-factor", "files"], default="triangle-factor")
    e.add_argument("--cluster-size", type=int, default=400)
    e.add_argument("--density", type=float, default=0.5, help="host pair density")
    e.add_argument("--delta", type=float, help="ledger δ (default: --density)")
    e.add_argument("--target"), e.add_argument("--target-partition")
    e.add_argument("--host"), e.add_argument("--host-partition"), e.add_argument("--reduced")
    e.add_argument("--stop-fraction", type=float, help="almost-spanning mode: leave this share unembedded")
    e.add_argument("--restrict", type=int, default=0, help="restricted vertices per class")
    e.add_argument("--families", type=int, default=2, help="restriction sets per class")
    e.add_argument("--restrict-c", type=float, default=0.5, help="ledger c for restrictions")
    e.add_argument("--restrictions", help="JSON file with explicit image restrictions")
    e.add_argument("--monitor", action="store_true", help="record auxiliary-graph diagnostics")
    seeds_opts(e)
    e.set_defaults(func=cmd_embed)

    f = sub.add_parser("ffactor", parents=[common], help="F-factor into K_r blow-ups")
    f.add_argument("--factor", default="k3", help="edge|k3|k4|p3|c4 or an edge-list file")
    f.add_argument("--r", type=int, default=3)
    f.add_argument("--k", type=int, default=2)
    f.add_argument("--cluster-size", type=int, default=300)
    f.add_argument("--density", type=float, default=0.6)
    f.add_argument("--delta", type=float)
    seeds_opts(f)
    f.set_defaults(func=cmd_ffactor)

    u = sub.add_parser("universality", parents=[common], help="G(n,p) universality sweep")
    u.add_argument("--n", type=int, default=400)
    u.add_argument("--p", type=float, default=0.5)
    u.add_argument("--delta", type=float)
    u.add_argument("--forests", type=int, default=10)
    u.add_argument("--bounded", type=int, default=10)
    u.add_argument("--max-degree", type=int, default=5)
    u.add_argument("--avg-degree", type=float, default=2.0)
    u.add_argument("--classes", type=int, help="fixed class count (default: fewest that colour equitably)")
    u.add_argument("--targets", nargs="*", help="extra target edge-list files")
    seeds_opts(u)
    u.set_defaults(func=cmd_universality)

    o = sub.add_parser("optimality", parents=[common], help="lower-bound constructions")
    o.add_argument("--n", type=int, default=2000)
    o.add_argument("--k", type=int, default=10)
    o.add_argument("--probe-eps", type=float, default=0.1)
    o.add_argument("--probe-trials", type=int, default=2000)
    o.add_argument("--search-limit", type=int, default=64, help="largest n for exhaustive search")
    o.add_argument("--dom-n", type=int, default=25)
    o.add_argument("--dom-p", type=float, default=0.9)
    o.add_argument("--seeds")
    o.add_argument("--runs", type=int, default=1)
    o.set_defaults(func=cmd_optimality)

    v = sub.add_parser("validate", parents=[common], help="concentration validators")
    v.add_argument("--n", type=int, default=200)
    v.add_argument("--trials", type=int, default=100_000)
    v.set_defaults(func=cmd_validate)

    g = sub.add_parser("gen", parents=[common], help="generate graphs")
    g.add_argument("kind", choices=["gnp", "forest", "bounded", "path-power", "triangle-factor",
                                    "blowup", "optimality"])
    g.add_argument("--n", type=int, required=True, help="order (cluster size / copies for blow-ups)")
    g.add_argument("--p", type=float, default=0.5)
    g.add_argument("--r", type=int, default=3)
    g.add_argument("--k", type=int, default=10)
    g.add_argument("--max-degree", type=int, default=3)
    g.add_argument("--avg-degree", type=float, default=2.0)
    g.add_argument("--components", type=int, default=1)
    g.add_argument("--power", type=int, default=2)
    g.add_argument("--name", default="graph")
    g.set_defaults(func=cmd_gen)

    od = sub.add_parser("order", parents=[common], help="arrangeable ordering, optionally with stable ending")
    od.add_argument("graph")
    od.add_argument("--partition"), od.add_argument("--reduced")
    od.add_argument("--mu", type=float)
    od.set_defaults(func=cmd_order)

    c = sub.add_parser("check", parents=[common], help="independent verifiers")
    c.add_argument("what", choices=["ordering", "embedding", "partition", "regularity"])
    c.add_argument("--graph", required=True, help="host graph (or the graph being ordered)")
    c.add_argument("--target"), c.add_argument("--phi"), c.add_argument("--order")
    c.add_argument("--partition"), c.add_argument("--target-partition"), c.add_argument("--reduced")
    c.add_argument("--restrictions")
    c.add_argument("--pair", type=int, nargs=2, default=[0, 1])
    c.add_argument("--eps", type=float, default=0.1)
    c.add_argument("--trials", type=int, default=2000)
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        result = args.func(args)
    except (SpecError, ArrBlowError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(json.dumps(result, default=_jsonable, sort_keys=True))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
