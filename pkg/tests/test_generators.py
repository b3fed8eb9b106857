import itertools
import json
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from arrblow.arrangeability import arrangeability_of_ordering, heuristic_ordering
from arrblow.errors import DimensionError, TooSparse
from arrblow.generators import (BlowupHostSpec, blowup_host, bfs_distance, domination_number,
                                double_rooted_tree, f_factor_target, gnp, normalize_density,
                                optimality_gk, path_power, random_bipartite, random_bounded_degree,
                                random_forest, triangle_factor_instance)
from arrblow.graph_core import Graph, complete_graph
from arrblow.regularity import BipartitePairView, density, super_regular_check
from arrblow.search import find_embedding
from conftest import graphs
from oracles import adjacency, brute_arrangeability, brute_is_embedding


# gnp ---------------------------------------------------------------------

def test_gnp_extremes():
    assert gnp(12, 0.0, 1).m == 0
    assert gnp(12, 1.0, 1).m == 66


def test_gnp_edge_count_within_three_sigma():
    n, p = 1000, 0.5
    N = n * (n - 1) // 2
    assert abs(gnp(n, p, 3).m - N * p) <= 3 * math.sqrt(N * p * (1 - p))


def test_gnp_deterministic_per_seed():
    assert gnp(50, 0.3, 9) == gnp(50, 0.3, 9)
    assert gnp(50, 0.3, 9) != gnp(50, 0.3, 10)


def test_gnp_rejects_bad_p():
    with pytest.raises(ValueError):
        gnp(5, 1.5)


# blow-up hosts -----------------------------------------------------------

def test_blowup_single_edge_complete():
    host = blowup_host(BlowupHostSpec(complete_graph(2), (5, 6), 1.0, 0), check_eps=None)
    assert host.graph.m == 30


def test_blowup_edgeless_reduced():
    host = blowup_host(BlowupHostSpec(Graph(3), (10, 10, 10), 0.7, 0))
    assert host.graph.m == 0 and host.pair_flags == {}


def test_blowup_k3_pairs_super_regular():
    host = blowup_host(BlowupHostSpec(complete_graph(3), (300, 300, 300), 0.5, 2))
    assert set(host.pair_flags) == {(0, 1), (0, 2), (1, 2)}
    for i, j in host.pair_flags:
        view = BipartitePairView(host.graph, host.partition.classes[i], host.partition.classes[j])
        assert super_regular_check(view, 0.1, 0.25, 300, 1)


@given(st.integers(0, 2 ** 32 - 1))
def test_blowup_no_edges_off_reduced(seed):
    reduced = Graph(4, [(0, 1), (2, 3), (1, 2)])
    host = blowup_host(BlowupHostSpec(reduced, (4, 5, 3, 6), 0.6, seed), check_eps=None)
    owner = host.partition.class_of(host.graph.n)
    for u, v in host.graph.edges():
        assert reduced.has_edge(owner[u], owner[v])


def test_blowup_size_mismatch():
    with pytest.raises(DimensionError):
        blowup_host(BlowupHostSpec(complete_graph(3), (5, 5), 0.5, 0))


# density normalisation ---------------------------------------------------

def _pair(g, a):
    return BipartitePairView(g, range(a), range(a, g.n))


def test_normalize_unchanged_when_at_target():
    g = Graph(4, [(0, 2), (1, 3)])
    g2, rep = normalize_density(_pair(g, 2), 0.5, 0)
    assert g2 == g and rep["edges"] == 2


def test_normalize_complete_half():
    n = 9
    g = random_bipartite(n, n, 1.0, 0)
    g2, rep = normalize_density(_pair(g, n), 0.5, 1)
    assert _pair(g2, n).edge_count() == math.floor(n * n / 2)


def test_normalize_random_pair_keeps_min_degree():
    n = 300
    g = random_bipartite(n, n, 0.6, 5)
    g2, rep = normalize_density(_pair(g, n), 0.5, 6)
    assert rep["min_degree_flag"]
    assert abs(density(_pair(g2, n)) - 0.5) <= 1 / n ** 2


def test_normalize_too_sparse():
    with pytest.raises(TooSparse):
        normalize_density(_pair(random_bipartite(10, 10, 0.2, 1), 10), 0.5)


def test_normalize_keeps_edges_outside_pair():
    g = Graph(5, [(0, 2), (0, 3), (1, 2), (1, 3), (2, 4), (3, 4)])
    g2, _ = normalize_density(BipartitePairView(g, [0, 1], [2, 3]), 0.5, 2)
    assert g2.has_edge(2, 4) and g2.has_edge(3, 4)


# optimality construction -------------------------------------------------

def test_gk_degrees_and_blocks():
    inst = optimality_gk(40, 4, 7)
    assert set(inst.host.degrees()) == {20}
    for i, (Wi, Ui) in enumerate(zip(inst.W, inst.U)):
        other = set(inst.V2) - set(Ui)
        for w in Wi:
            assert set(Ui) <= inst.host.neighbors(w)
            assert not other & inst.host.neighbors(w)
    assert set(inst.U[0]).isdisjoint(inst.U[1]) and len(inst.U[0]) + len(inst.U[1]) == 40


def test_gk_w1_w2_distance_exceeds_two():
    inst = optimality_gk(40, 4, 1)
    assert bfs_distance(inst.host, inst.W[0], inst.W[1]) > 2


def test_gk_bad_parameters():
    for n, k in [(30, 4), (40, 3), (10, 0)]:
        with pytest.raises(DimensionError):
            optimality_gk(n, k)


@pytest.mark.parametrize("n", [4, 9, 16, 25])
def test_double_rooted_tree_shape(n):
    t, (x1, x2) = double_rooted_tree(n)
    s = math.isqrt(n)
    assert t.n == 2 * n and t.m == t.n - 1
    assert nx.is_tree(nx.Graph(t.edges()))
    assert t.max_degree() == s + 1
    assert t.degree(x1) == t.degree(x2) == s
    colour = nx.bipartite.color(nx.Graph(t.edges()))
    sides = [sum(1 for c in colour.values() if c == b) for b in (0, 1)]
    assert sides == [n, n]


def test_tiny_gk_has_no_tree_embedding():
    inst = optimality_gk(16, 4, 0)
    W1 = frozenset(inst.W[0])
    res = find_embedding(inst.tree, inst.host, {inst.roots[0]: W1})
    assert res.exhausted and not res.found


def test_tiny_gk_restricted_star_fails():
    inst = optimality_gk(16, 4, 0)
    res = find_embedding(inst.restricted_star, inst.host, inst.star_restrictions)
    assert res.exhausted and not res.found


def test_tree_embeds_in_complete_bipartite_host():
    t, _ = double_rooted_tree(9)
    kb = Graph(36, [(u, 18 + v) for u in range(18) for v in range(18)])
    res = find_embedding(t, kb)
    assert res.found and not brute_is_embedding(t, kb, [res.embedding[x] for x in range(t.n)])


def _brute_embeds(h, g, restr):
    for img in itertools.permutations(range(g.n), h.n):
        if all(img[x] in restr.get(x, range(g.n)) for x in range(h.n)) and \
                all(g.has_edge(img[u], img[v]) for u, v in h.edges()):
            return True
    return False


@given(graphs(1, 4), graphs(1, 6), st.data())
def test_search_matches_permutation_oracle(h, g, data):
    restr = {}
    if data.draw(st.booleans()):
        x = data.draw(st.integers(0, h.n - 1))
        restr[x] = frozenset(data.draw(st.lists(st.integers(0, g.n - 1), unique=True)))
    res = find_embedding(h, g, restr)
    assert res.found == _brute_embeds(h, g, restr)
    if res.found:
        phi = [res.embedding[x] for x in range(h.n)]
        assert not brute_is_embedding(h, g, phi)


# targets -----------------------------------------------------------------

def test_f_factor_target_k3():
    u = f_factor_target(complete_graph(3), 2)
    assert (u.n, u.m) == (6, 6)


@given(graphs(1, 5), st.integers(1, 3))
def test_factor_arrangeability_and_chromatic_number(f, copies):
    u = f_factor_target(f, copies)
    of = heuristic_ordering(f).order
    concat = [c * f.n + x for c in range(copies) for x in of]
    assert arrangeability_of_ordering(u, concat) == arrangeability_of_ordering(f, of)
    assert brute_arrangeability(adjacency(u), concat) == arrangeability_of_ordering(f, of)

    def chi(g):
        for k in range(1, g.n + 1):
            for col in itertools.product(range(k), repeat=g.n):
                if all(col[a] != col[b] for a, b in g.edges()):
                    return k
        return 0
    if u.n <= 8:
        assert chi(u) == chi(f)


def test_triangle_factor_instance_classes():
    h, part = triangle_factor_instance(4)
    assert h.m == 12 and part.sizes == [4, 4, 4]
    owner = part.class_of(h.n)
    assert all(owner[u] != owner[v] for u, v in h.edges())


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 40), st.integers(1, 4))
def test_random_forest_is_forest(seed, n, dmax):
    f = random_forest(n, dmax, 2, seed)
    nxg = nx.empty_graph(n)
    nxg.add_edges_from(f.edges())
    assert nx.is_forest(nxg)
    assert f.max_degree() <= dmax and f.m < n


@given(st.integers(0, 2 ** 32 - 1))
def test_random_bounded_degree(seed):
    g = random_bounded_degree(80, 5, 2.0, seed)
    assert g.max_degree() <= 5 and g.m == 80


def test_path_power():
    g = path_power(6, 2)
    assert g.m == 5 + 4 and g.has_edge(0, 2) and not g.has_edge(0, 3)


# domination --------------------------------------------------------------

def test_domination_complete_and_edgeless():
    assert tuple(domination_number(complete_graph(7))) == (1, 1)
    assert tuple(domination_number(Graph(6))) == (6, 6)


def _brute_domination(g):
    for k in range(0, g.n + 1):
        for S in itertools.combinations(range(g.n), k):
            cover = set(S)
            for v in S:
                cover |= g.neighbors(v)
            if len(cover) == g.n:
                return k


def test_domination_dense_gnp_exact():
    g = gnp(20, 0.9, 4)
    res = domination_number(g)
    assert res.exact and res.lower == res.upper == _brute_domination(g) >= 1
    assert len(res.greedy_set) >= res.lower


@given(graphs(1, 9))
def test_domination_matches_oracle(g):
    res = domination_number(g)
    assert res.lower == res.upper == _brute_domination(g)


def test_domination_large_bounds_sandwich():
    g = gnp(200, 0.5, 2)
    res = domination_number(g, eps=0.1, p=0.5)
    assert res.lower <= res.upper
    assert res.exact == (res.lower == res.upper)
    assert res.printed_bound == pytest.approx(0.9 * 0.5 * math.log(200))
    assert res.lower > res.printed_bound
    json.dumps({"lower": res.lower, "upper": res.upper})
