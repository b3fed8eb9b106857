import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from arrblow.concentration import (DependentBernoulliProcess, DisjointFamily, adversarial_processes,
                                   chernoff_validate, consecutive_family, equitable_coloring,
                                   independent_process, pseudo_chernoff_validate,
                                   tuple_adversaries, tuple_chernoff_validate, verify_equitable,
                                   wilson_interval)
from arrblow.errors import ConstructionFailed
from arrblow.generators import gnp, random_bounded_degree
from arrblow.graph_core import Graph, complete_graph
from conftest import graphs
from oracles import binomial_tail_upper


def binomial_cdf(n, p, k):
    """P[Bin(n, p) ≤ k] exactly."""
    return 1 - binomial_tail_upper(n, p, math.floor(k) + 1) if k >= 0 else 0.0


# Wilson interval -------------------------------------------------------------

def test_wilson_contains_estimate():
    lo, hi = wilson_interval(30, 100)
    assert lo < 0.3 < hi and 0 <= lo and hi <= 1


def test_wilson_zero_hits():
    lo, hi = wilson_interval(0, 10 ** 5)
    assert lo == 0.0 and hi < 1e-3


# Chernoff-type bounds ---------------------------------------------------------

def test_deterministic_process_never_below():
    rep = pseudo_chernoff_validate(independent_process(50, 1.0), 0.5, 1000, 0)
    assert rep.lower.estimate == 0.0 and rep.passed


def test_independent_matches_exact_binomial():
    n, p, c, trials = 200, 0.5, 0.5, 10 ** 5
    rep = pseudo_chernoff_validate(independent_process(n, p), c, trials, 1)
    exact_low = binomial_cdf(n, p, (1 - c) * p * n)
    exact_high = binomial_tail_upper(n, p, math.ceil((1 + c) * p * n))
    bound = math.exp(-c * c * p * n / 3)
    assert exact_low <= bound and exact_high <= bound
    assert rep.passed
    lo, hi = rep.lower.ci
    assert lo <= exact_low <= hi


def test_independent_moderate_tail_tracks_oracle():
    # a tail that is actually hit: P[Bin(60, .5) ≤ 24] ≈ 0.077
    n, p, c = 60, 0.5, 0.2
    rep = pseudo_chernoff_validate(independent_process(n, p), c, 20000, 3)
    exact = binomial_cdf(n, p, (1 - c) * p * n)
    lo, hi = rep.lower.ci
    assert lo <= exact <= hi


@pytest.mark.parametrize("make", [0, 1, 2])
def test_adversarial_processes_respect_bounds(make):
    proc = adversarial_processes(200, 0.3, 0.5)[make]
    rep = pseudo_chernoff_validate(proc, 0.5, 20000, make)
    assert rep.passed
    assert rep.to_dict()["process"] == proc.name


def test_envelope_violation_detected():
    bad = DependentBernoulliProcess(10, 0.3, 0.5, lambda i, h, s, rng: 0.9, "bad")
    with pytest.raises(AssertionError):
        bad.simulate(5, np.random.default_rng(0))


def test_markov_conditional_rates():
    proc = adversarial_processes(100, 0.2, 0.8)[0]
    hist = proc.simulate(4000, np.random.default_rng(0))
    prev, cur = hist[:, :-1].ravel(), hist[:, 1:].ravel()
    assert cur[prev].mean() == pytest.approx(0.8, abs=0.01)
    assert cur[~prev].mean() == pytest.approx(0.2, abs=0.01)


def test_two_sided_chernoff():
    assert chernoff_validate(200, 0.5, 0.5, 20000, 0).passed
    with pytest.raises(ValueError):
        chernoff_validate(10, 0.5, 2.0, 10)


# tuple bound -------------------------------------------------------------------

def test_disjoint_family_validation():
    with pytest.raises(ValueError):
        DisjointFamily([[0, 1], [1, 2]])
    with pytest.raises(ValueError):
        DisjointFamily([[0, 9]], n=5)
    fam = consecutive_family(3, 2)
    assert fam.m == 3 and fam.a == 2


def test_tuple_singletons_reduce_to_lower_tail():
    n, p = 100, 0.5
    fam = consecutive_family(n, 1)
    rep = tuple_chernoff_validate(independent_process(n, p), fam, p, 20000, 0)
    # with a = 1 the count is Bin(n, p) and the event is A ≥ pn/2
    exact = binomial_tail_upper(n, p, math.ceil(0.5 * p * n))
    lo, hi = rep.check.ci
    assert lo <= exact <= hi and rep.passed


def test_tuple_deterministic_full_count():
    fam = consecutive_family(10, 3)
    proc = independent_process(30, 1.0)
    hist = proc.simulate(50, np.random.default_rng(0))
    counts = sum(hist[:, list(s)].all(axis=1) for s in fam.sets)
    assert (counts == 10).all()
    assert tuple_chernoff_validate(proc, fam, 1.0, 200, 0).check.estimate == 1.0


def test_tuple_pairs_match_binomial_oracle():
    fam = consecutive_family(100, 2)
    rep = tuple_chernoff_validate(independent_process(200, 0.5), fam, 0.5, 10 ** 5, 4)
    # each pair succeeds with probability 0.25; the count is Bin(100, 0.25)
    exact = binomial_tail_upper(100, 0.25, math.ceil(0.5 * 0.25 * 100))
    lo, hi = rep.check.ci
    assert lo <= exact <= hi and rep.passed


@pytest.mark.parametrize("k", [0, 1, 2])
def test_tuple_adversaries_pass(k):
    fam = consecutive_family(100, 2)
    proc = tuple_adversaries(200, fam, 0.5)[k]
    assert tuple_chernoff_validate(proc, fam, 0.5, 20000, k).passed


# equitable colouring ---------------------------------------------------------------

def test_edgeless_single_class():
    part = equitable_coloring(Graph(7))
    assert part.sizes == [7]


def test_c5_three_classes():
    c5 = Graph(5, [(i, (i + 1) % 5) for i in range(5)])
    part = equitable_coloring(c5)
    assert sorted(part.sizes) == [1, 2, 2] and not verify_equitable(c5, part, 3)
    # brute force: some equitable 3-colouring exists and none uses 2 colours
    assert not any(all(col[u] != col[v] for u, v in c5.edges())
                   for col in itertools.product(range(2), repeat=5))


def test_random_gnp_verified():
    g = gnp(50, 0.1, 0)
    part = equitable_coloring(g)
    assert not verify_equitable(g, part, g.max_degree() + 1)


@given(graphs(0, 9))
def test_equitable_property(g):
    k = g.max_degree() + 1
    part = equitable_coloring(g)
    assert len(part.sizes) <= k and not verify_equitable(g, part, k)
    assert sorted(v for c in part.classes for v in c) == list(range(g.n))


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6))
def test_more_classes_than_needed(seed, extra):
    g = random_bounded_degree(60, 4, 3.0, seed)
    k = g.max_degree() + 1 + extra
    assert not verify_equitable(g, equitable_coloring(g, k), k)


def test_below_bound_rules():
    with pytest.raises(ValueError):
        equitable_coloring(complete_graph(4), 2)
    with pytest.raises(ConstructionFailed):
        equitable_coloring(complete_graph(4), 3, below_bound=True)
    path = Graph(6, [(i, i + 1) for i in range(5)])
    part = equitable_coloring(path, 2, below_bound=True)
    assert part.sizes == [3, 3] and not verify_equitable(path, part, 2)


def test_details_report_method():
    res = equitable_coloring(gnp(40, 0.2, 1), return_details=True)
    assert res.repaired_by in {"greedy", "path-shift", "kierstead-kostochka"}
