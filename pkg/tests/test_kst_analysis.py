import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kstfree.errors import StaleReport
from kstfree.ffield import make_field
from kstfree.graphgen import BipartiteGraph, build_random_graph, graph_from_polynomial
from kstfree.kst_analysis import (brute_force_ex, brute_force_ex_masks, contains_kst, exact_moment,
                                  expected_bad_bound, find_bad_sets, kst_upper_bound,
                                  moment_bound, neighborhood_distribution, purge_bad_sets,
                                  star_count_bound, star_count_identity, surjection_count,
                                  tail_bound)
from kstfree.rng import make_rng

from test_graphgen import diagonal_poly


def complete(n):
    return BipartiteGraph(np.ones((n, n), dtype=bool))


def empty(n):
    return BipartiteGraph(np.zeros((n, n), dtype=bool))


def brute_sizes(G, s, side):
    """Oracle: intersect rows of every s-subset directly."""
    rows = G.adj if side == "left" else G.adj.T
    return [int(np.logical_and.reduce(rows[list(U)], axis=0).sum())
            for U in itertools.combinations(range(rows.shape[0]), s)]


def count_surjections(d, r):
    return sum(1 for f in itertools.product(range(r), repeat=d) if len(set(f)) == r)


@st.composite
def small_graphs(draw, max_n=6):
    nl = draw(st.integers(1, max_n))
    nr = draw(st.integers(1, max_n))
    bits = draw(st.lists(st.booleans(), min_size=nl * nr, max_size=nl * nr))
    return BipartiteGraph(np.array(bits, dtype=bool).reshape(nl, nr))


# --- neighbourhood distribution ------------------------------------------------

@pytest.mark.parametrize("s", [1, 2, 3])
def test_distribution_complete_and_empty(s):
    n = 6
    assert neighborhood_distribution(complete(n), s).histogram == {n: math.comb(n, s)}
    assert neighborhood_distribution(empty(n), s).histogram == {0: math.comb(n, s)}


def test_distribution_diagonal_graph():
    F = make_field(3)
    G = graph_from_polynomial(diagonal_poly(F, 2))
    hist = neighborhood_distribution(G, 2, "left").histogram
    assert set(hist) == {0, 3}
    # pairs sharing a first coordinate: 3 columns of 3 points each
    assert hist[3] == 3 * math.comb(3, 2)
    assert sum(hist.values()) == math.comb(9, 2)


@pytest.mark.parametrize("s", [1, 2, 3, 4])
@pytest.mark.parametrize("side", ["left", "right"])
def test_scan_kernels_match_brute_force(s, side):
    G = build_random_graph(14, 2, seed=s)
    hist = neighborhood_distribution(G, s, side).histogram
    expect = {}
    for v in brute_sizes(G, s, side):
        expect[v] = expect.get(v, 0) + 1
    assert hist == dict(sorted(expect.items()))


def test_sampled_mode():
    G = build_random_graph(30, 2, seed=1)
    rep = neighborhood_distribution(G, 2, "right", "sampled", rng=make_rng(0), samples=500)
    assert rep.total == 500 and rep.mode == "sampled"
    full = neighborhood_distribution(G, 2, "right")
    assert set(rep.histogram) <= set(full.histogram)


def test_empirical_moment_definition():
    rep = neighborhood_distribution(build_random_graph(12, 2, seed=4), 2, d=3)
    expect = Fraction(sum(v**3 * c for v, c in rep.histogram.items()), rep.total)
    assert rep.empirical_moment_d == float(expect)
    assert rep.moment_bound_M == 13


def test_histogram_csv():
    rep = neighborhood_distribution(complete(3), 2)
    assert rep.histogram_csv() == "value,count\n3,3\n"


# --- moment method ---------------------------------------------------------------

def test_surjection_examples():
    assert surjection_count(4, 4) == 24
    assert surjection_count(3, 2) == 6
    assert surjection_count(4, 3) == 36


@pytest.mark.parametrize("d", range(0, 7))
def test_surjections_match_enumeration(d):
    for r in range(0, d + 1):
        assert surjection_count(d, r) == count_surjections(d, r)


def test_moment_bound_examples():
    assert moment_bound(1) == 1
    assert moment_bound(2) == 3
    assert moment_bound(4) == 75 == 1 + 14 + 36 + 24


def test_moment_bound_enumeration_oracle():
    for d in range(1, 6):
        assert moment_bound(d) == sum(count_surjections(d, r) for r in range(1, d + 1))


def test_exact_moment_never_exceeds_bound():
    for q, s, d in [(7, 2, 4), (11, 2, 4), (5, 3, 8)]:
        assert exact_moment(q, s, d) <= moment_bound(d)


def test_tail_bound_examples():
    assert tail_bound(1, 1) == 1
    assert tail_bound(2, 2) == 0.75
    assert tail_bound(7, 4) == float(Fraction(75, 2401))


def test_expected_bad_bound():
    assert expected_bad_bound(49, 2, 7, 4) == float(Fraction(2 * 1176 * 75 * 16, 2401))
    assert expected_bad_bound(49, 2, 7, 4) < expected_bad_bound(50, 2, 7, 4)
    assert expected_bad_bound(2, 2, 7, 4) == float(2 * 75 / Fraction(7, 2) ** 4)


# --- bad sets, purge, K_{s,t} -------------------------------------------------------

def test_bad_sets_empty_graph():
    assert find_bad_sets(empty(6), 2, 0).count == 0


def test_bad_sets_complete_graph():
    n, s = 5, 2
    rep = find_bad_sets(complete(n), s, n - 1)
    assert rep.count == 2 * math.comb(n, s)
    assert [b[0] for b in rep.bad_sets] == ["left"] * 10 + ["right"] * 10
    assert rep.bad_sets == sorted(rep.bad_sets, key=lambda b: (b[0], b[1]))


def test_purge_without_bad_sets_is_identity():
    G = build_random_graph(10, 2, seed=0)
    rep = find_bad_sets(G, 2, 10)
    H, removed = purge_bad_sets(G, rep)
    assert removed == 0 and H == G


@pytest.mark.parametrize("n", [2, 3, 4])
def test_purge_complete_graph_threshold_zero(n):
    G = complete(n)
    H, removed = purge_bad_sets(G, find_bad_sets(G, 2, 0))
    assert all(v == 0 for v in brute_sizes(H, 2, "left") + brute_sizes(H, 2, "right"))
    assert G.edge_count() - H.edge_count() <= removed * n


def test_purge_rejects_stale_report():
    G = build_random_graph(10, 2, seed=0)
    rep = find_bad_sets(G, 2, 0)
    with pytest.raises(StaleReport):
        purge_bad_sets(build_random_graph(10, 2, seed=1), rep)


@settings(max_examples=60, deadline=None)
@given(G=small_graphs(), s=st.integers(1, 3), C=st.integers(0, 3))
def test_purge_soundness(G, s, C):
    H, removed = purge_bad_sets(G, find_bad_sets(G, s, C))
    assert find_bad_sets(H, s, C).count == 0
    assert contains_kst(H, s, C + 1) is None
    assert G.edge_count() - H.edge_count() <= removed * max(G.n_left, G.n_right)


def test_kst_complete_and_empty():
    n = 5
    for s, t in itertools.product(range(1, n + 1), repeat=2):
        w = contains_kst(complete(n), s, t)
        assert w is not None and w.verify(complete(n))
    assert contains_kst(empty(4), 1, 1) is None


def brute_kst(G, s, t):
    """Oracle: try every left s-set against every right t-set and vice versa."""
    for A in itertools.combinations(range(G.n_left), s):
        for B in itertools.combinations(range(G.n_right), t):
            if G.adj[np.ix_(A, B)].all():
                return True
    for A in itertools.combinations(range(G.n_left), t):
        for B in itertools.combinations(range(G.n_right), s):
            if G.adj[np.ix_(A, B)].all():
                return True
    return False


@settings(max_examples=60, deadline=None)
@given(G=small_graphs(5), s=st.integers(1, 3), t=st.integers(1, 3))
def test_kst_search_matches_brute_force(G, s, t):
    w = contains_kst(G, s, t)
    assert (w is not None) == brute_kst(G, s, t)
    if w is not None:
        assert w.verify(G)
        assert sorted(w.sizes) == sorted((s, t))


# --- double counting and oracles ------------------------------------------------------

def test_star_count_examples():
    assert star_count_identity(empty(4), 2)[0] == 0
    adj = np.zeros((4, 4), dtype=bool)
    adj[0, :3] = True
    assert star_count_identity(BipartiteGraph(adj), 2) == (3, [3, 0, 0, 0])


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("s", [1, 2, 3])
def test_star_count_matches_enumeration(seed, s):
    G = build_random_graph(5, 1, seed=seed) if seed == 0 else build_random_graph(5, 2, seed=seed)
    direct = sum(1 for v in range(5) for leaves in itertools.combinations(range(5), s)
                 if G.adj[v, list(leaves)].all())
    assert star_count_identity(G, s)[0] == direct
    # every s-set of right vertices has at most max |N| left apexes
    t = max(brute_sizes(G, s, "right")) + 1
    assert direct <= star_count_bound(5, s, t)


def test_kst_upper_bound_examples():
    for n in range(1, 10):
        assert kst_upper_bound(n, 1, 2) == pytest.approx(2 * n)
    assert kst_upper_bound(5, 2, 2) == pytest.approx(2 * math.sqrt(5) * 5)
    assert kst_upper_bound(4, 2, 2) == pytest.approx(16.0)
    assert all(kst_upper_bound(10, 2, t) < kst_upper_bound(10, 2, t + 1) for t in range(2, 8))


def graphs_on(n):
    edges = list(itertools.combinations(range(n), 2))
    for mask in range(2 ** len(edges)):
        yield [e for i, e in enumerate(edges) if mask >> i & 1]


def ex_c4_oracle(n):
    """Independent oracle for ex(n, C4) = ex(n, K_{2,2}): no pair has two common neighbours."""
    best = 0
    for E in graphs_on(n):
        nb = {v: set() for v in range(n)}
        for a, b in E:
            nb[a].add(b)
            nb[b].add(a)
        if all(len(nb[a] & nb[b]) < 2 for a, b in itertools.combinations(range(n), 2)):
            best = max(best, len(E))
    return best


def test_brute_force_ex_examples():
    assert brute_force_ex(3, 1, 2) == 1
    assert brute_force_ex(4, 2, 2) == 4 == ex_c4_oracle(4)
    assert brute_force_ex(5, 2, 2) == ex_c4_oracle(5)


@pytest.mark.parametrize("n,s,t", [(4, 1, 2), (5, 1, 3), (5, 2, 3), (5, 3, 2), (6, 2, 2)])
def test_brute_force_routes_agree(n, s, t):
    assert brute_force_ex(n, s, t) == brute_force_ex_masks(n, s, t)


def test_brute_force_below_kst_bound():
    for n in range(2, 7):
        assert brute_force_ex(n, 2, 2) <= kst_upper_bound(n, 2, 2)
