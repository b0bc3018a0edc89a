"""Recovery-layer tests: intersection graphs, the goodness test, exhaustive
search and MAP estimation, and k-core peeling against an exhaustive oracle."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from align_lab import (
    CapacityError,
    Graph,
    ModelParams,
    ParameterError,
    Permutation,
    find_good,
    generate,
    intersection_degrees,
    intersection_graph,
    is_good,
    k_core,
    make_rng,
    map_estimate,
    overlap,
    overlap_objective,
)


def _random_graph(n: int, p: float, rng) -> Graph:
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return Graph.from_edges(n, edges) if edges else Graph.empty(n)


# -- intersection graph -------------------------------------------------------


def test_intersection_identity_at_s1():
    inst = generate(ModelParams(40, 0.4, 1.0), seed=2)
    assert intersection_graph(inst.g_a, inst.g_b, inst.pi_star) == inst.g_a


def test_intersection_empty_ga():
    g_b = Graph.complete(5)
    for image in itertools.permutations(range(5)):
        pi = Permutation(list(image))
        assert intersection_graph(Graph.empty(5), g_b, pi).num_edges == 0


def test_intersection_density_is_qs_at_pistar():
    # under the planted permutation the intersection graph is ER(n, qs)
    params = ModelParams(2000, 0.05, 0.5)
    inst = generate(params, seed=8)
    inter = intersection_graph(inst.g_a, inst.g_b, inst.pi_star)
    qs = params.q * params.s
    sigma = math.sqrt(qs * (1 - qs) / math.comb(params.n, 2))
    assert abs(inter.density() - qs) < 4 * sigma


def test_intersection_degrees_match_graph():
    rng = make_rng(15)
    for _ in range(10):
        g_a = _random_graph(8, 0.5, rng)
        g_b = _random_graph(8, 0.5, rng)
        pi = Permutation.random(8, rng)
        deg = intersection_degrees(g_a, g_b, pi)
        assert deg.tolist() == intersection_graph(g_a, g_b, pi).degrees().tolist()


def test_intersection_size_mismatch():
    with pytest.raises(ParameterError):
        intersection_graph(Graph.empty(3), Graph.empty(4), Permutation.identity(3))


# -- goodness -----------------------------------------------------------------


def test_is_good_complete_graph_example():
    g = Graph.complete(4)
    report = is_good(g, g, Permutation.identity(4), ModelParams(4, 0.75, 1.0), 0.5)
    assert report.threshold_degree == pytest.approx(1.5)
    assert report.required == pytest.approx(3.0)
    assert report.count_high_degree == 4
    assert report.is_good
    assert report.degree_histogram == {3: 4}


def test_is_good_empty_intersection():
    g_a = Graph.from_edges(4, [(0, 1)])
    g_b = Graph.from_edges(4, [(2, 3)])
    pi = Permutation.identity(4)
    for alpha in (0.1, 0.5, 0.9):
        report = is_good(g_a, g_b, pi, ModelParams(4, 0.5, 0.5), alpha)
        assert not report.is_good
        assert report.count_high_degree == 0


def test_is_good_histogram_covers_all_nodes():
    inst = generate(ModelParams(60, 0.2, 0.6), seed=4)
    report = is_good(inst.g_a, inst.g_b, inst.pi_star, inst.params, 0.3)
    assert sum(report.degree_histogram.values()) == 60


def test_is_good_alpha_validation():
    g = Graph.empty(4)
    with pytest.raises(ParameterError):
        is_good(g, g, Permutation.identity(4), ModelParams(4, 0.5, 0.5), 1.0)


# -- find_good ----------------------------------------------------------------


def test_find_good_complete_graphs_return_identity():
    g = Graph.complete(5)
    res = find_good(g, g, ModelParams(5, 0.2, 0.5), alpha=0.5)
    assert res.permutation == Permutation.identity(5)
    assert res.tested == 1


def test_find_good_matches_sequential_bruteforce():
    params = ModelParams(5, 0.45, 0.9)
    for seed in range(12):
        inst = generate(params, seed=seed)
        res = find_good(inst.g_a, inst.g_b, params, alpha=0.4)
        expected = None
        tested = 0
        for image in itertools.permutations(range(5)):
            tested += 1
            if is_good(inst.g_a, inst.g_b, Permutation(list(image)), params, 0.4).is_good:
                expected = Permutation(list(image))
                break
        if expected is None:
            assert res.permutation is None
            assert res.tested == math.factorial(5)
        else:
            assert res.permutation == expected
            assert res.tested == tested


def test_find_good_returned_permutation_reverifies():
    params = ModelParams(8, 0.4, 1.0)
    found = 0
    for seed in range(30):
        inst = generate(params, seed=100 + seed)
        res = find_good(inst.g_a, inst.g_b, params, alpha=0.5)
        if res.permutation is not None:
            found += 1
            assert is_good(inst.g_a, inst.g_b, res.permutation, params, 0.5).is_good
    assert found > 0


def test_find_good_limit():
    g_a = Graph.from_edges(5, [(0, 1)])
    g_b = Graph.from_edges(5, [(2, 3)])
    params = ModelParams(5, 0.9, 1.0)  # threshold too high for one edge
    res = find_good(g_a, g_b, params, alpha=0.9, limit=10)
    assert res.permutation is None
    assert res.tested == 10


def test_find_good_size_guard():
    g = Graph.empty(11)
    with pytest.raises(CapacityError):
        find_good(g, g, ModelParams(11, 0.3, 0.6), alpha=0.5)


# -- map_estimate -------------------------------------------------------------


def _rigid_graph() -> Graph:
    # triangle 0-1-2, tail 2-3-4-5, pendant 0-6; automorphism group is trivial
    return Graph.from_edges(7, [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (0, 6)])


def test_rigid_graph_is_rigid():
    g = _rigid_graph()
    autos = 0
    for image in itertools.permutations(range(7)):
        pi = np.array(image)
        if all(g.has_edge(pi[u], pi[v]) for u, v in g.edges()):
            autos += 1
    assert autos == 1


def test_map_recovers_planted_isomorphism():
    g = _rigid_graph()
    rng = make_rng(31)
    for _ in range(5):
        pi_star = Permutation.random(7, rng)
        g_b = g.relabeled(pi_star.as_array())
        assert map_estimate(g, g_b) == pi_star


def test_map_empty_graph_returns_identity():
    assert map_estimate(Graph.empty(4), Graph.empty(4)) == Permutation.identity(4)


def test_map_tie_break_is_lexicographic():
    g = Graph.from_edges(3, [(0, 1)])
    # every permutation keeping {0,1} on an edge ties; identity is lex-first
    assert map_estimate(g, g) == Permutation.identity(3)


def test_map_objective_is_maximal():
    params = ModelParams(5, 0.4, 0.8)
    for seed in range(8):
        inst = generate(params, seed=seed)
        pi_hat = map_estimate(inst.g_a, inst.g_b)
        best = overlap_objective(inst.g_a, inst.g_b, pi_hat)
        for image in itertools.permutations(range(5)):
            pi = Permutation(list(image))
            assert overlap_objective(inst.g_a, inst.g_b, pi) <= best


def test_map_size_guard():
    g = Graph.empty(12)
    with pytest.raises(CapacityError):
        map_estimate(g, g)


# -- k-core --------------------------------------------------------------------


def test_k_core_examples():
    triangle = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert k_core(triangle, 2).members == (0, 1, 2)
    path3 = Graph.from_edges(3, [(0, 1), (1, 2)])
    assert k_core(path3, 2).members == ()
    pendant = Graph.from_edges(4, [(0, 1), (1, 2), (0, 2), (2, 3)])
    res = k_core(pendant, 2)
    assert res.members == (0, 1, 2)
    assert res.fraction == pytest.approx(0.75)


def test_k_core_zero_keeps_everything():
    g = Graph.empty(5)
    assert k_core(g, 0).members == (0, 1, 2, 3, 4)


def _exhaustive_core(g: Graph, k: float) -> set[int]:
    """Largest subset whose induced subgraph has min degree >= k (bitmask scan)."""
    masks = [0] * g.n
    for u, v in g.edges():
        masks[u] |= 1 << v
        masks[v] |= 1 << u
    best: set[int] = set()
    for subset in range(1 << g.n):
        size = subset.bit_count()
        if size <= len(best):
            continue
        ok = True
        s = subset
        while s:
            node = (s & -s).bit_length() - 1
            if (masks[node] & subset).bit_count() < k:
                ok = False
                break
            s &= s - 1
        if ok:
            best = {i for i in range(g.n) if subset >> i & 1}
    return best


def test_k_core_against_exhaustive_oracle():
    rng = make_rng(41)
    for _ in range(60):
        n = int(rng.integers(3, 11))
        g = _random_graph(n, float(rng.uniform(0.2, 0.7)), rng)
        k = float(rng.integers(1, 4))
        assert set(k_core(g, k).members) == _exhaustive_core(g, k)


def test_k_core_fractional_threshold():
    triangle = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert k_core(triangle, 1.5).members == (0, 1, 2)
    assert k_core(triangle, 2.5).members == ()


def test_k_core_order_invariance():
    rng = make_rng(43)
    for _ in range(10):
        g = _random_graph(12, 0.3, rng)
        reference = k_core(g, 3).members
        for _ in range(5):
            order = list(rng.permutation(12))
            assert k_core(g, 3, peel_order=order).members == reference


def test_k_core_rejects_negative_k():
    with pytest.raises(ParameterError):
        k_core(Graph.empty(3), -1)


def test_core_fraction_implies_goodness():
    # a big enough nqs/2-core forces the goodness test to pass
    rng = make_rng(47)
    params = ModelParams(30, 0.3, 0.8)
    for seed in range(15):
        inst = generate(params, seed=seed)
        pi = Permutation.random(30, rng)
        inter = intersection_graph(inst.g_a, inst.g_b, pi)
        alpha = 0.4
        core = k_core(inter, params.nqs / 2)
        if core.fraction >= (1 + alpha) / 2:
            assert is_good(inst.g_a, inst.g_b, pi, params, alpha).is_good
