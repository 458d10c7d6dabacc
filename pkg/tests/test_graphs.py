import itertools

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from dquant.graphs import (
    AdmissibleGraph,
    GraphError,
    GraphShape,
    TwoTypeGraph,
    canonical_key,
    contribution_filter,
    count_labelings,
    enumerate_graphs,
    enumerate_two_type,
    ladder_graph,
    parse_key,
)


def test_single_edge_enumeration():
    gs = enumerate_graphs(2, 1)
    assert len(gs) == 1
    assert gs[0].edges == ((1, 2),)


def test_n3_contains_triangle_and_matches_brute_force():
    gs = enumerate_graphs(3, 3, connected=True)
    assert AdmissibleGraph(3, ((1, 2), (1, 3), (2, 3))) in gs
    # independent brute force over all subsets of the 3 possible edges
    pairs = [(1, 2), (1, 3), (2, 3)]
    brute = [c for c in itertools.combinations(pairs, 3)]
    assert len(gs) == len(brute)


def brute_shape_count(n, e):
    """Independent isomorphism classification via networkx."""
    reps = []
    for g in enumerate_graphs(n, e, connected=True):
        dg = nx.DiGraph()
        dg.add_nodes_from(range(1, n + 1))
        dg.add_edges_from(g.edges)
        if not any(nx.is_isomorphic(dg, r) for r in reps):
            reps.append(dg)
    return len(reps)


def test_g45_shape_census_matches_independent_oracle():
    shapes = enumerate_graphs(4, 5, connected=True, up_to_labeling=True)
    assert len(shapes) == brute_shape_count(4, 5)
    # weak-connectivity census of labeled graphs: all 6 five-subsets of the
    # 6 possible edges are connected
    assert len(enumerate_graphs(4, 5, connected=True)) == 6


def test_shape_bookkeeping_cross_check():
    # labelings = distinct labeled graphs x automorphisms, and the labeled
    # enumeration is recovered from the shape members
    for n, e in [(3, 2), (4, 3), (4, 5), (5, 4)]:
        shapes = enumerate_graphs(n, e, connected=True, up_to_labeling=True)
        labeled = enumerate_graphs(n, e, connected=True)
        assert sum(len(sh.members) for sh in shapes) == len(labeled)
        for sh in shapes:
            assert sh.labeling_count == len(sh.members) * sh.aut_count


def test_enumeration_deterministic():
    a = [g.key() for g in enumerate_graphs(4, 5, connected=True)]
    b = [g.key() for g in enumerate_graphs(4, 5, connected=True)]
    assert a == b


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 5), st.data())
def test_enumerated_graphs_are_acyclic(n, data):
    e = data.draw(st.integers(0, 2 * n - 3))
    for g in enumerate_graphs(n, e):
        dg = nx.DiGraph()
        dg.add_nodes_from(range(1, n + 1))
        dg.add_edges_from(g.edges)
        assert nx.is_directed_acyclic_graph(dg)


def test_count_labelings_examples():
    # chain a->b->c: forced order
    assert count_labelings((3, ((1, 2), (2, 3)))) == 1
    # diamond: two incomparable middles; oracle enumerates all 24 labelings
    diamond = ((1, 2), (1, 3), (2, 4), (3, 4))
    assert count_labelings((4, diamond)) == _labelings_by_enumeration(4, diamond)
    assert count_labelings((4, diamond)) == 2
    # star: three incomparable leaves
    star = ((1, 2), (1, 3), (1, 4))
    assert count_labelings((4, star)) == _labelings_by_enumeration(4, star)
    assert count_labelings((4, star)) == 6


def _labelings_by_enumeration(n, edges):
    count = 0
    for perm in itertools.permutations(range(1, n + 1)):
        if all(perm[s - 1] < perm[t - 1] for s, t in edges):
            count += 1
    return count


def test_count_labelings_rejects_cycles():
    with pytest.raises(GraphError):
        count_labelings((3, ((1, 2), (2, 3), (3, 1))))


def test_canonical_keys():
    assert AdmissibleGraph(2, ((1, 2),)).key() == "g:n=2;e=(1,2)"
    ex1 = AdmissibleGraph(4, ((1, 2), (1, 3), (2, 3), (2, 4), (3, 4)))
    assert ex1.key() == "g:n=4;e=(1,2)(1,3)(2,3)(2,4)(3,4)"
    wedge = TwoTypeGraph(1, 2, ((1, ("b", 1)), (1, ("b", 2))))
    assert wedge.key() == "g2:n=1;m=2;e=(1,b1)(1,b2)"


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 5), st.data())
def test_key_round_trip(n, data):
    pairs = [(s, t) for s in range(1, n + 1) for t in range(s + 1, n + 1)]
    e = data.draw(st.integers(0, len(pairs)))
    edges = tuple(data.draw(st.permutations(pairs))[:e])
    g = AdmissibleGraph(n, edges)
    assert parse_key(g.key()) == g


def test_two_type_key_round_trip():
    g = TwoTypeGraph(2, 2, ((1, ("v", 2)), (1, ("b", 2)), (2, ("b", 1))))
    assert parse_key(g.key()) == g


def test_parse_rejects_malformed():
    for bad in ["", "g:n=2", "g:n=2;e=(2,1)", "x:n=1;e=", "g2:n=0;m=0;e="]:
        with pytest.raises(GraphError):
            parse_key(bad)


def test_graph_validation():
    with pytest.raises(GraphError):
        AdmissibleGraph(2, ((2, 1),))  # violates s < t
    with pytest.raises(GraphError):
        AdmissibleGraph(2, ((1, 1),))  # self-loop
    with pytest.raises(GraphError):
        AdmissibleGraph(2, ((1, 2), (1, 2)))  # parallel
    with pytest.raises(GraphError):
        TwoTypeGraph(1, 1, ((1, ("b", 2)),))  # bad boundary index
    with pytest.raises(GraphError):
        TwoTypeGraph(0, 1, ())  # 2n+m < 2


def test_two_type_canonical_edge_order():
    g = TwoTypeGraph(2, 2, ((2, ("b", 2)), (1, ("b", 1)), (1, ("v", 2))))
    assert g.edges == ((1, ("v", 2)), (1, ("b", 1)), (2, ("b", 2)))


def test_two_type_cycle_detection():
    cyc = TwoTypeGraph(2, 2, ((1, ("v", 2)), (2, ("v", 1)), (1, ("b", 1)), (2, ("b", 2))))
    assert cyc.has_cycle()
    assert not cyc.is_admissible()
    fan = TwoTypeGraph(1, 2, ((1, ("b", 1)), (1, ("b", 2))))
    assert not fan.has_cycle()
    assert fan.is_admissible()


def test_contribution_filter_examples():
    ex1 = AdmissibleGraph(4, ((1, 2), (1, 3), (2, 3), (2, 4), (3, 4)))
    # four bivectors with quadratic coefficients pass
    assert contribution_filter(ex1, [2] * 4, [2] * 4)
    # the 2-upper rail graph has a sink of in-degree 3
    lad20 = ladder_graph(2, 0)
    assert not contribution_filter(lad20, [2] * 4, [2] * 4)
    # linear coefficients die on every 4-vertex graph (some vertex has
    # at least two incoming edges)
    for g in enumerate_graphs(4, 5, connected=True):
        assert not contribution_filter(g, [2] * 4, [1] * 4)
    with pytest.raises(GraphError):
        contribution_filter(ex1, [2] * 3, [2] * 4)


def test_ladder_graphs():
    assert ladder_graph(0, 0).key() == "g:n=2;e=(1,2)"
    assert ladder_graph(1, 0).key() == "g:n=3;e=(1,2)(1,3)(2,3)"
    assert (
        ladder_graph(1, 1).key() == "g:n=4;e=(1,2)(1,3)(2,3)(2,4)(3,4)"
    )  # the worked 4-vertex example
    g = ladder_graph(2, 3)
    assert g.n == 7 and g.e == 2 * g.n - 3


def test_enumerate_two_type():
    fans = enumerate_two_type(1, 2, 2)
    assert len(fans) == 1 and fans[0].key() == "g2:n=1;m=2;e=(1,b1)(1,b2)"
    # n=2, m=2, 4 edges, out-degree 2 each: three connected graphs
    gs = [g for g in enumerate_two_type(2, 2, 4) if g.out_degrees() == [2, 2]]
    assert len(gs) == 3
