from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from egalitarian import BipartiteGraph, FlowNetwork, max_flow, min_cut_maximal, min_cut_minimal
from egalitarian.flow import as_rational, check_flow, cut_capacity

from helpers import all_min_cuts, graphs, rationals


def net(n, m, links, caps, dcaps):
    return FlowNetwork(BipartiteGraph(n, m, frozenset(links)), caps, dcaps)


def test_empty_network():
    nw = net(0, 0, [], [], [])
    fr = max_flow(nw)
    assert fr.value == 0
    for cut in (min_cut_minimal(nw, fr), min_cut_maximal(nw, fr)):
        assert cut.suppliers_in_cut == frozenset() and cut.capacity == 0


def test_source_arc_binds():
    assert max_flow(net(1, 2, [(0, 0), (0, 1)], [1], [1, 1])).value == 1


def test_two_suppliers_one_demander():
    nw = net(2, 1, [(0, 0), (1, 0)], [1, 3], [2])
    fr = max_flow(nw)
    assert fr.value == 2
    a, b = fr.source_flow
    assert a + b == 2 and a <= 1 and b <= 3
    cut = min_cut_minimal(nw, fr)
    assert cut.suppliers_in_cut == {0, 1} and cut.capacity == 2


def test_minimal_cut_empty_when_source_binds():
    nw = net(1, 1, [(0, 0)], [1], [5])
    cut = min_cut_minimal(nw, max_flow(nw))
    assert cut.suppliers_in_cut == frozenset() and cut.capacity == 1


def test_isolated_supplier_joins_minimal_cut():
    nw = net(2, 1, [(0, 0)], [1, 2], [5])
    cut = min_cut_minimal(nw, max_flow(nw))
    assert 1 in cut.suppliers_in_cut
    assert cut.capacity == 1


def test_balanced_pair_has_two_min_cuts():
    # X = {} and X = {0, 1} both cost 2
    nw = net(2, 1, [(0, 0), (1, 0)], [1, 1], [2])
    fr = max_flow(nw)
    assert all_min_cuts(nw.graph, nw.source_caps, nw.sink_caps)[1] == [frozenset(), frozenset({0, 1})]
    assert min_cut_minimal(nw, fr).suppliers_in_cut == frozenset()
    assert min_cut_maximal(nw, fr).suppliers_in_cut == {0, 1}


def test_tied_cuts():
    nw = net(1, 1, [(0, 0)], [1], [1])
    fr = max_flow(nw)
    assert min_cut_minimal(nw, fr).suppliers_in_cut == frozenset()
    assert min_cut_maximal(nw, fr).suppliers_in_cut == {0}


def test_rationals_are_exact():
    assert as_rational("3/4") == Fraction(3, 4)
    assert as_rational(2) == 2
    for bad in (0.5, True, "0.5", "abc"):
        with pytest.raises((TypeError, ValueError)):
            as_rational(bad)


def test_graph_validation():
    with pytest.raises(ValueError):
        BipartiteGraph(1, 1, frozenset({(0, 1)}))
    g = BipartiteGraph(2, 3, frozenset({(0, 1), (1, 2), (1, 0)}))
    assert g.transpose().transpose() == g
    assert g.f({1}) == {0, 2} and g.g({0, 1}) == {0, 1}


def test_deterministic():
    nw = net(3, 3, [(i, j) for i in range(3) for j in range(3)], [1, 2, 3], [2, 2, 2])
    assert max_flow(nw) == max_flow(nw)


@st.composite
def networks(draw):
    g = draw(graphs(6, 6))
    caps = draw(st.lists(rationals(4, (1, 2, 3)), min_size=g.n_suppliers, max_size=g.n_suppliers))
    dcaps = draw(st.lists(rationals(4, (1, 2, 3)), min_size=g.n_demanders, max_size=g.n_demanders))
    return FlowNetwork(g, caps, dcaps)


@settings(max_examples=300, deadline=None)
@given(networks())
def test_max_flow_matches_cut_enumeration(nw):
    fr = max_flow(nw)
    check_flow(nw, fr)
    best, cuts = all_min_cuts(nw.graph, nw.source_caps, nw.sink_caps)
    assert fr.value == best
    lo, hi = min_cut_minimal(nw, fr), min_cut_maximal(nw, fr)
    # the lattice of min cuts: minimal is the intersection, maximal the union
    assert lo.suppliers_in_cut == frozenset.intersection(*cuts)
    assert hi.suppliers_in_cut == frozenset.union(*cuts)
    assert lo.suppliers_in_cut <= hi.suppliers_in_cut
    for cut in (lo, hi):
        assert cut.demanders_in_cut == nw.graph.f(cut.suppliers_in_cut)
        assert cut.capacity == cut_capacity(nw, cut.suppliers_in_cut) == fr.value
