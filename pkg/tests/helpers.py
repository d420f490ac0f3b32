"""Shared strategies and brute-force oracles for the tests."""

import itertools
import random
from fractions import Fraction

from hypothesis import strategies as st

from egalitarian import BipartiteGraph, OneSidedInstance, TwoSidedInstance, check_feasible
from egalitarian.instance_io import generate_random

HALF_GRID = [Fraction(k, 2) for k in range(17)]   # 0, 1/2, ..., 8


@st.composite
def graphs(draw, max_suppliers=4, max_demanders=4, min_nodes=0):
    n = draw(st.integers(min_nodes, max_suppliers))
    m = draw(st.integers(min_nodes, max_demanders))
    pairs = [(i, j) for i in range(n) for j in range(m)]
    links = draw(st.sets(st.sampled_from(pairs), max_size=len(pairs))) if pairs else set()
    return BipartiteGraph(n, m, frozenset(links))


def rationals(max_value=4, denominators=(1, 2)):
    return st.builds(lambda k, q: Fraction(k, q), st.integers(0, max_value * max(denominators)),
                     st.sampled_from(denominators)).filter(lambda v: v <= max_value)


@st.composite
def two_sided_instances(draw, max_side=4, max_value=4, denominators=(1,), min_nodes=0):
    g = draw(graphs(max_side, max_side, min_nodes))
    s = draw(st.lists(rationals(max_value, denominators), min_size=g.n_suppliers, max_size=g.n_suppliers))
    d = draw(st.lists(rationals(max_value, denominators), min_size=g.n_demanders, max_size=g.n_demanders))
    return TwoSidedInstance(g, s, d)


@st.composite
def one_sided_instances(draw, max_side=4, max_value=4, denominators=(1,), unbounded=True, min_nodes=0):
    g = draw(graphs(max_side, max_side, min_nodes))
    n, m = g.n_suppliers, g.n_demanders
    s = draw(st.lists(rationals(max_value, denominators), min_size=n, max_size=n))
    lower = [draw(rationals(max_value, denominators).filter(lambda v, p=p: v <= p)) for p in s]
    upper = []
    for p in s:
        if unbounded and draw(st.booleans()):
            upper.append(None)
        else:
            upper.append(p + draw(rationals(max_value, denominators)))
    d = draw(st.lists(rationals(max_value, denominators), min_size=m, max_size=m))
    inst = OneSidedInstance(g, s, d, lower, upper)
    if not check_feasible(inst):
        # shrink demands until the instance is feasible; zero demand always is
        inst = OneSidedInstance(g, s, [0] * m, lower, upper)
        if not check_feasible(inst):
            inst = OneSidedInstance(g, s, [0] * m, [0] * n, upper)
    return inst


def cut_capacity(graph, caps, dcaps, X):
    return (sum((caps[i] for i in range(graph.n_suppliers) if i not in X), Fraction(0))
            + sum((dcaps[j] for j in graph.f(X)), Fraction(0)))


def all_min_cuts(graph, caps, dcaps):
    """Every supplier set attaining the minimum cut capacity, by enumeration."""
    best, sets = None, []
    for r in range(graph.n_suppliers + 1):
        for X in itertools.combinations(range(graph.n_suppliers), r):
            c = cut_capacity(graph, caps, dcaps, frozenset(X))
            if best is None or c < best:
                best, sets = c, [frozenset(X)]
            elif c == best:
                sets.append(frozenset(X))
    return best, sets


def corpus(model, count, seed, max_side=4, max_value=4, link_prob=0.6, exact_side=None):
    """Reproducible list of random instances with integer data."""
    rng = random.Random(seed)
    out = []
    for k in range(count):
        n = exact_side or rng.randint(1, max_side)
        m = exact_side or rng.randint(1, max_side)
        out.append(generate_random(model, n, m, link_prob, (0, max_value), seed * 100003 + k))
    return out
