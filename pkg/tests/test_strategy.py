import random
from fractions import Fraction

import pytest
from hypothesis import given, settings

from egalitarian import (
    BipartiteGraph,
    BudgetExceeded,
    OneSidedInstance,
    TwoSidedInstance,
    check_feasible,
    decompose_one_sided,
    egalitarian,
    load_fixture,
)
from egalitarian.strategy import (
    DEMANDER,
    SUPPLIER,
    Agent,
    Mode,
    Side,
    Verdict,
    attack_links,
    attack_peaks,
    check_bossiness,
    check_decomposition_lemmas,
    default_peak_grid,
    accounting_inequalities,
    _with_links,
    proportional_rule,
    verify_bossiness,
    weakly_prefers,
)

from helpers import corpus, one_sided_instances, two_sided_instances

F = Fraction
PAIR = BipartiteGraph(2, 1, frozenset({(0, 0), (1, 0)}))
SHORTAGE = OneSidedInstance(PAIR, [1, 3], [2])


# --- preferences


@pytest.mark.parametrize("new, old, peak, strict, distance", [
    (2, 1, 3, Verdict.BETTER, Verdict.BETTER),
    (1, 1, 3, Verdict.EQUAL, Verdict.EQUAL),
    (4, 2, 3, Verdict.INCOMPARABLE, Verdict.EQUAL),
    (3, 5, 3, Verdict.BETTER, Verdict.BETTER),
    (1, 2, 3, Verdict.WORSE, Verdict.WORSE),
    (F(7, 2), 2, 3, Verdict.INCOMPARABLE, Verdict.BETTER),
])
def test_weakly_prefers(new, old, peak, strict, distance):
    assert weakly_prefers(new, old, peak) is strict
    assert weakly_prefers(new, old, peak, Mode.DISTANCE) is distance


def test_default_grid():
    assert default_peak_grid(SHORTAGE) == [F(k, 2) for k in range(13)]


# --- peak attacks


def test_shortage_pair_resists_coalitions():
    rep = attack_peaks(SHORTAGE, max_coalition=2, peak_grid=[F(k, 2) for k in range(9)])
    assert not rep.found and rep.candidates > 0


def test_empty_grid_finds_nothing():
    rep = attack_peaks(SHORTAGE, max_coalition=2, peak_grid=[])
    assert not rep.found and rep.candidates == 0


def test_proportional_baseline_is_manipulable():
    grid = [F(k, 2) for k in range(9)]
    rep = attack_peaks(SHORTAGE, 1, grid, mechanism=proportional_rule)
    assert rep.found
    (agent, verdict), = rep.improvement_profile
    assert agent == Agent(SUPPLIER, 0) and verdict is Verdict.BETTER
    # the lone deviator over-reports its peak to get closer to it
    (_, value), = rep.manipulation.reported_peaks
    assert value > 1
    assert rep.truthful_alloc.x == (F(1, 2), F(3, 2))


def test_budget_exceeded():
    with pytest.raises(BudgetExceeded):
        attack_peaks(SHORTAGE, 2, [F(k, 2) for k in range(9)], budget=10)
    with pytest.raises(BudgetExceeded):
        attack_links(load_fixture("link_coalition"), budget=1)


def test_fast_path_matches_public_mechanism():
    # swapping in the public mechanism must give the same (empty) verdict
    inst = TwoSidedInstance(BipartiteGraph.complete(2, 2), [1, 3], [2, 1])
    grid = [F(k, 2) for k in range(9)]
    fast = attack_peaks(inst, 2, grid)
    slow = attack_peaks(inst, 2, grid, mechanism=egalitarian)
    assert not fast.found and not slow.found


@settings(max_examples=40, deadline=None)
@given(two_sided_instances(max_side=3, max_value=3, min_nodes=1))
def test_two_sided_peaks_property(inst):
    assert not attack_peaks(inst, 2, [F(k, 2) for k in range(9)]).found


@settings(max_examples=40, deadline=None)
@given(one_sided_instances(max_side=3, max_value=3, min_nodes=1))
def test_one_sided_peaks_property(inst):
    assert not attack_peaks(inst, 2, [F(k, 2) for k in range(9)]).found
    assert not attack_peaks(inst, 1, [F(k, 2) for k in range(9)], Mode.DISTANCE).found


# --- link attacks


def test_single_supplier_hides_a_link():
    inst = load_fixture("lone_supplier")
    rep = attack_links(inst, Side.SUPPLIERS, max_coalition=1)
    assert rep.found
    assert rep.truthful_alloc.x == (2,) and rep.manipulated_alloc.x == (1,)
    (agent, kept), = rep.manipulation.reported_links
    assert agent == Agent(SUPPLIER, 0) and len(kept) == 1


def test_mixed_coalition_hides_a_link():
    inst = load_fixture("link_coalition")
    rep = attack_links(inst, Side.MIXED, max_coalition=2)
    assert rep.found
    assert rep.manipulation.coalition == (Agent(SUPPLIER, 0), Agent(DEMANDER, 1))
    assert rep.manipulation.reported_links == ((Agent(SUPPLIER, 0), frozenset({1})),)
    profile = dict(rep.improvement_profile)
    assert profile[Agent(DEMANDER, 1)] is Verdict.BETTER
    assert profile[Agent(SUPPLIER, 0)] is Verdict.EQUAL
    assert (rep.manipulated_alloc.x, rep.manipulated_alloc.y) == ((1, 1), (0, 2))


@pytest.mark.parametrize("side", [Side.SUPPLIERS, Side.DEMANDERS])
def test_one_sided_coalitions_cannot_hide_links(side):
    assert not attack_links(load_fixture("link_coalition"), side, max_coalition=2).found


def test_link_report_keeps_only_mutual_links():
    inst = load_fixture("link_coalition")
    out = _with_links(inst, ((Agent(DEMANDER, 1), frozenset({1})),))
    assert out.graph.links == frozenset({(0, 0), (1, 1)})


def test_supplier_link_property():
    for inst in corpus("two_sided", 20, seed=5, max_side=3, max_value=3):
        assert not attack_links(inst, Side.SUPPLIERS, 2).found
        assert not attack_links(inst, Side.DEMANDERS, 2).found


# --- decomposition stability and flow inequalities


def test_perturbation_examples():
    base = decompose_one_sided(SHORTAGE)
    assert base.m_minus == {0, 1}
    assert decompose_one_sided(SHORTAGE.with_peaks([5, 3])).m_minus == {0, 1}
    assert egalitarian(SHORTAGE).x == (1, 1)
    assert decompose_one_sided(SHORTAGE.with_peaks([1, F(3, 2)])) == base
    assert decompose_one_sided(SHORTAGE.with_peaks([1, 3])) == base


def test_perturbation_report():
    rep = check_decomposition_lemmas(SHORTAGE, 50, rng_seed=3)
    assert rep.violations == () and rep.checked + rep.skipped == 50 and rep.seed == 3


def test_accounting_inequalities_on_perturbations():
    rng = random.Random(11)
    for inst in corpus("one_sided", 15, seed=8, max_side=3) + corpus("two_sided", 15, seed=9, max_side=3):
        for _ in range(5):
            s = list(inst.s)
            i = rng.randrange(len(s))
            if isinstance(inst, OneSidedInstance):
                hi = inst.upper[i] if inst.upper[i] is not None else 6
                s[i] = inst.lower[i] + F(rng.randint(0, int(4 * (hi - inst.lower[i]))), 4)
                rep = inst.with_peaks(s)
            else:
                s[i] = F(rng.randint(0, 24), 4)
                rep = inst.with_peaks(s, inst.d)
            if isinstance(rep, OneSidedInstance) and not check_feasible(rep):
                continue
            assert accounting_inequalities(inst, rep) == []


# --- bossiness


def test_trivial_grid_is_not_bossy():
    inst = load_fixture("link_coalition")
    assert check_bossiness(inst, Agent(SUPPLIER, 0), [1]) is None
    assert check_bossiness(SHORTAGE, Agent(SUPPLIER, 1), [3]) is None


def test_link_bossiness_witness():
    for inst in corpus("two_sided", 30, seed=13, exact_side=3):
        for a in [Agent(SUPPLIER, i) for i in range(3)] + [Agent(DEMANDER, j) for j in range(3)]:
            w = check_bossiness(inst, a, default_peak_grid(inst), include_links=True)
            if w is not None:
                assert verify_bossiness(inst, w)
                assert w.agent not in w.changed
                return
    pytest.fail("no bossiness witness in the batch")
