"""Exhaustive manipulation search against the egalitarian mechanism.

Attacks are searched by the set of agents whose report differs from the
truth.  A coalition is that set plus, optionally, one truthful member who
gains, which is all a successful coalition ever needs.
"""

from __future__ import annotations

import enum
import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple, Optional, Sequence

from .errors import BudgetExceeded, InfeasibleInstance, ensure
from .flow import BipartiteGraph, FlowNetwork, IntFlow, as_rational, max_flow, scale_all
from .mechanism import (
    Allocation,
    OneSidedInstance,
    TwoSidedInstance,
    _grid,
    check_feasible,
    check_two_sided,
    decompose,
    egalitarian,
    one_sided_core,
    peak_capped_core,
)

DEFAULT_BUDGET = 10 ** 7
SUPPLIER, DEMANDER = "supplier", "demander"


class Agent(NamedTuple):
    side: str
    index: int

    def __str__(self) -> str:
        return f"{self.side} {self.index}"


class Verdict(enum.Enum):
    BETTER = "better"
    EQUAL = "equal"
    WORSE = "worse"
    INCOMPARABLE = "incomparable"


class Mode(enum.Enum):
    ALL_SINGLE_PEAKED = "all-single-peaked"
    DISTANCE = "distance"


class Side(enum.Enum):
    SUPPLIERS = "suppliers"
    DEMANDERS = "demanders"
    MIXED = "mixed"


def weakly_prefers(new, old, peak, mode: Mode = Mode.ALL_SINGLE_PEAKED) -> Verdict:
    """How an agent with this peak ranks ``new`` against ``old``.

    In ALL_SINGLE_PEAKED mode the answer must hold for every single-peaked
    preference, so values on opposite sides of the peak are incomparable.
    """
    if new == old:
        return Verdict.EQUAL
    if mode is Mode.DISTANCE:
        gap_new, gap_old = abs(new - peak), abs(old - peak)
        if gap_new == gap_old:
            return Verdict.EQUAL
        return Verdict.BETTER if gap_new < gap_old else Verdict.WORSE
    if old <= new <= peak or peak <= new <= old:
        return Verdict.BETTER
    if new <= old <= peak or peak <= old <= new:
        return Verdict.WORSE
    return Verdict.INCOMPARABLE


@dataclass(frozen=True)
class Manipulation:
    coalition: tuple
    reported_peaks: tuple = ()   # (agent, value) pairs
    reported_links: tuple = ()   # (agent, frozenset of partner indices) pairs
    mode: Mode = Mode.ALL_SINGLE_PEAKED


@dataclass(frozen=True)
class AttackReport:
    found: bool
    manipulation: Optional[Manipulation]
    truthful_alloc: Optional[Allocation]
    manipulated_alloc: Optional[Allocation]
    improvement_profile: tuple   # (agent, Verdict) per coalition member
    candidates: int
    seed: Optional[int] = None


def _agents(inst) -> list:
    agents = [Agent(SUPPLIER, i) for i in range(inst.graph.n_suppliers)]
    if isinstance(inst, TwoSidedInstance):
        agents += [Agent(DEMANDER, j) for j in range(inst.graph.n_demanders)]
    return agents


def _agent_key(a: Agent):
    return (a.side != SUPPLIER, a.index)


def _peak(inst, a: Agent):
    return inst.s[a.index] if a.side == SUPPLIER else inst.d[a.index]


def _value(alloc, a: Agent):
    return alloc[0][a.index] if a.side == SUPPLIER else alloc[1][a.index]


def default_peak_grid(inst, step=Fraction(1, 2)) -> list:
    """``0, step, ..., 2 * max(data)``."""
    data = list(inst.s) + list(inst.d)
    if isinstance(inst, OneSidedInstance):
        data += list(inst.lower) + [u for u in inst.upper if u is not None]
    cap = 2 * max(data, default=Fraction(0))
    step = as_rational(step)
    return [k * step for k in range(int(cap / step) + 1)]


def _reports_for(inst, a: Agent, grid) -> list:
    truth = _peak(inst, a)
    values = sorted(set(grid))
    if isinstance(inst, OneSidedInstance):
        # reports outside [lower, upper] describe a different instance
        lo, hi = inst.lower[a.index], inst.upper[a.index]
        values = [v for v in values if v >= lo and (hi is None or v <= hi)]
    return [v for v in values if v != truth]


def _count(choice_lists: Sequence[Sequence], max_size: int) -> int:
    total = 0
    for size in range(1, max_size + 1):
        for combo in itertools.combinations(choice_lists, size):
            n = 1
            for c in combo:
                n *= len(c)
            total += n
    return total


class _Engine:
    """Evaluates reported peak profiles, one side at a time, on the integer grid."""

    def __init__(self, inst, grid):
        self.inst = inst
        g = inst.graph
        self.graph = g
        self.two = isinstance(inst, TwoSidedInstance)
        grid = [as_rational(v) for v in grid]
        if self.two:
            self.gt = g.transpose()
            self.scale = _grid(list(inst.s) + list(inst.d) + grid, max(g.n_suppliers, g.n_demanders))
        else:
            self.scale = _grid(list(inst.s) + list(inst.d) + list(inst.lower) + list(inst.upper) + grid,
                               g.n_suppliers)
            self.lower = scale_all(inst.lower, self.scale)
            self.upper = scale_all(inst.upper, self.scale)
        self.s = scale_all(inst.s, self.scale)
        self.d = scale_all(inst.d, self.scale)

    def to_int(self, v: Fraction) -> int:
        return v.numerator * (self.scale // v.denominator)

    def side(self, side, s, d):
        if not self.two:
            if side == DEMANDER:
                return list(d)
            return one_sided_core(self.graph, s, d, self.lower, self.upper)[0]
        if side == SUPPLIER:
            return peak_capped_core(self.graph, s, d)[0]
        return peak_capped_core(self.gt, d, s)[0]

    def certify(self, s, d, x, y) -> None:
        if self.two:
            check_two_sided(self.graph, s, d, x, y)
        g = self.graph
        fl = IntFlow(g, range(g.n_suppliers), [True] * g.n_demanders, x, y).run()
        ensure(fl.value == sum(x) == sum(y), "allocation is not implementable")


def attack_peaks(inst, max_coalition: int = 1, peak_grid: Optional[Iterable] = None,
                 mode: Mode = Mode.ALL_SINGLE_PEAKED, budget: int = DEFAULT_BUDGET,
                 mechanism: Optional[Callable] = None, seed: Optional[int] = None) -> AttackReport:
    """Search every coalition of at most ``max_coalition`` agents and every grid misreport.

    Returns the first successful attack in a fixed order (by deviating set,
    then by reported values), or ``found=False``.  ``mechanism`` replaces the
    egalitarian rule with any ``instance -> Allocation`` callable.
    """
    grid = default_peak_grid(inst) if peak_grid is None else [as_rational(v) for v in peak_grid]
    agents = _agents(inst)
    choices = {a: _reports_for(inst, a, grid) for a in agents}
    total = _count([choices[a] for a in agents], max_coalition)
    if total > budget:
        raise BudgetExceeded(f"{total} candidate misreports exceed the budget of {budget}")

    if mechanism is None:
        engine = _Engine(inst, grid)
        s0, d0 = engine.s, engine.d
        truth = (engine.side(SUPPLIER, s0, d0), engine.side(DEMANDER, s0, d0))
        engine.certify(s0, d0, *truth)
        peaks = {a: (s0 if a.side == SUPPLIER else d0)[a.index] for a in agents}
        conv = engine.to_int
        if engine.two:
            # allocations never exceed reported peaks, so reporting below the
            # truthful allocation leaves the agent strictly worse off
            choices = {a: [v for v in vs if conv(v) >= _value(truth, a)] for a, vs in choices.items()}
    else:
        base = mechanism(inst)
        truth = (list(base.x), list(base.y))
        peaks = {a: _peak(inst, a) for a in agents}
        conv = None

    tried = 0
    for size in range(1, max_coalition + 1):
        for group in itertools.combinations(agents, size):
            order = sorted({a.side for a in group}, key=lambda side: side != SUPPLIER)
            for combo in itertools.product(*(choices[a] for a in group)):
                tried += 1
                if mechanism is None:
                    s, d = list(s0), list(d0)
                    for a, v in zip(group, combo):
                        (s if a.side == SUPPLIER else d)[a.index] = conv(v)
                    alloc = {}
                    ok = True
                    for side in order:
                        alloc[side] = engine.side(side, s, d)
                        for a in group:
                            if a.side == side and weakly_prefers(
                                    alloc[side][a.index], _value(truth, a), peaks[a], mode) not in (
                                    Verdict.BETTER, Verdict.EQUAL):
                                ok = False
                                break
                        if not ok:
                            break
                    if not ok:
                        continue
                    for side in (SUPPLIER, DEMANDER):
                        if side not in alloc:
                            alloc[side] = engine.side(side, s, d)
                    engine.certify(s, d, alloc[SUPPLIER], alloc[DEMANDER])
                    new = (alloc[SUPPLIER], alloc[DEMANDER])
                else:
                    rep = _with_reports(inst, group, combo)
                    out = mechanism(rep)
                    new = (list(out.x), list(out.y))
                coalition = _coalition(group, agents, truth, new, peaks, mode, max_coalition)
                if coalition is None:
                    continue
                manipulation = Manipulation(coalition, tuple(zip(group, combo)), (), mode)
                return _report(inst, manipulation, truth, new, peaks, mode, tried, seed, mechanism)
    return AttackReport(False, None, None, None, (), tried, seed)


def _coalition(group, agents, truth, new, peaks, mode, max_coalition):
    verdicts = {a: weakly_prefers(_value(new, a), _value(truth, a), peaks[a], mode) for a in group}
    if any(v not in (Verdict.BETTER, Verdict.EQUAL) for v in verdicts.values()):
        return None
    if any(v is Verdict.BETTER for v in verdicts.values()):
        return tuple(group)
    if len(group) >= max_coalition:
        return None
    for k in agents:
        if k not in group and weakly_prefers(_value(new, k), _value(truth, k), peaks[k], mode) is Verdict.BETTER:
            return tuple(sorted(group + (k,), key=_agent_key))
    return None


def _with_reports(inst, group, values):
    s, d = list(inst.s), list(inst.d)
    for a, v in zip(group, values):
        (s if a.side == SUPPLIER else d)[a.index] = v
    if isinstance(inst, OneSidedInstance):
        return inst.with_peaks(s)
    return inst.with_peaks(s, d)


def _report(inst, manipulation, truth, new, peaks, mode, tried, seed, mechanism):
    if manipulation.reported_links:
        reported = _with_links(inst, manipulation.reported_links)
    else:
        group = [a for a, _ in manipulation.reported_peaks]
        reported = _with_reports(inst, group, [v for _, v in manipulation.reported_peaks])
    run = mechanism or egalitarian
    before, after = run(inst), run(reported)
    profile = []
    for a in manipulation.coalition:
        peak = _peak(inst, a)
        v = weakly_prefers(_value((after.x, after.y), a), _value((before.x, before.y), a), peak, mode)
        profile.append((a, v))
    # the fast path and the public mechanism must agree on the verdicts
    ensure(all(v in (Verdict.BETTER, Verdict.EQUAL) for _, v in profile)
           and any(v is Verdict.BETTER for _, v in profile), "reported attack does not replay")
    return AttackReport(True, manipulation, before, after, tuple(profile), tried, seed)


# ---------------------------------------------------------------------------
# link misreports


def _with_links(inst, reported_links):
    """Instance on the links both endpoints still report.

    In the one-sided model a demander left without links drops out (its
    demand is set to zero), so hiding a link never makes the instance
    trivially infeasible.
    """
    hidden = set()
    for a, kept in reported_links:
        if a.side == SUPPLIER:
            hidden |= {(a.index, j) for j in inst.graph.succ[a.index] if j not in kept}
        else:
            hidden |= {(i, a.index) for i in inst.graph.pred[a.index] if i not in kept}
    graph = inst.graph.with_links(l for l in inst.graph.links if l not in hidden)
    if isinstance(inst, OneSidedInstance):
        d = [v if graph.pred[j] else Fraction(0) for j, v in enumerate(inst.d)]
        return OneSidedInstance(graph, inst.s, d, inst.lower, inst.upper,
                                inst.supplier_ids, inst.demander_ids)
    return inst.with_graph(graph)


def _link_choices(inst, a: Agent) -> list:
    true = inst.graph.succ[a.index] if a.side == SUPPLIER else inst.graph.pred[a.index]
    out = []
    for r in range(len(true) - 1, -1, -1):
        out += [frozenset(c) for c in itertools.combinations(true, r)]
    return out


def attack_links(inst, side: Side = Side.MIXED, max_coalition: int = 2,
                 budget: int = DEFAULT_BUDGET, seed: Optional[int] = None) -> AttackReport:
    """Search coalitions that hide some of their true links.

    ``side`` restricts the coalition (deviators and beneficiaries) to one
    side of the market.  One-sided instances only have supplier agents.
    """
    agents = _agents(inst)
    if side is Side.SUPPLIERS:
        agents = [a for a in agents if a.side == SUPPLIER]
    elif side is Side.DEMANDERS:
        agents = [a for a in agents if a.side == DEMANDER]
    choices = {a: _link_choices(inst, a) for a in agents}
    total = _count([choices[a] for a in agents], max_coalition)
    if total > budget:
        raise BudgetExceeded(f"{total} candidate misreports exceed the budget of {budget}")
    base = egalitarian(inst)
    truth = (list(base.x), list(base.y))
    peaks = {a: _peak(inst, a) for a in agents}
    mode = Mode.ALL_SINGLE_PEAKED
    tried = 0
    for size in range(1, max_coalition + 1):
        for group in itertools.combinations(agents, size):
            for combo in itertools.product(*(choices[a] for a in group)):
                tried += 1
                reported = _with_links(inst, tuple(zip(group, combo)))
                if isinstance(reported, OneSidedInstance) and not check_feasible(reported):
                    continue
                out = egalitarian(reported)
                new = (list(out.x), list(out.y))
                coalition = _coalition(group, agents, truth, new, peaks, mode, max_coalition)
                if coalition is None:
                    continue
                manipulation = Manipulation(coalition, (), tuple(zip(group, combo)), mode)
                return _report(inst, manipulation, truth, new, peaks, mode, tried, seed, None)
    return AttackReport(False, None, None, None, (), tried, seed)


# ---------------------------------------------------------------------------
# baseline rule for sanity checks


def proportional_rule(inst: OneSidedInstance) -> Allocation:
    """Split total demand in proportion to reported peaks (bounds and links ignored).

    Only meaningful on a complete graph; used as a manipulable baseline.
    """
    n = inst.graph.n_suppliers
    total = sum(inst.d, Fraction(0))
    weight = sum(inst.s, Fraction(0))
    x = tuple(total * p / weight if weight else total / n for p in inst.s)
    witness = max_flow(FlowNetwork(inst.graph, x, inst.d))
    ensure(witness.value == total, "proportional split is not implementable on this graph")
    return Allocation(x, tuple(inst.d), witness)


# ---------------------------------------------------------------------------
# structural checks


@dataclass(frozen=True)
class LemmaReport:
    trials: int
    checked: int
    skipped: int
    violations: tuple   # (supplier, new peak, hypothesis) per failure
    seed: int


def _grid_between(lo: Fraction, hi: Fraction, rng: random.Random, strict_lo=False, strict_hi=False):
    step = Fraction(1, 4)
    k0 = -((-lo) // step)
    k1 = hi // step
    values = [k * step for k in range(int(k0), int(k1) + 1)]
    values = [v for v in values if (v > lo or not strict_lo) and (v < hi or not strict_hi)]
    return rng.choice(values) if values else None


def check_decomposition_lemmas(inst: OneSidedInstance, trials: int, rng_seed: int) -> LemmaReport:
    """Perturb one supplier's peak within a hypothesis that keeps the decomposition.

    The hypotheses: for a supplier in M-, any raise of its peak, or any
    peak strictly above its allocation; for a supplier in M+, any cut of its
    peak, or any peak strictly below its allocation.  New peaks stay within
    the supplier's bounds and lie on a 1/4 grid.
    """
    rng = random.Random(rng_seed)
    dec = decompose(inst)
    x = egalitarian(inst).x
    n = inst.graph.n_suppliers
    roof = max(list(inst.s) + [sum(inst.d, Fraction(0))]) + 2
    checked = skipped = 0
    violations = []
    for _ in range(trials):
        i = rng.randrange(n)
        hi = inst.upper[i] if inst.upper[i] is not None else roof
        lo = inst.lower[i]
        weak = rng.random() < 0.5
        if i in dec.m_minus:
            if weak:
                new, why = _grid_between(inst.s[i], hi, rng), "raise within M-"
            else:
                new, why = _grid_between(x[i], hi, rng, strict_lo=True), "above allocation within M-"
        else:
            if weak:
                new, why = _grid_between(lo, inst.s[i], rng), "cut within M+"
            else:
                new, why = _grid_between(lo, x[i], rng, strict_hi=True), "below allocation within M+"
        if new is None:
            skipped += 1
            continue
        s = list(inst.s)
        s[i] = new
        other = decompose(inst.with_peaks(s))
        checked += 1
        if other.m_minus != dec.m_minus or other.m_plus != dec.m_plus:
            violations.append((i, new, why))
    return LemmaReport(trials, checked, skipped, tuple(violations), rng_seed)


def accounting_inequalities(inst, reported) -> list:
    """Flow-accounting inequalities linking a truthful and a misreported run.

    Returns the names of the inequalities that fail (expected: none).  They
    hold for any misreport, profitable or not.
    """
    graph = inst.graph
    a0, a1 = egalitarian(inst), egalitarian(reported)
    d0, d1 = decompose(inst), decompose(reported)
    failed = []
    if isinstance(inst, OneSidedInstance):
        ys0 = ys1 = inst.d
    else:
        ys0, ys1 = a0.y, a1.y
    # demanders that switched from the constrained to the unconstrained block
    moved_d = d0.q_plus & d1.q_minus
    k = d0.m_minus & graph.g(moved_d)
    if sum((a1.x[i] for i in k), Fraction(0)) > sum((ys1[j] for j in moved_d), Fraction(0)):
        failed.append("misreported flow out of M- into switched demanders")
    if sum((a0.x[i] for i in k), Fraction(0)) < sum((ys0[j] for j in moved_d), Fraction(0)):
        failed.append("truthful flow into switched demanders")
    # suppliers that switched the other way
    moved_s = d0.m_plus & d1.m_minus
    z = graph.f(moved_s) & d0.q_minus
    if sum((a1.x[i] for i in moved_s), Fraction(0)) < sum((ys1[j] for j in z), Fraction(0)):
        failed.append("misreported flow out of switched suppliers")
    if sum((a0.x[i] for i in moved_s), Fraction(0)) > sum((ys0[j] for j in z), Fraction(0)):
        failed.append("truthful flow out of switched suppliers")
    if isinstance(inst, TwoSidedInstance):
        for alloc, dec, rep in ((a0, d0, inst), (a1, d1, reported)):
            if any(alloc.x[i] != rep.s[i] for i in dec.s_plus):
                failed.append("supplier outside the bottleneck below peak")
            if any(alloc.y[j] != rep.d[j] for j in dec.d_plus):
                failed.append("demander in the bottleneck neighbourhood below peak")
    return failed


# ---------------------------------------------------------------------------
# bossiness


@dataclass(frozen=True)
class BossinessWitness:
    agent: Agent
    report: Optional[Fraction]         # misreported peak, or None for a link report
    kept_links: Optional[frozenset]    # partners still reported, or None for a peak report
    truthful: Allocation
    manipulated: Allocation
    changed: tuple   # other agents whose allocation moved


def _misreported(inst, w: BossinessWitness):
    if w.kept_links is not None:
        return _with_links(inst, ((w.agent, w.kept_links),))
    return _with_reports(inst, (w.agent,), (w.report,))


def verify_bossiness(inst, w: BossinessWitness) -> bool:
    """Own allocation exactly equal, someone else's different (recomputed)."""
    before = egalitarian(inst)
    after = egalitarian(_misreported(inst, w))
    own = _value((before.x, before.y), w.agent) == _value((after.x, after.y), w.agent)
    others = [a for a in _agents(inst) if a != w.agent
              and _value((before.x, before.y), a) != _value((after.x, after.y), a)]
    return own and bool(others) and tuple(others) == w.changed


def check_bossiness(inst, agent: Agent, peak_grid: Iterable,
                    include_links: bool = False) -> Optional[BossinessWitness]:
    """First report of ``agent`` that keeps its own allocation but moves someone else's.

    Peak reports come from ``peak_grid``; with ``include_links`` every subset
    of the agent's true links is tried afterwards.
    """
    before = egalitarian(inst)
    old = (before.x, before.y)
    agents = _agents(inst)
    reports = [(v, None) for v in _reports_for(inst, agent, [as_rational(p) for p in peak_grid])]
    if include_links:
        reports += [(None, kept) for kept in _link_choices(inst, agent)]
    for value, kept in reports:
        w = BossinessWitness(agent, value, kept, before, before, ())
        reported = _misreported(inst, w)
        if isinstance(reported, OneSidedInstance) and not check_feasible(reported):
            continue
        after = egalitarian(reported)
        new = (after.x, after.y)
        if _value(new, agent) != _value(old, agent):
            continue
        changed = tuple(a for a in agents if a != agent and _value(new, a) != _value(old, a))
        if changed:
            w = BossinessWitness(agent, value, kept, before, after, changed)
            ensure(verify_bossiness(inst, w), "bossiness witness failed its re-check")
            return w
    return None
