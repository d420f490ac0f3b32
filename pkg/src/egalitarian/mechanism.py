"""The egalitarian transfer mechanism, one-sided and two-sided.

Both passes of the one-sided model and both passes of the two-sided model
are the same parametric water-filling: a level ``lam`` rises from zero,
every active supplier offers ``median(low_i, lam, high_i)``, and as soon as
some supplier set ``X`` can exactly cover the demand of its neighbourhood
``f(X)`` the largest such set is frozen at its current offers and removed
together with ``f(X)``.  The rising level is located by a discrete Newton
iteration on maximal min-cuts, never by scanning.

All data is rescaled onto one integer grid before the passes run.  The grid
is fine enough (common denominator times ``lcm(1..n)``) that every level
the Newton step can produce is itself a grid point, so integer division in
the inner loop is exact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import ContractViolation, InfeasibleInstance, ensure
from .flow import (
    BipartiteGraph,
    FlowNetwork,
    FlowResult,
    IntFlow,
    as_rational,
    common_scale,
    max_flow,
    min_cut_maximal,
    min_cut_minimal,
    scale_all,
)

# ---------------------------------------------------------------------------
# instances and results


def _ratvec(values, n: int, what: str, allow_none: bool = False) -> tuple:
    values = tuple(values)
    if len(values) != n:
        raise ValueError(f"{what}: expected {n} entries, got {len(values)}")
    out = []
    for v in values:
        if v is None and allow_none:
            out.append(None)
            continue
        r = as_rational(v)
        if r < 0:
            raise ValueError(f"{what}: negative entry {r}")
        out.append(r)
    return tuple(out)


@dataclass(frozen=True)
class OneSidedInstance:
    """Demands ``d`` must be met exactly; supplier ``i`` ships within ``[lower_i, upper_i]``.

    ``upper_i is None`` means no upper bound.  Only peaks enter the
    mechanism, so no richer preference data is accepted.
    """

    graph: BipartiteGraph
    s: tuple
    d: tuple
    lower: tuple = None
    upper: tuple = None
    supplier_ids: Optional[tuple] = field(default=None, compare=False)
    demander_ids: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        n, m = self.graph.n_suppliers, self.graph.n_demanders
        s = _ratvec(self.s, n, "s")
        lower = _ratvec(self.lower if self.lower is not None else [0] * n, n, "lower")
        upper = _ratvec(self.upper if self.upper is not None else [None] * n, n, "upper", True)
        for i in range(n):
            if not lower[i] <= s[i] or (upper[i] is not None and s[i] > upper[i]):
                raise ValueError(f"supplier {i}: need lower <= peak <= upper")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "d", _ratvec(self.d, m, "d"))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def with_peaks(self, s) -> "OneSidedInstance":
        return OneSidedInstance(self.graph, s, self.d, self.lower, self.upper,
                                self.supplier_ids, self.demander_ids)

    def with_graph(self, graph: BipartiteGraph) -> "OneSidedInstance":
        return OneSidedInstance(graph, self.s, self.d, self.lower, self.upper,
                                self.supplier_ids, self.demander_ids)


@dataclass(frozen=True)
class TwoSidedInstance:
    graph: BipartiteGraph
    s: tuple
    d: tuple
    supplier_ids: Optional[tuple] = field(default=None, compare=False)
    demander_ids: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "s", _ratvec(self.s, self.graph.n_suppliers, "s"))
        object.__setattr__(self, "d", _ratvec(self.d, self.graph.n_demanders, "d"))

    def with_peaks(self, s=None, d=None) -> "TwoSidedInstance":
        return TwoSidedInstance(self.graph, self.s if s is None else s, self.d if d is None else d,
                                self.supplier_ids, self.demander_ids)

    def with_graph(self, graph: BipartiteGraph) -> "TwoSidedInstance":
        return TwoSidedInstance(graph, self.s, self.d, self.supplier_ids, self.demander_ids)

    def transpose(self) -> "TwoSidedInstance":
        return TwoSidedInstance(self.graph.transpose(), self.d, self.s,
                                self.demander_ids, self.supplier_ids)


@dataclass(frozen=True)
class Decomposition:
    """``(M-, M+, Q+, Q-)``; the two-sided model reads it as ``(S-, S+, D+, D-)``."""

    m_minus: frozenset
    m_plus: frozenset
    q_plus: frozenset
    q_minus: frozenset

    s_minus = property(lambda self: self.m_minus)
    s_plus = property(lambda self: self.m_plus)
    d_plus = property(lambda self: self.q_plus)
    d_minus = property(lambda self: self.q_minus)


class BreakpointKind(enum.Enum):
    TYPE1 = "type-1"
    TYPE2 = "type-2"


@dataclass(frozen=True)
class Breakpoint:
    lam: Fraction
    kind: BreakpointKind
    bottleneck: frozenset = frozenset()
    side: str = "suppliers"   # the demander pass of the two-sided model uses "demanders"


@dataclass(frozen=True)
class Allocation:
    x: tuple
    y: tuple
    flow_witness: FlowResult
    breakpoints: tuple = ()


def median(a, b, c):
    """Middle value of ``a <= c`` and ``b``; ``c is None`` means +infinity."""
    if b < a:
        return a
    if c is not None and b > c:
        return c
    return b


# ---------------------------------------------------------------------------
# integer water-filling core


def _first_type2(graph, sups, dem_on, low, high, dem, require_cover):
    """Return ``(lam, X)`` on the integer grid, or ``None`` if no set ever binds."""
    if not sups:
        return None
    succ = graph.succ
    total = sum(dem[j] for j in range(len(dem_on)) if dem_on[j])
    ladder = {0}
    for i in sups:
        ladder.add(low[i])
        if high[i] is not None:
            ladder.add(high[i])
    ladder = sorted(ladder)
    if any(high[i] is None for i in sups):
        ladder.append(ladder[-1] + total + 1)

    def probe(lam):
        caps = list(low)
        for i in sups:
            caps[i] = median(low[i], lam, high[i])
        return IntFlow(graph, sups, dem_on, caps, dem).run()

    top = probe(ladder[-1])
    if require_cover and top.value != total:
        raise ContractViolation("demands cannot be covered at the high capacities")
    X = top.maximal_cut()
    if not X:
        return None

    # first ladder point where some set binds (binding is monotone in lam)
    lo, hi, hi_cut = -1, len(ladder) - 1, X
    while hi - lo > 1:
        mid = (lo + hi) // 2
        cut = probe(ladder[mid]).maximal_cut()
        if cut:
            hi, hi_cut = mid, cut
        else:
            lo = mid
    if hi == 0:
        return ladder[0], frozenset(hi_cut)

    # offers are linear on [a, b]: slope 1 for free suppliers, constant otherwise
    a, b = ladder[hi - 1], ladder[hi]
    lam, X = b, hi_cut
    while True:
        slope, const = 0, 0
        for i in X:
            if low[i] <= a and (high[i] is None or high[i] >= b):
                slope += 1
            else:
                const += median(low[i], b, high[i])
        need = 0
        seen = set()
        for i in X:
            for j in succ[i]:
                if dem_on[j] and j not in seen:
                    seen.add(j)
                    need += dem[j]
        ensure(slope > 0, "binding set has no free supplier inside the interval")
        num = need - const
        ensure(num % slope == 0, "level fell off the integer grid")
        nxt = num // slope
        ensure(a < nxt <= lam, "Newton step left the linearity interval")
        if nxt == lam:
            return lam, frozenset(X)
        lam = nxt
        X = probe(lam).maximal_cut()
        ensure(bool(X), "Newton iterate lost its binding set")


def _water_fill(graph, sups, dems, low, high, dem, require_cover):
    """Full pass: repeated breakpoints with freezing.  Returns ``(x, trace)``."""
    succ = graph.succ
    dem_on = [False] * graph.n_demanders
    for j in dems:
        dem_on[j] = True
    active = sorted(sups)
    x: dict = {}
    trace: list = []
    prev = None
    while active:
        bp = _first_type2(graph, active, dem_on, low, high, dem, require_cover)
        if bp is None:
            for i in active:
                ensure(high[i] is not None, "unbounded supplier never binds")
                x[i] = high[i]
            break
        lam, X = bp
        ensure(prev is None or lam > prev, f"breakpoints not increasing: {prev} then {lam}")
        covered = {j for i in X for j in succ[i] if dem_on[j]}
        for i in X:
            x[i] = median(low[i], lam, high[i])
        ensure(sum(x[i] for i in X) == sum(dem[j] for j in covered),
               "frozen set does not exactly cover its neighbourhood")
        trace.append((lam, X))
        for j in covered:
            dem_on[j] = False
        active = [i for i in active if i not in X]
        prev = lam
    if require_cover:
        ensure(all(dem[j] == 0 for j in range(len(dem_on)) if dem_on[j]),
               "demand left uncovered after all suppliers froze")
    return x, trace


def _grid(values, n_agents: int) -> int:
    return common_scale(v for v in values if v is not None) * math.lcm(1, *range(1, n_agents + 1))


def one_sided_core(graph, s, d, lower, upper):
    """Integer-grid one-sided mechanism.  Returns ``(x, m_minus, traces)``.

    ``upper`` entries may be None.  Caller guarantees feasibility.
    """
    n, m = graph.n_suppliers, graph.n_demanders
    flow = IntFlow(graph, range(n), [True] * m, s, d).run()
    m_minus = frozenset(flow.minimal_cut())
    q_plus = {j for i in m_minus for j in graph.succ[i]}
    m_plus = [i for i in range(n) if i not in m_minus]
    q_minus = [j for j in range(m) if j not in q_plus]
    x_minus, trace_minus = _water_fill(graph, m_minus, q_plus, lower, s, d, True)
    x_plus, trace_plus = _water_fill(graph, m_plus, q_minus, s, upper, d, True)
    x = [0] * n
    for i, v in x_minus.items():
        x[i] = v
    for i, v in x_plus.items():
        x[i] = v
    for i in range(n):
        lo, hi = (lower[i], s[i]) if i in m_minus else (s[i], upper[i])
        ensure(lo <= x[i] and (hi is None or x[i] <= hi), f"supplier {i} outside its block range")
    witness = IntFlow(graph, range(n), [True] * m, x, d).run()
    ensure(witness.value == sum(x) == sum(d), "egalitarian allocation is not implementable")
    return x, m_minus, trace_minus + trace_plus, witness


def peak_capped_core(graph, s, d):
    """Integer-grid peak-capped pass (supplier side of the two-sided model)."""
    dems = [j for j in range(graph.n_demanders) if d[j] > 0]
    x, trace = _water_fill(graph, range(graph.n_suppliers), dems, [0] * len(s), s, d, False)
    return [x[i] for i in range(graph.n_suppliers)], trace


def two_sided_core(graph, transposed, s, d):
    """Integer-grid two-sided mechanism.  Returns ``(x, y, traces, witness)``."""
    x, trace_x = peak_capped_core(graph, s, d)
    y, trace_y = peak_capped_core(transposed, d, s)
    check_two_sided(graph, s, d, x, y)
    witness = IntFlow(graph, range(graph.n_suppliers), [True] * graph.n_demanders, x, y).run()
    ensure(witness.value == sum(x), "two-sided allocation is not implementable")
    return x, y, trace_x + [(lam, X, "demanders") for lam, X in trace_y], witness


def check_two_sided(graph, s, d, x, y) -> None:
    ensure(all(0 <= a <= p for a, p in zip(x, s)), "supplier above peak")
    ensure(all(0 <= b <= p for b, p in zip(y, d)), "demander above peak")
    ensure(sum(x) == sum(y), "supplier and demander totals differ")


# ---------------------------------------------------------------------------
# public operations


def first_type2_breakpoint(graph: BipartiteGraph, caps_low, caps_high, demands, *,
                           suppliers=None, demanders=None,
                           require_cover: bool = True) -> Optional[Breakpoint]:
    """Smallest level at which a supplier set exactly covers its neighbours' demand.

    ``suppliers``/``demanders`` restrict the problem to a sub-block (other
    agents are masked, keeping original indices).  With ``require_cover``
    the active demands must be coverable at the high capacities, otherwise
    ContractViolation; without it a block that never binds yields ``None``.
    """
    low = [as_rational(v) for v in caps_low]
    high = [None if v is None else as_rational(v) for v in caps_high]
    dem = [as_rational(v) for v in demands]
    sups = sorted(range(graph.n_suppliers) if suppliers is None else suppliers)
    dems = set(range(graph.n_demanders) if demanders is None else demanders)
    for i in sups:
        if high[i] is not None and high[i] < low[i]:
            raise ValueError(f"supplier {i}: high capacity below low capacity")
    scale = _grid(low + high + dem, len(sups))
    lo_i, hi_i, d_i = scale_all(low, scale), scale_all(high, scale), scale_all(dem, scale)
    dem_on = [j in dems for j in range(graph.n_demanders)]
    bp = _first_type2(graph, sups, dem_on, lo_i, hi_i, d_i, require_cover)
    if bp is None:
        return None
    return Breakpoint(Fraction(bp[0], scale), BreakpointKind.TYPE2, bp[1])


def _unbounded_cap(inst: OneSidedInstance) -> tuple:
    bound = sum(inst.d, Fraction(0))
    return tuple(bound if u is None else u for u in inst.upper)


def check_feasible(inst: OneSidedInstance) -> bool:
    """Lower bounds shippable and demands coverable within the upper bounds."""
    low_flow = max_flow(FlowNetwork(inst.graph, inst.lower, inst.d))
    if low_flow.value != sum(inst.lower, Fraction(0)):
        return False
    high_flow = max_flow(FlowNetwork(inst.graph, _unbounded_cap(inst), inst.d))
    return high_flow.value == sum(inst.d, Fraction(0))


def _decompose_one_sided(inst: OneSidedInstance) -> Decomposition:
    net = FlowNetwork(inst.graph, inst.s, inst.d)
    cut = min_cut_minimal(net, max_flow(net))
    m_minus = cut.suppliers_in_cut
    q_plus = inst.graph.f(m_minus)
    return Decomposition(
        m_minus,
        frozenset(range(inst.graph.n_suppliers)) - m_minus,
        q_plus,
        frozenset(range(inst.graph.n_demanders)) - q_plus,
    )


def decompose_one_sided(inst: OneSidedInstance) -> Decomposition:
    if not check_feasible(inst):
        raise InfeasibleInstance("no flow meets the demands within the supplier bounds")
    return _decompose_one_sided(inst)


def decompose_two_sided(inst: TwoSidedInstance) -> Decomposition:
    net = FlowNetwork(inst.graph, inst.s, inst.d)
    cut = min_cut_maximal(net, max_flow(net))
    s_minus = cut.suppliers_in_cut
    d_plus = inst.graph.f(s_minus)
    return Decomposition(
        s_minus,
        frozenset(range(inst.graph.n_suppliers)) - s_minus,
        d_plus,
        frozenset(range(inst.graph.n_demanders)) - d_plus,
    )


def _to_fractions(values, scale):
    return tuple(Fraction(v, scale) for v in values)


def _trace(raw, scale):
    return tuple(Breakpoint(Fraction(step[0], scale), BreakpointKind.TYPE2, step[1], *step[2:])
                 for step in raw)


def egalitarian_one_sided(inst: OneSidedInstance) -> Allocation:
    if not check_feasible(inst):
        raise InfeasibleInstance("no flow meets the demands within the supplier bounds")
    graph = inst.graph
    scale = _grid(inst.s + inst.d + inst.lower + inst.upper, graph.n_suppliers)
    xi, m_minus, trace, _ = one_sided_core(
        graph, scale_all(inst.s, scale), scale_all(inst.d, scale),
        scale_all(inst.lower, scale), scale_all(inst.upper, scale))
    x = _to_fractions(xi, scale)
    witness = max_flow(FlowNetwork(graph, x, inst.d))
    ensure(witness.value == sum(inst.d, Fraction(0)), "egalitarian allocation is not implementable")
    q_plus = graph.f(m_minus)
    ensure(all(witness.edge_flow.get((i, j), 0) == 0
               for i in range(graph.n_suppliers) if i not in m_minus
               for j in graph.succ[i] if j in q_plus),
           "flow from M+ into Q+")
    return Allocation(x, tuple(inst.d), witness, _trace(trace, scale))


def one_sided_with_peak_caps(graph: BipartiteGraph, s, d) -> tuple:
    """Supplier side of the two-sided solution.

    Water-fills ``median(0, lam, s_i)`` against demander capacities ``d``;
    suppliers that never bind end at their peaks.  Calling it on the
    transposed graph with the roles of ``s`` and ``d`` swapped gives the
    demander side.
    """
    s = [as_rational(v) for v in s]
    d = [as_rational(v) for v in d]
    scale = _grid(s + d, graph.n_suppliers)
    x, _ = peak_capped_core(graph, scale_all(s, scale), scale_all(d, scale))
    return _to_fractions(x, scale)


def egalitarian_two_sided(inst: TwoSidedInstance) -> Allocation:
    graph = inst.graph
    scale = _grid(inst.s + inst.d, max(graph.n_suppliers, graph.n_demanders))
    xi, yi, trace, _ = two_sided_core(graph, graph.transpose(),
                                      scale_all(inst.s, scale), scale_all(inst.d, scale))
    x, y = _to_fractions(xi, scale), _to_fractions(yi, scale)
    witness = max_flow(FlowNetwork(graph, x, y))
    ensure(witness.value == sum(x, Fraction(0)), "two-sided allocation is not implementable")
    dec = decompose_two_sided(inst)
    ensure(all(witness.edge_flow.get((i, j), 0) == 0
               for i in dec.s_plus for j in graph.succ[i] if j in dec.d_plus),
           "flow from S+ into D+")
    return Allocation(x, y, witness, _trace(trace, scale))


def egalitarian(inst) -> Allocation:
    if isinstance(inst, OneSidedInstance):
        return egalitarian_one_sided(inst)
    return egalitarian_two_sided(inst)


def decompose(inst) -> Decomposition:
    if isinstance(inst, OneSidedInstance):
        return decompose_one_sided(inst)
    return decompose_two_sided(inst)
