"""Independent oracles: uniform rule, Lorenz order, Pareto sets, brute-force breakpoints.

Nothing here calls the water-filling code.  The Pareto machinery uses the
flow engine only to decide feasibility and to search residual paths.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .errors import TooLarge, UnequalTotals, ensure
from .flow import BipartiteGraph, FlowNetwork, IntFlow, as_rational, common_scale, max_flow, scale_all
from .mechanism import (
    Allocation,
    Breakpoint,
    BreakpointKind,
    OneSidedInstance,
    TwoSidedInstance,
    decompose,
    median,
)

DEFAULT_LIMIT = 10 ** 7


def uniform_rule(peaks: Sequence, total) -> tuple:
    """Sprumont's uniform rule: ``min(p_i, lam)`` under shortage, ``max(p_i, lam)`` under excess."""
    peaks = [as_rational(p) for p in peaks]
    total = as_rational(total)
    if total < 0:
        raise ValueError("total must be non-negative")
    n = len(peaks)
    if n == 0:
        if total:
            raise ValueError("nobody to allocate a positive total to")
        return ()
    if sum(peaks) >= total:
        # scan peaks upward; lam lands in the first gap that absorbs the rest
        left = total
        order = sorted(peaks)
        lam = order[-1]
        for k, p in enumerate(order):
            if p * (n - k) >= left:
                lam = left / (n - k)
                break
            left -= p
        return tuple(min(p, lam) for p in peaks)
    left = total
    order = sorted(peaks, reverse=True)
    lam = order[-1]
    for k, p in enumerate(order):
        if p * (n - k) <= left:
            lam = left / (n - k)
            break
        left -= p
    return tuple(max(p, lam) for p in peaks)


def lorenz_dominates(a: Sequence, b: Sequence, strict: bool = False) -> bool:
    """Every ascending partial sum of ``a`` is at least that of ``b``."""
    if len(a) != len(b):
        raise ValueError("vectors differ in length")
    if sum(a) != sum(b):
        raise UnequalTotals(f"totals differ: {sum(a)} vs {sum(b)}")
    acc_a = acc_b = 0
    strictly = False
    for u, v in zip(sorted(a), sorted(b)):
        acc_a += u
        acc_b += v
        if acc_a < acc_b:
            return False
        if acc_a > acc_b:
            strictly = True
    return strictly or not strict


def lex_greater(a: Sequence, b: Sequence) -> bool:
    """Sorted-ascending ``a`` is lexicographically greater than sorted ``b``."""
    return tuple(sorted(a)) > tuple(sorted(b))


# ---------------------------------------------------------------------------
# exact Pareto test via residual paths

SIGMA, TAU = ("sigma",), ("tau",)


@dataclass(frozen=True)
class ParetoReport:
    is_pareto: bool
    is_pareto_star: bool
    witness: Optional[Allocation] = None


def _improving_path(graph, flow, x, y, s, d, two_sided):
    """A residual path whose endpoints both move toward their peaks, or None.

    Endpoints are the virtual nodes SIGMA (supplier side) and TAU (demander
    side).  Any Pareto improvement decomposes into such paths, so none
    existing certifies Pareto optimality.
    """

    def arcs(node):
        if node == SIGMA:
            return [(("s", i), s[i] - x[i]) for i in range(len(x)) if x[i] < s[i]]
        if node == TAU:
            return [(("d", j), y[j] - d[j]) for j in range(len(y)) if y[j] > d[j]] if two_sided else []
        side, k = node
        if side == "s":
            out = [(("d", j), None) for j in graph.succ[k]]
            if x[k] > s[k]:
                out.append((SIGMA, x[k] - s[k]))
            return out
        out = [(("s", i), flow.get((i, k), 0)) for i in graph.pred[k] if flow.get((i, k), 0) > 0]
        if two_sided and y[k] < d[k]:
            out.append((TAU, d[k] - y[k]))
        return out

    for start in (SIGMA, TAU):
        parent = {}
        queue = deque()
        for nxt, c in arcs(start):
            if nxt not in parent:
                parent[nxt] = (start, c)
                queue.append(nxt)
        while queue:
            node = queue.popleft()
            for nxt, c in arcs(node):
                if nxt in (SIGMA, TAU):
                    path = [(node, nxt, c)]
                    while node != start:
                        prev, pc = parent[node]
                        path.append((prev, node, pc))
                        node = prev
                    return path[::-1]
                if nxt not in parent:
                    parent[nxt] = (node, c)
                    queue.append(nxt)
    return None


def pareto_report(inst, x: Sequence, y: Sequence = None) -> ParetoReport:
    """Exact Pareto / Pareto* status of a feasible allocation, with a dominating witness."""
    two_sided = isinstance(inst, TwoSidedInstance)
    x = [as_rational(v) for v in x]
    y = list(inst.d) if y is None else [as_rational(v) for v in y]
    net = FlowNetwork(inst.graph, x, y)
    fr = max_flow(net)
    ensure(fr.value == sum(x) == sum(y), "allocation is not feasible")
    path = _improving_path(inst.graph, dict(fr.edge_flow), x, y, inst.s, inst.d, two_sided)
    capped = all(a <= p for a, p in zip(x, inst.s)) and all(b <= p for b, p in zip(y, inst.d))
    if path is None:
        return ParetoReport(True, capped)
    delta = min(c for _, _, c in path if c is not None)
    flow = dict(fr.edge_flow)
    nx, ny = list(x), list(y)
    for u, v, _ in path:
        if u == SIGMA:
            nx[v[1]] += delta
        elif v == SIGMA:
            nx[u[1]] -= delta
        elif u == TAU:
            ny[v[1]] -= delta
        elif v == TAU:
            ny[u[1]] += delta
        elif u[0] == "s":
            flow[u[1], v[1]] = flow.get((u[1], v[1]), 0) + delta
        else:
            flow[v[1], u[1]] -= delta
    witness_flow = max_flow(FlowNetwork(inst.graph, nx, ny))
    ensure(witness_flow.value == sum(nx), "improvement witness is not feasible")
    return ParetoReport(False, False, Allocation(tuple(nx), tuple(ny), witness_flow))


# ---------------------------------------------------------------------------
# grid enumeration


def _grid_points(lo: Fraction, hi: Fraction, step: Fraction) -> list:
    k0 = -((-lo) // step)
    k1 = hi // step
    return [k * step for k in range(int(k0), int(k1) + 1)]


def _guard(grids, limit: int) -> None:
    size = 1
    for g in grids:
        size *= max(len(g), 1)
    if size > limit:
        raise TooLarge(f"{size} grid candidates exceed the limit of {limit}")


def _vectors_with_sum(grids, total):
    """All vectors drawn from ``grids`` summing to ``total`` (lexicographic order)."""
    lows = [min(g) if g else None for g in grids]
    highs = [max(g) if g else None for g in grids]
    if any(g is None for g in lows):
        return
    tail_lo = [sum(lows[k:]) for k in range(len(grids) + 1)]
    tail_hi = [sum(highs[k:]) for k in range(len(grids) + 1)]

    def rec(k, left, acc):
        if k == len(grids):
            if left == 0:
                yield tuple(acc)
            return
        for v in grids[k]:
            rest = left - v
            if tail_lo[k + 1] <= rest <= tail_hi[k + 1]:
                acc.append(v)
                yield from rec(k + 1, rest, acc)
                acc.pop()

    yield from rec(0, total, [])


def _feasible(graph: BipartiteGraph, x, y, scale: int) -> Optional[IntFlow]:
    xi, yi = scale_all(x, scale), scale_all(y, scale)
    fl = IntFlow(graph, range(graph.n_suppliers), [True] * graph.n_demanders, xi, yi).run()
    return fl if fl.value == sum(xi) == sum(yi) else None


def _step(grid_step) -> Fraction:
    step = as_rational(grid_step)
    if step <= 0:
        raise ValueError("grid step must be positive")
    return step


def enumerate_pareto(inst: OneSidedInstance, grid_step, limit: int = DEFAULT_LIMIT) -> list:
    """Pareto-optimal one-sided allocations on the grid (exact Pareto test per point)."""
    step = _step(grid_step)
    total = sum(inst.d, Fraction(0))
    grids = [_grid_points(inst.lower[i], total if inst.upper[i] is None else min(inst.upper[i], total), step)
             for i in range(inst.graph.n_suppliers)]
    _guard(grids, limit)
    scale = common_scale(list(inst.d) + [step])
    out = []
    for x in _vectors_with_sum(grids, total):
        if _feasible(inst.graph, x, inst.d, scale) is None:
            continue
        report = pareto_report(inst, x)
        if report.is_pareto:
            out.append(Allocation(x, tuple(inst.d), max_flow(FlowNetwork(inst.graph, x, inst.d))))
    return out


def enumerate_pareto_star(inst: TwoSidedInstance, grid_step, limit: int = DEFAULT_LIMIT) -> list:
    """Pareto* allocations of a two-sided instance whose entries lie on the grid.

    A peak-capped feasible allocation is Pareto optimal exactly when it trades
    the maximum flow of the peak network (otherwise a residual path raises one
    supplier and one demander), so candidates are drawn at that total.
    """
    step = _step(grid_step)
    graph = inst.graph
    top = max_flow(FlowNetwork(graph, inst.s, inst.d)).value
    xgrids = [_grid_points(Fraction(0), p, step) for p in inst.s]
    ygrids = [_grid_points(Fraction(0), p, step) for p in inst.d]
    _guard(xgrids + ygrids, limit)
    if top % step:
        return []
    scale = common_scale(list(inst.s) + list(inst.d) + [step])
    xs = list(_vectors_with_sum(xgrids, top))
    ys = list(_vectors_with_sum(ygrids, top))
    out = []
    for x in xs:
        for y in ys:
            if _feasible(graph, x, y, scale) is None:
                continue
            out.append(Allocation(x, y, max_flow(FlowNetwork(graph, x, y))))
    return out


def _capped_feasible_side(graph, caps, other_caps, step, limit):
    """Grid vectors ``0 <= v <= caps`` that can be shipped into ``other_caps``."""
    grids = [_grid_points(Fraction(0), p, step) for p in caps]
    _guard(grids, limit)
    scale = common_scale(list(caps) + list(other_caps) + [step])
    dcap = scale_all(list(other_caps), scale)
    out = []
    for v in itertools.product(*grids):
        vi = scale_all(v, scale)
        fl = IntFlow(graph, range(graph.n_suppliers), [True] * graph.n_demanders, vi, dcap).run()
        if fl.value == sum(vi):
            out.append(v)
    return out


def is_lex_optimal(alloc: Allocation, inst, grid_step, side: str = "both",
                   limit: int = DEFAULT_LIMIT) -> bool:
    """No enumerated competitor has a lexicographically larger sorted vector.

    One-sided competitors are the grid Pareto allocations.  Two-sided
    competitors are all peak-capped feasible grid vectors of the side.
    """
    step = _step(grid_step)
    if isinstance(inst, OneSidedInstance):
        return not any(lex_greater(p.x, alloc.x) for p in enumerate_pareto(inst, step, limit))
    graph = inst.graph
    if side in ("both", "suppliers"):
        for x in _capped_feasible_side(graph, inst.s, inst.d, step, limit):
            if lex_greater(x, alloc.x):
                return False
    if side in ("both", "demanders"):
        for y in _capped_feasible_side(graph.transpose(), inst.d, inst.s, step, limit):
            if lex_greater(y, alloc.y):
                return False
    return True


@dataclass(frozen=True)
class LorenzCheck:
    compared: int
    violations: tuple
    joint_flags: int


def lorenz_check(inst, alloc: Allocation, grid_step, limit: int = DEFAULT_LIMIT) -> LorenzCheck:
    """Weak Lorenz dominance of ``alloc`` over every enumerated Pareto(*) allocation.

    One-sided: compared block by block on ``M-`` and ``M+``.  Two-sided:
    compared per side; failures of the joint ``(x, y)`` comparison are only
    counted in ``joint_flags``.
    """
    violations = []
    flags = 0
    if isinstance(inst, OneSidedInstance):
        dec = decompose(inst)
        blocks = [sorted(dec.m_minus), sorted(dec.m_plus)]
        others = enumerate_pareto(inst, grid_step, limit)
        for p in others:
            for block in blocks:
                mine = [alloc.x[i] for i in block]
                theirs = [p.x[i] for i in block]
                try:
                    ok = lorenz_dominates(mine, theirs)
                except UnequalTotals:
                    ok = False
                if not ok:
                    violations.append((block, p.x))
        return LorenzCheck(len(others), tuple(violations), 0)
    others = enumerate_pareto_star(inst, grid_step, limit)
    for p in others:
        for mine, theirs in ((alloc.x, p.x), (alloc.y, p.y)):
            try:
                ok = lorenz_dominates(mine, theirs)
            except UnequalTotals:
                ok = False
            if not ok:
                violations.append((mine, theirs))
        try:
            if not lorenz_dominates(alloc.x + alloc.y, p.x + p.y):
                flags += 1
        except UnequalTotals:
            flags += 1
    return LorenzCheck(len(others), tuple(violations), flags)


# ---------------------------------------------------------------------------
# brute-force breakpoint oracle


def type2_breakpoint_oracle(graph: BipartiteGraph, caps_low, caps_high, demands, *,
                            suppliers=None, demanders=None, max_suppliers: int = 12
                            ) -> Optional[Breakpoint]:
    """First binding level by enumerating every supplier subset and linear piece."""
    low = [as_rational(v) for v in caps_low]
    high = [None if v is None else as_rational(v) for v in caps_high]
    dem = [as_rational(v) for v in demands]
    sups = sorted(range(graph.n_suppliers) if suppliers is None else suppliers)
    dems = set(range(graph.n_demanders) if demanders is None else demanders)
    if len(sups) > max_suppliers:
        raise TooLarge("too many suppliers for subset enumeration")
    if not sups:
        return None
    subsets = [frozenset(c) for r in range(1, len(sups) + 1) for c in itertools.combinations(sups, r)]
    need = {X: sum((dem[j] for j in graph.f(X) if j in dems), Fraction(0)) for X in subsets}

    ladder = sorted({Fraction(0)} | {low[i] for i in sups} | {high[i] for i in sups if high[i] is not None})
    pieces = list(zip(ladder, ladder[1:]))
    if any(high[i] is None for i in sups):
        pieces.append((ladder[-1], None))
    candidates = set(ladder)
    for a, b in pieces:
        for X in subsets:
            free = [i for i in X if low[i] <= a and (high[i] is None or (b is not None and high[i] >= b))]
            at = a if b is None else b
            const = sum((median(low[i], at, high[i]) for i in X if i not in free), Fraction(0))
            if free:
                r = (need[X] - const) / len(free)
                if a <= r and (b is None or r <= b):
                    candidates.add(r)

    def slack(X, lam):
        return need[X] - sum((median(low[i], lam, high[i]) for i in X), Fraction(0))

    for lam in sorted(candidates):
        best = min(slack(X, lam) for X in subsets)
        if best <= 0:
            argmins = [X for X in subsets if slack(X, lam) == best]
            union = frozenset().union(*argmins)
            ensure(union in argmins, "binding sets not closed under union")
            return Breakpoint(lam, BreakpointKind.TYPE2, union)
    return None
