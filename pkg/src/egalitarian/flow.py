"""Exact max-flow / min-cut on bipartite supply networks.

Every network here has the same shape: a source feeding each supplier
through a capacitated arc, uncapacitated links from suppliers to the
demanders they are compatible with, and a capacitated arc from each
demander to the sink.  Capacities are exact rationals.  Internally the
solver rescales them onto a common integer grid, which keeps the inner
loop on machine-friendly ints without ever rounding.

Cuts are reported by their supplier set ``X``; the demander side of a
finite min-cut is always ``f(X)``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .errors import ensure

Rational = Fraction


def as_rational(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings; refuse floats and bools."""
    if isinstance(value, bool) or isinstance(value, float):
        raise TypeError(f"inexact or boolean value {value!r} is not allowed")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if any(c in text for c in ".eE"):
            raise ValueError(f"decimal literal {value!r} is not an exact rational")
        return Fraction(text)
    raise TypeError(f"cannot interpret {value!r} as a rational")


@dataclass(frozen=True)
class BipartiteGraph:
    n_suppliers: int
    n_demanders: int
    links: frozenset = frozenset()

    def __post_init__(self):
        links = frozenset((int(i), int(j)) for i, j in self.links)
        if self.n_suppliers < 0 or self.n_demanders < 0:
            raise ValueError("negative node count")
        for i, j in links:
            if not (0 <= i < self.n_suppliers and 0 <= j < self.n_demanders):
                raise ValueError(f"link {(i, j)} out of range")
        object.__setattr__(self, "links", links)

    @classmethod
    def complete(cls, n_suppliers: int, n_demanders: int) -> "BipartiteGraph":
        return cls(n_suppliers, n_demanders,
                   frozenset((i, j) for i in range(n_suppliers) for j in range(n_demanders)))

    @cached_property
    def succ(self) -> tuple[tuple[int, ...], ...]:
        """Demanders adjacent to each supplier, ascending."""
        out: list[list[int]] = [[] for _ in range(self.n_suppliers)]
        for i, j in self.links:
            out[i].append(j)
        return tuple(tuple(sorted(row)) for row in out)

    @cached_property
    def pred(self) -> tuple[tuple[int, ...], ...]:
        """Suppliers adjacent to each demander, ascending."""
        out: list[list[int]] = [[] for _ in range(self.n_demanders)]
        for i, j in self.links:
            out[j].append(i)
        return tuple(tuple(sorted(col)) for col in out)

    def f(self, suppliers: Iterable[int]) -> frozenset:
        return frozenset(j for i in suppliers for j in self.succ[i])

    def g(self, demanders: Iterable[int]) -> frozenset:
        return frozenset(i for j in demanders for i in self.pred[j])

    def transpose(self) -> "BipartiteGraph":
        return BipartiteGraph(self.n_demanders, self.n_suppliers,
                              frozenset((j, i) for i, j in self.links))

    def with_links(self, links: Iterable[tuple[int, int]]) -> "BipartiteGraph":
        return BipartiteGraph(self.n_suppliers, self.n_demanders, frozenset(links))


@dataclass(frozen=True)
class FlowNetwork:
    """Source arcs ``source_caps``, sink arcs ``sink_caps``; links uncapacitated."""

    graph: BipartiteGraph
    source_caps: tuple
    sink_caps: tuple

    def __post_init__(self):
        src = tuple(as_rational(c) for c in self.source_caps)
        snk = tuple(as_rational(c) for c in self.sink_caps)
        if len(src) != self.graph.n_suppliers or len(snk) != self.graph.n_demanders:
            raise ValueError("capacity vectors do not match the graph")
        if any(c < 0 for c in src + snk):
            raise ValueError("negative capacity")
        object.__setattr__(self, "source_caps", src)
        object.__setattr__(self, "sink_caps", snk)


@dataclass(frozen=True)
class FlowResult:
    edge_flow: Mapping[tuple[int, int], Fraction]
    source_flow: tuple
    sink_flow: tuple
    value: Fraction


@dataclass(frozen=True)
class CutResult:
    suppliers_in_cut: frozenset
    demanders_in_cut: frozenset
    capacity: Fraction


# --------------------------------------------------------------------------
# integer core


def common_scale(values: Iterable[Fraction]) -> int:
    return math.lcm(1, *(v.denominator for v in values))


def scale_all(values: Sequence[Fraction | None], scale: int) -> list:
    return [None if v is None else v.numerator * (scale // v.denominator) for v in values]


@dataclass
class IntFlow:
    """Mutable state of a max-flow on the integer grid.

    ``sups`` lists the active suppliers; ``dem_on[j]`` marks active demanders.
    Inactive nodes behave as if deleted.
    """

    graph: BipartiteGraph
    sups: Sequence[int]
    dem_on: Sequence[bool]
    cap: Sequence[int]
    dcap: Sequence[int]
    out: dict = field(default_factory=dict)
    inn: list = field(default_factory=list)
    phi: dict = field(default_factory=dict)
    value: int = 0

    def run(self, init: Mapping[tuple[int, int], int] | None = None) -> "IntFlow":
        succ, pred = self.graph.succ, self.graph.pred
        dem_on, cap, dcap = self.dem_on, self.cap, self.dcap
        out = {i: 0 for i in self.sups}
        inn = [0] * len(dem_on)
        phi: dict = {}
        if init:
            for (i, j), v in init.items():
                if v:
                    phi[i, j] = v
                    out[i] += v
                    inn[j] += v
        else:
            # greedy warm start; augmentation below finishes the job
            for i in self.sups:
                left = cap[i]
                for j in succ[i]:
                    if left <= 0:
                        break
                    if dem_on[j]:
                        room = dcap[j] - inn[j]
                        if room > 0:
                            t = left if left < room else room
                            phi[i, j] = t
                            inn[j] += t
                            left -= t
                out[i] = cap[i] - left

        while True:
            via_dem: dict = {}   # demander -> supplier it was reached from
            via_sup: dict = {}   # supplier -> demander whose backward arc reached it
            queue = deque()
            for i in self.sups:
                if out[i] < cap[i]:
                    via_sup[i] = -1
                    queue.append(i)
            end = -1
            while queue and end < 0:
                i = queue.popleft()
                for j in succ[i]:
                    if not dem_on[j] or j in via_dem:
                        continue
                    via_dem[j] = i
                    if inn[j] < dcap[j]:
                        end = j
                        break
                    for k in pred[j]:
                        if k not in via_sup and k in out and phi.get((k, j), 0) > 0:
                            via_sup[k] = j
                            queue.append(k)
            if end < 0:
                break
            delta = dcap[end] - inn[end]
            j = end
            while True:
                i = via_dem[j]
                back = via_sup[i]
                if back < 0:
                    room = cap[i] - out[i]
                    if room < delta:
                        delta = room
                    break
                if phi[i, back] < delta:
                    delta = phi[i, back]
                j = back
            j = end
            inn[end] += delta
            while True:
                i = via_dem[j]
                phi[i, j] = phi.get((i, j), 0) + delta
                back = via_sup[i]
                if back < 0:
                    out[i] += delta
                    break
                phi[i, back] -= delta
                j = back
        self.out, self.inn = out, inn
        self.phi = {k: v for k, v in phi.items() if v}
        self.value = sum(out.values())
        return self

    def minimal_cut(self) -> list[int]:
        return _source_side(self.graph, self.sups, self.dem_on, self.cap, self.out, self.phi)

    def maximal_cut(self) -> list[int]:
        return _sink_avoiding(self.graph, self.sups, self.dem_on, self.dcap, self.inn, self.phi)


def _source_side(graph, sups, dem_on, cap, out, phi) -> list[int]:
    """Suppliers reachable from the source in the residual graph."""
    succ, pred = graph.succ, graph.pred
    active = set(sups)
    seen_s = {i for i in sups if out[i] < cap[i]}
    seen_d: set = set()
    queue = deque(sorted(seen_s))
    while queue:
        i = queue.popleft()
        for j in succ[i]:
            if dem_on[j] and j not in seen_d:
                seen_d.add(j)
                for k in pred[j]:
                    if k in active and k not in seen_s and phi.get((k, j), 0) > 0:
                        seen_s.add(k)
                        queue.append(k)
    return sorted(seen_s)


def _sink_avoiding(graph, sups, dem_on, dcap, inn, phi) -> list[int]:
    """Suppliers that cannot reach the sink in the residual graph."""
    succ, pred = graph.succ, graph.pred
    active = set(sups)
    reach_d = {j for j in range(len(dem_on)) if dem_on[j] and inn[j] < dcap[j]}
    reach_s: set = set()
    queue = deque(sorted(reach_d))
    while queue:
        j = queue.popleft()
        for k in pred[j]:
            if k in active and k not in reach_s:
                reach_s.add(k)
                for j2 in succ[k]:
                    if dem_on[j2] and j2 not in reach_d and phi.get((k, j2), 0) > 0:
                        reach_d.add(j2)
                        queue.append(j2)
    return [i for i in sups if i not in reach_s]


# --------------------------------------------------------------------------
# public API


def max_flow(net: FlowNetwork) -> FlowResult:
    """Maximum source-sink flow, exact and deterministic."""
    graph = net.graph
    scale = common_scale(net.source_caps + net.sink_caps)
    cap = scale_all(net.source_caps, scale)
    dcap = scale_all(net.sink_caps, scale)
    core = IntFlow(graph, range(graph.n_suppliers), [True] * graph.n_demanders, cap, dcap).run()
    result = FlowResult(
        edge_flow={k: Fraction(v, scale) for k, v in sorted(core.phi.items())},
        source_flow=tuple(Fraction(core.out[i], scale) for i in range(graph.n_suppliers)),
        sink_flow=tuple(Fraction(v, scale) for v in core.inn),
        value=Fraction(core.value, scale),
    )
    check_flow(net, result)
    return result


def check_flow(net: FlowNetwork, fr: FlowResult) -> None:
    """Conservation and capacity bounds, exactly."""
    graph = net.graph
    xs = [Fraction(0)] * graph.n_suppliers
    ys = [Fraction(0)] * graph.n_demanders
    for (i, j), v in fr.edge_flow.items():
        ensure((i, j) in graph.links, f"flow on non-link {(i, j)}")
        ensure(v >= 0, f"negative flow on {(i, j)}")
        xs[i] += v
        ys[j] += v
    ensure(tuple(xs) == tuple(fr.source_flow), "supplier conservation violated")
    ensure(tuple(ys) == tuple(fr.sink_flow), "demander conservation violated")
    ensure(all(0 <= x <= c for x, c in zip(xs, net.source_caps)), "source arc overloaded")
    ensure(all(0 <= y <= c for y, c in zip(ys, net.sink_caps)), "sink arc overloaded")
    ensure(sum(xs) == fr.value == sum(ys), "flow value mismatch")


def cut_capacity(net: FlowNetwork, suppliers: Iterable[int]) -> Fraction:
    X = frozenset(suppliers)
    return (sum((c for i, c in enumerate(net.source_caps) if i not in X), Fraction(0))
            + sum((net.sink_caps[j] for j in net.graph.f(X)), Fraction(0)))


def _certified_cut(net: FlowNetwork, fr: FlowResult, X: Iterable[int]) -> CutResult:
    X = frozenset(X)
    capacity = cut_capacity(net, X)
    ensure(capacity == fr.value, "cut capacity differs from flow value; flow is not maximum")
    return CutResult(X, net.graph.f(X), capacity)


def min_cut_minimal(net: FlowNetwork, fr: FlowResult) -> CutResult:
    """The min-cut with the inclusion-smallest supplier set."""
    g = net.graph
    X = _source_side(g, range(g.n_suppliers), [True] * g.n_demanders,
                     net.source_caps, dict(enumerate(fr.source_flow)), fr.edge_flow)
    return _certified_cut(net, fr, X)


def min_cut_maximal(net: FlowNetwork, fr: FlowResult) -> CutResult:
    """The min-cut with the inclusion-largest supplier set."""
    g = net.graph
    X = _sink_avoiding(g, range(g.n_suppliers), [True] * g.n_demanders,
                       net.sink_caps, list(fr.sink_flow), fr.edge_flow)
    return _certified_cut(net, fr, X)
