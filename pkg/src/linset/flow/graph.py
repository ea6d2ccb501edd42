"""Heap graphs, edge-function generators, and flow graphs derived from them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Mapping

from ..intervals import IntervalUnion, MINUS_INF, PLUS_INF
from .constraint import FlowConstraint, FlowSolution, solve
from .edges import EdgeFunction, EConst, EStripBelow, ERestrict, esum
from .monoid import FlowMonoid

# A generator maps (pointer selector, data valuation of the source node) to
# an edge function.  It is a parameter of the instantiation, like the monoid.
Generator = Callable[[str, Mapping[str, Any]], EdgeFunction]


@dataclass(frozen=True)
class HeapGraph:
    """Explicit heap: nodes with data fields (dval) and pointer fields (pval)."""

    dval: Mapping[Hashable, Mapping[str, Any]]
    pval: Mapping[Hashable, Mapping[str, Hashable]]

    @property
    def nodes(self) -> frozenset:
        return frozenset(self.dval)

    def successors(self, x) -> list:
        return list(self.pval.get(x, {}).values())

    def update_pointer(self, x, sel: str, y) -> "HeapGraph":
        pv = {n: dict(fields) for n, fields in self.pval.items()}
        pv.setdefault(x, {})[sel] = y
        return HeapGraph(self.dval, pv)

    def update_data(self, x, sel: str, v) -> "HeapGraph":
        dv = {n: dict(fields) for n, fields in self.dval.items()}
        dv.setdefault(x, {})[sel] = v
        return HeapGraph(dv, self.pval)


def induced_constraint(h: HeapGraph, gen: Generator, m: FlowMonoid, inflow=None) -> FlowConstraint:
    """E(x,y) = sum over pointer selectors psel with pval(x,psel)=y of gen(psel, dval(x))."""
    edges: dict[tuple, EdgeFunction] = {}
    for x, fields in h.pval.items():
        by_target: dict[Hashable, list[EdgeFunction]] = {}
        for psel, y in fields.items():
            by_target.setdefault(y, []).append(gen(psel, h.dval.get(x, {})))
        for y, fs in by_target.items():
            edges[(x, y)] = esum(fs)
    return FlowConstraint.make(h.nodes, edges, inflow or {})


@dataclass(frozen=True)
class FlowGraph:
    heap: HeapGraph
    constraint: FlowConstraint
    monoid: FlowMonoid

    @staticmethod
    def from_heap(h: HeapGraph, gen: Generator, m: FlowMonoid, inflow=None) -> "FlowGraph":
        return FlowGraph(h, induced_constraint(h, gen, m, inflow), m)

    def solution(self) -> FlowSolution:
        return solve(self.constraint, self.monoid)


def harris_generator(psel: str, dval: Mapping[str, Any]) -> EdgeFunction:
    """List structures: the next edge propagates keys above the source's key.

    The head sentinel (key = -inf) emits the constant interval (-inf, inf],
    which coincides with stripping below -inf on every realizable inflow.
    """
    if psel != "next":
        return EConst(IntervalUnion.empty())
    k = dval.get("key", MINUS_INF)
    if k == MINUS_INF:
        return EConst(IntervalUnion.interval(MINUS_INF, PLUS_INF, lo_open=True))
    return EStripBelow(k)


def bst_generator(psel: str, dval: Mapping[str, Any]) -> EdgeFunction:
    """Binary search trees: left keeps keys below the node key, right above."""
    k = dval.get("key")
    if psel == "left":
        return ERestrict(MINUS_INF, k, lo_strict=False, hi_strict=True)
    if psel == "right":
        return EStripBelow(k)
    return EConst(IntervalUnion.empty())


def array_generator(psel: str, dval: Mapping[str, Any]) -> EdgeFunction:
    """Counter arrays have no pointer edges; flow plays no role."""
    return EConst(IntervalUnion.empty())


def footprint(written: set, successors: Callable[[Hashable], list], radius: int = 2) -> set:
    """Written nodes plus everything reachable from them within `radius` steps.

    `successors` should enumerate the selector targets known for a node (for
    symbolic states: the targets present in the assertion).
    """
    out = set(written)
    frontier = set(written)
    for _ in range(radius):
        nxt = set()
        for x in frontier:
            for y in successors(x):
                if y not in out:
                    nxt.add(y)
        out |= nxt
        frontier = nxt
        if not frontier:
            break
    return out
