"""Flow constraints: (X, E, in) with derived least-fixpoint flow and outflow.

The solver runs Kleene iteration from the all-zero assignment.  Constraints
whose value graph has cycles that keep producing new values past |X| rounds
are saturated to the monoid's top (omega for path counting); monoids without
a representable top raise FlowError instead.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Hashable, Mapping

from .edges import EdgeFunction, EConst, zero_edge
from .monoid import FlowMonoid

NodeId = Hashable


class FlowError(Exception):
    pass


@dataclass(frozen=True)
class FlowConstraint:
    nodes: frozenset
    edges: Mapping[tuple, EdgeFunction]  # (x in X, y any) -> EdgeFunction
    inflow: Mapping[tuple, Any]  # (y not in X, x in X) -> monoid value

    @staticmethod
    def make(nodes, edges=None, inflow=None) -> "FlowConstraint":
        return FlowConstraint(frozenset(nodes), dict(edges or {}), dict(inflow or {}))

    def edge(self, x, y, m: FlowMonoid) -> EdgeFunction:
        return self.edges.get((x, y), zero_edge(m))

    def inflow_at(self, x, m: FlowMonoid):
        return m.sum(v for (src, tgt), v in self.inflow.items() if tgt == x)

    def targets_outside(self) -> set:
        return {y for (x, y) in self.edges if y not in self.nodes}

    def with_edges(self, overrides: Mapping[tuple, EdgeFunction]) -> "FlowConstraint":
        e = dict(self.edges)
        e.update(overrides)
        return FlowConstraint(self.nodes, e, dict(self.inflow))

    def with_inflow(self, inflow: Mapping[tuple, Any]) -> "FlowConstraint":
        return FlowConstraint(self.nodes, dict(self.edges), dict(inflow))


EMPTY = FlowConstraint.make(())


@dataclass
class FlowSolution:
    flow: dict = field(default_factory=dict)  # x -> value
    out: dict = field(default_factory=dict)  # (x, y outside) -> value
    saturated: frozenset = frozenset()


def solve(c: FlowConstraint, m: FlowMonoid) -> FlowSolution:
    """Least fixpoint of flow(x) = in(x) + sum_y E(y,x)(flow(y))."""
    flow = {x: m.zero() for x in c.nodes}
    base = {x: c.inflow_at(x, m) for x in c.nodes}
    in_edges: dict = {x: [] for x in c.nodes}
    for (y, x), f in c.edges.items():
        if x in c.nodes:
            in_edges[x].append((y, f))

    def step(cur):
        nxt = {}
        for x in c.nodes:
            nxt[x] = m.sum(
                itertools.chain([base[x]], (f.apply(m, cur[y]) for y, f in in_edges[x]))
            )
        return nxt

    rounds = len(c.nodes) + 1
    for _ in range(rounds):
        new = step(flow)
        if all(m.eq(new[x], flow[x]) for x in c.nodes):
            flow = new
            break
        flow = new
    else:
        new = step(flow)
        unstable = {x for x in c.nodes if not m.eq(new[x], flow[x])}
        if unstable:
            if not m.has_top():
                raise FlowError(
                    f"fixpoint did not stabilize on {sorted(map(str, unstable))} "
                    f"and monoid {m.name} has no top"
                )
            for x in unstable:
                flow[x] = m.top()
            for _ in range(rounds):
                new = step(flow)
                for x in unstable:
                    new[x] = m.top()
                if all(m.eq(new[x], flow[x]) for x in c.nodes):
                    flow = new
                    break
                flow = new
            else:
                raise FlowError("fixpoint did not stabilize after saturation")
            return FlowSolution(flow, _outflow(c, m, flow), frozenset(unstable))

    return FlowSolution(flow, _outflow(c, m, flow))


def _outflow(c: FlowConstraint, m: FlowMonoid, flow: dict) -> dict:
    out = {}
    for (x, y), f in c.edges.items():
        if y not in c.nodes:
            val = f.apply(m, flow[x])
            key = (x, y)
            out[key] = m.plus(out[key], val) if key in out else val
    return out


def compose(a: FlowConstraint, b: FlowConstraint, m: FlowMonoid) -> FlowConstraint | None:
    """a * b, or None when undefined (overlap, interface mismatch, fake flow)."""
    if a.nodes & b.nodes:
        return None
    sol_a, sol_b = solve(a, m), solve(b, m)
    for x in a.nodes:
        for y in b.nodes:
            if not m.eq(sol_a.out.get((x, y), m.zero()), _in_entry(b, x, y, m)):
                return None
            if not m.eq(sol_b.out.get((y, x), m.zero()), _in_entry(a, y, x, m)):
                return None
    inflow: dict = {}
    for (src, tgt), v in a.inflow.items():
        if src in b.nodes and not m.eq(sol_b.out.get((src, tgt), m.zero()), m.zero()):
            continue
        inflow[(src, tgt)] = v
    for (src, tgt), v in b.inflow.items():
        if src in a.nodes and not m.eq(sol_a.out.get((src, tgt), m.zero()), m.zero()):
            continue
        inflow[(src, tgt)] = v
    edges = dict(a.edges)
    edges.update(b.edges)
    joined = FlowConstraint(a.nodes | b.nodes, edges, inflow)
    sol = solve(joined, m)
    for x in a.nodes:
        if not m.eq(sol.flow[x], sol_a.flow[x]):
            return None
    for y in b.nodes:
        if not m.eq(sol.flow[y], sol_b.flow[y]):
            return None
    return joined


def _in_entry(c: FlowConstraint, src, tgt, m: FlowMonoid):
    if tgt not in c.nodes:
        return m.zero()
    return c.inflow.get((src, tgt), m.zero())


def transformer_eq(a: FlowConstraint, b: FlowConstraint, bound: Mapping[tuple, Any], m: FlowMonoid) -> str:
    """Do a and b map every inflow <= bound to identical outflows?

    Returns 'yes', 'no' or 'unknown'.  For monoids with join-homomorphic
    edge functions it suffices to probe single-entry inflows built from the
    bound's atomic decomposition; otherwise a bounded enumeration is tried.
    """
    if a.nodes != b.nodes:
        raise FlowError("transformer comparison requires equal node sets")
    entries = sorted(set(bound) | set(a.inflow) | set(b.inflow), key=str)
    targets = sorted(
        a.targets_outside() | b.targets_outside(), key=str
    )

    def outflows(c: FlowConstraint, infl: dict) -> dict:
        sol = solve(c.with_inflow(infl), m)
        return {
            (x, y): sol.out.get((x, y), m.zero())
            for x in c.nodes
            for y in targets
        }

    def agree(infl: dict) -> bool:
        oa, ob = outflows(a, infl), outflows(b, infl)
        return all(m.eq(oa[k], ob[k]) for k in oa)

    if m.join_hom_edges:
        if not agree({}):
            return "no"
        extra = _edge_probe_values(a, b, m)
        probes = []
        for entry in entries:
            bval = bound.get(entry, m.zero())
            atoms = list(m.sample_values(bval))
            atoms += [v for v in extra if m.leq(v, bval)]
            for atom in atoms:
                probes.append({entry: atom})
        for infl in probes:
            if not agree(infl):
                return "no"
        return "yes"

    # Non-idempotent monoid: enumerate entrywise combinations up to a cap.
    per_entry = []
    for entry in entries:
        bval = bound.get(entry, m.zero())
        per_entry.append([(entry, v) for v in m.sample_values(bval)])
    total = 1
    for choices in per_entry:
        total *= len(choices)
    if total > 4096:
        return "unknown"
    for combo in itertools.product(*per_entry) if per_entry else [()]:
        infl = {e: v for e, v in combo}
        if not agree(infl):
            return "no"
    return "yes"


def _edge_probe_values(a: FlowConstraint, b: FlowConstraint, m: FlowMonoid) -> list:
    """Singleton values around the edge functions' cut points."""
    from ..intervals import IntervalUnion, _Inf
    from .edges import ERestrict, EStripBelow, ESum

    keys: set = set()

    def scan(f):
        if isinstance(f, EStripBelow) and not hasattr(f.k, "sort"):
            keys.add(f.k)
        elif isinstance(f, ERestrict):
            for k in (f.lo, f.hi):
                if not hasattr(k, "sort"):
                    keys.add(k)
        elif isinstance(f, ESum):
            for p in f.parts:
                scan(p)

    for f in list(a.edges.values()) + list(b.edges.values()):
        scan(f)
    out = []
    for k in sorted(keys, key=lambda v: (getattr(v, "sign", 0), v if isinstance(v, int) else 0)):
        if isinstance(k, _Inf):
            out.append(IntervalUnion.singleton(k))
        else:
            out.extend(IntervalUnion.singleton(v) for v in (k - 1, k, k + 1))
    return out


def apply_update(c: FlowConstraint, up: Mapping[tuple, EdgeFunction], m: FlowMonoid) -> FlowConstraint | None:
    """Override edges per `up` if the region transformer is unchanged; else None.

    None signals a non-frame-preserving heap update: verification must fail
    or reason via a future instead.
    """
    for (x, _y) in up:
        if x not in c.nodes:
            return None
    c2 = c.with_edges(up)
    if transformer_eq(c, c2, dict(c.inflow), m) != "yes":
        return None
    return c2
