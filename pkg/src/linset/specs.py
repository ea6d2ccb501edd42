"""Built-in sequential specifications and keyset localization.

The UP relations for the set ADT:

    contains(k):  C' = C        and  v <-> k in C
    insert(k):    C' = C u {k}  and  v <-> k not in C
    delete(k):    C' = C \\ {k} and  v <-> k in C

and for the counter array:

    inc(k):   slot k incremented, v = true
    copy():   C' = C, v = some past value of the whole array

Localization turns global-contents questions into single-node questions:
whenever k is in the keyset of x, k is in the structure's contents iff it
is in x's local contents.  The explicit-heap oracle below recomputes
insets by the flow fixpoint and checks the two keyset invariants plus the
localization property by brute force; it anchors the symbolic machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import terms as T
from .flow import KeySet, HeapGraph, induced_constraint, solve
from .intervals import IntervalUnion, MINUS_INF, PLUS_INF
from .invariants import NodeInvariant
from .logic.assertion import NodeAtom

SET_OPS = ("contains", "insert", "delete")
ARRAY_OPS = ("inc", "copy")


@dataclass(frozen=True)
class OpSpec:
    name: str
    pure: bool  # C' = C


SPECS: dict[str, OpSpec] = {
    "contains": OpSpec("contains", True),
    "insert": OpSpec("insert", False),
    "delete": OpSpec("delete", False),
    "inc": OpSpec("inc", False),
    "copy": OpSpec("copy", True),
}


def pure_case_goal(op: str, inv: NodeInvariant, atom: NodeAtom, k: T.Term, v: T.Term) -> T.Formula:
    """Goal for a pure linearization via decisive node `atom`:
    k in KS(x) and the return value matches UP(C, C, k, v)."""
    in_ks = inv.keyset_formula(atom, k)
    in_c = inv.contents_formula(atom, k)
    if op == "contains":
        # v <-> k in C, localized to x
        return T.conj([in_ks, T.Iff(T.BoolIs(v), in_c)])
    if op == "insert":
        # pure case: insertion failed, so k must already be present and v = false
        return T.conj([in_ks, in_c, T.BoolIs(v, False)])
    if op == "delete":
        # pure case: deletion failed, so k absent and v = false
        return T.conj([in_ks, T.Not(in_c), T.BoolIs(v, False)])
    raise ValueError(f"spec {op!r} has no pure set case")


def impure_effect(op: str) -> str:
    """The admissible contents change: 'add' or 'remove' the operation key."""
    return {"insert": "add", "delete": "remove", "inc": "bump"}[op]


# ---------------------------------------------------------------------------
# Explicit-heap oracle
# ---------------------------------------------------------------------------


@dataclass
class ExplicitHeap:
    """Concrete list/tree state for oracle checks."""

    heap: HeapGraph
    root: str
    generator: object
    root_inflow: IntervalUnion

    def solution(self):
        constraint = induced_constraint(
            self.heap, self.generator, KeySet(), {("$root", self.root): self.root_inflow}
        )
        return solve(constraint, KeySet())

    def insets(self) -> dict:
        return self.solution().flow

    def keyset(self, x) -> IntervalUnion:
        """inset(x) minus the keys whose search leaves x along some edge."""
        sol = self.solution()
        inset = sol.flow[x]
        out = inset
        for sel, _tgt in self.heap.pval.get(x, {}).items():
            edge = self.generator(sel, self.heap.dval.get(x, {}))
            out = out.minus(edge.apply(KeySet(), inset))
        return out

    def contents(self, x) -> IntervalUnion:
        d = self.heap.dval.get(x, {})
        if d.get("mark", False):
            return IntervalUnion.empty()
        k = d.get("key")
        return IntervalUnion.singleton(k)

    def global_contents(self) -> set:
        """Finite (operation-key) contents of the whole structure."""
        out = set()
        for x in self.heap.nodes:
            for s in self.contents(x).spans:
                if isinstance(s.lo, int):
                    out.add(s.lo)
        return out

    def check_keyset_invariants(self, probe_keys) -> list[str]:
        """Violations of: disjoint keysets; contents inside keysets."""
        errors = []
        keysets = {x: self.keyset(x) for x in self.heap.nodes}
        nodes = sorted(self.heap.nodes, key=str)
        for i, x in enumerate(nodes):
            for y in nodes[i + 1 :]:
                overlap = keysets[x].inter(keysets[y])
                if not overlap.is_empty():
                    errors.append(f"keysets of {x} and {y} overlap on {overlap}")
        for x in nodes:
            if not self.contents(x).subset(keysets[x]):
                errors.append(f"contents of {x} not within its keyset")
        del probe_keys
        return errors

    def decisive_node(self, k):
        for x in sorted(self.heap.nodes, key=str):
            if self.keyset(x).contains(k):
                return x
        return None

    def localize(self, k) -> bool | None:
        """Membership of k per the decisive node; None when no node is decisive."""
        x = self.decisive_node(k)
        if x is None:
            return None
        return self.contents(x).contains(k)
