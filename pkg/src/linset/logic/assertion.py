"""Symbolic assertions: boxed node atoms with ghost flow, stack bindings,
pure facts, past snapshots, futures, and the update token.

An assertion denotes the separating conjunction of its atoms (one per
address term, pairwise distinct) under the ambient structure invariant,
with free logical variables existentially closed at the outermost level.
Past atoms carry one whole-state snapshot each: primed copies of the node
atoms that were tracked at the snapshot moment plus pure facts that held
then.  A past atom may be guarded by current-state facts: the snapshot is
only claimed when the guard holds (used for marking-moment reasoning).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .. import terms as T


@dataclass
class NodeAtom:
    addr: T.Term
    fields: dict[str, T.Term]
    flow: Optional[T.Var] = None  # ghost key-set variable; None while node is local
    inflow: tuple[tuple[T.Term, T.Term], ...] = ()  # known (source, value) entries
    boxed: bool = True

    def clone(self) -> "NodeAtom":
        return NodeAtom(self.addr, dict(self.fields), self.flow, self.inflow, self.boxed)

    def terms(self) -> list[T.Term]:
        out = [self.addr] + list(self.fields.values())
        if self.flow is not None:
            out.append(self.flow)
        for s, v in self.inflow:
            out.extend([s, v])
        return out

    def render(self) -> str:
        fs = ", ".join(f"{k}: {v}" for k, v in sorted(self.fields.items()))
        extra = f", flow: {self.flow}" if self.flow is not None else ""
        box = "[{}]" if self.boxed else "{}"
        return box.format(f"{self.addr} |-> {fs}{extra}")


@dataclass
class PastAtom:
    sid: int
    atoms: tuple[NodeAtom, ...]  # primed copies (boxed)
    facts: tuple[T.Formula, ...]  # held at the snapshot moment
    guard: tuple[T.Formula, ...] = ()  # current-state facts gating the snapshot
    nset: Optional[T.Var] = None  # primed node-set variable N'
    cset: Optional[T.Var] = None  # primed contents variable C'

    def clone(self) -> "PastAtom":
        return PastAtom(
            self.sid, tuple(a.clone() for a in self.atoms), self.facts, self.guard,
            self.nset, self.cset,
        )

    def atom_for(self, addr: T.Term) -> Optional[NodeAtom]:
        for a in self.atoms:
            if a.addr == addr:
                return a
        return None

    def render(self) -> str:
        inner = " * ".join(a.render() for a in self.atoms)
        facts = " * ".join(map(repr, self.facts))
        body = " * ".join(x for x in (inner, facts) if x)
        if self.guard:
            g = " & ".join(map(repr, self.guard))
            return f"({g} => past[{self.sid}]({body}))"
        return f"past[{self.sid}]({body})"


@dataclass
class FutureAtom:
    """<P> obj.sel := new_val <Q> over a node region (the marked segment)."""

    region: T.Var  # node-set variable M
    obj: T.Term  # written object (l)
    sel: str  # written selector (next)
    old_val: T.Term  # required current value of obj.sel (ln)
    new_val: T.Term  # value written (t)
    pre_fields: tuple[tuple[str, T.Term], ...] = ()  # required fields of obj, e.g. mark=false
    post_flow_lower: Optional[T.Term] = None  # key term b: (b, inf] subset flow(new_val)
    members: tuple[T.Term, ...] = ()  # known members of the region

    def clone(self) -> "FutureAtom":
        return replace(self)

    def render(self) -> str:
        pre = f"{self.obj}.{self.sel} == {self.old_val}"
        for sel, val in self.pre_fields:
            pre += f" * {self.obj}.{sel} == {val}"
        post = f"{self.obj}.{self.sel} == {self.new_val}"
        if self.post_flow_lower is not None:
            post += f" * ({self.post_flow_lower}, inf] sub flow({self.new_val})"
        return f"fut(M={self.region}: <{pre}> {self.obj}.{self.sel} := {self.new_val} <{post}>)"


@dataclass(frozen=True)
class UpdateToken:
    kind: str  # 'none' | 'obl' | 'ful'
    spec: str = ""
    key: Optional[T.Term] = None
    value: Optional[T.Term] = None

    def render(self) -> str:
        if self.kind == "none":
            return ""
        if self.kind == "obl":
            return f"OBL({self.spec}, {self.key})"
        return f"FUL({self.spec}, {self.key}, {self.value})"


NO_TOKEN = UpdateToken("none")


def OBL(spec: str, key: T.Term) -> UpdateToken:
    return UpdateToken("obl", spec, key)


def FUL(spec: str, key: T.Term, value: T.Term) -> UpdateToken:
    return UpdateToken("ful", spec, key, value)


class Assertion:
    def __init__(self, nset: T.Var | None = None):
        self.atoms: dict[T.Term, NodeAtom] = {}
        self.stack: dict[str, T.Term] = {}
        self.pure: list[T.Formula] = []
        self.pasts: list[PastAtom] = []
        self.futures: list[FutureAtom] = []
        self.token: UpdateToken = NO_TOKEN
        self.nset: T.Var = nset or T.Var("N", T.NSET)
        self.unsat_hint = False  # syntactically contradictory

    # ---- plumbing ---------------------------------------------------------

    def clone(self) -> "Assertion":
        out = Assertion(self.nset)
        out.atoms = {a: n.clone() for a, n in self.atoms.items()}
        out.stack = dict(self.stack)
        out.pure = list(self.pure)
        out.pasts = [p.clone() for p in self.pasts]
        out.futures = [f.clone() for f in self.futures]
        out.token = self.token
        out.unsat_hint = self.unsat_hint
        return out

    def add_pure(self, *facts: T.Formula) -> None:
        for f in facts:
            if isinstance(f, T.FTrue):
                continue
            if f not in self.pure:
                self.pure.append(f)

    def atom(self, addr: T.Term) -> Optional[NodeAtom]:
        return self.atoms.get(addr)

    def add_atom(self, atom: NodeAtom) -> None:
        assert atom.addr not in self.atoms
        self.atoms[atom.addr] = atom

    def drop_atom(self, addr: T.Term) -> None:
        self.atoms.pop(addr, None)

    def var(self, name: str) -> T.Term:
        return self.stack[name]

    # ---- logical content --------------------------------------------------

    def separation_facts(self) -> list[T.Formula]:
        """Aliasing discipline: atoms are one-per-address, so equal address
        terms must agree on every field (congruence); boxed nodes are not null.
        Definite distinctness is recorded as ordinary pure facts when it is
        actually justified (fresh allocations, key arguments)."""
        out: list[T.Formula] = []
        out.extend(_congruence(list(self.atoms.values())))
        for a, atom in self.atoms.items():
            if atom.boxed:
                out.append(T.ne(a, T.NULL))
        return out

    def membership_facts(self) -> list[T.Formula]:
        out = []
        for a, atom in self.atoms.items():
            if atom.boxed:
                out.append(T.InNs(a, self.nset))
        return out

    def hypotheses(self, invariant=None, include_pasts: bool = True) -> list[T.Formula]:
        """Everything the assertion implies, as pure formulas for the solver.

        `invariant` (a NodeInvariant) contributes per-node structural facts
        for boxed atoms, both current and under past snapshots.
        """
        hyps: list[T.Formula] = []
        hyps.extend(self.separation_facts())
        hyps.extend(self.membership_facts())
        hyps.extend(self.pure)
        if invariant is not None:
            for atom in self.atoms.values():
                if atom.boxed:
                    hyps.extend(invariant.node_facts(atom))
        if include_pasts:
            for p in self.pasts:
                inner: list[T.Formula] = list(p.facts)
                inner.extend(_congruence(list(p.atoms)))
                for a in p.atoms:
                    inner.append(T.ne(a.addr, T.NULL))
                    if p.nset is not None:
                        inner.append(T.InNs(a.addr, p.nset))
                    if invariant is not None:
                        inner.extend(invariant.node_facts(a))
                if p.guard:
                    hyps.append(T.Implies(T.conj(p.guard), T.conj(inner)))
                else:
                    hyps.extend(inner)
        return hyps

    # ---- rendering ---------------------------------------------------------

    def render(self) -> str:
        bits: list[str] = []
        for addr in sorted(self.atoms, key=repr):
            bits.append(self.atoms[addr].render())
        for f in self.pure:
            bits.append(repr(f))
        for p in self.pasts:
            bits.append(p.render())
        for fut in self.futures:
            bits.append(fut.render())
        tok = self.token.render()
        if tok:
            bits.append(tok)
        stack = ", ".join(f"{k}={v}" for k, v in sorted(self.stack.items()))
        body = " * ".join(bits) if bits else "emp"
        return f"[{stack}] {body}" if stack else body


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def _congruence(atoms: list[NodeAtom]) -> list[T.Formula]:
    out: list[T.Formula] = []
    for x, y in itertools.combinations(atoms, 2):
        agree: list[T.Formula] = []
        for sel in x.fields:
            if sel in y.fields:
                agree.append(T.eq(x.fields[sel], y.fields[sel]))
        if x.flow is not None and y.flow is not None:
            agree.append(T.EqKs(x.flow, y.flow))
        if agree:
            out.append(T.Implies(T.eq(x.addr, y.addr), T.conj(agree)))
    return out


def rename_primed(a: Assertion, targets: Iterable[T.Var], fresh: T.FreshNames) -> Assertion:
    """Fresh primed copies of `targets` inside every past atom; equalities
    primed = unprimed emitted outside (so interference can weaken them)."""
    targets = set(targets)
    if not targets:
        return a
    out = a.clone()
    new_pasts = []
    for p in out.pasts:
        mapping: dict[T.Var, T.Term] = {}
        for v in sorted(targets, key=lambda t: t.name):
            if any(v in t.free_vars() for atom in p.atoms for t in atom.terms()) or any(
                v in f.free_vars() for f in p.facts
            ):
                mapping[v] = fresh.fresh(v.name + "'", v.sort)
        if not mapping:
            new_pasts.append(p)
            continue
        atoms = tuple(
            NodeAtom(
                atom.addr.subst(mapping),
                {s: t.subst(mapping) for s, t in atom.fields.items()},
                atom.flow.subst(mapping) if atom.flow is not None else None,
                tuple((s.subst(mapping), v.subst(mapping)) for s, v in atom.inflow),
                atom.boxed,
            )
            for atom in p.atoms
        )
        facts = tuple(f.subst(mapping) for f in p.facts)
        new_pasts.append(PastAtom(p.sid, atoms, facts, p.guard, p.nset, p.cset))
        for old, new in mapping.items():
            out.add_pure(T.eq(new, old))
    out.pasts = new_pasts
    return out


def normalize(a: Assertion) -> Assertion:
    """Canonical order, duplicate pure facts removed, shallow contradiction flag."""
    out = a.clone()
    out.atoms = {addr: out.atoms[addr] for addr in sorted(out.atoms, key=repr)}
    seen = set()
    pure = []
    for f in out.pure:
        key = repr(f)
        if key in seen:
            continue
        seen.add(key)
        if _obviously_false(f):
            out.unsat_hint = True
        pure.append(f)
    out.pure = pure
    out.pasts.sort(key=lambda p: p.sid)
    return out


def _obviously_false(f: T.Formula) -> bool:
    if isinstance(f, T.FFalse):
        return True
    if isinstance(f, T.Cmp):
        if f.op in ("!=", "<") and f.left == f.right:
            return True
        if f.op in ("=", "<=") and f.left == f.right:
            return False
        if (
            f.op == "="
            and isinstance(f.left, T.KeyLit)
            and isinstance(f.right, T.KeyLit)
            and f.left != f.right
        ):
            return True
    return False
