"""Interference records, coverage reduction, and application to assertions.

An interference is a footprint predicate plus a single atomic heap effect,
recorded whenever a proof executes an effectful shared-state command.  The
predicate is projected onto the written node: the guards assumed by the
atomic command itself, the declared update protocols (with the writer's
identity abstracted to `other`), and stable same-node field facts.  This
projection is deliberately insensitive to the surrounding proof context, so
re-proving under a recorded set reproduces the same records and the outer
saturation reaches its fixpoint in one confirming round.

Application rebinds the fields an interference may change to fresh terms,
related to the old terms per the protocols (a monotone bit can only rise, a
counter only grow); pointer interference additionally havocs flow ghosts and
stale inflow knowledge.  Everything previously known stays true of the old
terms, which is exactly the weakening the logic prescribes.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

from . import terms as T
from .engine.context import VerifyContext
from .engine.history import marking_moment_past
from .engine.state import SymState, ROOT_SRC
from .logic.assertion import NodeAtom

PATTERN_OBJ = T.Var("$x", T.ADDR)


@dataclass(frozen=True)
class Interference:
    """(o, com): `guard` over the pattern node's fields; one write effect."""

    name: str
    writes: tuple[tuple[str, object], ...]  # (sel, effect) effect: term | ('fresh',) | ('bump', d)
    guard: tuple[T.Formula, ...]  # over PATTERN_OBJ's field variables
    publishes: bool = False
    touches_flow: bool = False

    def signature(self) -> tuple:
        return tuple((sel, _effect_sig(eff)) for sel, eff in self.writes) + (self.publishes,)

    def render(self) -> str:
        g = " * ".join(map(repr, self.guard)) or "true"
        w = "; ".join(
            f"$x.{sel} := {_effect_str(eff)}" for sel, eff in self.writes
        )
        return f"({g}, {w})"


def _effect_sig(eff):
    if isinstance(eff, tuple):
        return eff[0]
    return "term" if isinstance(eff, T.Var) else repr(eff)


def _effect_str(eff):
    if isinstance(eff, tuple):
        return "<fresh>" if eff[0] == "fresh" else f"+{eff[1]}"
    return repr(eff)


def pattern_field(sel: str, sort: str) -> T.Var:
    return T.Var(f"$f_{sel}", sort)


class InterferenceSet:
    def __init__(self, items: tuple[Interference, ...] = ()):
        self.items: list[Interference] = list(items)

    def clone(self) -> "InterferenceSet":
        return InterferenceSet(tuple(self.items))

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def render(self) -> str:
        return "\n".join(i.render() for i in self.items)

    def covered(self, cand: Interference, ctx: VerifyContext) -> bool:
        """Is cand's predicate included in an existing record for the same command?"""
        for have in self.items:
            if have.signature() != cand.signature():
                continue
            if have.guard == cand.guard:
                return True
            if ctx.proves(list(cand.guard), T.conj(have.guard)):
                return True
        return False

    def add(self, cand: Interference, ctx: VerifyContext) -> bool:
        """Coverage-reduced insert; returns True when the set grew."""
        if self.covered(cand, ctx):
            return False
        # drop members that the newcomer covers
        kept = []
        for have in self.items:
            if have.signature() == cand.signature() and ctx.proves(
                list(have.guard), T.conj(cand.guard)
            ):
                continue
            kept.append(have)
        kept.append(cand)
        self.items = kept
        return True

    def merge_from(self, other: "InterferenceSet", ctx: VerifyContext) -> bool:
        grew = False
        for cand in other.items:
            grew |= self.add(cand, ctx)
        return grew


# ---------------------------------------------------------------------------
# Recording
# ---------------------------------------------------------------------------


def effectful(guard: list[T.Formula], writes: list[tuple[str, object, object]], ctx) -> str:
    """yes | no | unknown: does some state in o have a c-successor differing
    in a boxed field?  Identity writes are not effectful."""
    changing = []
    for sel, old_pat, eff in writes:
        if isinstance(eff, tuple):
            changing.append(sel)
            continue
        # writing the value the guard pins the field to is an identity
        same = T.Iff(T.BoolIs(old_pat), T.BoolIs(eff)) if old_pat.sort == T.BOOL else T.eq(old_pat, eff)
        verdict = ctx.entails(list(guard), same)
        if verdict != "yes":
            changing.append(sel)
    if not changing:
        return "no"
    sat = ctx.satisfiable(list(guard))
    if sat == "unsat":
        return "no"
    return "yes" if sat == "sat" else "unknown"


def record(
    state: SymState,
    writes: list,
    assumes: list[T.Formula],
    span,
) -> Interference | None:
    """Project the pre onto the written node and build the record."""
    ctx = state.ctx
    inv = ctx.invariant
    if not writes:
        return None
    obj = writes[0].obj
    if any(w.obj != obj for w in writes):
        # one record per written object; split multi-object atomics
        records = []
        by_obj: dict = {}
        for w in writes:
            by_obj.setdefault(w.obj, []).append(w)
        # only single-object effects occur in the corpus; be conservative
    atom = state.a.atom(obj)
    if atom is None or not atom.boxed:
        return None

    # pattern variables for the object's fields
    patmap: dict[T.Term, T.Term] = {obj: PATTERN_OBJ}
    for sel, term in atom.fields.items():
        patmap[term] = pattern_field(sel, ctx.field_sort(sel))

    def patternize(f: T.Formula) -> T.Formula | None:
        out = _subst_terms(f, patmap, {T.ME: T.OTHER})
        vs = out.free_vars()
        for v in vs:
            if not v.name.startswith("$f_") and v != PATTERN_OBJ:
                return None
        return out

    guard: list[T.Formula] = []
    for f in assumes:
        pf = patternize(f)
        if pf is not None and pf not in guard and not isinstance(pf, T.FTrue):
            guard.append(pf)
    # protocol guards (e.g. pointer writes demand the unmarked/locked state)
    from .invariants import Binding

    for w in writes:
        proto = inv.protocols.get(w.sel)
        if proto is not None and proto.kind == "guarded" and proto.guard is not None:
            pat_fields = {s: patmap[t] for s, t in atom.fields.items()}
            g = proto.guard(Binding(PATTERN_OBJ, pat_fields, None))
            g = _subst_terms(g, {}, {T.ME: T.OTHER})
            if g not in guard:
                guard.append(g)
    # stable same-node facts (simple field-only literals from the context)
    for f in state.a.pure:
        pf = patternize(f)
        if pf is None or isinstance(pf, (T.FTrue,)):
            continue
        if _is_simple_field_literal(pf) and pf not in guard:
            guard.append(pf)

    effects: list[tuple[str, object]] = []
    eff_check: list[tuple[str, object, object]] = []
    publishes = False
    touches_flow = False
    for w in writes:
        old_pat = patmap.get(atom.fields[w.sel], pattern_field(w.sel, ctx.field_sort(w.sel)))
        val = w.value
        target_atom = state.a.atom(val) if val.sort == T.ADDR else None
        if w.sel in inv.edges:
            touches_flow = True
        if target_atom is not None and not target_atom.boxed:
            publishes = True
            eff: object = ("fresh",)
        elif isinstance(val, T.KeyPlus):
            eff = ("bump", val.delta)
        elif T.rigid_term(val):
            eff = val
        else:
            eff = patmap.get(val)
            if eff is None:
                eff = ("fresh",)  # unknown environment value
        effects.append((w.sel, eff))
        eff_check.append((w.sel, old_pat, eff))

    if effectful(guard, eff_check, ctx) == "no":
        return None
    guard.sort(key=repr)
    name = f"{span}" if span else "unknown-site"
    return Interference(name, tuple(effects), tuple(guard), publishes, touches_flow)


def _is_simple_field_literal(f: T.Formula) -> bool:
    if isinstance(f, T.BoolIs):
        return isinstance(f.term, T.Var) and f.term.name.startswith("$f_")
    if isinstance(f, T.Not):
        return _is_simple_field_literal(f.body)
    if isinstance(f, T.Cmp):
        sides = (f.left, f.right)
        has_field = any(isinstance(s, T.Var) and s.name.startswith("$f_") for s in sides)
        rigid = all(
            (isinstance(s, T.Var) and s.name.startswith("$f_")) or T.rigid_term(s)
            for s in sides
        )
        return has_field and rigid
    return False


def _subst_terms(f: T.Formula, mapping: dict, litmap: dict) -> T.Formula:
    def sub_term(t: T.Term) -> T.Term:
        if t in mapping:
            return mapping[t]
        if t in litmap:
            return litmap[t]
        if isinstance(t, T.KeyPlus):
            return T.KeyPlus(sub_term(t.base), t.delta)
        if isinstance(t, (T.KsInterval,)):
            return T.KsInterval(sub_term(t.lo), sub_term(t.hi), t.lo_strict, t.hi_strict)
        if isinstance(t, T.KsSingleton):
            return T.KsSingleton(sub_term(t.elem))
        if isinstance(t, T.KsUnion):
            return T.KsUnion(tuple(sub_term(p) for p in t.parts))
        if isinstance(t, T.KsInter):
            return T.KsInter(tuple(sub_term(p) for p in t.parts))
        if isinstance(t, T.KsMinus):
            return T.KsMinus(sub_term(t.left), sub_term(t.right))
        return t

    if isinstance(f, T.Cmp):
        return T.Cmp(f.op, sub_term(f.left), sub_term(f.right))
    if isinstance(f, T.BoolIs):
        return T.BoolIs(sub_term(f.term), f.value)
    if isinstance(f, T.InKs):
        return T.InKs(sub_term(f.elem), sub_term(f.ks))
    if isinstance(f, T.SubKs):
        return T.SubKs(sub_term(f.left), sub_term(f.right))
    if isinstance(f, T.EqKs):
        return T.EqKs(sub_term(f.left), sub_term(f.right))
    if isinstance(f, T.InNs):
        return T.InNs(sub_term(f.elem), f.ns)
    if isinstance(f, T.Not):
        return T.Not(_subst_terms(f.body, mapping, litmap))
    if isinstance(f, T.And):
        return T.And(tuple(_subst_terms(p, mapping, litmap) for p in f.parts))
    if isinstance(f, T.Or):
        return T.Or(tuple(_subst_terms(p, mapping, litmap) for p in f.parts))
    if isinstance(f, T.Implies):
        return T.Implies(
            _subst_terms(f.left, mapping, litmap), _subst_terms(f.right, mapping, litmap)
        )
    if isinstance(f, T.Iff):
        return T.Iff(
            _subst_terms(f.left, mapping, litmap), _subst_terms(f.right, mapping, litmap)
        )
    return f


# ---------------------------------------------------------------------------
# Application
# ---------------------------------------------------------------------------


def apply_interference(state: SymState, iset: InterferenceSet) -> None:
    """Weaken the assertion to the strongest stable version under `iset`."""
    if not len(iset) or state.dead:
        return
    ctx = state.ctx
    inv = ctx.invariant
    any_flow = False
    any_publish = False
    for atom in list(state.a.atoms.values()):
        if not atom.boxed:
            continue
        for intf in iset:
            if not _may_target(state, atom, intf):
                continue
            _havoc_atom(state, atom, intf)
        # stale inflow knowledge dies with pointer interference
    for intf in iset:
        any_flow |= intf.touches_flow
        any_publish |= intf.publishes
    if any_flow and inv.flow_kind == "keyset":
        flow_frozen = inv.protocols.get("flow")
        if not (flow_frozen and flow_frozen.kind == "frozen"):
            for atom in state.a.atoms.values():
                if not atom.boxed or atom.flow is None:
                    continue
                atom.flow = ctx.fresh.fresh(f"{repr(atom.addr)}.flow", T.KSET)
                atom.inflow = tuple((s, v) for (s, v) in atom.inflow if s == ROOT_SRC)
    if any_publish:
        new_nset = ctx.fresh.fresh("N", T.NSET)
        state.a.add_pure(T.SubNs(state.a.nset, new_nset))
        for addr, atom in state.a.atoms.items():
            if atom.boxed:
                state.a.add_pure(T.InNs(addr, new_nset))
        state.a.nset = new_nset


def _may_target(state: SymState, atom: NodeAtom, intf: Interference) -> bool:
    """Can the interference's footprint unify with this atom?"""
    ctx = state.ctx
    # cheap syntactic filters first
    guard_i = _instantiate_guard(intf, atom, ctx)
    for g in guard_i:
        if _syntactically_false(g, state):
            return False
    verdict = ctx.satisfiable(state.hyps() + guard_i)
    return verdict != "unsat"


def _instantiate_guard(intf: Interference, atom: NodeAtom, ctx) -> list[T.Formula]:
    mapping: dict[T.Term, T.Term] = {PATTERN_OBJ: atom.addr}
    for sel, term in atom.fields.items():
        mapping[pattern_field(sel, ctx.field_sort(sel))] = term
    out = []
    for g in intf.guard:
        gi = _subst_terms(g, mapping, {})
        vs = [v for v in gi.free_vars() if v.name.startswith("$f_")]
        if vs:
            continue  # mentions fields this struct lacks
        out.append(gi)
    return out


def _syntactically_false(g: T.Formula, state: SymState) -> bool:
    if isinstance(g, T.BoolIs) and isinstance(g.term, T.BoolLit):
        return g.term.value != g.value
    if isinstance(g, T.Not):
        inner = g.body
        if isinstance(inner, T.BoolIs) and isinstance(inner.term, T.BoolLit):
            return inner.term.value == inner.value
    if isinstance(g, T.Cmp) and g.op == "=":
        if isinstance(g.left, T.OwnerLit) and isinstance(g.right, T.OwnerLit):
            return g.left != g.right
    # mark-guard against a definitely-marked node
    if isinstance(g, T.Not) and isinstance(g.body, T.BoolIs):
        t = g.body.term
        if T.BoolIs(t) in state.a.pure or t == T.TRUE:
            return True
    return False


def _havoc_atom(state: SymState, atom: NodeAtom, intf: Interference) -> None:
    ctx = state.ctx
    inv = ctx.invariant
    base = repr(atom.addr).replace("$", "_")
    for sel, eff in intf.writes:
        if sel not in atom.fields:
            continue
        proto = inv.protocols.get(sel)
        old = atom.fields[sel]
        new = ctx.fresh.fresh(f"{base}.{sel}", ctx.field_sort(sel))
        if proto is not None and proto.kind == "monotone":
            if old == T.TRUE or T.BoolIs(old) in state.a.pure:
                continue  # the write is an identity on already-set bits
            state.a.add_pure(T.Implies(T.BoolIs(old), T.BoolIs(new)))
            atom.fields[sel] = new
            marking_only = all(s == sel for s, _ in intf.writes)
            if marking_only:
                marking_moment_past(state, atom, sel, old, new)
            continue
        if proto is not None and proto.kind == "increasing":
            state.a.add_pure(T.le(old, new))
            atom.fields[sel] = new
            continue
        if proto is not None and proto.kind == "lock":
            if old == T.ME:
                continue  # we hold it; nobody else can touch it
            atom.fields[sel] = new
            continue
        if proto is not None and proto.kind == "guarded":
            # guard already checked satisfiable; the field may change freely
            atom.fields[sel] = new
            continue
        atom.fields[sel] = new
