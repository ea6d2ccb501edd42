"""Past predicates: eager snapshots and marking-moment reasoning.

A snapshot records the current term bindings of every boxed atom under a
fresh snapshot id.  Pure facts are timeless (terms denote fixed values), so
hindsight transfer needs no explicit fact copying: queries about a snapshot
simply use its recorded binding terms against the global fact pool.

Guarded pasts capture moments the thread never observed directly: when
interference may flip a monotone mark bit, the moment of the flip itself
satisfies facts derived from the flip command's own guard (the node was
unmarked just before, its flow is untouched by the mark write).  Such a
snapshot may only be claimed when the flip provably happened inside the
operation's window, which the guard terms express.
"""

from __future__ import annotations

from .. import terms as T
from ..logic.assertion import Assertion, NodeAtom, PastAtom
from .state import SymState


def snapshot(state: SymState, force: bool = False) -> PastAtom | None:
    """Record the current bindings of all boxed atoms (rule: stuttering step)."""
    needs_flow = state.ctx.invariant.flow_kind == "keyset"
    boxed = [
        a
        for a in state.a.atoms.values()
        if a.boxed and (a.flow is not None or not needs_flow)
    ]
    if not boxed and not force:
        return None
    signature = _sig_of(boxed)
    for p in reversed(state.a.pasts):
        if not p.guard and _sig_of(p.atoms) == signature:
            return p  # identical snapshot already taken (dedup)
    past = PastAtom(
        sid=state.ctx.next_sid(),
        atoms=tuple(a.clone() for a in sorted(boxed, key=lambda x: repr(x.addr))),
        facts=(),
        guard=(),
        nset=state.a.nset,
    )
    state.a.pasts.append(past)
    return past


def _sig_of(atoms) -> tuple:
    return tuple(
        (repr(a.addr), tuple(sorted((s, repr(t)) for s, t in a.fields.items())), repr(a.flow))
        for a in sorted(atoms, key=lambda x: repr(x.addr))
    )


def marking_moment_past(
    state: SymState,
    atom: NodeAtom,
    flip_sel: str,
    old_term: T.Term,
    new_term: T.Term,
) -> None:
    """When interference may set `flip_sel` on `atom`, the very moment of the
    flip had: the flip bit true, frozen fields unchanged, and non-empty flow
    (the bit write moves no flow and the flipper's guard saw the node live).

    Claimable only under: the bit is now set, and it was unset at some
    observed earlier moment (supplied as a case hypothesis at claim time via
    the old binding term in the guard)."""
    ctx = state.ctx
    inv = ctx.invariant
    base = repr(atom.addr).replace("$", "_")
    fields: dict[str, T.Term] = {}
    facts: list[T.Formula] = []
    for sel, cur in atom.fields.items():
        proto = inv.protocols.get(sel)
        if sel == flip_sel:
            fields[sel] = T.TRUE
        elif proto is not None and proto.kind == "frozen":
            fields[sel] = cur  # frozen fields: the flip moment agrees with now
        else:
            fields[sel] = ctx.fresh.fresh(f"{base}.{sel}~", ctx.field_sort(sel))
    flow = ctx.fresh.fresh(f"{base}.flow~", T.KSET)
    # the flipper saw the node unmarked: phi1 gave non-empty flow, and the
    # mark write itself does not move flow
    facts.append(T.Not(T.EqKs(flow, T.KS_EMPTY)))
    snap = NodeAtom(atom.addr, fields, flow, (), True)
    past = PastAtom(
        sid=ctx.next_sid(),
        atoms=(snap,),
        facts=tuple(facts),
        guard=(T.Not(T.BoolIs(old_term)), T.BoolIs(new_term)),
        nset=state.a.nset,
    )
    # supersede any older flip snapshot for the same node/selector
    state.a.pasts = [
        p
        for p in state.a.pasts
        if not (getattr(p, "_flip", None) == (repr(atom.addr), flip_sel))
    ]
    past._flip = (repr(atom.addr), flip_sel)
    state.a.pasts.append(past)


def refresh_inflow_entry(state: SymState, source: NodeAtom, sel: str, target_addr: T.Term):
    """Reading source.sel = target certifies an inflow edge right now."""
    inv = state.ctx.invariant
    if sel not in inv.edges or source.flow is None:
        return
    if target_addr == T.NULL:
        return
    target = state.a.atom(target_addr)
    if target is None or not target.boxed or target.flow is None:
        return
    val = inv.edge_out(source, sel)
    if val is None:
        return
    entries = [(s, v) for (s, v) in target.inflow if s != source.addr]
    entries.append((source.addr, val))
    target.inflow = tuple(entries)
