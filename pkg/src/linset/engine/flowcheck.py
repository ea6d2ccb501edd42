"""Footprint-checked heap updates.

A shared write is admitted when a bounded region around the written nodes
satisfies:
  (i)   every node whose fields or flow change lies inside the region,
  (ii)  the region's outflow towards every boundary target is unchanged
        (the transformer is preserved, so the frame keeps its flow), and
  (iii) the per-node invariants hold again inside the region.

Flow values are relational: old and new ghost variables linked by the flow
fixpoint equations of the region; inflow-uniqueness turns the equations into
exact values where a feeding edge is known.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

from .. import terms as T
from ..logic.assertion import NodeAtom
from .context import VerifyFailure
from .state import SymState, ROOT_SRC


@dataclass
class WriteEffect:
    obj: T.Term
    sel: str
    value: T.Term
    span: object = None


@dataclass
class WriteReport:
    region: list[T.Term] = dfield(default_factory=list)
    published: list[T.Term] = dfield(default_factory=list)
    contents_events: list[tuple[T.Term, str]] = dfield(default_factory=list)
    used_future: bool = False


def apply_local_writes(state: SymState, writes: list[WriteEffect]) -> None:
    for w in writes:
        atom = state.a.atom(w.obj)
        atom.fields[w.sel] = w.value


def check_and_apply(state: SymState, writes: list[WriteEffect], span) -> WriteReport:
    """Run the footprint discipline for writes to shared nodes."""
    ctx = state.ctx
    inv = ctx.invariant
    report = WriteReport()

    # split: writes to local (unpublished) nodes apply directly
    shared = []
    for w in writes:
        atom = state.materialize(w.obj, boxed=_target_boxed(state, w.obj))
        if not atom.boxed:
            _check_local_protocol(state, atom, w)
            atom.fields[w.sel] = w.value
        else:
            shared.append(w)
    if not shared:
        return report

    _protocol_checks(state, shared, span)

    pointer_writes = [w for w in shared if w.sel in inv.edges]
    if not pointer_writes or inv.flow_kind != "keyset":
        # data-only writes never move flow; still re-establish node invariants
        _apply_field_writes(state, shared, report)
        _recheck_phis(state, [w.obj for w in shared], span)
        return report

    # region construction
    region = _collect_region(state, shared)
    _distinctness_hygiene(state, region, span)

    ok = _region_update(state, shared, region, report, span)
    if not ok:
        # unbounded or unprovable footprint: a future must cover this update
        matched = _invoke_future(state, shared, report, span)
        if not matched:
            raise VerifyFailure(
                "heap update has no bounded footprint and no applicable future", span
            )
        report.used_future = True
    return report


def _target_boxed(state: SymState, obj: T.Term) -> bool:
    atom = state.a.atom(obj)
    return atom.boxed if atom is not None else True


def _check_local_protocol(state, atom, w):
    # local nodes are thread-owned: all writes allowed before publication
    return


def _protocol_checks(state: SymState, writes: list[WriteEffect], span):
    inv = state.ctx.invariant
    for w in writes:
        atom = state.a.atom(w.obj)
        proto = inv.protocols.get(w.sel)
        if proto is None or proto.kind == "plain" or proto.kind == "lock":
            continue
        if proto.kind == "frozen":
            raise VerifyFailure(f"write to frozen selector {w.sel}", span)
        if proto.kind == "monotone":
            old = atom.fields[w.sel]
            if not state.proves(T.Implies(T.BoolIs(old), T.BoolIs(w.value))):
                raise VerifyFailure(f"non-monotone write to {w.sel}", span)
        if proto.kind == "increasing":
            old = atom.fields[w.sel]
            if not state.proves(T.le(old, w.value)):
                raise VerifyFailure(f"decreasing write to {w.sel}", span)
        if proto.kind == "guarded":
            from ..invariants import Binding

            guard = proto.guard(Binding.of(atom))
            if not state.proves(guard):
                raise VerifyFailure(
                    f"write to {w.sel} violates its protocol guard", span
                )
            if proto.from_null:
                if not state.proves(T.eq(atom.fields[w.sel], T.NULL)):
                    raise VerifyFailure(f"{w.sel} may only be linked from null", span)


def _collect_region(state: SymState, writes: list[WriteEffect]) -> list[T.Term]:
    """Written nodes, their current edge targets, written values, closed to
    the configured radius along edge selectors with known atoms."""
    inv = state.ctx.invariant
    region: list[T.Term] = []

    def add(t: T.Term):
        if t not in region and t != T.NULL:
            region.append(t)

    frontier: list[T.Term] = []
    for w in writes:
        add(w.obj)
        frontier.append(w.obj)
        if w.sel in inv.edges and w.value != T.NULL:
            add(w.value)
            frontier.append(w.value)
    for _ in range(state.ctx.config.footprint_radius):
        nxt: list[T.Term] = []
        for t in frontier:
            atom = state.a.atom(t)
            if atom is None:
                continue
            for sel in inv.edges:
                tgt = atom.fields.get(sel)
                if tgt is not None and tgt != T.NULL and tgt not in region:
                    add(tgt)
                    nxt.append(tgt)
        frontier = nxt
    return region


def _distinctness_hygiene(state: SymState, region: list[T.Term], span):
    """Written region nodes must be distinct from every other tracked atom,
    or the stale atom is dropped (sound weakening)."""
    keep_always = set()
    for v in state.a.stack.values():
        keep_always.add(v)
    for fut in state.a.futures:
        keep_always.update([fut.obj, fut.old_val, fut.new_val])
    for r in region:
        for other in list(state.a.atoms):
            if other == r or other in region:
                continue
            pair_distinct = state.proves(T.ne(r, other))
            if pair_distinct:
                state.a.add_pure(T.ne(r, other))
                continue
            if other in keep_always:
                raise VerifyFailure(
                    f"cannot establish separation of {r} and {other} for a write", span
                )
            state.a.drop_atom(other)


def _in_region_edges(state: SymState, region: list[T.Term], fields_of) -> dict:
    """(x, sel) -> target for targets inside the region."""
    inv = state.ctx.invariant
    out = {}
    for x in region:
        flds = fields_of(x)
        for sel in inv.edges:
            tgt = flds.get(sel)
            if tgt is not None and tgt in region:
                out[(x, sel)] = tgt
    return out


def _region_update(state, writes, region, report, span) -> bool:
    ctx = state.ctx
    inv = ctx.invariant

    atoms = {t: state.a.atom(t) for t in region}
    if any(a is None for a in atoms.values()):
        return False

    written = {(w.obj, w.sel): w.value for w in writes}
    old_fields = {t: dict(atoms[t].fields) for t in region}
    new_fields = {t: dict(atoms[t].fields) for t in region}
    for (obj, sel), val in written.items():
        new_fields[obj][sel] = val

    # locally allocated nodes being published join the structure now
    publishes = []
    for t in region:
        if not atoms[t].boxed:
            publishes.append(t)

    # flow ghost variables
    old_flow = {}
    for t in region:
        atom = atoms[t]
        if atom.flow is None:
            atom.flow = ctx.fresh.fresh(f"{t}.flow", T.KSET)
        old_flow[t] = atom.flow
    new_flow = {t: ctx.fresh.fresh(f"{t}.flow'", T.KSET) for t in region}

    in_old = _in_region_edges(state, region, lambda x: old_fields[x])
    in_new = _in_region_edges(state, region, lambda x: new_fields[x])

    def edge_term(x, sel, fields, flow):
        spec = inv.edges.get(sel)
        data = fields[x].get(spec.data_sel)
        atom_like = NodeAtom(x, dict(fields[x]), flow[x])
        return inv.edge_out(atom_like, sel)

    facts: list[T.Formula] = []
    ext: dict[T.Term, T.Term] = {}
    for x in region:
        known_ext = [
            (src, val)
            for (src, val) in atoms[x].inflow
            if src == ROOT_SRC or src not in region
        ]
        contribs_old = [
            edge_term(y, sel, old_fields, old_flow)
            for (y, sel), tgt in in_old.items()
            if tgt == x
        ]
        if known_ext:
            ext_val = known_ext[0][1] if len(known_ext) == 1 else T.ks_union(*[v for _, v in known_ext])
            ext[x] = ext_val
        else:
            eps = ctx.fresh.fresh(f"{x}.ext", T.KSET)
            ext[x] = eps
            if not atoms[x].boxed:
                # a fresh node has no inflow yet
                facts.append(T.EqKs(eps, T.KS_EMPTY))
            elif inv.unique_inflow:
                for c in contribs_old:
                    facts.append(
                        T.Implies(T.Not(T.EqKs(c, T.KS_EMPTY)), T.EqKs(eps, T.KS_EMPTY))
                    )
        # old fixpoint equation
        facts.append(T.EqKs(old_flow[x], T.ks_union(ext[x], *contribs_old)))
    for x in region:
        contribs_new = [
            edge_term(y, sel, new_fields, new_flow)
            for (y, sel), tgt in in_new.items()
            if tgt == x
        ]
        facts.append(T.EqKs(new_flow[x], T.ks_union(ext[x], *contribs_new)))

    hyps = state.hyps() + facts

    # (ii) boundary preservation, per region node and boundary edge
    with ctx.timer.phase("com"):
        boundary_targets: dict[T.Term, tuple[list, list]] = {}
        for x in region:
            for sel in inv.edges:
                for fields, flow, which in ((old_fields, old_flow, 0), (new_fields, new_flow, 1)):
                    tgt = fields[x].get(sel)
                    if tgt is None or tgt == T.NULL or tgt in region:
                        continue
                    boundary_targets.setdefault(tgt, ([], []))[which].append(
                        edge_term(x, sel, fields, flow)
                    )
        for tgt, (olds, news) in boundary_targets.items():
            old_total = T.ks_union(*olds) if olds else T.KS_EMPTY
            new_total = T.ks_union(*news) if news else T.KS_EMPTY
            if ctx.entails(hyps, T.EqKs(old_total, new_total)) != "yes":
                return False

    # (iii) node invariants re-established inside the region
    with ctx.timer.phase("com"):
        for x in region:
            new_atom = NodeAtom(x, new_fields[x], new_flow[x], (), True)
            for phi in inv.node_facts(new_atom):
                if ctx.entails(hyps, phi) != "yes":
                    raise VerifyFailure(
                        f"node invariant not re-established at {x}: {phi}", span
                    )

    # commit
    state.a.add_pure(*facts)
    for x in region:
        atom = atoms[x]
        atom.fields = new_fields[x]
        atom.flow = new_flow[x]
        entries = [(s, v) for (s, v) in atom.inflow if s == ROOT_SRC]
        for (y, sel), tgt in in_new.items():
            if tgt == x:
                entries.append((y, edge_term(y, sel, new_fields, new_flow)))
        atom.inflow = tuple(entries)
    if publishes:
        new_nset = ctx.fresh.fresh("N", T.NSET)
        state.a.add_pure(T.SubNs(state.a.nset, new_nset))
        state.a.nset = new_nset
        for t in region:
            state.a.add_pure(T.InNs(t, new_nset))
            atoms[t].boxed = True
        report.published.extend(publishes)

    # contents events for the linearizer
    for (obj, sel), val in written.items():
        kind = ctx.field_kinds.get(sel)
        if kind == "bool" and inv.protocols.get(sel, None) and inv.protocols[sel].kind in ("monotone", "guarded"):
            report.contents_events.append((obj, f"{sel}:={val}"))
    for t in publishes:
        report.contents_events.append((t, "publish"))
    report.region = list(region)
    return True


def _apply_field_writes(state: SymState, writes: list[WriteEffect], report: WriteReport):
    for w in writes:
        atom = state.a.atom(w.obj)
        atom.fields[w.sel] = w.value
        kind = state.ctx.field_kinds.get(w.sel)
        proto = state.ctx.invariant.protocols.get(w.sel)
        if kind == "bool" and proto and proto.kind in ("monotone", "guarded"):
            report.contents_events.append((w.obj, f"{w.sel}:={w.value}"))
        if kind == "int":
            report.contents_events.append((w.obj, f"{w.sel}:={w.value}"))


def _recheck_phis(state: SymState, objs: list[T.Term], span):
    inv = state.ctx.invariant
    hyps = state.hyps()
    for obj in objs:
        atom = state.a.atom(obj)
        if atom is None or not atom.boxed:
            continue
        for phi in inv.node_facts(atom):
            if state.ctx.entails(hyps, phi) != "yes":
                raise VerifyFailure(f"node invariant broken at {obj}: {phi}", span)


def _invoke_future(state: SymState, writes: list[WriteEffect], report, span) -> bool:
    """f-invoke: replace an unbounded update by a prepared future's contract."""
    if len(writes) != 1:
        return False
    w = writes[0]
    ctx = state.ctx
    for fut in list(state.a.futures):
        if fut.obj != w.obj or fut.sel != w.sel or fut.new_val != w.value:
            continue
        atom = state.a.atom(w.obj)
        ok = state.proves(T.eq(atom.fields[w.sel], fut.old_val))
        for sel, val in fut.pre_fields:
            ok = ok and state.proves(_field_eq(atom.fields[sel], val))
        if not ok:
            continue
        # consume the future: apply its postcondition
        atom.fields[w.sel] = w.value
        for other_addr, other in state.a.atoms.items():
            if other.flow is None or not other.boxed:
                continue
            if other_addr == w.obj:
                continue  # the written node keeps its own inflow
            pinned_root = any(s == ROOT_SRC for s, _v in other.inflow)
            other.flow = ctx.fresh.fresh(f"{other_addr}.flow'", T.KSET)
            if not pinned_root:
                other.inflow = ()
        target_atom = state.a.atom(w.value)
        if target_atom is not None and fut.post_flow_lower is not None:
            state.a.add_pure(
                T.SubKs(
                    T.KsInterval(fut.post_flow_lower, T.INF, True, False), target_atom.flow
                )
            )
        state.a.futures.remove(fut)
        report.region = [w.obj]
        return True
    return False


def _field_eq(cur: T.Term, want: T.Term) -> T.Formula:
    if cur.sort == T.BOOL:
        return T.Iff(T.BoolIs(cur), T.BoolIs(want))
    return T.eq(cur, want)
