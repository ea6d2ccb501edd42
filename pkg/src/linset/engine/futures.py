"""Future reasoning: seeding no-op futures, step-wise composition along the
traversal, accounting interference-free context facts, and invocation.

A future <P> l.next := t <Q> certifies that redirecting l's successor to t
preserves the structure invariant and yields (key(l), inf] below flow(t).
Seeds come from reading l.next = t (the write is then a no-op); composition
extends t to its successor tn when the context supplies the accounted facts
mark(t) and next(t) = tn, which are interference-free (marked bits never
fall, successors of marked nodes never move).

Both the seed and the one-step extension are justified by bounded-footprint
lemmas proved once per invariant instance on scratch states, via the same
footprint discipline used for ordinary writes.
"""

from __future__ import annotations

from .. import terms as T
from ..logic.assertion import Assertion, FutureAtom, NodeAtom
from .context import VerifyContext, VerifyFailure
from .flowcheck import WriteEffect, check_and_apply
from .state import SymState


class FutureEngine:
    def __init__(self, ctx: VerifyContext):
        self.ctx = ctx
        self._seed_lemma: bool | None = None
        self._step_lemma: bool | None = None
        self.candidates_resolved = 0

    # ---- once-per-run bounded lemmas ---------------------------------------

    def seed_lemma_holds(self) -> bool:
        """{inv * next(x)=v * !mark(x)} x.next := v {.. * (key(x),inf] sub flow(v)}"""
        if self._seed_lemma is None:
            self._seed_lemma = self._prove_seed()
        return self._seed_lemma

    def step_lemma_holds(self) -> bool:
        """{inv * next(x)=y * !mark(x) * mark(y) * next(y)=z * key(x)<inf}
           x.next := z {.. * (key(x),inf] sub flow(z)}"""
        if self._step_lemma is None:
            self._step_lemma = self._prove_step()
        return self._step_lemma

    def _scratch(self) -> SymState:
        return SymState(self.ctx)

    def _mk_node(self, st: SymState, name: str) -> NodeAtom:
        addr = self.ctx.fresh.fresh(name, T.ADDR)
        return st.materialize(addr)

    def _prove_seed(self) -> bool:
        ctx = self.ctx
        if "next" not in ctx.invariant.edges or ctx.invariant.flow_kind != "keyset":
            return False
        st = self._scratch()
        x = self._mk_node(st, "fx")
        v = self._mk_node(st, "fv")
        st.a.add_pure(T.ne(x.addr, v.addr))
        x.fields["next"] = v.addr
        st.a.add_pure(T.BoolIs(x.fields["mark"], False))
        st.a.add_pure(T.lt(x.fields["key"], T.INF))
        from .history import refresh_inflow_entry

        refresh_inflow_entry(st, x, "next", v.addr)
        try:
            check_and_apply(st, [WriteEffect(x.addr, "next", v.addr)], None)
        except VerifyFailure:
            return False
        goal = T.SubKs(
            T.KsInterval(x.fields["key"], T.INF, True, False), st.a.atom(v.addr).flow
        )
        return st.proves(goal)

    def _prove_step(self) -> bool:
        ctx = self.ctx
        if "next" not in ctx.invariant.edges or ctx.invariant.flow_kind != "keyset":
            return False
        st = self._scratch()
        x = self._mk_node(st, "gx")
        y = self._mk_node(st, "gy")
        z = self._mk_node(st, "gz")
        for a, b in ((x, y), (x, z), (y, z)):
            st.a.add_pure(T.ne(a.addr, b.addr))
        x.fields["next"] = y.addr
        y.fields["next"] = z.addr
        st.a.add_pure(T.BoolIs(x.fields["mark"], False))
        st.a.add_pure(T.BoolIs(y.fields["mark"], True))
        st.a.add_pure(T.lt(x.fields["key"], T.INF))
        from .history import refresh_inflow_entry

        refresh_inflow_entry(st, x, "next", y.addr)
        refresh_inflow_entry(st, y, "next", z.addr)
        try:
            check_and_apply(st, [WriteEffect(x.addr, "next", z.addr)], None)
        except VerifyFailure:
            return False
        goal = T.SubKs(
            T.KsInterval(x.fields["key"], T.INF, True, False), st.a.atom(z.addr).flow
        )
        return st.proves(goal)

    # ---- rule applications ----------------------------------------------------

    def seed(self, state: SymState, obj: T.Term, target: T.Term) -> None:
        """f-intro for the trivial no-op write obj.next := target."""
        for f in state.a.futures:
            if f.obj == obj and f.new_val == target and f.old_val == target:
                return
        if not self.seed_lemma_holds():
            return
        atom = state.a.atom(obj)
        if atom is None or not atom.boxed:
            return
        fut = FutureAtom(
            region=self.ctx.fresh.fresh("M", T.NSET),
            obj=obj,
            sel="next",
            old_val=target,
            new_val=target,
            pre_fields=(("mark", T.FALSE),),
            post_flow_lower=atom.fields.get("key"),
            members=(obj, target),
        )
        state.a.futures.append(fut)
        self.candidates_resolved += 1

    def try_extend(self, state: SymState) -> None:
        """f-seq: extend futures whose target is observed marked with a known
        successor; the accounted facts must be interference-free."""
        if not state.a.futures or not self.step_lemma_holds():
            return
        for fut in list(state.a.futures):
            t_atom = state.a.atom(fut.new_val)
            if t_atom is None:
                continue
            mark_t = t_atom.fields.get("mark")
            succ = t_atom.fields.get("next")
            if mark_t is None or succ is None or succ == fut.new_val:
                continue
            # syntactic gate: the mark must be an observed fact
            if not (mark_t == T.TRUE or T.BoolIs(mark_t) in state.a.pure):
                continue
            obj_atom = state.a.atom(fut.obj)
            if obj_atom is None:
                continue
            # accounted facts: mark(t), next(t)=succ; both stable because the
            # mark never falls and successors of marked nodes are frozen.
            if not state.proves(T.BoolIs(mark_t)):
                continue
            if not state.proves(T.lt(obj_atom.fields["key"], T.INF)):
                continue
            new_members = tuple(dict.fromkeys(fut.members + (succ,)))
            extended = FutureAtom(
                region=fut.region,
                obj=fut.obj,
                sel=fut.sel,
                old_val=fut.old_val,
                new_val=succ,
                pre_fields=fut.pre_fields,
                post_flow_lower=fut.post_flow_lower,
                members=new_members,
            )
            state.a.futures.remove(fut)
            state.a.futures.append(extended)

    def account(self, state: SymState, fut: FutureAtom, facts: list[T.Formula]) -> FutureAtom:
        """f-account: drop pre conjuncts provable and interference-free now.
        Only duplicable pure facts are accounted; the future keeps its shape."""
        kept = []
        for sel, val in fut.pre_fields:
            atom = state.a.atom(fut.obj)
            have = atom is not None and state.proves(
                T.Iff(T.BoolIs(atom.fields[sel]), T.BoolIs(val))
                if val.sort == T.BOOL
                else T.eq(atom.fields[sel], val)
            )
            stable = self._fact_stable(state, fut.obj, sel, val)
            if not (have and stable):
                kept.append((sel, val))
        out = FutureAtom(
            fut.region, fut.obj, fut.sel, fut.old_val, fut.new_val,
            tuple(kept), fut.post_flow_lower, fut.members,
        )
        del facts
        return out

    def _fact_stable(self, state: SymState, obj: T.Term, sel: str, val: T.Term) -> bool:
        """A field equality is stable when every interference that writes the
        selector is disabled by the current knowledge about obj."""
        proto = state.ctx.invariant.protocols.get(sel)
        if proto is None:
            return False
        if proto.kind == "frozen":
            return True
        if proto.kind == "monotone":
            return val == T.TRUE  # true can never fall
        if proto.kind == "guarded" and proto.guard is not None:
            from ..invariants import Binding

            atom = state.a.atom(obj)
            guard = proto.guard(Binding.of(atom))
            return state.proves(T.Not(guard))
        return False
