"""Post-images of core commands (rule com-sem plus the footprint discipline)."""

from __future__ import annotations

from .. import terms as T
from ..lang import ast as A
from ..interference import InterferenceSet, record
from .context import VerifyFailure
from .flowcheck import WriteEffect, WriteReport, check_and_apply
from .history import refresh_inflow_entry
from .linearize import handle_contents_events
from .state import SymState


class StepOutcome:
    def __init__(self):
        self.report: WriteReport | None = None
        self.recorded = []
        self.edge_reads: list[tuple[T.Term, T.Term]] = []  # (obj, value) of edge reads


def exec_command(state: SymState, cmd: A.Command, iset: InterferenceSet) -> StepOutcome:
    out = StepOutcome()
    if state.dead:
        return out
    if isinstance(cmd, A.Skip):
        return out
    if isinstance(cmd, A.AssignVarOp):
        state.a.stack[cmd.var] = state.eval_value(cmd.expr)
        return out
    if isinstance(cmd, A.AssignVarSel):
        _exec_read(state, cmd, out)
        return out
    if isinstance(cmd, A.Malloc):
        _exec_malloc(state, cmd)
        return out
    if isinstance(cmd, A.Assume):
        with state.ctx.timer.phase("com"):
            state.a.add_pure(state.eval_pred(cmd.cond))
            state.check_alive()
        return out
    if isinstance(cmd, A.Assert):
        with state.ctx.timer.phase("com"):
            goal = state.eval_pred(cmd.cond)
            if not state.proves(goal):
                raise VerifyFailure(f"assertion may fail: {cmd.cond}", cmd.span)
        return out
    if isinstance(cmd, A.AssignSelVar):
        return _exec_atomic(state, [cmd], [], cmd.span, iset)
    if isinstance(cmd, A.AtomicBlock):
        reads, assumes, asserts, writes = [], [], [], []
        for c in cmd.commands:
            if isinstance(c, A.AssignVarSel):
                reads.append(c)
            elif isinstance(c, A.Assume):
                assumes.append(c)
            elif isinstance(c, A.Assert):
                asserts.append(c)
            elif isinstance(c, A.AssignSelVar):
                writes.append(c)
            elif isinstance(c, A.AssignVarOp):
                reads.append(c)
            elif isinstance(c, A.Skip):
                continue
            else:
                raise VerifyFailure(f"unsupported command in atomic block: {c}", cmd.span)
        for c in reads:
            if isinstance(c, A.AssignVarSel):
                _exec_read(state, c, out)
            else:
                state.a.stack[c.var] = state.eval_value(c.expr)
        guard_formulas = []
        with state.ctx.timer.phase("com"):
            for c in assumes:
                f = state.eval_pred(c.cond)
                guard_formulas.append(f)
                state.a.add_pure(f)
            if assumes and not state.check_alive():
                return out
            for c in asserts:
                goal = state.eval_pred(c.cond)
                if not state.proves(goal):
                    raise VerifyFailure(f"assertion may fail: {c.cond}", c.span)
        return _exec_atomic(state, writes, guard_formulas, cmd.span, iset)
    raise VerifyFailure(f"unsupported command {cmd!r}", getattr(cmd, "span", None))


def _exec_read(state: SymState, cmd: A.AssignVarSel, out: StepOutcome) -> None:
    with state.ctx.timer.phase("com"):
        val = state.read_field(cmd.obj, cmd.sel)
        state.a.stack[cmd.var] = val
        obj_term = state.a.stack[cmd.obj]
        atom = state.a.atom(obj_term)
        if cmd.sel in state.ctx.invariant.edges and val.sort == T.ADDR:
            if val != T.NULL:
                state.materialize(val)
            refresh_inflow_entry(state, atom, cmd.sel, val)
            out.edge_reads.append((obj_term, val))


def _exec_malloc(state: SymState, cmd: A.Malloc) -> None:
    addr = state.ctx.fresh.fresh(cmd.var, T.ADDR)
    state.a.stack[cmd.var] = addr
    # fresh address: distinct from every tracked node and outside the structure
    for other in list(state.a.atoms):
        state.a.add_pure(T.ne(addr, other))
    state.a.add_pure(T.ne(addr, T.NULL))
    state.a.add_pure(T.Not(T.InNs(addr, state.a.nset)))
    atom = state.materialize(addr, boxed=False)
    del atom


def _exec_atomic(state, write_cmds, guard_formulas, span, iset) -> StepOutcome:
    out = StepOutcome()
    if state.dead:
        return out
    writes = []
    for c in write_cmds:
        obj_term = state.a.stack[c.obj]
        if isinstance(c.var, A.CVar):
            val = state.a.stack[c.var.name]
        else:
            val = state.eval_value(c.var)
        writes.append(WriteEffect(obj_term, c.sel, val, c.span))
    if not writes:
        return out
    pre_atoms = {}
    for w in writes:
        atom = state.a.atom(w.obj) or state.materialize(w.obj)
        pre_atoms[w.obj] = atom.clone()
    # record the interference before the state changes
    with state.ctx.timer.phase("inter"):
        shared = [w for w in writes if state.a.atom(w.obj) and state.a.atom(w.obj).boxed]
        rec = None
        if shared:
            rec = record(state, shared, guard_formulas, span)
            if rec is not None:
                out.recorded.append(rec)
    with state.ctx.timer.phase("com"):
        out.report = check_and_apply(state, writes, span)
    handle_contents_events(state, out.report, pre_atoms, span)
    return out
