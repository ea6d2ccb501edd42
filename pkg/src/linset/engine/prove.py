"""Structural proof search: sequencing, branching with joins, loop-invariant
inference, and the per-procedure driver (one thread-local proof)."""

from __future__ import annotations

import re

from .. import terms as T
from ..interference import InterferenceSet, apply_interference
from ..lang import ast as A
from ..logic.assertion import OBL
from .context import VerifyContext, VerifyFailure
from .exec import exec_command
from .futures import FutureEngine
from .history import snapshot
from .join import join
from .linearize import finalize_return
from .state import SymState


class LoopBudget(VerifyFailure):
    pass


class ProcedureProver:
    def __init__(self, ctx: VerifyContext, proc: A.CoreProcedure, iset: InterferenceSet):
        self.ctx = ctx
        self.proc = proc
        self.iset = iset
        self.futures = FutureEngine(ctx)
        self.collected: list = []
        self.trace: list[tuple[str, str]] = []
        self.pending_exits: list[SymState] = []

    # ---- entry ---------------------------------------------------------------

    def run(self) -> SymState:
        state = SymState(self.ctx)
        state.init_globals()
        type_sorts = {"K": T.KEY, "Int": T.KEY, "Bool": T.BOOL, "Owner": T.OWNER}
        ptypes = dict(self.proc.param_types)
        for p in self.proc.params:
            sort = type_sorts.get(ptypes.get(p, "K"), T.ADDR)
            state.a.stack[p] = self.ctx.fresh.fresh(p, sort)
        if self.proc.spec is not None and self.proc.spec_key is not None:
            k = state.a.stack[self.proc.spec_key]
            state.a.add_pure(T.lt(T.NEG_INF, k))
            state.a.add_pure(T.lt(k, T.INF))
            state.a.token = OBL(self.proc.spec, k)
        elif self.proc.spec is not None:
            state.a.token = OBL(self.proc.spec, T.NULL)
        state.log("entry")
        self.pending_exits = []
        out = self.walk(self.proc.body, state)
        if not out.dead and not getattr(out, "_finalized", False):
            self._finalize(out, self.proc.span)
            if self.proc.spec is not None:
                out.dead = True
                self.pending_exits.append(out.clone())
        finals = [s for s in self.pending_exits if not s.dead] or (
            [] if out.dead else [out]
        )
        if not finals:
            if self.proc.spec is None and not out.dead:
                return out
            if self.pending_exits:
                merged = self.pending_exits[0]
                for s in self.pending_exits[1:]:
                    merged = join(merged, s)
                self.trace = merged.trace
                return merged
            self.trace = out.trace
            return out
        merged = finals[0]
        for s in finals[1:]:
            with self.ctx.timer.phase("join"):
                merged = join(merged, s)
        self.trace = merged.trace
        return merged

    def _finalize(self, state: SymState, span) -> None:
        if state.dead or self.proc.spec is None:
            return
        rets = {rv: state.a.stack.get(rv) for rv in self.proc.ret_vars}
        rets = {k: v for k, v in rets.items() if v is not None}
        finalize_return(state, rets, span)
        state.log("return")
        state._finalized = True
        return state

    # ---- structural rules ------------------------------------------------------

    def walk(self, stmt: A.Stmt, state: SymState) -> SymState:
        if state.dead:
            return state
        if isinstance(stmt, A.Com):
            return self.step(state, stmt.command)
        if isinstance(stmt, A.Seq):
            mid = self.walk(stmt.first, state)
            return self.walk(stmt.second, mid)
        if isinstance(stmt, A.Choice):
            left = self.walk(stmt.left, state.clone())
            right = self.walk(stmt.right, state.clone())
            with self.ctx.timer.phase("join"):
                out = join(left, right)
            if not left.dead and not right.dead:
                snapshot(out)
            return out
        if isinstance(stmt, A.Loop):
            return self.loop(stmt, state)
        raise VerifyFailure(f"unknown statement {stmt!r}")

    def step(self, state: SymState, cmd: A.Command) -> SymState:
        outcome = exec_command(state, cmd, self.iset)
        if state.dead:
            return state
        self.collected.extend(outcome.recorded)
        # exit-time linearization: each return site of the root linearizes
        # (pure paths in hindsight) and leaves the normal control flow
        if (
            isinstance(cmd, A.AssignVarOp)
            and self.proc.done_var
            and cmd.var == self.proc.done_var
            and isinstance(cmd.expr, A.CLit)
            and cmd.expr.value is True
        ):
            self._finalize(state, cmd.span)
            stashed = state.clone()
            stashed.dead = False
            self.pending_exits.append(stashed)
            state.dead = True
            return state
        # future bookkeeping
        with self.ctx.timer.phase("fut"):
            for obj, val in outcome.edge_reads:
                self.futures.seed(state, obj, val)
            self.futures.try_extend(state)
        # eager history, then weaken against the環境
        if isinstance(cmd, (A.AtomicBlock, A.AssignSelVar, A.AssignVarSel)):
            with self.ctx.timer.phase("hist"):
                snapshot(state)
            with self.ctx.timer.phase("inter"):
                apply_interference(state, self.iset)
        if isinstance(cmd, (A.AtomicBlock, A.AssignSelVar)):
            state.log(str(cmd.span))
        return state

    # ---- loops -------------------------------------------------------------------

    def loop(self, stmt: A.Loop, state: SymState) -> SymState:
        """Candidate iteration I0 = pre, I(n+1) = join(In, post-of-body(In)),
        stopping when the shape stabilizes.  For done-guarded loops the exited
        states are accumulated aside (their update token may differ) and form
        the loop's continuation; the trailing assume(done) keeps only them."""
        budget = self.ctx.config.loop_bound
        exit_flag = stmt.exit_var or None
        invariant = state
        exits: SymState | None = None
        for _i in range(budget):
            body_out = self.walk(stmt.body, invariant.clone())
            if exit_flag is not None and not body_out.dead:
                exited, body_out = self._split_exits(body_out, exit_flag)
                if exited is not None:
                    with self.ctx.timer.phase("join"):
                        exits = exited if exits is None else join(exits, exited)
            with self.ctx.timer.phase("join"):
                new_inv = join(invariant, body_out)
            with self.ctx.timer.phase("hist"):
                snapshot(new_inv)
            stable = fingerprint(new_inv) == fingerprint(invariant)
            import os
            if os.environ.get("LINSET_DEBUG_LOOP"):
                import sys
                print(f"[loop] iter={_i} stable={stable} fp={len(fingerprint(new_inv))}", file=sys.stderr)
                if _i >= 3 and not stable:
                    import difflib
                    d = difflib.unified_diff(fingerprint(invariant).splitlines(), fingerprint(new_inv).splitlines(), lineterm="")
                    print("\n".join(list(d)[:40]), file=sys.stderr)
            invariant = new_inv
            if stable:
                break
        else:
            raise LoopBudget(f"loop did not stabilize within {budget} candidates")
        if exit_flag is not None:
            return exits if exits is not None else _dead(state)
        return invariant

    def _split_exits(self, state: SymState, flag: str):
        """Separate the done=true continuation from the looping one."""
        term = state.a.stack.get(flag)
        if term == T.TRUE:
            return state, _dead(state)
        if term == T.FALSE or term is None:
            return None, state
        exited = state.clone()
        exited.a.add_pure(T.BoolIs(term))
        continuing = state.clone()
        continuing.a.add_pure(T.Not(T.BoolIs(term)))
        if not exited.check_alive():
            return None, continuing
        if not continuing.check_alive():
            return exited, _dead(state)
        return exited, continuing


def _dead(state: SymState) -> SymState:
    out = state.clone()
    out.dead = True
    return out


_VAR_PATTERN = re.compile(r"[A-Za-z_.'~@0-9]*\$\d+")
_SID_PATTERN = re.compile(r"past\[\d+\]")


def fingerprint(state: SymState, live: bool = False) -> str:
    """Canonical shape of an assertion: atoms ordered by the stack variables
    that reach them, fresh-variable names replaced by first-occurrence
    numbering, so alpha-equivalent states compare equal.

    With `live=True` the relational weakening bookkeeping (bare old-to-new
    implications, facts over terms no longer reachable from the state) is
    ignored: that is the content whose stability the audit checks."""
    a = state.a
    addr_names: dict = {}
    for var in sorted(a.stack):
        addr_names.setdefault(a.stack[var], f"@{var}")
    parts: list[str] = []
    mapping: dict[str, str] = {}

    def rename(match: re.Match) -> str:
        tok = match.group(0)
        base = tok.split("$")[0] if not live else ""
        if tok not in mapping:
            mapping[tok] = f"{base}${len(mapping)}"
        return mapping[tok]

    def canon(text: str) -> str:
        return _VAR_PATTERN.sub(rename, _SID_PATTERN.sub("past", text))

    ordered = sorted(a.atoms, key=lambda t: addr_names.get(t, "~" + repr(t)))
    for addr in ordered:
        parts.append(canon(addr_names.get(addr, "?") + "::" + a.atoms[addr].render()))
    for var in sorted(a.stack):
        parts.append(canon(f"{var}={a.stack[var]}"))
    for p in a.pasts:
        parts.append(canon(p.render()))
    for f in a.futures:
        parts.append(canon(f.token_render() if hasattr(f, "token_render") else f.render()))
    parts.append(canon(a.token.render()))
    seen_vars = set(mapping)
    fact_parts = []
    for f in a.pure:
        if live and _is_relation_bookkeeping(f):
            continue
        text = repr(f)
        if live:
            fvars = set(_VAR_PATTERN.findall(text))
            if not fvars.issubset(seen_vars):
                continue
        fact_parts.append(canon(text))
    parts.extend(sorted(fact_parts))
    return "\n".join(parts)


def _is_relation_bookkeeping(f: T.Formula) -> bool:
    """old-to-new havoc relations: implications/orderings between bare vars."""
    if isinstance(f, T.Implies):
        lhs, rhs = f.left, f.right
        return (
            isinstance(lhs, T.BoolIs)
            and isinstance(rhs, T.BoolIs)
            and isinstance(lhs.term, T.Var)
            and isinstance(rhs.term, T.Var)
        )
    if isinstance(f, T.Cmp) and f.op == "<=":
        return isinstance(f.left, T.Var) and isinstance(f.right, T.Var)
    if isinstance(f, T.SubNs):
        return isinstance(f.left, T.Var) and isinstance(f.right, T.Var)
    return False
