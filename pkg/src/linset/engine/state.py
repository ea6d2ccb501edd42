"""Symbolic proof state: an assertion plus evaluation and materialization."""

from __future__ import annotations

from typing import Optional

from .. import terms as T
from ..lang import ast as A
from ..logic.assertion import Assertion, NodeAtom
from .context import VerifyContext, VerifyFailure

ROOT_SRC = T.AddrLit("outside")


class SymState:
    def __init__(self, ctx: VerifyContext, assertion: Assertion | None = None):
        self.ctx = ctx
        self.a = assertion or Assertion(ctx.fresh.fresh("N", T.NSET))
        self.dead = False
        self.trace: list[tuple[str, str]] = []

    def clone(self) -> "SymState":
        out = SymState(self.ctx, self.a.clone())
        out.dead = self.dead
        out.trace = list(self.trace)
        return out

    def log(self, where: str):
        self.trace.append((where, self.a.render()))

    # ---- hypotheses --------------------------------------------------------

    def hyps(self) -> list[T.Formula]:
        return self.a.hypotheses(self.ctx.invariant)

    def proves(self, goal: T.Formula) -> bool:
        return self.ctx.proves(self.hyps(), goal)

    def entails3(self, goal: T.Formula) -> str:
        return self.ctx.entails(self.hyps(), goal)

    # ---- initial state ------------------------------------------------------

    def init_globals(self):
        """Materialize the structure globals with their pinned knowledge."""
        inv = self.ctx.invariant
        for g in self.ctx.program.globals:
            addr = T.Var(g.name, T.ADDR)
            self.a.stack[g.name] = addr
            if self.ctx.field_kinds and g.type not in ("K", "Bool", "Int", "Owner"):
                atom = self.materialize(addr, note="global")
                if inv.root == g.name and inv.root_inflow is not None and atom.flow is not None:
                    atom.inflow = ((ROOT_SRC, inv.root_inflow),)
        # distinct global addresses (separate allocations)
        names = [g.name for g in self.ctx.program.globals if g.type not in ("K", "Bool", "Int", "Owner")]
        for i, x in enumerate(names):
            for y in names[i + 1 :]:
                self.a.add_pure(T.ne(T.Var(x, T.ADDR), T.Var(y, T.ADDR)))
        # mine frozen-field facts from the declared initializers
        for g in self.ctx.program.globals:
            if isinstance(g.init, A.ENew):
                atom = self.a.atom(T.Var(g.name, T.ADDR))
                if atom is None:
                    continue
                for fname, fexpr in g.init.fields:
                    proto = inv.protocols.get(fname)
                    if proto is None or proto.kind != "frozen":
                        continue
                    lit = _surface_literal(fexpr, self)
                    if lit is not None and fname in atom.fields:
                        self.a.add_pure(T.eq(atom.fields[fname], lit))

    # ---- materialization ----------------------------------------------------

    def materialize(self, addr: T.Term, boxed: bool = True, note: str = "") -> NodeAtom:
        atom = self.a.atom(addr)
        if atom is not None:
            return atom
        fields: dict[str, T.Term] = {}
        base = repr(addr).replace("$", "_")
        for sel in self.ctx.field_kinds:
            fields[sel] = self.ctx.fresh.fresh(f"{base}.{sel}", self.ctx.field_sort(sel))
        flow = None
        if boxed and self.ctx.invariant.flow_kind == "keyset":
            flow = self.ctx.fresh.fresh(f"{base}.flow", T.KSET)
        atom = NodeAtom(addr, fields, flow, (), boxed)
        self.a.add_atom(atom)
        if boxed:
            self.a.add_pure(T.InNs(addr, self.a.nset))
        return atom

    def read_field(self, obj_var: str, sel: str) -> T.Term:
        addr = self.a.stack[obj_var]
        atom = self.materialize(addr)
        val = atom.fields[sel]
        # edge targets stay within the structure (closed under links)
        if atom.boxed and sel in self.ctx.invariant.edges and val.sort == T.ADDR:
            self.a.add_pure(T.Implies(T.ne(val, T.NULL), T.InNs(val, self.a.nset)))
        return val

    # ---- expression evaluation ----------------------------------------------

    def lit_term(self, value) -> T.Term:
        if isinstance(value, bool):
            return T.TRUE if value else T.FALSE
        if isinstance(value, int):
            return T.KeyLit(value)
        return {
            "inf": T.INF,
            "-inf": T.NEG_INF,
            "null": T.NULL,
            "nobody": T.NOBODY,
            "me": T.ME,
            "other": T.OTHER,
        }[value]

    def eval_value(self, e: A.CExpr) -> T.Term:
        """Pure value (no heap reads, no fresh facts needed)."""
        if isinstance(e, A.CVar):
            return self.a.stack[e.name]
        if isinstance(e, A.CLit):
            return self.lit_term(e.value)
        if isinstance(e, A.CBin) and e.op == "+":
            base = self.eval_value(e.left)
            delta = e.right
            if isinstance(delta, A.CLit) and isinstance(delta.value, int):
                return T.KeyPlus(base, delta.value)
            raise VerifyFailure("only literal increments are supported")
        # boolean-valued expression: bind to a fresh boolean with a defining fact
        b = self.ctx.fresh.fresh("b", T.BOOL)
        self.a.add_pure(T.Iff(T.BoolIs(b), self.eval_pred(e)))
        return b

    def eval_pred(self, e: A.CExpr) -> T.Formula:
        """Formula for a condition; heap reads use current atom bindings."""
        if isinstance(e, A.CLit):
            if e.value is True:
                return T.F_TRUE
            if e.value is False:
                return T.F_FALSE
            raise VerifyFailure(f"literal {e.value!r} is not a condition")
        if isinstance(e, A.CVar):
            t = self.a.stack[e.name]
            return T.BoolIs(t)
        if isinstance(e, A.CSel):
            t = self.read_field(e.base.name, e.sel)
            return T.BoolIs(t)
        if isinstance(e, A.CUn) and e.op == "!":
            return T.Not(self.eval_pred(e.arg))
        if isinstance(e, A.CBin):
            if e.op == "&&":
                return T.conj([self.eval_pred(e.left), self.eval_pred(e.right)])
            if e.op == "||":
                return T.disj([self.eval_pred(e.left), self.eval_pred(e.right)])
            lt = self.eval_operand(e.left)
            rt = self.eval_operand(e.right)
            if e.op in ("==", "!="):
                if lt.sort == T.BOOL or rt.sort == T.BOOL:
                    inner = T.Iff(T.BoolIs(lt), T.BoolIs(rt))
                    return inner if e.op == "==" else T.Not(inner)
                return T.eq(lt, rt) if e.op == "==" else T.ne(lt, rt)
            if e.op == "<":
                return T.lt(lt, rt)
            if e.op == "<=":
                return T.le(lt, rt)
            if e.op == ">":
                return T.lt(rt, lt)
            if e.op == ">=":
                return T.le(rt, lt)
        raise VerifyFailure(f"cannot evaluate condition {e!r}")

    def eval_operand(self, e: A.CExpr) -> T.Term:
        if isinstance(e, A.CSel):
            return self.read_field(e.base.name, e.sel)
        return self.eval_value(e)

    # ---- feasibility ---------------------------------------------------------

    def check_alive(self) -> bool:
        """Prune branches whose accumulated facts are unsatisfiable."""
        if self.dead:
            return False
        if self.a.unsat_hint:
            self.dead = True
            return False
        verdict = self.ctx.satisfiable(self.hyps())
        if verdict == "unsat":
            self.dead = True
            return False
        return True


def _surface_literal(e, state: SymState) -> Optional[T.Term]:
    if isinstance(e, A.EInt):
        return T.KeyLit(e.value)
    if isinstance(e, A.EInf):
        return T.INF if e.sign > 0 else T.NEG_INF
    if isinstance(e, A.EBool):
        return T.TRUE if e.value else T.FALSE
    if isinstance(e, A.ENull):
        return T.NULL
    return None
