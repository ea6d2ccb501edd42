"""Lower the surface language to the core while-language.

Structured constructs disappear:
  if (c) A else B      -> (assume c; A) [] (assume !c; B)
  while (c) S          -> loop { assume c; S }; assume !c        (pure c)
  CAS(x.f, o, n)       -> atomic { assume x.f == o; x.f := n }   (success)
                          [] atomic { assume x.f != o }          (failure)
  lock(x)              -> loop { atomic-fail } ; atomic-success  (spin)
  tail self-recursion  -> parameter rebinding inside a loop
  calls to helpers     -> inlining (the call graph must be acyclic)

CAS future candidates are collected per syntactic site (before inlining):
a site is dropped when its changed writes touch only boolean selectors
(mark bits) or store a locally allocated node.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ast as A
from .ast import (
    Assert, Assume, AssignSelVar, AssignVarOp, AssignVarSel, AtomicBlock,
    CBin, CLit, CSel, CUn, CVar, Choice, Com, CoreProcedure, CoreProgram,
    Loop, Malloc, Seq, Skip, Stmt, seq,
)


class DesugarError(Exception):
    def __init__(self, msg: str, span: A.SourceSpan):
        super().__init__(f"{span}: {msg}")
        self.span = span


@dataclass
class ProcContext:
    prog: A.Program
    proc: A.Procedure
    fresh: list[int]
    locals: set[str] = field(default_factory=set)
    fresh_nodes: set[str] = field(default_factory=set)
    candidates: list = field(default_factory=list)
    ret_vars: tuple[str, ...] = ()
    done_var: str = ""
    param_order: tuple[str, ...] = ()

    def fresh_var(self, hint: str) -> str:
        self.fresh[0] += 1
        name = f"{hint}_{self.fresh[0]}"
        self.locals.add(name)
        return name

    def field_kind(self, sel: str, span: A.SourceSpan) -> str:
        for s in self.prog.structs:
            kind = s.kind_of(sel)
            if kind:
                return kind
        raise DesugarError(f"unknown field {sel!r}", span)


def desugar(prog: A.Program) -> CoreProgram:
    order = _topo_order(prog)
    fresh = [0]
    cores: dict[str, CoreProcedure] = {}
    candidates: list[tuple[str, A.SourceSpan, str]] = []
    for name in order:
        proc = prog.proc(name)
        ctx = ProcContext(prog, proc, fresh)
        core = _desugar_proc(ctx, cores)
        cores[name] = core
        for span, kind in ctx.candidates:
            candidates.append((name, span, kind))
    seen_spans = set()
    unique = []
    for pname, span, kind in candidates:
        key = (span.file, span.line, span.col)
        if key not in seen_spans:
            seen_spans.add(key)
            unique.append((pname, span, kind))
    return CoreProgram(
        prog.structs,
        prog.globals,
        tuple(cores[n] for n in order),
        tuple(unique),
        prog.source,
    )


def _topo_order(prog: A.Program) -> list[str]:
    names = [p.name for p in prog.procedures]
    deps: dict[str, set[str]] = {n: set() for n in names}

    def scan_expr(e, acc):
        if isinstance(e, A.ECall):
            acc.add(e.name)
            for a in e.args:
                scan_expr(a, acc)
        elif isinstance(e, A.EBin):
            scan_expr(e.left, acc)
            scan_expr(e.right, acc)
        elif isinstance(e, A.EUn):
            scan_expr(e.arg, acc)
        elif isinstance(e, A.ECas):
            for x in e.olds + e.news:
                scan_expr(x, acc)

    def scan_stmt(s, acc):
        if isinstance(s, A.SBlock):
            for x in s.stmts:
                scan_stmt(x, acc)
        elif isinstance(s, A.SVal):
            scan_expr(s.expr, acc)
        elif isinstance(s, A.SStore):
            scan_expr(s.expr, acc)
        elif isinstance(s, A.SIf):
            scan_expr(s.cond, acc)
            scan_stmt(s.then, acc)
            if s.els:
                scan_stmt(s.els, acc)
        elif isinstance(s, A.SWhile):
            scan_expr(s.cond, acc)
            scan_stmt(s.body, acc)
        elif isinstance(s, A.SReturn):
            for v in s.values:
                scan_expr(v, acc)
        elif isinstance(s, (A.SAtomicBlock,)):
            for x in s.stmts:
                scan_stmt(x, acc)
        elif isinstance(s, (A.SAssume, A.SAssert)):
            scan_expr(s.cond, acc)
        elif isinstance(s, A.SExprStmt):
            scan_expr(s.expr, acc)

    for p in prog.procedures:
        acc: set[str] = set()
        scan_stmt(p.body, acc)
        deps[p.name] = {d for d in acc if d in deps and d != p.name}
    order: list[str] = []
    state: dict[str, int] = {}

    def visit(n, chain):
        if state.get(n) == 2:
            return
        if state.get(n) == 1:
            raise DesugarError(
                f"mutual recursion through {' -> '.join(chain + [n])} is unsupported",
                prog.proc(n).span,
            )
        state[n] = 1
        for d in sorted(deps[n]):
            visit(d, chain + [n])
        state[n] = 2
        order.append(n)

    for n in names:
        visit(n, [])
    return order


def _desugar_proc(ctx: ProcContext, cores: dict[str, CoreProcedure]) -> CoreProcedure:
    proc = ctx.proc
    ctx.param_order = tuple(name for name, _ in proc.params)
    ctx.locals |= set(ctx.param_order)
    ctx.ret_vars = tuple(f"{proc.name}_ret{i}" for i in range(len(proc.returns))) or ()
    ctx.locals |= set(ctx.ret_vars)
    has_self_call = _has_self_call(proc.body, proc.name)
    needs_done = has_self_call or _has_restart(proc.body) or proc.spec is not None
    ctx.done_var = ctx.fresh_var("done") if needs_done else ""
    wrap_loop = has_self_call or _has_restart(proc.body)

    body = _stmt(ctx, cores, proc.body, tail=True)
    if ctx.done_var and wrap_loop:
        prologue = Com(AssignVarOp(ctx.done_var, CLit(False), proc.span))
        loop = Loop(
            seq([Com(Assume(CUn("!", CVar(ctx.done_var)), proc.span)), body]),
            exit_var=ctx.done_var,
        )
        body = seq([prologue, loop, Com(Assume(CVar(ctx.done_var), proc.span))])
    elif ctx.done_var:
        prologue = Com(AssignVarOp(ctx.done_var, CLit(False), proc.span))
        body = seq([prologue, body])
    spec_key = None
    if proc.spec and proc.params:
        spec_key = proc.params[0][0]
    return CoreProcedure(
        proc.name,
        ctx.param_order,
        ctx.ret_vars,
        proc.spec,
        spec_key,
        body,
        tuple(sorted(ctx.locals)),
        proc.span,
        ctx.done_var,
        tuple(proc.params),
    )


def _has_self_call(s: A.SStmt, name: str) -> bool:
    found = [False]

    def scan_expr(e):
        if isinstance(e, A.ECall) and e.name == name:
            found[0] = True
        for attr in ("left", "right", "arg"):
            if hasattr(e, attr):
                scan_expr(getattr(e, attr))
        if isinstance(e, A.ECall):
            for a in e.args:
                scan_expr(a)

    def scan(s):
        for attr in ("stmts",):
            if hasattr(s, attr):
                for x in getattr(s, attr):
                    scan(x)
        for attr in ("then", "els", "body"):
            if hasattr(s, attr) and getattr(s, attr) is not None:
                scan(getattr(s, attr))
        for attr in ("cond", "expr"):
            if hasattr(s, attr):
                scan_expr(getattr(s, attr))
        if isinstance(s, A.SReturn):
            for v in s.values:
                scan_expr(v)

    scan(s)
    return found[0]


def _has_restart(s: A.SStmt) -> bool:
    if isinstance(s, A.SRestart):
        return True
    for attr in ("stmts",):
        if hasattr(s, attr):
            if any(_has_restart(x) for x in getattr(s, attr)):
                return True
    for attr in ("then", "els", "body"):
        if hasattr(s, attr) and getattr(s, attr) is not None:
            if _has_restart(getattr(s, attr)):
                return True
    return False


# ---------------------------------------------------------------------------
# statements
# ---------------------------------------------------------------------------


def _stmt(ctx: ProcContext, cores, s: A.SStmt, tail: bool) -> Stmt:
    if isinstance(s, A.SBlock):
        if not s.stmts:
            return Com(Skip(s.span))
        for x in s.stmts[:-1]:
            if isinstance(x, (A.SRestart, A.SReturn)):
                raise DesugarError("restart/return must end its block", x.span)
        parts = [_stmt(ctx, cores, x, tail=False) for x in s.stmts[:-1]]
        parts.append(_stmt(ctx, cores, s.stmts[-1], tail=tail))
        return seq(parts)
    if isinstance(s, A.SSkip):
        return Com(Skip(s.span))
    if isinstance(s, A.SVal):
        return _val(ctx, cores, s)
    if isinstance(s, A.SStore):
        return _store(ctx, s)
    if isinstance(s, A.SIf):
        then = _stmt(ctx, cores, s.then, tail)
        els = _stmt(ctx, cores, s.els, tail) if s.els else Com(Skip(s.span))
        return _cond(ctx, s.cond, then, els)
    if isinstance(s, A.SWhile):
        return _while(ctx, cores, s)
    if isinstance(s, A.SReturn):
        return _return(ctx, cores, s)
    if isinstance(s, A.SAtomicRead):
        cmds = []
        for name, rd in zip(s.names, s.reads):
            ctx.locals.add(name)
            cmds.append(AssignVarSel(name, rd.base, rd.sel, rd.span))
            ctx.field_kind(rd.sel, rd.span)
        return Com(AtomicBlock(tuple(cmds), span=s.span))
    if isinstance(s, A.SAtomicBlock):
        return _atomic_block(ctx, s)
    if isinstance(s, A.SAssume):
        return Com(Assume(_pure(ctx, s.cond), s.span))
    if isinstance(s, A.SAssert):
        return Com(Assert(_pure(ctx, s.cond), s.span))
    if isinstance(s, A.SLock):
        return _lock(ctx, s)
    if isinstance(s, A.SUnlock):
        return Com(AssignSelVar(s.target, "lock", CLit("nobody"), s.span))
    if isinstance(s, A.SFaa):
        tmp = ctx.fresh_var("cur")
        tmp2 = ctx.fresh_var("inc")
        return Com(
            AtomicBlock(
                (
                    AssignVarSel(tmp, s.base, s.sel, s.span),
                    AssignVarOp(tmp2, CBin("+", CVar(tmp), CLit(s.delta)), s.span),
                    AssignSelVar(s.base, s.sel, CVar(tmp2), s.span),
                ),
                span=s.span,
            )
        )
    if isinstance(s, A.SRestart):
        if not ctx.done_var:
            raise DesugarError("restart outside a restartable procedure", s.span)
        return Com(Skip(s.span))
    if isinstance(s, A.SExprStmt):
        if isinstance(s.expr, A.ECall):
            return _return(ctx, cores, A.SReturn((s.expr,), s.span))
        if isinstance(s.expr, A.ECas):
            return _cas(ctx, s.expr, Com(Skip(s.span)), Com(Skip(s.span)))
        raise DesugarError("expression has no effect", s.span)
    raise DesugarError(f"cannot desugar {type(s).__name__}", getattr(s, "span", A.NOWHERE))


def _val(ctx: ProcContext, cores, s: A.SVal) -> Stmt:
    expr = s.expr
    for n in s.names:
        ctx.locals.add(n)
    if isinstance(expr, A.ECall):
        return _call(ctx, cores, expr, s.names, s.span)
    if len(s.names) != 1:
        raise DesugarError("multiple binders need a call or atomic read", s.span)
    name = s.names[0]
    if isinstance(expr, A.ENew):
        return _new(ctx, name, expr)
    if isinstance(expr, A.ESel):
        ctx.field_kind(expr.sel, expr.span)
        return Com(AssignVarSel(name, expr.base, expr.sel, s.span))
    if isinstance(expr, A.ECas):
        succ = Com(AssignVarOp(name, CLit(True), s.span))
        fail = Com(AssignVarOp(name, CLit(False), s.span))
        return _cas(ctx, expr, succ, fail)
    if _is_pure_bool(expr) and _mentions_heap(expr):
        # boolean combination with heap reads: read each selector first
        reads, pure = _extract_reads(ctx, expr)
        return seq(reads + [Com(AssignVarOp(name, _pure(ctx, pure), s.span))])
    return Com(AssignVarOp(name, _pure(ctx, expr), s.span))


def _new(ctx: ProcContext, name: str, expr: A.ENew) -> Stmt:
    try:
        struct = ctx.prog.struct(expr.struct)
    except KeyError:
        raise DesugarError(f"unknown struct {expr.struct!r}", expr.span)
    ctx.fresh_nodes.add(name)
    parts: list[Stmt] = [Com(Malloc(name, expr.struct, expr.span))]
    for fname, fexpr in expr.fields:
        if struct.kind_of(fname) is None:
            raise DesugarError(f"unknown field {fname!r}", expr.span)
        parts.append(Com(AssignSelVar(name, fname, _pure_value(ctx, fexpr), expr.span)))
    return seq(parts)


def _store(ctx: ProcContext, s: A.SStore) -> Stmt:
    ctx.field_kind(s.sel, s.span)
    return Com(AssignSelVar(s.base, s.sel, _pure_value(ctx, s.expr), s.span))


def _while(ctx: ProcContext, cores, s: A.SWhile) -> Stmt:
    body = _stmt(ctx, cores, s.body, tail=False)
    if _has_cas(s.cond):
        raise DesugarError("CAS in while condition: use lock() or an if/loop", s.span)
    guard = _pure(ctx, s.cond)
    loop = Loop(seq([Com(Assume(guard, s.span)), body]))
    return seq([loop, Com(Assume(CUn("!", guard), s.span))])


def _lock(ctx: ProcContext, s: A.SLock) -> Stmt:
    # spin on CAS(x.lock, nobody, me); the failed attempts form the loop body
    fail = AtomicBlock(
        (Assume(CBin("!=", CSel(CVar(s.target), "lock"), CLit("nobody")), s.span),),
        span=s.span,
    )
    succ = AtomicBlock(
        (
            Assume(CBin("==", CSel(CVar(s.target), "lock"), CLit("nobody")), s.span),
            AssignSelVar(s.target, "lock", CLit("me"), s.span),
        ),
        cas_site=True,
        span=s.span,
    )
    ctx.candidates.append((s.span, "lock-acquire"))
    return seq([Loop(Com(fail)), Com(succ)])


def _return(ctx: ProcContext, cores, s: A.SReturn) -> Stmt:
    if len(s.values) == 1 and isinstance(s.values[0], A.ECall):
        call = s.values[0]
        if call.name == ctx.proc.name:
            # tail self-call: rebind parameters, next loop iteration continues
            if len(call.args) != len(ctx.param_order):
                raise DesugarError("self-call arity mismatch", s.span)
            tmps = []
            parts: list[Stmt] = []
            for arg in call.args:
                t = ctx.fresh_var("arg")
                tmps.append(t)
                parts.append(_val(ctx, cores, A.SVal((t,), arg, span=s.span)))
            for p, t in zip(ctx.param_order, tmps):
                parts.append(Com(AssignVarOp(p, CVar(t), s.span)))
            return seq(parts)
        # tail call to helper: bind its results to our return variables
        stmt = _call(ctx, cores, call, ctx.ret_vars, s.span)
        return seq([stmt] + _finish(ctx, s.span))
    if len(s.values) != len(ctx.ret_vars):
        raise DesugarError(
            f"return arity {len(s.values)} != declared {len(ctx.ret_vars)}", s.span
        )
    parts = []
    for rv, v in zip(ctx.ret_vars, s.values):
        if isinstance(v, (A.ESel,)):
            parts.append(Com(AssignVarSel(rv, v.base, v.sel, s.span)))
        else:
            parts.append(Com(AssignVarOp(rv, _pure(ctx, v), s.span)))
    return seq(parts + _finish(ctx, s.span))


def _finish(ctx: ProcContext, span) -> list[Stmt]:
    if ctx.done_var:
        return [Com(AssignVarOp(ctx.done_var, CLit(True), span))]
    return []


def _call(ctx: ProcContext, cores, call: A.ECall, binders: tuple[str, ...], span) -> Stmt:
    if call.name == ctx.proc.name:
        raise DesugarError("self-call outside tail position is unsupported", span)
    if call.name not in cores:
        raise DesugarError(f"unknown procedure {call.name!r}", span)
    callee = cores[call.name]
    if len(call.args) != len(callee.params):
        raise DesugarError(f"call arity mismatch for {call.name}", span)
    if len(binders) != len(callee.ret_vars) and binders:
        raise DesugarError(f"binder arity mismatch for {call.name}", span)
    ctx.fresh[0] += 1
    suffix = f"@{ctx.fresh[0]}"
    rename = {v: v + suffix for v in set(callee.locals) | set(callee.params) | set(callee.ret_vars)}
    for v in rename.values():
        ctx.locals.add(v)
    parts: list[Stmt] = []
    for (p, arg) in zip(callee.params, call.args):
        parts.append(_val(ctx, cores, A.SVal((rename[p],), arg, span=span)))
    parts.append(_rename_stmt(callee.body, rename))
    for b, rv in zip(binders, callee.ret_vars):
        if b != "_":
            ctx.locals.add(b)
            parts.append(Com(AssignVarOp(b, CVar(rename[rv]), span)))
    return seq(parts)


# ---------------------------------------------------------------------------
# conditions (short-circuit, CAS-aware)
# ---------------------------------------------------------------------------


def _cond(ctx: ProcContext, cond: A.Expr, then: Stmt, els: Stmt) -> Stmt:
    if isinstance(cond, A.EBin) and cond.op == "&&":
        return _cond(ctx, cond.left, _cond(ctx, cond.right, then, els), els)
    if isinstance(cond, A.EBin) and cond.op == "||":
        return _cond(ctx, cond.left, then, _cond(ctx, cond.right, then, els))
    if isinstance(cond, A.EUn) and cond.op == "!":
        return _cond(ctx, cond.arg, els, then)
    if isinstance(cond, A.ECas):
        return _cas(ctx, cond, then, els)
    guard = _pure(ctx, cond)
    return Choice(
        seq([Com(Assume(guard, cond.span)), then]),
        seq([Com(Assume(CUn("!", guard), cond.span)), els]),
    )


def _cas(ctx: ProcContext, cas: A.ECas, then: Stmt, els: Stmt) -> Stmt:
    eqs = []
    writes = []
    changed_kinds = []
    fresh_target = False
    for loc, old, new in zip(cas.locations, cas.olds, cas.news):
        kind = ctx.field_kind(loc.sel, loc.span)
        sel = CSel(CVar(loc.base), loc.sel)
        eqs.append(CBin("==", sel, _pure_value(ctx, old)))
        if _expr_eq(old, new):
            continue
        writes.append(AssignSelVar(loc.base, loc.sel, _pure_value(ctx, new), cas.span))
        changed_kinds.append(kind)
        if kind == "node" and isinstance(new, A.EVar) and new.name in ctx.fresh_nodes:
            fresh_target = True
    guard = eqs[0]
    for e in eqs[1:]:
        guard = CBin("&&", guard, e)
    succ_cmds = [Assume(guard, cas.span)] + writes
    succ = AtomicBlock(tuple(succ_cmds), cas_site=True, span=cas.span)
    fail = AtomicBlock((Assume(CUn("!", guard), cas.span),), span=cas.span)
    # future-candidate bookkeeping (per 'drop finite footprints' policy)
    if "node" in changed_kinds and not fresh_target:
        ctx.candidates.append((cas.span, "pointer-swing"))
    elif "owner" in changed_kinds:
        ctx.candidates.append((cas.span, "lock-acquire"))
    return Choice(seq([Com(succ), then]), seq([Com(fail), els]))


def _atomic_block(ctx: ProcContext, s: A.SAtomicBlock) -> Stmt:
    cmds: list = []
    for inner in s.stmts:
        if isinstance(inner, A.SAssume):
            cmds.append(Assume(_pure(ctx, inner.cond), inner.span))
        elif isinstance(inner, A.SAssert):
            cmds.append(Assert(_pure(ctx, inner.cond), inner.span))
        elif isinstance(inner, A.SStore):
            ctx.field_kind(inner.sel, inner.span)
            cmds.append(AssignSelVar(inner.base, inner.sel, _pure_value(ctx, inner.expr), inner.span))
        elif isinstance(inner, A.SVal) and isinstance(inner.expr, A.ESel):
            for n in inner.names:
                ctx.locals.add(n)
            cmds.append(AssignVarSel(inner.names[0], inner.expr.base, inner.expr.sel, inner.span))
        elif isinstance(inner, A.SVal):
            for n in inner.names:
                ctx.locals.add(n)
            cmds.append(AssignVarOp(inner.names[0], _pure(ctx, inner.expr), inner.span))
        elif isinstance(inner, A.SSkip):
            continue
        else:
            raise DesugarError("unsupported statement inside atomic block", s.span)
    return Com(AtomicBlock(tuple(cmds), span=s.span))


# ---------------------------------------------------------------------------
# expressions
# ---------------------------------------------------------------------------


def _pure(ctx: ProcContext, e: A.Expr):
    """Pure core expression; heap reads allowed (assume/assert position)."""
    if isinstance(e, A.EVar):
        return CVar(e.name)
    if isinstance(e, A.EInt):
        return CLit(e.value)
    if isinstance(e, A.EBool):
        return CLit(e.value)
    if isinstance(e, A.EInf):
        return CLit("inf" if e.sign > 0 else "-inf")
    if isinstance(e, A.ENull):
        return CLit("null")
    if isinstance(e, A.EOwner):
        return CLit(e.name)
    if isinstance(e, A.ESel):
        ctx.field_kind(e.sel, e.span)
        return CSel(CVar(e.base), e.sel)
    if isinstance(e, A.EUn):
        return CUn("!", _pure(ctx, e.arg))
    if isinstance(e, A.EBin):
        if e.op in ("&&", "||", "==", "!=", "<", "<=", ">", ">=", "+"):
            return CBin(e.op, _pure(ctx, e.left), _pure(ctx, e.right))
        raise DesugarError(f"operator {e.op} not allowed here", e.span)
    if isinstance(e, A.ECas):
        raise DesugarError("CAS only in conditions or assignments", e.span)
    if isinstance(e, A.ECall):
        raise DesugarError("call in expression position", e.span)
    raise DesugarError(f"cannot lower expression {type(e).__name__}", getattr(e, "span", A.NOWHERE))


def _pure_value(ctx: ProcContext, e: A.Expr):
    """Value position (RHS of heap write): variable or literal only."""
    out = _pure(ctx, e)
    if isinstance(out, (CVar, CLit)):
        return out
    if isinstance(out, CBin) and out.op == "+":
        return out  # counter increments
    raise DesugarError("heap write needs a variable or literal", getattr(e, "span", A.NOWHERE))


def _is_pure_bool(e: A.Expr) -> bool:
    if isinstance(e, (A.EBin,)) and e.op in ("&&", "||", "==", "!=", "<", "<=", ">", ">="):
        return True
    if isinstance(e, A.EUn):
        return True
    return False


def _mentions_heap(e: A.Expr) -> bool:
    if isinstance(e, A.ESel):
        return True
    for attr in ("left", "right", "arg"):
        if hasattr(e, attr) and _mentions_heap(getattr(e, attr)):
            return True
    return False


def _extract_reads(ctx: ProcContext, e: A.Expr):
    """Hoist heap reads out of a boolean expression (sequential reads)."""
    reads: list[Stmt] = []

    def go(e):
        if isinstance(e, A.ESel):
            tmp = ctx.fresh_var(f"{e.base}_{e.sel}")
            reads.append(Com(AssignVarSel(tmp, e.base, e.sel, e.span)))
            return A.EVar(tmp, e.span)
        if isinstance(e, A.EBin):
            return A.EBin(e.op, go(e.left), go(e.right), e.span)
        if isinstance(e, A.EUn):
            return A.EUn(e.op, go(e.arg), e.span)
        return e

    return reads, go(e)


def _has_cas(e: A.Expr) -> bool:
    if isinstance(e, A.ECas):
        return True
    for attr in ("left", "right", "arg"):
        if hasattr(e, attr) and _has_cas(getattr(e, attr)):
            return True
    return False


def _expr_eq(a: A.Expr, b: A.Expr) -> bool:
    if isinstance(a, A.EVar) and isinstance(b, A.EVar):
        return a.name == b.name
    if isinstance(a, A.EInt) and isinstance(b, A.EInt):
        return a.value == b.value
    if isinstance(a, A.EBool) and isinstance(b, A.EBool):
        return a.value == b.value
    return False


# ---------------------------------------------------------------------------
# renaming (for inlining)
# ---------------------------------------------------------------------------


def _rename_stmt(s: Stmt, env: dict[str, str]) -> Stmt:
    if isinstance(s, Com):
        return Com(_rename_cmd(s.command, env))
    if isinstance(s, Seq):
        return Seq(_rename_stmt(s.first, env), _rename_stmt(s.second, env))
    if isinstance(s, Choice):
        return Choice(_rename_stmt(s.left, env), _rename_stmt(s.right, env))
    if isinstance(s, Loop):
        return Loop(_rename_stmt(s.body, env), env.get(s.exit_var, s.exit_var))
    raise TypeError(s)


def _rename_cmd(c, env):
    r = lambda n: env.get(n, n)
    if isinstance(c, Skip):
        return c
    if isinstance(c, AssignVarOp):
        return AssignVarOp(r(c.var), _rename_expr(c.expr, env), c.span)
    if isinstance(c, AssignVarSel):
        return AssignVarSel(r(c.var), r(c.obj), c.sel, c.span)
    if isinstance(c, AssignSelVar):
        return AssignSelVar(r(c.obj), c.sel, _rename_expr(c.var, env), c.span)
    if isinstance(c, Malloc):
        return Malloc(r(c.var), c.struct, c.span)
    if isinstance(c, Assume):
        return Assume(_rename_expr(c.cond, env), c.span)
    if isinstance(c, Assert):
        return Assert(_rename_expr(c.cond, env), c.span)
    if isinstance(c, AtomicBlock):
        return AtomicBlock(tuple(_rename_cmd(x, env) for x in c.commands), c.cas_site, c.span)
    raise TypeError(c)


def _rename_expr(e, env):
    if isinstance(e, CVar):
        return CVar(env.get(e.name, e.name))
    if isinstance(e, CLit):
        return e
    if isinstance(e, CSel):
        return CSel(_rename_expr(e.base, env), e.sel)
    if isinstance(e, CUn):
        return CUn(e.op, _rename_expr(e.arg, env))
    if isinstance(e, CBin):
        return CBin(e.op, _rename_expr(e.left, env), _rename_expr(e.right, env))
    raise TypeError(e)
