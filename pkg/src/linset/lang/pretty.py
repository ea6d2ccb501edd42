"""Surface-syntax printer; parse(pretty(parse(text))) is structurally stable."""

from __future__ import annotations

from . import ast as A

_KIND_NAMES = {"key": "K", "bool": "Bool", "int": "Int", "owner": "Owner"}


def pretty_program(prog: A.Program) -> str:
    out: list[str] = []
    for s in prog.structs:
        fields = "; ".join(
            f"{name}: {_KIND_NAMES.get(kind, s.name if kind == 'node' else kind)}"
            for name, kind in s.fields
        )
        out.append(f"struct {s.name} {{ {fields} }}")
    for g in prog.globals:
        init = f" = {pretty_expr(g.init)}" if g.init else ""
        out.append(f"var {g.name}: {g.type}{init}")
    for p in prog.procedures:
        params = ", ".join(f"{n}: {t}" for n, t in p.params)
        rets = ""
        if p.returns:
            rets = ": " + (
                p.returns[0] if len(p.returns) == 1 else "(" + " * ".join(p.returns) + ")"
            )
        spec = f" spec {p.spec}" if p.spec else ""
        out.append(f"procedure {p.name}({params}){rets}{spec} {{")
        out.append(pretty_stmt(p.body, 1))
        out.append("}")
    return "\n".join(out) + "\n"


def _ind(depth: int) -> str:
    return "  " * depth


def pretty_stmt(s: A.SStmt, depth: int) -> str:
    i = _ind(depth)
    if isinstance(s, A.SBlock):
        return "\n".join(pretty_stmt(x, depth) for x in s.stmts) or f"{i}skip"
    if isinstance(s, A.SSkip):
        return f"{i}skip"
    if isinstance(s, A.SRestart):
        return f"{i}restart"
    if isinstance(s, A.SVal):
        kw = "val " if s.declare else ""
        return f"{i}{kw}{', '.join(s.names)} = {pretty_expr(s.expr)}"
    if isinstance(s, A.SStore):
        return f"{i}{s.base}.{s.sel} = {pretty_expr(s.expr)}"
    if isinstance(s, A.SIf):
        out = f"{i}if ({pretty_expr(s.cond)}) {{\n{pretty_stmt(s.then, depth + 1)}\n{i}}}"
        if isinstance(s.els, A.SIf):
            out += " else " + pretty_stmt(s.els, depth).lstrip()
        elif s.els:
            out += f" else {{\n{pretty_stmt(s.els, depth + 1)}\n{i}}}"
        return out
    if isinstance(s, A.SWhile):
        return f"{i}while ({pretty_expr(s.cond)}) {{\n{pretty_stmt(s.body, depth + 1)}\n{i}}}"
    if isinstance(s, A.SReturn):
        if not s.values:
            return f"{i}return"
        return f"{i}return {', '.join(pretty_expr(v) for v in s.values)}"
    if isinstance(s, A.SAtomicRead):
        reads = ", ".join(pretty_expr(r) for r in s.reads)
        return f"{i}val {', '.join(s.names)} = atomic {{ {reads} }}"
    if isinstance(s, A.SAtomicBlock):
        inner = "\n".join(pretty_stmt(x, depth + 1) for x in s.stmts)
        return f"{i}atomic {{\n{inner}\n{i}}}"
    if isinstance(s, A.SAssume):
        return f"{i}assume({pretty_expr(s.cond)})"
    if isinstance(s, A.SAssert):
        return f"{i}assert({pretty_expr(s.cond)})"
    if isinstance(s, A.SLock):
        return f"{i}lock({s.target})"
    if isinstance(s, A.SUnlock):
        return f"{i}unlock({s.target})"
    if isinstance(s, A.SFaa):
        return f"{i}FAA({s.base}.{s.sel}, {s.delta})"
    if isinstance(s, A.SExprStmt):
        return f"{i}{pretty_expr(s.expr)}"
    raise TypeError(s)


def pretty_expr(e: A.Expr) -> str:
    if isinstance(e, A.EVar):
        return e.name
    if isinstance(e, A.EInt):
        return str(e.value)
    if isinstance(e, A.EInf):
        return "inf" if e.sign > 0 else "-inf"
    if isinstance(e, A.EBool):
        return "true" if e.value else "false"
    if isinstance(e, A.ENull):
        return "null"
    if isinstance(e, A.EOwner):
        return e.name
    if isinstance(e, A.ESel):
        return f"{e.base}.{e.sel}"
    if isinstance(e, A.EUn):
        return f"!{_paren(e.arg)}"
    if isinstance(e, A.EBin):
        return f"{_paren(e.left)} {e.op} {_paren(e.right)}"
    if isinstance(e, A.ECas):
        if len(e.locations) == 1:
            return (
                f"CAS({pretty_expr(e.locations[0])}, "
                f"{pretty_expr(e.olds[0])}, {pretty_expr(e.news[0])})"
            )
        locs = ", ".join(pretty_expr(x) for x in e.locations)
        olds = ", ".join(pretty_expr(x) for x in e.olds)
        news = ", ".join(pretty_expr(x) for x in e.news)
        return f"CAS(<{locs}>, <{olds}>, <{news}>)"
    if isinstance(e, A.ENew):
        fields = ", ".join(f"{n} = {pretty_expr(v)}" for n, v in e.fields)
        return f"new {e.struct} {{ {fields} }}"
    if isinstance(e, A.ECall):
        return f"{e.name}({', '.join(pretty_expr(a) for a in e.args)})"
    raise TypeError(e)


def _paren(e: A.Expr) -> str:
    if isinstance(e, (A.EBin,)):
        return f"({pretty_expr(e)})"
    return pretty_expr(e)
