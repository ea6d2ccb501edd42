"""Surface and core syntax trees.

The surface tree mirrors the listing style of the verified algorithms
(structs, procedures, `val` bindings, atomic blocks, CAS).  Desugaring
lowers it to the core while-language: commands composed with sequence,
choice, and loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    col: int
    end_line: int = 0
    end_col: int = 0

    def __post_init__(self):
        object.__setattr__(self, "end_line", self.end_line or self.line)
        object.__setattr__(self, "end_col", self.end_col or self.col)
        assert (self.line, self.col) <= (self.end_line, self.end_col)

    def __str__(self):
        return f"{self.file}:{self.line}:{self.col}"


NOWHERE = SourceSpan("<builtin>", 1, 1)


# ---------------------------------------------------------------------------
# Surface expressions
# ---------------------------------------------------------------------------


class Expr:
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class EVar(Expr):
    name: str
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class EInt(Expr):
    value: int
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class EInf(Expr):
    sign: int  # +1 or -1
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class EBool(Expr):
    value: bool
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class ENull(Expr):
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class EOwner(Expr):
    name: str  # 'nobody' | 'me'
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class ESel(Expr):
    base: str
    sel: str
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class EUn(Expr):
    op: str  # '!'
    arg: Expr
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class EBin(Expr):
    op: str  # == != < <= > >= && || +
    left: Expr
    right: Expr
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class ECas(Expr):
    """CAS(<lhs...>, <old...>, <new...>); single-location form has one of each."""

    locations: tuple[ESel, ...]
    olds: tuple[Expr, ...]
    news: tuple[Expr, ...]
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class ENew(Expr):
    struct: str
    fields: tuple[tuple[str, Expr], ...]
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class ECall(Expr):
    name: str
    args: tuple[Expr, ...]
    span: SourceSpan = NOWHERE


# ---------------------------------------------------------------------------
# Surface statements
# ---------------------------------------------------------------------------


class SStmt:
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class SBlock(SStmt):
    stmts: tuple[SStmt, ...]
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class SVal(SStmt):
    """val x, y = expr  (or re-assignment when declare=False)."""

    names: tuple[str, ...]
    expr: Expr
    declare: bool = True
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class SStore(SStmt):
    base: str
    sel: str
    expr: Expr
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class SIf(SStmt):
    cond: Expr
    then: SStmt
    els: Optional[SStmt]
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class SWhile(SStmt):
    cond: Expr
    body: SStmt
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class SReturn(SStmt):
    values: tuple[Expr, ...]
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class SAtomicRead(SStmt):
    """val a, b = atomic { x.sel1, y.sel2 }"""

    names: tuple[str, ...]
    reads: tuple[ESel, ...]
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class SAtomicBlock(SStmt):
    stmts: tuple[SStmt, ...]
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class SAssume(SStmt):
    cond: Expr
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class SAssert(SStmt):
    cond: Expr
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class SSkip(SStmt):
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class SLock(SStmt):
    target: str
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class SUnlock(SStmt):
    target: str
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class SFaa(SStmt):
    base: str
    sel: str
    delta: int
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class SRestart(SStmt):
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class SExprStmt(SStmt):
    expr: Expr
    span: SourceSpan = NOWHERE


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------

FIELD_KINDS = ("key", "node", "bool", "owner", "int")


@dataclass(frozen=True)
class StructDecl:
    name: str
    fields: tuple[tuple[str, str], ...]  # (field name, kind)
    span: SourceSpan = NOWHERE

    def kind_of(self, sel: str) -> str | None:
        for name, kind in self.fields:
            if name == sel:
                return kind
        return None


@dataclass(frozen=True)
class GlobalDecl:
    name: str
    type: str
    init: Optional[Expr]
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class Procedure:
    name: str
    params: tuple[tuple[str, str], ...]  # (name, type)
    returns: tuple[str, ...]  # return type names
    spec: Optional[str]  # sequential-spec operation or None for helpers
    body: SStmt
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class Program:
    structs: tuple[StructDecl, ...]
    globals: tuple[GlobalDecl, ...]
    procedures: tuple[Procedure, ...]
    source: str = "<memory>"

    def struct(self, name: str) -> StructDecl:
        for s in self.structs:
            if s.name == name:
                return s
        raise KeyError(name)

    def node_struct(self) -> StructDecl:
        return self.structs[0]

    def proc(self, name: str) -> Procedure:
        for p in self.procedures:
            if p.name == name:
                return p
        raise KeyError(name)


# ---------------------------------------------------------------------------
# Core language (desugared)
# ---------------------------------------------------------------------------


class CExpr:
    """Pure core expression over local variables and literals."""


@dataclass(frozen=True)
class CVar(CExpr):
    name: str

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class CLit(CExpr):
    value: object  # int | bool | 'inf' | '-inf' | 'null' | 'nobody' | 'me'

    def __repr__(self):
        v = self.value
        return str(v).lower() if isinstance(v, bool) else str(v)


@dataclass(frozen=True)
class CSel(CExpr):
    """Heap read x.sel; only allowed in assume/assert conditions."""

    base: CVar
    sel: str

    def __repr__(self):
        return f"{self.base}.{self.sel}"


@dataclass(frozen=True)
class CUn(CExpr):
    op: str
    arg: CExpr

    def __repr__(self):
        return f"{self.op}({self.arg})"


@dataclass(frozen=True)
class CBin(CExpr):
    op: str
    left: CExpr
    right: CExpr

    def __repr__(self):
        return f"({self.left} {self.op} {self.right})"


class Command:
    span: SourceSpan = NOWHERE


@dataclass(frozen=True)
class Skip(Command):
    span: SourceSpan = NOWHERE

    def __repr__(self):
        return "skip"


@dataclass(frozen=True)
class AssignVarOp(Command):
    """x := pure-expression over variables and literals."""

    var: str
    expr: CExpr
    span: SourceSpan = NOWHERE

    def __repr__(self):
        return f"{self.var} := {self.expr}"


@dataclass(frozen=True)
class AssignVarSel(Command):
    var: str
    obj: str
    sel: str
    span: SourceSpan = NOWHERE

    def __repr__(self):
        return f"{self.var} := {self.obj}.{self.sel}"


@dataclass(frozen=True)
class AssignSelVar(Command):
    obj: str
    sel: str
    var: CExpr  # CVar or CLit
    span: SourceSpan = NOWHERE

    def __repr__(self):
        return f"{self.obj}.{self.sel} := {self.var}"


@dataclass(frozen=True)
class Malloc(Command):
    var: str
    struct: str
    span: SourceSpan = NOWHERE

    def __repr__(self):
        return f"{self.var} := malloc {self.struct}"


@dataclass(frozen=True)
class Assume(Command):
    cond: CExpr
    span: SourceSpan = NOWHERE

    def __repr__(self):
        return f"assume({self.cond})"


@dataclass(frozen=True)
class Assert(Command):
    cond: CExpr
    span: SourceSpan = NOWHERE

    def __repr__(self):
        return f"assert({self.cond})"


@dataclass(frozen=True)
class AtomicBlock(Command):
    commands: tuple[Command, ...]
    cas_site: bool = False  # marks desugared CAS success blocks
    span: SourceSpan = NOWHERE

    def __post_init__(self):
        writes = []
        for c in self.commands:
            assert not isinstance(c, Malloc), "malloc inside atomic block"
            if isinstance(c, AssignSelVar):
                writes.append((c.obj, c.sel))
        assert len(writes) == len(set(writes)), "duplicate heap write in atomic block"

    def __repr__(self):
        return "atomic { " + "; ".join(map(repr, self.commands)) + " }"


class Stmt:
    pass


@dataclass(frozen=True)
class Com(Stmt):
    command: Command

    def __repr__(self):
        return repr(self.command)


@dataclass(frozen=True)
class Seq(Stmt):
    first: Stmt
    second: Stmt

    def __repr__(self):
        return f"{self.first}; {self.second}"


@dataclass(frozen=True)
class Choice(Stmt):
    left: Stmt
    right: Stmt

    def __repr__(self):
        return f"({self.left} [] {self.right})"


@dataclass(frozen=True)
class Loop(Stmt):
    body: Stmt
    exit_var: str = ""  # done-flag for desugared tail recursion / restarts

    def __post_init__(self):
        assert self.body is not None

    def __repr__(self):
        return f"loop {{ {self.body} }}"


def seq(stmts: list[Stmt]) -> Stmt:
    kept = [s for s in stmts if not (isinstance(s, Com) and isinstance(s.command, Skip))]
    if not kept:
        return Com(Skip())
    # a branch consisting solely of guards keeps its trailing skip
    if stmts and stmts[-1] is not kept[-1]:
        last = stmts[-1]
        if all(isinstance(s, Com) and isinstance(s.command, (Assume, Assert)) for s in kept):
            kept.append(last)
    out = kept[-1]
    for s in reversed(kept[:-1]):
        out = Seq(s, out)
    return out


@dataclass(frozen=True)
class CoreProcedure:
    name: str
    params: tuple[str, ...]
    ret_vars: tuple[str, ...]
    spec: Optional[str]
    spec_key: Optional[str]  # parameter holding the operation key
    body: Stmt
    locals: tuple[str, ...] = ()
    span: SourceSpan = NOWHERE
    done_var: str = ""
    param_types: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class CoreProgram:
    structs: tuple[StructDecl, ...]
    globals: tuple[GlobalDecl, ...]
    procedures: tuple[CoreProcedure, ...]
    cas_candidates: tuple[tuple[str, SourceSpan, str], ...] = ()  # (proc, site, reason-kept)
    source: str = "<memory>"

    def node_struct(self) -> StructDecl:
        return self.structs[0]

    def proc(self, name: str) -> CoreProcedure:
        for p in self.procedures:
            if p.name == name:
                return p
        raise KeyError(name)
