"""Recursive-descent parser for the surface language."""

from __future__ import annotations

from . import ast as A
from .lexer import Token, tokenize, LexError


class ParseError(Exception):
    def __init__(self, msg: str, file: str, tok: Token):
        super().__init__(f"{file}:{tok.line}:{tok.col}: {msg}")
        self.file, self.tok = file, tok


class Parser:
    def __init__(self, text: str, file: str):
        self.file = file
        self.toks = tokenize(text, file)
        self.pos = 0

    # ---- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def at(self, text: str, ahead: int = 0) -> bool:
        return self.peek(ahead).text == text and self.peek(ahead).kind in ("kw", "sym")

    def take(self) -> Token:
        tok = self.toks[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text!r}", self.file, tok)
        return self.take()

    def ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise ParseError(f"expected identifier, found {tok.text!r}", self.file, tok)
        return self.take()

    def fieldname(self) -> Token:
        tok = self.peek()
        if tok.kind not in ("ident", "kw"):
            raise ParseError(f"expected field name, found {tok.text!r}", self.file, tok)
        return self.take()

    def span(self, tok: Token) -> A.SourceSpan:
        return A.SourceSpan(self.file, tok.line, tok.col)

    def skip_semis(self):
        while self.at(";"):
            self.take()

    # ---- declarations --------------------------------------------------------

    def program(self) -> A.Program:
        structs, globals_, procs = [], [], []
        while self.peek().kind != "eof":
            if self.at("struct"):
                structs.append(self.struct_decl())
            elif self.at("val") or self.at("var"):
                globals_.append(self.global_decl())
            elif self.at("procedure"):
                procs.append(self.proc_decl())
            else:
                raise ParseError(
                    f"expected declaration, found {self.peek().text!r}", self.file, self.peek()
                )
            self.skip_semis()
        prog = A.Program(tuple(structs), tuple(globals_), tuple(procs), self.file)
        _check_program(prog, self.file)
        return prog

    def struct_decl(self) -> A.StructDecl:
        start = self.expect("struct")
        name = self.ident().text
        self.expect("{")
        fields = []
        while not self.at("}"):
            if self.at("val") or self.at("var"):
                self.take()
            fname = self.fieldname().text
            self.expect(":")
            kind = self.type_kind()
            fields.append((fname, kind))
            self.skip_semis()
        self.expect("}")
        return A.StructDecl(name, tuple(fields), self.span(start))

    def type_kind(self) -> str:
        tok = self.take()
        mapping = {"K": "key", "Bool": "bool", "Int": "int", "Owner": "owner"}
        if tok.text in mapping:
            return mapping[tok.text]
        if tok.kind == "ident":
            return "node"
        raise ParseError(f"expected type, found {tok.text!r}", self.file, tok)

    def type_name(self) -> str:
        tok = self.take()
        if tok.text in ("K", "Bool", "Int", "Owner") or tok.kind == "ident":
            return tok.text
        raise ParseError(f"expected type, found {tok.text!r}", self.file, tok)

    def global_decl(self) -> A.GlobalDecl:
        start = self.take()  # val | var
        name = self.ident().text
        typ = "N"
        if self.at(":"):
            self.take()
            typ = self.type_name()
        init = None
        if self.at("="):
            self.take()
            init = self.expr()
        return A.GlobalDecl(name, typ, init, self.span(start))

    def proc_decl(self) -> A.Procedure:
        start = self.expect("procedure")
        name = self.ident().text
        self.expect("(")
        params = []
        while not self.at(")"):
            pname = self.ident().text
            self.expect(":")
            params.append((pname, self.type_name()))
            if self.at(","):
                self.take()
        self.expect(")")
        returns: list[str] = []
        if self.at(":"):
            self.take()
            if self.at("("):
                self.take()
                returns.append(self.type_name())
                while self.at("*") or self.at(","):
                    self.take()
                    returns.append(self.type_name())
                self.expect(")")
            else:
                returns.append(self.type_name())
                while self.at("*"):
                    self.take()
                    returns.append(self.type_name())
        spec = None
        if self.at("spec"):
            self.take()
            spec = self.ident().text
        body = self.block()
        return A.Procedure(name, tuple(params), tuple(returns), spec, body, self.span(start))

    # ---- statements ------------------------------------------------------------

    def block(self) -> A.SStmt:
        start = self.expect("{")
        stmts = []
        while not self.at("}"):
            stmts.append(self.stmt())
            self.skip_semis()
        self.expect("}")
        return A.SBlock(tuple(stmts), self.span(start))

    def stmt_or_block(self) -> A.SStmt:
        if self.at("{"):
            return self.block()
        single = self.stmt()
        return A.SBlock((single,), single.span)

    def stmt(self) -> A.SStmt:
        tok = self.peek()
        if self.at("skip"):
            self.take()
            return A.SSkip(self.span(tok))
        if self.at("restart"):
            self.take()
            return A.SRestart(self.span(tok))
        if self.at("val") or self.at("var"):
            return self.val_stmt()
        if self.at("if"):
            return self.if_stmt()
        if self.at("while"):
            self.take()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            body = self.stmt_or_block()
            return A.SWhile(cond, body, self.span(tok))
        if self.at("return"):
            self.take()
            values: list[A.Expr] = []
            if not self.at("}") and not self.at(";"):
                paren = self.at("(")
                if paren:
                    self.take()
                values.append(self.expr())
                while self.at(","):
                    self.take()
                    values.append(self.expr())
                if paren:
                    self.expect(")")
            return A.SReturn(tuple(values), self.span(tok))
        if self.at("atomic"):
            return self.atomic_stmt(names=None)
        if self.at("assume") or self.at("assert"):
            kw = self.take().text
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            cls = A.SAssume if kw == "assume" else A.SAssert
            return cls(cond, self.span(tok))
        if self.at("lock") or self.at("unlock"):
            kw = self.take().text
            self.expect("(")
            target = self.ident().text
            self.expect(")")
            cls = A.SLock if kw == "lock" else A.SUnlock
            return cls(target, self.span(tok))
        if self.at("FAA"):
            self.take()
            self.expect("(")
            base = self.ident().text
            self.expect(".")
            sel = self.fieldname().text
            self.expect(",")
            delta = int(self.take().text)
            self.expect(")")
            return A.SFaa(base, sel, delta, self.span(tok))
        if tok.kind == "ident":
            # x = e | x := e | x.sel = e | bare call/CAS
            if self.at(".", 1) and self.peek(3).text in ("=", ":="):
                base = self.take().text
                self.take()  # .
                sel = self.fieldname().text
                self.take()  # = or :=
                return A.SStore(base, sel, self.expr(), self.span(tok))
            if self.peek(1).text in ("=", ":="):
                name = self.take().text
                self.take()
                if self.at("atomic"):
                    return self.atomic_stmt(names=(name,))
                return A.SVal((name,), self.expr(), declare=False, span=self.span(tok))
        expr = self.expr()
        return A.SExprStmt(expr, self.span(tok))

    def if_stmt(self) -> A.SStmt:
        start = self.expect("if")
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        then = self.stmt_or_block()
        els = None
        if self.at("else"):
            self.take()
            els = self.if_stmt() if self.at("if") else self.stmt_or_block()
        return A.SIf(cond, then, els, self.span(start))

    def val_stmt(self) -> A.SStmt:
        start = self.take()  # val | var
        names = [self.ident().text]
        while self.at(","):
            self.take()
            names.append(self.ident().text)
        if self.at(":"):
            self.take()
            self.type_name()
        self.expect("=")
        if self.at("atomic"):
            return self.atomic_stmt(names=tuple(names), declare=True, start=start)
        return A.SVal(tuple(names), self.expr(), declare=True, span=self.span(start))

    def atomic_stmt(self, names, declare=True, start=None) -> A.SStmt:
        start = start or self.peek()
        self.expect("atomic")
        self.expect("{")
        if names is not None:
            reads = [self.sel_expr()]
            while self.at(","):
                self.take()
                reads.append(self.sel_expr())
            self.expect("}")
            if len(reads) != len(names):
                raise ParseError("atomic read arity mismatch", self.file, start)
            return A.SAtomicRead(tuple(names), tuple(reads), self.span(start))
        stmts = []
        while not self.at("}"):
            stmts.append(self.stmt())
            self.skip_semis()
        self.expect("}")
        return A.SAtomicBlock(tuple(stmts), self.span(start))

    def sel_expr(self) -> A.ESel:
        tok = self.ident()
        self.expect(".")
        sel = self.fieldname().text
        return A.ESel(tok.text, sel, self.span(tok))

    # ---- expressions ----------------------------------------------------------

    def expr(self) -> A.Expr:
        return self.or_expr()

    def or_expr(self) -> A.Expr:
        left = self.and_expr()
        while self.at("||"):
            tok = self.take()
            right = self.and_expr()
            left = A.EBin("||", left, right, self.span(tok))
        return left

    def and_expr(self) -> A.Expr:
        left = self.cmp_expr()
        while self.at("&&"):
            tok = self.take()
            right = self.cmp_expr()
            left = A.EBin("&&", left, right, self.span(tok))
        return left

    def cmp_expr(self) -> A.Expr:
        left = self.sum_expr()
        for op in ("==", "!=", "<=", ">=", "<", ">"):
            if self.at(op):
                tok = self.take()
                right = self.sum_expr()
                return A.EBin(op, left, right, self.span(tok))
        return left

    def sum_expr(self) -> A.Expr:
        left = self.unary_expr()
        while self.at("+"):
            tok = self.take()
            right = self.unary_expr()
            left = A.EBin("+", left, right, self.span(tok))
        return left

    def unary_expr(self) -> A.Expr:
        if self.at("!"):
            tok = self.take()
            return A.EUn("!", self.unary_expr(), self.span(tok))
        if self.at("-"):
            tok = self.take()
            if self.at("inf"):
                self.take()
                return A.EInf(-1, self.span(tok))
            num = self.take()
            if num.kind != "int":
                raise ParseError("expected number after '-'", self.file, num)
            return A.EInt(-int(num.text), self.span(tok))
        return self.prim_expr()

    def prim_expr(self) -> A.Expr:
        tok = self.peek()
        if tok.kind == "int":
            self.take()
            return A.EInt(int(tok.text), self.span(tok))
        if self.at("true") or self.at("false"):
            self.take()
            return A.EBool(tok.text == "true", self.span(tok))
        if self.at("inf"):
            self.take()
            return A.EInf(+1, self.span(tok))
        if self.at("null"):
            self.take()
            return A.ENull(self.span(tok))
        if self.at("nobody") or self.at("me"):
            self.take()
            return A.EOwner(tok.text, self.span(tok))
        if self.at("CAS"):
            return self.cas_expr()
        if self.at("new"):
            return self.new_expr()
        if self.at("("):
            self.take()
            inner = self.expr()
            self.expect(")")
            return inner
        if tok.kind == "ident":
            name = self.take().text
            if self.at("."):
                self.take()
                sel = self.fieldname().text
                return A.ESel(name, sel, self.span(tok))
            if self.at("("):
                self.take()
                args = []
                while not self.at(")"):
                    args.append(self.expr())
                    if self.at(","):
                        self.take()
                self.expect(")")
                return A.ECall(name, tuple(args), self.span(tok))
            return A.EVar(name, self.span(tok))
        raise ParseError(f"expected expression, found {tok.text!r}", self.file, tok)

    def cas_expr(self) -> A.ECas:
        start = self.expect("CAS")
        self.expect("(")
        if self.at("<"):
            locations = tuple(self._angle_list(self.sel_expr))
            self.expect(",")
            olds = tuple(self._angle_list(self.sum_expr))
            self.expect(",")
            news = tuple(self._angle_list(self.sum_expr))
        else:
            locations = (self.sel_expr(),)
            self.expect(",")
            olds = (self.expr(),)
            self.expect(",")
            news = (self.expr(),)
        self.expect(")")
        if not (len(locations) == len(olds) == len(news)):
            raise ParseError("CAS arity mismatch", self.file, start)
        return A.ECas(locations, olds, news, self.span(start))

    def _angle_list(self, f):
        self.expect("<")
        out = [f()]
        while self.at(","):
            self.take()
            out.append(f())
        self.expect(">")
        return out

    def new_expr(self) -> A.ENew:
        start = self.expect("new")
        struct = self.ident().text
        fields = []
        self.expect("{")
        while not self.at("}"):
            name = self.ident().text
            self.expect("=")
            fields.append((name, self.expr()))
            if self.at(",") or self.at(";"):
                self.take()
        self.expect("}")
        return A.ENew(struct, tuple(fields), self.span(start))


def _check_program(prog: A.Program, file: str) -> None:
    seen = set()
    for p in prog.procedures:
        if p.name in seen:
            raise ParseError(
                f"duplicate procedure {p.name!r}",
                file,
                Token("ident", p.name, p.span.line, p.span.col),
            )
        seen.add(p.name)
    if not prog.structs:
        raise ParseError("program declares no struct", file, Token("eof", "", 1, 1))
    fields = {name for s in prog.structs for name, _ in s.fields}
    globals_ = {g.name for g in prog.globals}

    def check_expr(e: A.Expr):
        if isinstance(e, A.ESel) and e.sel not in fields:
            raise ParseError(
                f"unknown field {e.sel!r}", file, Token("ident", e.sel, e.span.line, e.span.col)
            )
        for child in getattr(e, "__dict__", {}).values():
            pass

    # field-name validation happens during desugaring where scopes are known
    del globals_, check_expr


def parse(text: str, file: str = "<memory>") -> A.Program:
    try:
        return Parser(text, file).program()
    except LexError as exc:
        raise ParseError(str(exc), file, Token("eof", "", exc.line, exc.col)) from exc
