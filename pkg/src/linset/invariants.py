"""Structure invariant files (.inv): contents/keyset definitions, per-node
invariant formulas, flow generator configuration, and field update protocols.

The file is line oriented:

    spec set
    flow keyset
    edge next strip-below key
    root head [-inf, inf]
    contents(x) ite(x.mark, {}, {x.key})
    keyset(x) flow(x) \\ (x.key, inf]
    invariant phi1(x) !x.mark => flow(x) != {}
    invariant phi4(x) unique-inflow(x)
    pinned head !x.mark
    field key frozen
    field mark monotone
    field next guarded !x.mark
    field lock lock

Templates are written over a node placeholder `x`; `flow(x)` is the ghost
flow field.  Instantiation substitutes a concrete node atom's terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from . import terms as T
from .logic.assertion import NodeAtom


class InvError(Exception):
    pass


# ---------------------------------------------------------------------------
# Template expressions
# ---------------------------------------------------------------------------


class Binding:
    """Terms for the node placeholder during instantiation."""

    def __init__(self, addr: T.Term, fields: dict[str, T.Term], flow: Optional[T.Term]):
        self.addr = addr
        self.fields = fields
        self.flow = flow

    @staticmethod
    def of(atom: NodeAtom) -> "Binding":
        return Binding(atom.addr, atom.fields, atom.flow)


def _tokenize(text: str) -> list[str]:
    out: list[str] = []
    i, n = 0, len(text)
    two = ("==", "!=", "<=", ">=", "&&", "||", "=>")
    while i < n:
        ch = text[i]
        if ch in " \t":
            i += 1
            continue
        if text[i : i + 2] in two:
            out.append(text[i : i + 2])
            i += 2
            continue
        if ch in "()[]{},.\\<>!u" and not (ch == "u" and i + 1 < n and text[i + 1].isalnum()):
            out.append(ch)
            i += 1
            continue
        j = i
        while j < n and (text[j].isalnum() or text[j] in "_-"):
            j += 1
        if j == i:
            raise InvError(f"cannot tokenize {text[i:]!r}")
        out.append(text[i:j])
        i = j
    return out


class _TemplateParser:
    """Parses a template over placeholder `x` into a closure Binding -> value."""

    def __init__(self, tokens: list[str], placeholder: str):
        self.toks = tokens
        self.pos = 0
        self.x = placeholder

    def peek(self) -> str | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise InvError("unexpected end of template")
        self.pos += 1
        return tok

    def expect(self, tok: str):
        got = self.take()
        if got != tok:
            raise InvError(f"expected {tok!r}, got {got!r}")

    # formula := imp
    def formula(self) -> Callable[[Binding], T.Formula]:
        return self.imp()

    def imp(self):
        left = self.disj()
        if self.peek() == "=>":
            self.take()
            right = self.imp()
            return lambda b: T.Implies(left(b), right(b))
        return left

    def disj(self):
        parts = [self.conj()]
        while self.peek() == "||":
            self.take()
            parts.append(self.conj())
        if len(parts) == 1:
            return parts[0]
        return lambda b: T.disj([p(b) for p in parts])

    def conj(self):
        parts = [self.neg()]
        while self.peek() == "&&":
            self.take()
            parts.append(self.neg())
        if len(parts) == 1:
            return parts[0]
        return lambda b: T.conj([p(b) for p in parts])

    def neg(self):
        if self.peek() == "!":
            self.take()
            inner = self.neg()
            return lambda b: T.Not(inner(b))
        return self.atom_formula()

    def atom_formula(self):
        if self.peek() == "(":
            save = self.pos
            try:
                self.take()
                inner = self.formula()
                self.expect(")")
                if self.peek() in ("==", "!=", "sub", "in", "<", "<=", ">", ">=", "u", "\\"):
                    raise InvError("backtrack")
                return inner
            except InvError:
                self.pos = save
        left = self.set_or_scalar()
        op = self.peek()
        if op in ("==", "!=", "<", "<=", ">", ">="):
            self.take()
            right = self.set_or_scalar()

            def cmp(b, left=left, right=right, op=op):
                lt, rt = left(b), right(b)
                if lt.sort == T.KSET or rt.sort == T.KSET:
                    if op == "==":
                        return T.EqKs(lt, rt)
                    if op == "!=":
                        return T.Not(T.EqKs(lt, rt))
                    raise InvError(f"bad set comparison {op}")
                if op == ">":
                    return T.lt(rt, lt)
                if op == ">=":
                    return T.le(rt, lt)
                return T.Cmp({"==": "=", "!=": "!="}.get(op, op), lt, rt)

            return cmp
        if op == "sub":
            self.take()
            right = self.set_or_scalar()
            return lambda b: T.SubKs(left(b), right(b))
        if op == "in":
            self.take()
            right = self.set_or_scalar()
            return lambda b: T.InKs(left(b), right(b))
        # bare boolean term, e.g. x.mark
        return lambda b: _as_formula(left(b))

    # set / scalar expression with \ and u at lowest precedence
    def set_or_scalar(self):
        left = self.set_atom()
        while self.peek() in ("\\", "u"):
            op = self.take()
            right = self.set_atom()
            if op == "\\":
                left = (lambda l, r: lambda b: T.KsMinus(l(b), r(b)))(left, right)
            else:
                left = (lambda l, r: lambda b: T.ks_union(l(b), r(b)))(left, right)
        return left

    def set_atom(self):
        tok = self.peek()
        if tok == "{":
            self.take()
            if self.peek() == "}":
                self.take()
                return lambda b: T.KS_EMPTY
            inner = self.set_or_scalar()
            self.expect("}")
            return lambda b: T.KsSingleton(inner(b))
        if tok in ("[", "("):
            self.take()
            lo_strict = tok == "("
            lo = self.set_or_scalar()
            self.expect(",")
            hi = self.set_or_scalar()
            close = self.take()
            if close not in (")", "]"):
                raise InvError(f"bad interval close {close!r}")
            hi_strict = close == ")"
            return lambda b: T.KsInterval(lo(b), hi(b), lo_strict, hi_strict)
        return self.scalar()

    def scalar(self):
        tok = self.take()
        if tok == "ite":
            self.expect("(")
            cond = self.formula()
            self.expect(",")
            then = self.set_or_scalar()
            self.expect(",")
            els = self.set_or_scalar()
            self.expect(")")

            def ite(b):
                c = cond(b)
                t_, e_ = then(b), els(b)
                # sets only: encoded via guarded union when needed
                return _KsIte(c, t_, e_)

            return ite
        if tok == "flow":
            self.expect("(")
            self.expect(self.x)
            self.expect(")")

            def flow(b):
                if b.flow is None:
                    raise InvError("node has no flow ghost")
                return b.flow

            return flow
        if tok == "-":
            nxt = self.take()
            if nxt == "inf":
                return lambda b: T.NEG_INF
            return lambda b: T.KeyLit(-int(nxt))
        if tok == "-inf":
            return lambda b: T.NEG_INF
        if tok == "inf":
            return lambda b: T.INF
        if tok == "null":
            return lambda b: T.NULL
        if tok == "true":
            return lambda b: T.TRUE
        if tok == "false":
            return lambda b: T.FALSE
        if tok.lstrip("-").isdigit():
            return lambda b: T.KeyLit(int(tok))
        if tok == self.x:
            if self.peek() == ".":
                self.take()
                sel = self.take()

                def fieldref(b, sel=sel):
                    if sel not in b.fields:
                        raise InvError(f"field {sel!r} not bound")
                    return b.fields[sel]

                return fieldref
            return lambda b: b.addr
        raise InvError(f"unknown template token {tok!r}")


@dataclass(frozen=True)
class _KsIte:
    cond: T.Formula
    then: T.Term
    els: T.Term
    sort: str = field(default=T.KSET, init=False)


def _as_formula(t) -> T.Formula:
    if isinstance(t, T.Formula):
        return t
    if isinstance(t, T.Term) and t.sort == T.BOOL:
        return T.BoolIs(t)
    raise InvError(f"not a formula: {t!r}")


def parse_template(text: str, placeholder: str = "x"):
    parser = _TemplateParser(_tokenize(text), placeholder)
    out = parser.formula()
    if parser.peek() is not None:
        raise InvError(f"trailing tokens {parser.toks[parser.pos:]!r} in {text!r}")
    return out


def parse_set_template(text: str, placeholder: str = "x"):
    parser = _TemplateParser(_tokenize(text), placeholder)
    out = parser.set_or_scalar()
    if parser.peek() is not None:
        raise InvError(f"trailing tokens {parser.toks[parser.pos:]!r} in {text!r}")
    return out


# ---------------------------------------------------------------------------
# Field protocols and the invariant object
# ---------------------------------------------------------------------------


@dataclass
class FieldProtocol:
    kind: str  # frozen | monotone | increasing | guarded | lock | plain
    guard: Optional[Callable[[Binding], T.Formula]] = None
    from_null: bool = False


@dataclass
class EdgeSpec:
    form: str  # strip-below | below | const-empty
    data_sel: str = "key"


class NodeInvariant:
    def __init__(self):
        self.spec = "set"
        self.flow_kind = "keyset"
        self.edges: dict[str, EdgeSpec] = {}
        self.root: Optional[str] = None
        self.root_inflow: Optional[tuple] = None  # (lo,hi,lo_strict,hi_strict) as terms
        self.contents_t = None
        self.keyset_t = None
        self.phis: list[tuple[str, Callable[[Binding], T.Formula]]] = []
        self.unique_inflow = False
        self.pinned: dict[str, list] = {}
        self.protocols: dict[str, FieldProtocol] = {}
        self.slots: list[str] = []

    # ---- instantiation -----------------------------------------------------

    def contents(self, atom: NodeAtom) -> tuple[T.Formula, T.Term, T.Term]:
        """(membership condition for own key, key term, empty-cond) via _KsIte."""
        raise NotImplementedError

    def contents_formula(self, atom: NodeAtom, k: T.Term) -> T.Formula:
        """Formula: k is in the node's contents."""
        val = self.contents_t(Binding.of(atom)) if self.contents_t else T.KS_EMPTY
        return _member(val, k)

    def keyset_formula(self, atom: NodeAtom, k: T.Term) -> T.Formula:
        val = self.keyset_t(Binding.of(atom)) if self.keyset_t else T.KS_EMPTY
        return _member(val, k)

    def node_facts(self, atom: NodeAtom) -> list[T.Formula]:
        """Invariant facts for one boxed atom (phis, pinned, inflow shape)."""
        out: list[T.Formula] = []
        b = Binding.of(atom)
        if atom.flow is not None:
            for name, phi in self.phis:
                out.append(phi(b))
            # known inflow entries: value feeds the flow; a non-empty entry is
            # the only one when inflows are declared unique
            for src, val in atom.inflow:
                out.append(T.SubKs(val, atom.flow))
                if self.unique_inflow:
                    out.append(
                        T.Implies(T.Not(T.EqKs(val, T.KS_EMPTY)), T.EqKs(atom.flow, val))
                    )
        for gname, facts in self.pinned.items():
            if isinstance(atom.addr, T.Var) and atom.addr.name == gname:
                for tpl in facts:
                    out.append(tpl(b))
        return out

    def edge_out(self, atom: NodeAtom, sel: str) -> Optional[T.Term]:
        """Symbolic outflow along `sel` as a key-set term; None when no edge."""
        spec = self.edges.get(sel)
        if spec is None or atom.flow is None:
            return None
        data = atom.fields.get(spec.data_sel)
        if data is None:
            return None
        if spec.form == "strip-below":
            return T.ks_inter(atom.flow, T.KsInterval(data, T.INF, True, False))
        if spec.form == "below":
            return T.ks_inter(atom.flow, T.KsInterval(T.NEG_INF, data, False, True))
        return T.KS_EMPTY

    def pointer_selectors(self) -> list[str]:
        return list(self.edges)


def _member(val, k: T.Term) -> T.Formula:
    if isinstance(val, _KsIte):
        return T.Or((
            T.And((val.cond, _member(val.then, k))),
            T.And((T.Not(val.cond), _member(val.els, k))),
        ))
    return T.InKs(k, val)


def set_term_or_cases(val) -> tuple:
    """Flatten a possibly-ite set template value into (cond, term) cases."""
    if isinstance(val, _KsIte):
        out = []
        for c, t in set_term_or_cases(val.then):
            out.append((T.conj([val.cond, c]), t))
        for c, t in set_term_or_cases(val.els):
            out.append((T.conj([T.Not(val.cond), c]), t))
        return tuple(out)
    return ((T.F_TRUE, val),)


# ---------------------------------------------------------------------------
# File parsing
# ---------------------------------------------------------------------------


def parse_inv(text: str, file: str = "<inv>") -> NodeInvariant:
    inv = NodeInvariant()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            _parse_line(inv, line)
        except InvError as exc:
            raise InvError(f"{file}:{lineno}: {exc}") from exc
    if inv.spec == "set" and inv.flow_kind == "keyset":
        if inv.contents_t is None or inv.keyset_t is None:
            raise InvError(f"{file}: set invariants need contents(x) and keyset(x)")
    return inv


def _parse_line(inv: NodeInvariant, line: str) -> None:
    head, _, rest = line.partition(" ")
    rest = rest.strip()
    if head == "spec":
        if rest not in ("set", "counter-array"):
            raise InvError(f"unknown spec {rest!r}")
        inv.spec = rest
    elif head == "flow":
        if rest not in ("keyset", "none"):
            raise InvError(f"unknown flow kind {rest!r}")
        inv.flow_kind = rest
    elif head == "edge":
        sel, _, form = rest.partition(" ")
        form = form.strip()
        if form.startswith("strip-below"):
            data = form[form.index("(") + 1 : form.index(")")].strip()
            inv.edges[sel] = EdgeSpec("strip-below", data)
        elif form.startswith("below"):
            data = form[form.index("(") + 1 : form.index(")")].strip()
            inv.edges[sel] = EdgeSpec("below", data)
        else:
            raise InvError(f"unknown edge form {form!r}")
    elif head == "root":
        name, _, window = rest.partition(" ")
        inv.root = name
        window = window.strip()
        if window:
            tpl = parse_set_template(window)
            inv.root_inflow = tpl(Binding(T.NULL, {}, None))
    elif head.startswith("contents("):
        raise InvError("write: contents(x) <set expression>")
    elif head == "contents(x)":
        inv.contents_t = parse_set_template(rest)
    elif head == "keyset(x)":
        inv.keyset_t = parse_set_template(rest)
    elif head == "invariant":
        name, _, body = rest.partition(" ")
        name = name.rstrip("(x):")
        body = body.strip()
        if body == "unique-inflow(x)":
            inv.unique_inflow = True
        else:
            inv.phis.append((name, parse_template(body)))
    elif head == "pinned":
        gname, _, body = rest.partition(" ")
        inv.pinned.setdefault(gname, []).append(parse_template(body.strip()))
    elif head == "field":
        sel, _, proto = rest.partition(" ")
        proto = proto.strip()
        if proto == "frozen":
            inv.protocols[sel] = FieldProtocol("frozen")
        elif proto == "monotone":
            inv.protocols[sel] = FieldProtocol("monotone")
        elif proto == "increasing":
            inv.protocols[sel] = FieldProtocol("increasing")
        elif proto == "lock":
            inv.protocols[sel] = FieldProtocol("lock")
        elif proto == "plain":
            inv.protocols[sel] = FieldProtocol("plain")
        elif proto.startswith("guarded"):
            body = proto[len("guarded") :].strip()
            from_null = False
            if body.endswith("from-null"):
                from_null = True
                body = body[: -len("from-null")].strip()
            inv.protocols[sel] = FieldProtocol("guarded", parse_template(body), from_null)
        else:
            raise InvError(f"unknown protocol {proto!r}")
    elif head == "slots":
        inv.slots = rest.split()
    else:
        raise InvError(f"unknown directive {head!r}")
