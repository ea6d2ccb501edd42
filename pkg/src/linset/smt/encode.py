"""Encode pure formulas into SMT-LIB 2 scripts.

Key sets become characteristic predicates over Int.  Set-level atoms
(inclusion, equality, emptiness) are eliminated by polarity: universal
occurrences are ground-instantiated over the query's key vocabulary plus all
skolem witnesses, existential occurrences produce fresh witnesses.  The
result is quantifier-free, which keeps the query decidable and portable;
missing instances can only make the check answer `no`/`unknown`, never a
wrong `yes`.

Two modes: `uflia` declares one uninterpreted Int->Bool function per set
variable; `all` Ackermannizes set memberships into propositional constants
with explicit ground congruence axioms (no uninterpreted functions at all).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import terms as T


class EncodeError(Exception):
    """An assertion uses a construct the encoding cannot express."""


@dataclass
class Script:
    text: str
    mode: str
    names: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# NNF with positive/negative set-atom separation
# ---------------------------------------------------------------------------


def _nnf(f: T.Formula, neg: bool) -> T.Formula:
    if isinstance(f, T.Not):
        return _nnf(f.body, not neg)
    if isinstance(f, T.And):
        parts = tuple(_nnf(p, neg) for p in f.parts)
        return T.Or(parts) if neg else T.And(parts)
    if isinstance(f, T.Or):
        parts = tuple(_nnf(p, neg) for p in f.parts)
        return T.And(parts) if neg else T.Or(parts)
    if isinstance(f, T.Implies):
        if neg:
            return T.And((_nnf(f.left, False), _nnf(f.right, True)))
        return T.Or((_nnf(f.left, True), _nnf(f.right, False)))
    if isinstance(f, T.Iff):
        a, b = f.left, f.right
        expanded = T.Or((T.And((a, b)), T.And((T.Not(a), T.Not(b)))))
        return _nnf(expanded, neg)
    if isinstance(f, (T.FTrue, T.FFalse)):
        if neg:
            return T.F_FALSE if isinstance(f, T.FTrue) else T.F_TRUE
        return f
    # atoms
    return T.Not(f) if neg else f


class Encoder:
    def __init__(self, mode: str = "uflia"):
        if mode not in ("uflia", "all"):
            raise EncodeError(f"unknown encoding mode {mode!r}")
        self.mode = mode
        self.decls: dict[str, str] = {}
        self.lines: list[str] = []
        self.key_vocab: list[str] = []
        self._key_vocab_seen: set[str] = set()
        self.addr_vocab: list[str] = []
        self._addr_vocab_seen: set[str] = set()
        self.set_funs: dict[str, str] = {}
        self.ns_funs: dict[str, str] = {}
        self.membership_consts: dict[tuple[str, str], str] = {}
        self._witness_count = 0
        self.axioms: list[str] = []
        self.key_lits: set[int] = set()
        self.used_inf = False

    # ---- naming ----------------------------------------------------------

    def term(self, t: T.Term) -> str:
        if isinstance(t, T.Var):
            name = _mangle(t.name, t.sort)
            sort = "Bool" if t.sort == T.BOOL else "Int"
            if t.sort in (T.KSET, T.NSET):
                raise EncodeError(f"set variable {t} in scalar position")
            self.decls.setdefault(name, sort)
            if t.sort == T.KEY:
                self._note_key(name)
            if t.sort == T.ADDR:
                self._note_addr(name)
            return name
        if isinstance(t, T.KeyLit):
            if t.infinite > 0:
                self.used_inf = True
                self.decls.setdefault("k.inf", "Int")
                self._note_key("k.inf")
                return "k.inf"
            if t.infinite < 0:
                self.used_inf = True
                self.decls.setdefault("k.neginf", "Int")
                self._note_key("k.neginf")
                return "k.neginf"
            self.key_lits.add(t.value)
            name = str(t.value) if t.value >= 0 else f"(- {-t.value})"
            self._note_key(name)
            return name
        if isinstance(t, T.KeyPlus):
            base = self.term(t.base)
            name = f"(+ {base} {t.delta})" if t.delta >= 0 else f"(- {base} {-t.delta})"
            self._note_key(name)
            return name
        if isinstance(t, T.BoolLit):
            return "true" if t.value else "false"
        if isinstance(t, T.AddrLit):
            name = f"a.{t.name}"
            self.decls.setdefault(name, "Int")
            self._note_addr(name)
            return name
        if isinstance(t, T.OwnerLit):
            name = f"o.{t.name}"
            self.decls.setdefault(name, "Int")
            return name
        raise EncodeError(f"term {t!r} has no scalar encoding")

    def _note_key(self, name: str):
        if name not in self._key_vocab_seen:
            self._key_vocab_seen.add(name)
            self.key_vocab.append(name)

    def _note_addr(self, name: str):
        if name not in self._addr_vocab_seen:
            self._addr_vocab_seen.add(name)
            self.addr_vocab.append(name)

    def witness(self, sort: str) -> str:
        self._witness_count += 1
        name = f"w.{self._witness_count}"
        self.decls[name] = "Int"
        if sort == T.KEY:
            self._note_key(name)
        else:
            self._note_addr(name)
        return name

    # ---- key-set membership ------------------------------------------------

    def member(self, elem: str, ks: T.Term) -> str:
        """SMT formula for `elem in ks` with elem already encoded."""
        if isinstance(ks, T.KsEmpty):
            return "false"
        if isinstance(ks, T.KsFull):
            return "true"
        if isinstance(ks, T.KsSingleton):
            return f"(= {elem} {self.term(ks.elem)})"
        if isinstance(ks, T.KsInterval):
            lo, hi = self.term(ks.lo), self.term(ks.hi)
            lo_cmp = f"({'<' if ks.lo_strict else '<='} {lo} {elem})"
            hi_cmp = f"({'<' if ks.hi_strict else '<='} {elem} {hi})"
            return f"(and {lo_cmp} {hi_cmp})"
        if isinstance(ks, T.KsUnion):
            return "(or " + " ".join(self.member(elem, p) for p in ks.parts) + ")"
        if isinstance(ks, T.KsInter):
            return "(and " + " ".join(self.member(elem, p) for p in ks.parts) + ")"
        if isinstance(ks, T.KsMinus):
            return f"(and {self.member(elem, ks.left)} (not {self.member(elem, ks.right)}))"
        if isinstance(ks, T.Var) and ks.sort == T.KSET:
            return self._apply_set(_mangle(ks.name, T.KSET), elem, self.set_funs)
        raise EncodeError(f"key-set term {ks!r}")

    def ns_member(self, elem: str, ns: T.Term) -> str:
        if isinstance(ns, T.NsLit):
            if not ns.members:
                return "false"
            eqs = " ".join(f"(= {elem} {self.term(m)})" for m in sorted(ns.members, key=repr))
            return f"(or {eqs})" if len(ns.members) > 1 else eqs
        if isinstance(ns, T.Var) and ns.sort == T.NSET:
            return self._apply_set(_mangle(ns.name, T.NSET), elem, self.ns_funs)
        raise EncodeError(f"node-set term {ns!r}")

    def _apply_set(self, fun: str, elem: str, table: dict) -> str:
        table.setdefault(fun, fun)
        if self.mode == "uflia":
            return f"({fun} {elem})"
        key = (fun, elem)
        if key not in self.membership_consts:
            cname = f"m.{fun}.{len(self.membership_consts)}"
            self.membership_consts[key] = cname
            self.decls[cname] = "Bool"
        return self.membership_consts[key]

    # ---- formulas ----------------------------------------------------------

    def formula(self, f: T.Formula) -> str:
        """f must already be in NNF (negations only on atoms)."""
        if isinstance(f, T.FTrue):
            return "true"
        if isinstance(f, T.FFalse):
            return "false"
        if isinstance(f, T.And):
            return "(and " + " ".join(self.formula(p) for p in f.parts) + ")"
        if isinstance(f, T.Or):
            return "(or " + " ".join(self.formula(p) for p in f.parts) + ")"
        if isinstance(f, T.Not):
            return self.atom(f.body, negated=True)
        return self.atom(f, negated=False)

    def atom(self, f: T.Formula, negated: bool) -> str:
        if isinstance(f, T.Cmp):
            enc = self._cmp(f)
            return f"(not {enc})" if negated else enc
        if isinstance(f, T.BoolIs):
            enc = self.term(f.term)
            want = f.value != negated
            return enc if want else f"(not {enc})"
        if isinstance(f, T.InKs):
            enc = self.member(self.term(f.elem), f.ks)
            return f"(not {enc})" if negated else enc
        if isinstance(f, T.InNs):
            enc = self.ns_member(self.term(f.elem), f.ns)
            return f"(not {enc})" if negated else enc
        if isinstance(f, T.SubKs):
            if negated:
                w = self.witness(T.KEY)
                return f"(and {self.member(w, f.left)} (not {self.member(w, f.right)}))"
            return ("__SUBKS__", f)  # handled by caller via deferral
        if isinstance(f, T.SubNs):
            if negated:
                w = self.witness(T.ADDR)
                return f"(and {self.ns_member(w, f.left)} (not {self.ns_member(w, f.right)}))"
            return ("__SUBNS__", f)
        if isinstance(f, T.EqKs):
            if negated:
                w = self.witness(T.KEY)
                a, b = self.member(w, f.left), self.member(w, f.right)
                return f"(or (and {a} (not {b})) (and {b} (not {a})))"
            return ("__EQKS__", f)
        raise EncodeError(f"atom {f!r}")

    def _cmp(self, f: T.Cmp) -> str:
        a, b = self.term(f.left), self.term(f.right)
        if f.op == "=":
            return f"(= {a} {b})"
        if f.op == "!=":
            return f"(not (= {a} {b}))"
        if f.op == "<":
            return f"(< {a} {b})"
        if f.op == "<=":
            return f"(<= {a} {b})"
        raise EncodeError(f"comparison {f.op}")


def _mangle(name: str, sort: str) -> str:
    clean = name.replace("$", ".")
    prefix = {T.KEY: "k", T.ADDR: "a", T.BOOL: "b", T.OWNER: "o", T.KSET: "S", T.NSET: "N"}[sort]
    return f"{prefix}.{clean}"


class _Deferred:
    """Positive universal set atom whose instantiation waits for the full vocabulary."""

    def __init__(self, atom: T.Formula):
        self.atom = atom


def _phase1(enc: Encoder, f: T.Formula):
    """NNF tree -> tree of strings / _Deferred under 'and'/'or' tuples.

    Negative set atoms are eliminated here (creating their witnesses), so the
    later instantiation pass sees a complete key/address vocabulary.
    """
    if isinstance(f, T.And):
        return ("and", [_phase1(enc, p) for p in f.parts])
    if isinstance(f, T.Or):
        return ("or", [_phase1(enc, p) for p in f.parts])
    if isinstance(f, T.Not):
        return enc.atom(f.body, negated=True)
    if isinstance(f, (T.FTrue, T.FFalse)):
        return enc.formula(f)
    if isinstance(f, (T.SubKs, T.EqKs)):
        for side in (f.left, f.right):
            _touch_ks(enc, side)
        return _Deferred(f)
    if isinstance(f, T.SubNs):
        for side in (f.left, f.right):
            _touch_ns(enc, side)
        return _Deferred(f)
    return enc.atom(f, negated=False)


def _phase2(enc: Encoder, tree) -> str:
    if isinstance(tree, str):
        return tree
    if isinstance(tree, _Deferred):
        f = tree.atom
        insts = []
        if isinstance(f, (T.SubKs, T.EqKs)):
            for name in enc.key_vocab:
                a = enc.member(name, f.left)
                b = enc.member(name, f.right)
                if isinstance(f, T.SubKs):
                    insts.append(f"(=> {a} {b})")
                else:
                    insts.append(f"(and (=> {a} {b}) (=> {b} {a}))")
        else:
            for name in enc.addr_vocab:
                a = enc.ns_member(name, f.left)
                b = enc.ns_member(name, f.right)
                insts.append(f"(=> {a} {b})")
        if not insts:
            return "true"
        if len(insts) == 1:
            return insts[0]
        return "(and " + " ".join(insts) + ")"
    op, parts = tree
    return f"({op} " + " ".join(_phase2(enc, p) for p in parts) + ")"


def _touch_ks(enc: Encoder, ks: T.Term) -> None:
    if isinstance(ks, T.KsInterval):
        enc.term(ks.lo)
        enc.term(ks.hi)
    elif isinstance(ks, T.KsSingleton):
        enc.term(ks.elem)
    elif isinstance(ks, (T.KsUnion, T.KsInter)):
        for p in ks.parts:
            _touch_ks(enc, p)
    elif isinstance(ks, T.KsMinus):
        _touch_ks(enc, ks.left)
        _touch_ks(enc, ks.right)
    elif isinstance(ks, T.Var):
        enc.set_funs.setdefault(_mangle(ks.name, T.KSET), _mangle(ks.name, T.KSET))


def _touch_ns(enc: Encoder, ns: T.Term) -> None:
    if isinstance(ns, T.NsLit):
        for m in sorted(ns.members, key=repr):
            enc.term(m)
    elif isinstance(ns, T.Var):
        enc.ns_funs.setdefault(_mangle(ns.name, T.NSET), _mangle(ns.name, T.NSET))


def _build(hyps: list[T.Formula], neg_goal: T.Formula | None, mode: str) -> Script:
    enc = Encoder(mode)
    parts = [_nnf(h, False) for h in hyps]
    if neg_goal is not None:
        parts.append(_nnf(neg_goal, True))
    trees = [_phase1(enc, p) for p in parts]
    bodies = [_phase2(enc, t) for t in trees]

    lines: list[str] = []
    lines.append(f"(set-logic {'ALL' if mode == 'all' else 'UFLIA'})")
    for name in sorted(enc.decls):
        lines.append(f"(declare-const {name} {enc.decls[name]})")
    if mode == "uflia":
        for fun in sorted(set(enc.set_funs) | set(enc.ns_funs)):
            lines.append(f"(declare-fun {fun} (Int) Bool)")
    # sentinel order axioms
    if enc.used_inf:
        lines.append("(assert (< k.neginf k.inf))")
        for lit in sorted(enc.key_lits):
            rep = str(lit) if lit >= 0 else f"(- {-lit})"
            lines.append(f"(assert (< k.neginf {rep}))")
            lines.append(f"(assert (< {rep} k.inf))")
        # every key-sorted symbol lies between the sentinels (inclusive)
        for name in enc.key_vocab:
            if name in ("k.inf", "k.neginf") or name.startswith("(") or name.lstrip("(- ").rstrip(")").isdigit():
                continue
            lines.append(f"(assert (<= k.neginf {name}))")
            lines.append(f"(assert (<= {name} k.inf))")
    owner_lits = sorted(n for n in enc.decls if n.startswith("o.") and n.count(".") == 1)
    if len(owner_lits) > 1:
        lines.append("(assert (distinct " + " ".join(owner_lits) + "))")
    # membership congruence in `all` mode (no uninterpreted functions emitted)
    if mode == "all":
        by_fun: dict[str, list[tuple[str, str]]] = {}
        for (fun, elem), cname in enc.membership_consts.items():
            by_fun.setdefault(fun, []).append((elem, cname))
        for fun, apps in sorted(by_fun.items()):
            for i in range(len(apps)):
                for j in range(i + 1, len(apps)):
                    (e1, c1), (e2, c2) = apps[i], apps[j]
                    lines.append(f"(assert (=> (= {e1} {e2}) (= {c1} {c2})))")
    for body in bodies:
        lines.append(f"(assert {body})")
    lines.append("(check-sat)")
    return Script("\n".join(lines) + "\n", mode)


def encode_entailment(hyps: list[T.Formula], goal: T.Formula, mode: str = "uflia") -> Script:
    """Script asserting hyps and the negated goal; unsat means the entailment holds."""
    return _build(list(hyps), goal, mode)


def encode_sat(hyps: list[T.Formula], mode: str = "uflia") -> Script:
    """Script asserting hyps only; sat means the conjunction is satisfiable."""
    return _build(list(hyps), None, mode)
