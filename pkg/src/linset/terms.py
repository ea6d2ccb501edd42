"""Sorted first-order terms and quantifier-free formulas.

Terms are immutable and hash-consed by dataclass equality. Sorts:

  KEY    -- integers extended with -oo/+oo sentinels (also used for counters)
  ADDR   -- heap addresses (null is a distinguished constant)
  BOOL   -- truth values
  OWNER  -- lock owners: `nobody`, the proving thread `me`, opaque others
  KSET   -- sets of keys (interval-union expressions or variables)
  NSET   -- sets of node addresses

Everything downstream (assertions, flow constraints, SMT encoding) is built
from these.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator

KEY = "Key"
ADDR = "Addr"
BOOL = "Bool"
OWNER = "Owner"
KSET = "KeySet"
NSET = "NodeSet"


class Term:
    """Base class for all terms."""

    sort: str

    def free_vars(self) -> frozenset["Var"]:
        return frozenset()

    def subst(self, mapping: dict["Var", "Term"]) -> "Term":
        return self


@dataclass(frozen=True)
class Var(Term):
    name: str
    sort: str = ADDR

    def free_vars(self) -> frozenset["Var"]:
        return frozenset([self])

    def subst(self, mapping):
        return mapping.get(self, self)

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class KeyLit(Term):
    """A concrete key: an integer or one of the infinities."""

    value: int
    infinite: int = 0  # -1 for -oo, +1 for +oo, 0 for finite
    sort: str = field(default=KEY, init=False)

    def __repr__(self):
        if self.infinite > 0:
            return "inf"
        if self.infinite < 0:
            return "-inf"
        return str(self.value)


INF = KeyLit(0, +1)
NEG_INF = KeyLit(0, -1)


def key(value: int) -> KeyLit:
    return KeyLit(value)


@dataclass(frozen=True)
class KeyPlus(Term):
    """t + delta over finite keys; used for counter increments."""

    base: Term
    delta: int
    sort: str = field(default=KEY, init=False)

    def free_vars(self):
        return self.base.free_vars()

    def subst(self, mapping):
        return KeyPlus(self.base.subst(mapping), self.delta)

    def __repr__(self):
        return f"({self.base} + {self.delta})"


@dataclass(frozen=True)
class BoolLit(Term):
    value: bool
    sort: str = field(default=BOOL, init=False)

    def __repr__(self):
        return "true" if self.value else "false"


TRUE = BoolLit(True)
FALSE = BoolLit(False)


@dataclass(frozen=True)
class AddrLit(Term):
    name: str
    sort: str = field(default=ADDR, init=False)

    def __repr__(self):
        return self.name


NULL = AddrLit("null")


@dataclass(frozen=True)
class OwnerLit(Term):
    name: str
    sort: str = field(default=OWNER, init=False)

    def __repr__(self):
        return self.name


NOBODY = OwnerLit("nobody")
ME = OwnerLit("me")
# Placeholder for "some environment thread" used when recording interference.
OTHER = OwnerLit("other")


# ---------------------------------------------------------------------------
# Key-set terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KsEmpty(Term):
    sort: str = field(default=KSET, init=False)

    def __repr__(self):
        return "{}"


@dataclass(frozen=True)
class KsFull(Term):
    """All keys including both infinities."""

    sort: str = field(default=KSET, init=False)

    def __repr__(self):
        return "[-inf,inf]"


KS_EMPTY = KsEmpty()
KS_FULL = KsFull()


@dataclass(frozen=True)
class KsInterval(Term):
    """Interval with term-valued endpoints; `lo_strict`/`hi_strict` give openness."""

    lo: Term
    hi: Term
    lo_strict: bool = True
    hi_strict: bool = False
    sort: str = field(default=KSET, init=False)

    def free_vars(self):
        return self.lo.free_vars() | self.hi.free_vars()

    def subst(self, mapping):
        return KsInterval(
            self.lo.subst(mapping), self.hi.subst(mapping), self.lo_strict, self.hi_strict
        )

    def __repr__(self):
        lb = "(" if self.lo_strict else "["
        rb = ")" if self.hi_strict else "]"
        return f"{lb}{self.lo},{self.hi}{rb}"


@dataclass(frozen=True)
class KsSingleton(Term):
    elem: Term
    sort: str = field(default=KSET, init=False)

    def free_vars(self):
        return self.elem.free_vars()

    def subst(self, mapping):
        return KsSingleton(self.elem.subst(mapping))

    def __repr__(self):
        return f"{{{self.elem}}}"


@dataclass(frozen=True)
class KsUnion(Term):
    parts: tuple[Term, ...]
    sort: str = field(default=KSET, init=False)

    def free_vars(self):
        out: frozenset[Var] = frozenset()
        for p in self.parts:
            out |= p.free_vars()
        return out

    def subst(self, mapping):
        return KsUnion(tuple(p.subst(mapping) for p in self.parts))

    def __repr__(self):
        return "(" + " u ".join(map(repr, self.parts)) + ")"


@dataclass(frozen=True)
class KsInter(Term):
    parts: tuple[Term, ...]
    sort: str = field(default=KSET, init=False)

    def free_vars(self):
        out: frozenset[Var] = frozenset()
        for p in self.parts:
            out |= p.free_vars()
        return out

    def subst(self, mapping):
        return KsInter(tuple(p.subst(mapping) for p in self.parts))

    def __repr__(self):
        return "(" + " n ".join(map(repr, self.parts)) + ")"


@dataclass(frozen=True)
class KsMinus(Term):
    left: Term
    right: Term
    sort: str = field(default=KSET, init=False)

    def free_vars(self):
        return self.left.free_vars() | self.right.free_vars()

    def subst(self, mapping):
        return KsMinus(self.left.subst(mapping), self.right.subst(mapping))

    def __repr__(self):
        return f"({self.left} \\ {self.right})"


def ks_union(*parts: Term) -> Term:
    flat = [p for p in parts if not isinstance(p, KsEmpty)]
    if not flat:
        return KS_EMPTY
    if len(flat) == 1:
        return flat[0]
    return KsUnion(tuple(flat))


def ks_inter(*parts: Term) -> Term:
    flat = [p for p in parts if not isinstance(p, KsFull)]
    if any(isinstance(p, KsEmpty) for p in flat):
        return KS_EMPTY
    if not flat:
        return KS_FULL
    if len(flat) == 1:
        return flat[0]
    return KsInter(tuple(flat))


# ---------------------------------------------------------------------------
# Node-set terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NsLit(Term):
    members: frozenset[Term]
    sort: str = field(default=NSET, init=False)

    def free_vars(self):
        out: frozenset[Var] = frozenset()
        for m in self.members:
            out |= m.free_vars()
        return out

    def subst(self, mapping):
        return NsLit(frozenset(m.subst(mapping) for m in self.members))

    def __repr__(self):
        return "{" + ",".join(sorted(map(repr, self.members))) + "}"


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------


class Formula:
    def free_vars(self) -> frozenset[Var]:
        return frozenset()

    def subst(self, mapping: dict[Var, Term]) -> "Formula":
        return self

    def atoms(self) -> Iterator["Formula"]:
        yield self


@dataclass(frozen=True)
class FTrue(Formula):
    def __repr__(self):
        return "true"


@dataclass(frozen=True)
class FFalse(Formula):
    def __repr__(self):
        return "false"


F_TRUE = FTrue()
F_FALSE = FFalse()


@dataclass(frozen=True)
class Cmp(Formula):
    """Comparison atom. op in {'<', '<=', '=', '!='}; for non-KEY sorts only = and !=."""

    op: str
    left: Term
    right: Term

    def free_vars(self):
        return self.left.free_vars() | self.right.free_vars()

    def subst(self, mapping):
        return Cmp(self.op, self.left.subst(mapping), self.right.subst(mapping))

    def __repr__(self):
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class BoolIs(Formula):
    """Assert a BOOL-sorted term (optionally negated)."""

    term: Term
    value: bool = True

    def free_vars(self):
        return self.term.free_vars()

    def subst(self, mapping):
        return BoolIs(self.term.subst(mapping), self.value)

    def __repr__(self):
        return repr(self.term) if self.value else f"!{self.term}"


@dataclass(frozen=True)
class InKs(Formula):
    elem: Term
    ks: Term

    def free_vars(self):
        return self.elem.free_vars() | self.ks.free_vars()

    def subst(self, mapping):
        return InKs(self.elem.subst(mapping), self.ks.subst(mapping))

    def __repr__(self):
        return f"{self.elem} in {self.ks}"


@dataclass(frozen=True)
class SubKs(Formula):
    left: Term
    right: Term

    def free_vars(self):
        return self.left.free_vars() | self.right.free_vars()

    def subst(self, mapping):
        return SubKs(self.left.subst(mapping), self.right.subst(mapping))

    def __repr__(self):
        return f"{self.left} sub {self.right}"


@dataclass(frozen=True)
class EqKs(Formula):
    left: Term
    right: Term

    def free_vars(self):
        return self.left.free_vars() | self.right.free_vars()

    def subst(self, mapping):
        return EqKs(self.left.subst(mapping), self.right.subst(mapping))

    def __repr__(self):
        return f"{self.left} == {self.right}"


@dataclass(frozen=True)
class InNs(Formula):
    elem: Term
    ns: Term

    def free_vars(self):
        return self.elem.free_vars() | self.ns.free_vars()

    def subst(self, mapping):
        return InNs(self.elem.subst(mapping), self.ns.subst(mapping))

    def __repr__(self):
        return f"{self.elem} in {self.ns}"


@dataclass(frozen=True)
class SubNs(Formula):
    left: Term
    right: Term

    def free_vars(self):
        return self.left.free_vars() | self.right.free_vars()

    def subst(self, mapping):
        return SubNs(self.left.subst(mapping), self.right.subst(mapping))

    def __repr__(self):
        return f"{self.left} sub {self.right}"


@dataclass(frozen=True)
class Not(Formula):
    body: Formula

    def free_vars(self):
        return self.body.free_vars()

    def subst(self, mapping):
        return Not(self.body.subst(mapping))

    def atoms(self):
        yield from self.body.atoms()

    def __repr__(self):
        return f"!({self.body})"


@dataclass(frozen=True)
class And(Formula):
    parts: tuple[Formula, ...]

    def free_vars(self):
        out: frozenset[Var] = frozenset()
        for p in self.parts:
            out |= p.free_vars()
        return out

    def subst(self, mapping):
        return And(tuple(p.subst(mapping) for p in self.parts))

    def atoms(self):
        for p in self.parts:
            yield from p.atoms()

    def __repr__(self):
        return "(" + " & ".join(map(repr, self.parts)) + ")"


@dataclass(frozen=True)
class Or(Formula):
    parts: tuple[Formula, ...]

    def free_vars(self):
        out: frozenset[Var] = frozenset()
        for p in self.parts:
            out |= p.free_vars()
        return out

    def subst(self, mapping):
        return Or(tuple(p.subst(mapping) for p in self.parts))

    def atoms(self):
        for p in self.parts:
            yield from p.atoms()

    def __repr__(self):
        return "(" + " | ".join(map(repr, self.parts)) + ")"


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula

    def free_vars(self):
        return self.left.free_vars() | self.right.free_vars()

    def subst(self, mapping):
        return Implies(self.left.subst(mapping), self.right.subst(mapping))

    def atoms(self):
        yield from self.left.atoms()
        yield from self.right.atoms()

    def __repr__(self):
        return f"({self.left} => {self.right})"


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula

    def free_vars(self):
        return self.left.free_vars() | self.right.free_vars()

    def subst(self, mapping):
        return Iff(self.left.subst(mapping), self.right.subst(mapping))

    def atoms(self):
        yield from self.left.atoms()
        yield from self.right.atoms()

    def __repr__(self):
        return f"({self.left} <=> {self.right})"


def conj(parts: Iterable[Formula]) -> Formula:
    flat: list[Formula] = []
    for p in parts:
        if isinstance(p, FTrue):
            continue
        if isinstance(p, FFalse):
            return F_FALSE
        if isinstance(p, And):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if not flat:
        return F_TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(parts: Iterable[Formula]) -> Formula:
    flat: list[Formula] = []
    for p in parts:
        if isinstance(p, FFalse):
            continue
        if isinstance(p, FTrue):
            return F_TRUE
        if isinstance(p, Or):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if not flat:
        return F_FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def eq(a: Term, b: Term) -> Formula:
    if a == b:
        return F_TRUE
    return Cmp("=", a, b)


def ne(a: Term, b: Term) -> Formula:
    return Cmp("!=", a, b)


def lt(a: Term, b: Term) -> Formula:
    return Cmp("<", a, b)


def le(a: Term, b: Term) -> Formula:
    return Cmp("<=", a, b)


class FreshNames:
    """Deterministic fresh-variable supply."""

    def __init__(self, prefix: str = "v"):
        self._counter = itertools.count()
        self._prefix = prefix

    def fresh(self, hint: str, sort: str) -> Var:
        return Var(f"{hint}${next(self._counter)}", sort)


def rigid_term(t: Term) -> bool:
    """True when t contains no variables (literals only)."""
    return not t.free_vars()
