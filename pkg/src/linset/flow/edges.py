"""Closed symbolic forms for edge functions.

Every edge function is monotone w.r.t. the monoid order.  The forms stay
closed under pointwise sum, which is all the generator machinery produces:

  EIdentity        -- path counting
  EConst(v)        -- constant monoid value (v may be a term for symbolic use)
  EStripBelow(k)   -- key sets: lambda m. m \\ [-inf, k]
  ERestrict(I)     -- key sets: lambda m. m `inter` I (trees need both cuts)
  ESum(fs)         -- pointwise sum of forms (multi-selector edges)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .. import terms as T
from ..intervals import IntervalUnion, PLUS_INF
from .monoid import FlowMonoid, KeySet


class EdgeFunction:
    def apply(self, m: FlowMonoid, v):
        raise NotImplementedError

    def symbolic(self, flow_term: T.Term) -> T.Term:
        """The image of `flow_term` as a key-set term."""
        raise NotImplementedError

    def is_zero(self) -> bool:
        return False


@dataclass(frozen=True)
class EIdentity(EdgeFunction):
    def apply(self, m, v):
        return v

    def symbolic(self, flow_term):
        return flow_term

    def __repr__(self):
        return "id"


IDENTITY = EIdentity()


@dataclass(frozen=True)
class EConst(EdgeFunction):
    value: Any

    def apply(self, m, v):
        return self.value

    def symbolic(self, flow_term):
        if isinstance(self.value, T.Term):
            return self.value
        if isinstance(self.value, IntervalUnion):
            return _union_to_term(self.value)
        raise TypeError(f"constant edge {self.value!r} has no symbolic form")

    def is_zero(self):
        if isinstance(self.value, IntervalUnion):
            return self.value.is_empty()
        return self.value == 0

    def __repr__(self):
        return f"const({self.value})"


@dataclass(frozen=True)
class EStripBelow(EdgeFunction):
    """lambda m. m \\ [-inf, k]; k is a concrete key or a key term."""

    k: Any

    def apply(self, m, v):
        return v.strip_below(_concrete_key(self.k))

    def symbolic(self, flow_term):
        kt = self.k if isinstance(self.k, T.Term) else _key_term(self.k)
        return T.ks_inter(flow_term, T.KsInterval(kt, T.INF, True, False))

    def __repr__(self):
        return f"strip({self.k})"


@dataclass(frozen=True)
class ERestrict(EdgeFunction):
    """lambda m. m `inter` I with interval bounds lo/hi (concrete or terms)."""

    lo: Any
    hi: Any
    lo_strict: bool = True
    hi_strict: bool = False

    def apply(self, m, v):
        win = IntervalUnion.interval(
            _concrete_key(self.lo), _concrete_key(self.hi), self.lo_strict, self.hi_strict
        )
        return v.inter(win)

    def symbolic(self, flow_term):
        lo = self.lo if isinstance(self.lo, T.Term) else _key_term(self.lo)
        hi = self.hi if isinstance(self.hi, T.Term) else _key_term(self.hi)
        return T.ks_inter(flow_term, T.KsInterval(lo, hi, self.lo_strict, self.hi_strict))

    def __repr__(self):
        lb = "(" if self.lo_strict else "["
        rb = ")" if self.hi_strict else "]"
        return f"restrict{lb}{self.lo},{self.hi}{rb}"


@dataclass(frozen=True)
class ESum(EdgeFunction):
    parts: tuple[EdgeFunction, ...]

    def apply(self, m, v):
        return m.sum(p.apply(m, v) for p in self.parts)

    def symbolic(self, flow_term):
        return T.ks_union(*[p.symbolic(flow_term) for p in self.parts])

    def is_zero(self):
        return all(p.is_zero() for p in self.parts)

    def __repr__(self):
        return " + ".join(map(repr, self.parts))


def esum(parts: list[EdgeFunction]) -> EdgeFunction:
    parts = [p for p in parts if not p.is_zero()]
    if not parts:
        return EConst(0)
    if len(parts) == 1:
        return parts[0]
    return ESum(tuple(parts))


def zero_edge(m: FlowMonoid) -> EdgeFunction:
    return EConst(m.zero())


def _concrete_key(k):
    if isinstance(k, T.KeyLit):
        if k.infinite > 0:
            return PLUS_INF
        if k.infinite < 0:
            from ..intervals import MINUS_INF

            return MINUS_INF
        return k.value
    if isinstance(k, T.Term):
        raise TypeError(f"symbolic key {k!r} in concrete evaluation")
    return k


def _key_term(k) -> T.Term:
    from ..intervals import _Inf

    if isinstance(k, _Inf):
        return T.INF if k.sign > 0 else T.NEG_INF
    return T.KeyLit(k)


def _union_to_term(u: IntervalUnion) -> T.Term:
    parts = []
    for s in u.spans:
        parts.append(T.KsInterval(_key_term(s.lo), _key_term(s.hi), s.lo_open, s.hi_open))
    return T.ks_union(*parts)
