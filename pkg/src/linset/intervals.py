"""Canonical interval unions over integer keys extended with -oo/+oo.

This is the concrete value representation of the key-set flow monoid.
The normal form keeps intervals sorted, disjoint and maximal, with finite
bounds always closed (integer adjacency is merged away); open bounds can
only occur at the infinities, which have no neighbouring key.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterable


@functools.total_ordering
class _Inf:
    def __init__(self, sign: int, symbol: str):
        self.sign = sign
        self.symbol = symbol

    def __lt__(self, other):
        if isinstance(other, _Inf):
            return self.sign < other.sign
        return self.sign < 0

    def __eq__(self, other):
        return isinstance(other, _Inf) and other.sign == self.sign

    def __hash__(self):
        return hash(("inf", self.sign))

    def __repr__(self):
        return self.symbol


MINUS_INF = _Inf(-1, "-inf")
PLUS_INF = _Inf(+1, "inf")

Ext = object  # int | _Inf


def _is_finite(v) -> bool:
    return isinstance(v, int)


def _lt(a, b) -> bool:
    if isinstance(a, _Inf) or isinstance(b, _Inf):
        sa = a.sign if isinstance(a, _Inf) else 0
        sb = b.sign if isinstance(b, _Inf) else 0
        if sa != sb:
            return sa < sb
        if sa == 0:
            return a < b
        return False
    return a < b


def _le(a, b) -> bool:
    return a == b or _lt(a, b)


@dataclass(frozen=True)
class Span:
    """One canonical interval. Open bounds only at the infinities."""

    lo: object
    hi: object
    lo_open: bool = False
    hi_open: bool = False

    def __post_init__(self):
        if self.lo_open:
            assert isinstance(self.lo, _Inf)
        if self.hi_open:
            assert isinstance(self.hi, _Inf)

    def __repr__(self):
        lb = "(" if self.lo_open else "["
        rb = ")" if self.hi_open else "]"
        return f"{lb}{self.lo},{self.hi}{rb}"

    def contains(self, v) -> bool:
        if self.lo_open:
            if not _lt(self.lo, v):
                return False
        elif not _le(self.lo, v):
            return False
        if self.hi_open:
            if not _lt(v, self.hi):
                return False
        elif not _le(v, self.hi):
            return False
        return True


def _mk_span(lo, lo_open, hi, hi_open) -> Span | None:
    """Canonicalize one raw interval; None when empty."""
    if lo_open and _is_finite(lo):
        lo, lo_open = lo + 1, False
    if hi_open and _is_finite(hi):
        hi, hi_open = hi - 1, False
    if _lt(hi, lo):
        return None
    if lo == hi and (lo_open or hi_open):
        return None
    return Span(lo, hi, lo_open, hi_open)


def _touches(a: Span, b: Span) -> bool:
    """Do a and b overlap or sit next to each other (a.lo <= b.lo)?"""
    if _lt(b.lo, a.hi) or (b.lo == a.hi and not (a.hi_open and b.lo_open)):
        return True
    if _is_finite(a.hi) and _is_finite(b.lo) and b.lo == a.hi + 1:
        return True
    return False


@dataclass(frozen=True)
class IntervalUnion:
    spans: tuple[Span, ...] = ()

    @staticmethod
    def empty() -> "IntervalUnion":
        return IntervalUnion(())

    @staticmethod
    def full() -> "IntervalUnion":
        return IntervalUnion((Span(MINUS_INF, PLUS_INF),))

    @staticmethod
    def interval(lo, hi, lo_open=False, hi_open=False) -> "IntervalUnion":
        s = _mk_span(lo, lo_open, hi, hi_open)
        return IntervalUnion((s,) if s else ())

    @staticmethod
    def above(k, strict=True) -> "IntervalUnion":
        """(k, inf] or [k, inf]."""
        return IntervalUnion.interval(k, PLUS_INF, lo_open=strict)

    @staticmethod
    def singleton(k) -> "IntervalUnion":
        return IntervalUnion.interval(k, k)

    @staticmethod
    def of(raw: Iterable[tuple]) -> "IntervalUnion":
        out = IntervalUnion.empty()
        for lo, hi, *rest in raw:
            lo_open = rest[0] if rest else False
            hi_open = rest[1] if len(rest) > 1 else False
            out = out.union(IntervalUnion.interval(lo, hi, lo_open, hi_open))
        return out

    def is_empty(self) -> bool:
        return not self.spans

    def contains(self, v) -> bool:
        return any(s.contains(v) for s in self.spans)

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        return _normalize(list(self.spans) + list(other.spans))

    def inter(self, other: "IntervalUnion") -> "IntervalUnion":
        out: list[Span] = []
        for a in self.spans:
            for b in other.spans:
                lo, lo_open = (a.lo, a.lo_open) if _lt(b.lo, a.lo) or a.lo == b.lo else (b.lo, b.lo_open)
                if a.lo == b.lo:
                    lo_open = a.lo_open or b.lo_open
                hi, hi_open = (a.hi, a.hi_open) if _lt(a.hi, b.hi) or a.hi == b.hi else (b.hi, b.hi_open)
                if a.hi == b.hi:
                    hi_open = a.hi_open or b.hi_open
                s = _mk_span(lo, lo_open, hi, hi_open)
                if s:
                    out.append(s)
        return _normalize(out)

    def complement(self) -> "IntervalUnion":
        out = IntervalUnion.full()
        for s in self.spans:
            parts = []
            low = _mk_span(MINUS_INF, False, s.lo, not s.lo_open)
            if s.lo == MINUS_INF and not s.lo_open:
                low = None
            if low:
                parts.append(IntervalUnion((low,)))
            high = _mk_span(s.hi, not s.hi_open, PLUS_INF, False)
            if s.hi == PLUS_INF and not s.hi_open:
                high = None
            if high:
                parts.append(IntervalUnion((high,)))
            piece = IntervalUnion.empty()
            for p in parts:
                piece = piece.union(p)
            out = out.inter(piece)
        return out

    def minus(self, other: "IntervalUnion") -> "IntervalUnion":
        return self.inter(other.complement())

    def subset(self, other: "IntervalUnion") -> bool:
        return self.minus(other).is_empty()

    def strip_below(self, k) -> "IntervalUnion":
        """m \\ [-inf, k]: keep only keys strictly above k."""
        return self.inter(IntervalUnion.above(k, strict=True))

    def sample_points(self) -> list:
        """A finite witness set touching every span and every gap boundary."""
        pts = []
        for s in self.spans:
            for v in (s.lo, s.hi):
                if _is_finite(v):
                    pts.extend([v - 1, v, v + 1])
                else:
                    pts.append(v)
        return pts

    def __repr__(self):
        if not self.spans:
            return "{}"
        return " u ".join(map(repr, self.spans))


def _normalize(spans: list[Span]) -> IntervalUnion:
    spans = sorted(
        spans,
        key=lambda s: (
            (s.lo.sign if isinstance(s.lo, _Inf) else 0, s.lo if _is_finite(s.lo) else 0),
            not s.lo_open,
        ),
    )
    merged: list[Span] = []
    for s in spans:
        if merged and _touches(merged[-1], s):
            prev = merged.pop()
            if _lt(prev.hi, s.hi) or (prev.hi == s.hi and prev.hi_open and not s.hi_open):
                hi, hi_open = s.hi, s.hi_open
            else:
                hi, hi_open = prev.hi, prev.hi_open
            merged.append(Span(prev.lo, hi, prev.lo_open, hi_open))
        else:
            merged.append(s)
    return IntervalUnion(tuple(merged))
