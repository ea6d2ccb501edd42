"""Flow monoids: commutative monoids whose order `leq` is a CPO.

Two built-ins: path counting (naturals with an absorbing omega) and key sets
(interval unions with set union as addition).
"""

from __future__ import annotations

from typing import Any, Iterable

from ..intervals import IntervalUnion, MINUS_INF, PLUS_INF


class _Omega:
    def __repr__(self):
        return "w"

    def __eq__(self, other):
        return isinstance(other, _Omega)

    def __hash__(self):
        return hash("omega")


OMEGA = _Omega()


class FlowMonoid:
    """Value representation plus the operations the fixpoint engine needs."""

    name: str
    #: edge functions distribute over `plus` (singleton checks are complete)
    join_hom_edges: bool = False

    def zero(self) -> Any:
        raise NotImplementedError

    def plus(self, a, b) -> Any:
        raise NotImplementedError

    def leq(self, a, b) -> bool:
        raise NotImplementedError

    def eq(self, a, b) -> bool:
        return self.leq(a, b) and self.leq(b, a)

    def has_top(self) -> bool:
        return False

    def top(self) -> Any:
        raise NotImplementedError

    def is_top(self, v) -> bool:
        return self.has_top() and self.eq(v, self.top())

    def sum(self, values: Iterable) -> Any:
        acc = self.zero()
        for v in values:
            acc = self.plus(acc, v)
        return acc

    def decompose(self, v) -> list:
        """Atomic values whose sum is v; used for singleton transformer checks."""
        raise NotImplementedError

    def sample_values(self, bound) -> list:
        """Finite probe set of values <= bound for brute-force checks."""
        raise NotImplementedError


class PathCount(FlowMonoid):
    name = "path-count"
    join_hom_edges = False

    def zero(self):
        return 0

    def plus(self, a, b):
        if a is OMEGA or b is OMEGA:
            return OMEGA
        return a + b

    def leq(self, a, b):
        if b is OMEGA:
            return True
        if a is OMEGA:
            return False
        return a <= b

    def has_top(self):
        return True

    def top(self):
        return OMEGA

    def decompose(self, v):
        if v is OMEGA:
            return [OMEGA]
        return [1] * v

    def sample_values(self, bound):
        if bound is OMEGA:
            return [0, 1, 2, 3, OMEGA]
        return list(range(0, bound + 1))


class KeySet(FlowMonoid):
    name = "keyset"
    join_hom_edges = True

    def zero(self):
        return IntervalUnion.empty()

    def plus(self, a, b):
        return a.union(b)

    def leq(self, a, b):
        return a.subset(b)

    def eq(self, a, b):
        return a == b

    def has_top(self):
        return True

    def top(self):
        return IntervalUnion.full()

    def decompose(self, v):
        return [IntervalUnion.singleton(p) for p in v.sample_points()]

    def sample_values(self, bound):
        singles = [IntervalUnion.singleton(p) for p in bound.sample_points()]
        return [IntervalUnion.empty()] + singles + [bound]

    @staticmethod
    def probe_keys(sets: Iterable[IntervalUnion]) -> list:
        """Keys that distinguish the given interval unions pointwise."""
        pts: set = set()
        for s in sets:
            pts.update(s.sample_points())
        pts.update([MINUS_INF, PLUS_INF, 0])
        return sorted(pts, key=lambda v: (getattr(v, "sign", 0), v if isinstance(v, int) else 0))
