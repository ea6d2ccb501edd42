"""Compact CDCL SAT core (two-watched literals, 1UIP learning, restarts).

Variables are positive ints; literals are signed ints.
"""

from __future__ import annotations


class Unsat(Exception):
    pass


class Solver:
    def __init__(self):
        self.nvars = 0
        self.clauses: list[list[int]] = []
        self.watch: dict[int, list[int]] = {}
        self.assign: dict[int, bool] = {}
        self.level: dict[int, int] = {}
        self.reason: dict[int, int | None] = {}
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.activity: dict[int, float] = {}
        self.var_inc = 1.0
        self.phase: dict[int, bool] = {}
        self.ok = True

    def new_var(self) -> int:
        self.nvars += 1
        v = self.nvars
        self.activity[v] = 0.0
        self.phase[v] = False
        return v

    def value(self, lit: int):
        v = self.assign.get(abs(lit))
        if v is None:
            return None
        return v if lit > 0 else not v

    def add_clause(self, lits: list[int]) -> None:
        lits = sorted(set(lits), key=abs)
        if any(-l in lits for l in lits):
            return
        lits = [l for l in lits if self.value(l) is not False or self.level.get(abs(l), 0) > 0]
        if not self.ok:
            return
        if not lits:
            self.ok = False
            return
        if len(lits) == 1:
            if not self._enqueue(lits[0], None):
                self.ok = False
            else:
                conf = self._propagate()
                if conf is not None:
                    self.ok = False
            return
        idx = len(self.clauses)
        self.clauses.append(lits)
        for l in lits[:2]:
            self.watch.setdefault(-l, []).append(idx)

    def _enqueue(self, lit: int, reason_clause: int | None) -> bool:
        val = self.value(lit)
        if val is not None:
            return val
        self.assign[abs(lit)] = lit > 0
        self.level[abs(lit)] = len(self.trail_lim)
        self.reason[abs(lit)] = reason_clause
        self.trail.append(lit)
        return True

    def _propagate(self) -> int | None:
        """Unit propagation; returns a conflicting clause index or None."""
        i = len(self.trail) - 1 if self.trail else 0
        qhead = getattr(self, "_qhead", 0)
        while qhead < len(self.trail):
            lit = self.trail[qhead]
            qhead += 1
            watchers = self.watch.get(lit, [])
            new_watchers = []
            j = 0
            while j < len(watchers):
                ci = watchers[j]
                j += 1
                clause = self.clauses[ci]
                if clause[0] == -lit:
                    clause[0], clause[1] = clause[1], clause[0]
                # clause[1] == -lit now (it was watched on -lit)
                if self.value(clause[0]) is True:
                    new_watchers.append(ci)
                    continue
                moved = False
                for k in range(2, len(clause)):
                    if self.value(clause[k]) is not False:
                        clause[1], clause[k] = clause[k], clause[1]
                        self.watch.setdefault(-clause[1], []).append(ci)
                        moved = True
                        break
                if moved:
                    continue
                new_watchers.append(ci)
                if self.value(clause[0]) is False:
                    self.watch[lit] = new_watchers + watchers[j:]
                    self._qhead = len(self.trail)
                    return ci
                self._enqueue(clause[0], ci)
            self.watch[lit] = new_watchers
        self._qhead = qhead
        return None

    def _analyze(self, conflict: int) -> tuple[list[int], int]:
        learnt = []
        seen: set[int] = set()
        counter = 0
        lit = None
        clause = self.clauses[conflict]
        cur_level = len(self.trail_lim)
        idx = len(self.trail) - 1
        while True:
            for q in clause:
                if q == lit:
                    continue
                v = abs(q)
                if v in seen or self.level.get(v, 0) == 0:
                    continue
                seen.add(v)
                self.activity[v] += self.var_inc
                if self.level[v] == cur_level:
                    counter += 1
                else:
                    learnt.append(q)
            while idx >= 0 and abs(self.trail[idx]) not in seen:
                idx -= 1
            if idx < 0:
                break
            lit = -self.trail[idx]
            v = abs(lit)
            seen.discard(v)
            counter -= 1
            idx -= 1
            if counter <= 0:
                break
            r = self.reason.get(v)
            if r is None:
                break
            clause = self.clauses[r]
        learnt = [lit] + learnt if lit is not None else learnt
        if not learnt:
            raise Unsat()
        back = 0
        if len(learnt) > 1:
            back = max(self.level[abs(q)] for q in learnt[1:])
        return learnt, back

    def _backtrack(self, to_level: int) -> None:
        while len(self.trail_lim) > to_level:
            start = self.trail_lim.pop()
            for lit in self.trail[start:]:
                v = abs(lit)
                self.phase[v] = lit > 0
                del self.assign[v]
                del self.level[v]
                self.reason.pop(v, None)
            del self.trail[start:]
        self._qhead = min(getattr(self, "_qhead", 0), len(self.trail))

    def _decide(self) -> int | None:
        best, best_act = None, -1.0
        for v in range(1, self.nvars + 1):
            if v not in self.assign and self.activity[v] >= best_act:
                if self.activity[v] > best_act or best is None:
                    best, best_act = v, self.activity[v]
        if best is None:
            return None
        return best if self.phase[best] else -best

    def solve(self, budget_conflicts: int = 200000) -> bool:
        """True = sat (model in self.assign), False = unsat. Raises Unsat too."""
        if not self.ok:
            return False
        conflicts = 0
        conf = self._propagate()
        if conf is not None:
            return False
        while True:
            conf = self._propagate()
            if conf is not None:
                conflicts += 1
                if conflicts > budget_conflicts:
                    raise TimeoutError("conflict budget exhausted")
                if not self.trail_lim:
                    return False
                try:
                    learnt, back = self._analyze(conf)
                except Unsat:
                    return False
                self._backtrack(back)
                self.var_inc *= 1.05
                if self.var_inc > 1e100:
                    for v in self.activity:
                        self.activity[v] *= 1e-100
                    self.var_inc = 1.0
                if len(learnt) == 1:
                    if not self._enqueue(learnt[0], None):
                        return False
                else:
                    idx = len(self.clauses)
                    self.clauses.append(learnt)
                    for l in learnt[:2]:
                        self.watch.setdefault(-l, []).append(idx)
                    self._enqueue(learnt[0], idx)
            else:
                lit = self._decide()
                if lit is None:
                    return True
                self.trail_lim.append(len(self.trail))
                self._enqueue(lit, None)
