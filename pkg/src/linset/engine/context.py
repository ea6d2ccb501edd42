"""Shared proof-task context: program, invariant, solver, configuration."""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dfield
from typing import Optional

from .. import terms as T
from ..invariants import NodeInvariant
from ..lang.ast import CoreProgram, SourceSpan
from ..smt import SmtBackend


@dataclass
class Config:
    footprint_radius: int = 2
    loop_bound: int = 10
    max_iterations: int = 8
    query_timeout: float = 10.0
    solver_cmd: Optional[str] = None
    encoding_mode: str = "uflia"
    dump_proof: Optional[str] = None
    dump_queries: Optional[str] = None
    jobs: int = 1


class VerifyFailure(Exception):
    def __init__(self, reason: str, span: SourceSpan | None = None):
        at = f"{span}: " if span else ""
        super().__init__(f"{at}{reason}")
        self.reason = reason
        self.span = span


@dataclass
class PhaseTimer:
    shares: dict = dfield(default_factory=dict)

    def add(self, phase: str, dt: float):
        self.shares[phase] = self.shares.get(phase, 0.0) + dt

    class _Span:
        def __init__(self, timer, phase):
            self.timer, self.phase = timer, phase

        def __enter__(self):
            self.t0 = time.monotonic()

        def __exit__(self, *exc):
            self.timer.add(self.phase, time.monotonic() - self.t0)

    def phase(self, name: str):
        return PhaseTimer._Span(self, name)


class VerifyContext:
    """One verification run: fixed program + invariant + solver backend."""

    def __init__(self, program: CoreProgram, invariant: NodeInvariant, config: Config):
        self.program = program
        self.invariant = invariant
        self.config = config
        self.smt = SmtBackend(
            solver_cmd=config.solver_cmd,
            timeout_s=config.query_timeout,
            mode=config.encoding_mode,
            dump_dir=config.dump_queries,
        )
        self.fresh = T.FreshNames()
        self.sid_counter = [0]
        self.timer = PhaseTimer()
        self.field_kinds: dict[str, str] = {}
        for s in program.structs:
            for name, kind in s.fields:
                self.field_kinds[name] = kind
        self.globals = [g.name for g in program.globals]

    def next_sid(self) -> int:
        self.sid_counter[0] += 1
        return self.sid_counter[0]

    def field_sort(self, sel: str) -> str:
        kind = self.field_kinds.get(sel)
        return {
            "key": T.KEY,
            "int": T.KEY,
            "node": T.ADDR,
            "bool": T.BOOL,
            "owner": T.OWNER,
        }.get(kind, T.ADDR)

    def mutable_selectors(self) -> list[str]:
        """Selectors that interference may change (not frozen)."""
        out = []
        for sel in self.field_kinds:
            proto = self.invariant.protocols.get(sel)
            if proto is None or proto.kind != "frozen":
                out.append(sel)
        return out

    def entails(self, hyps: list[T.Formula], goal: T.Formula) -> str:
        return self.smt.entails(hyps, goal)

    def proves(self, hyps: list[T.Formula], goal: T.Formula) -> bool:
        return self.smt.entails(hyps, goal) == "yes"

    def satisfiable(self, hyps: list[T.Formula]) -> str:
        return self.smt.satisfiable(hyps)
