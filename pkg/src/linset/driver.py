"""Verification driver: the outer interference-saturation fixpoint."""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dfield

from .engine import Config, ProcedureProver, VerifyContext, VerifyFailure
from .interference import InterferenceSet, apply_interference
from .engine.prove import fingerprint
from .invariants import NodeInvariant
from .lang.ast import CoreProgram


@dataclass
class ProofReport:
    verdict: str = "inconclusive"  # linearizable | failed | inconclusive
    reason: str = ""
    location: str = ""
    iterations: int = 0
    interference_count: int = 0
    future_candidates: int = 0
    futures_resolved: int = 0
    phase_shares: dict = dfield(default_factory=dict)
    total_time: float = 0.0
    interferences: list = dfield(default_factory=list)
    procedures: list = dfield(default_factory=list)
    smt_queries: int = 0
    audit_passed: bool = False

    def table_row(self, name: str) -> str:
        shares = self.phase_shares
        total = sum(shares.values()) or 1.0
        pct = lambda k: f"{100.0 * shares.get(k, 0.0) / total:.0f}%"
        mark = {"linearizable": "ok", "failed": "FAIL", "inconclusive": "??"}[self.verdict]
        return (
            f"{name:<28} iter={self.iterations} |I|={self.interference_count} "
            f"cand={self.future_candidates} com={pct('com')} fut={pct('fut')} "
            f"hist={pct('hist')} join={pct('join')} inter={pct('inter')} "
            f"{self.total_time:.1f}s {mark}"
        )

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "location": self.location,
            "iterations": self.iterations,
            "interference_set_size": self.interference_count,
            "future_candidates": self.future_candidates,
            "futures_resolved": self.futures_resolved,
            "phase_time_shares": {
                k: round(v, 4) for k, v in sorted(self.phase_shares.items())
            },
            "total_wall_time": round(self.total_time, 3),
            "interferences": self.interferences,
            "procedures": self.procedures,
            "smt_queries": self.smt_queries,
            "interference_freedom_audit": self.audit_passed,
        }


def verify_program(program: CoreProgram, invariant: NodeInvariant, config: Config) -> ProofReport:
    t0 = time.monotonic()
    report = ProofReport()
    report.future_candidates = len(program.cas_candidates)
    ctx = VerifyContext(program, invariant, config)
    roots = [p for p in program.procedures if p.spec is not None]
    report.procedures = [p.name for p in roots]
    if not roots:
        report.verdict = "inconclusive"
        report.reason = "no procedure declares a sequential specification"
        return report

    iset = InterferenceSet()
    provers: dict[str, ProcedureProver] = {}
    try:
        for _round in range(config.max_iterations):
            report.iterations += 1
            round_new = InterferenceSet()
            provers = {}
            for proc in roots:
                prover = ProcedureProver(ctx, proc, iset)
                final = prover.run()
                provers[proc.name] = prover
                if final.dead:
                    raise VerifyFailure(
                        f"no feasible execution of {proc.name} reaches its return",
                        proc.span,
                    )
                for rec in prover.collected:
                    round_new.add(rec, ctx)
            if not iset.merge_from(round_new, ctx):
                break
        else:
            report.verdict = "inconclusive"
            report.reason = (
                f"interference saturation exceeded {config.max_iterations} iterations"
            )
            return report
        report.audit_passed = _audit_interference_freedom(ctx, provers, iset)
        if not report.audit_passed:
            report.verdict = "failed"
            report.reason = "post-hoc interference-freedom audit failed"
            return report
        report.verdict = "linearizable"
    except VerifyFailure as exc:
        report.verdict = "failed"
        report.reason = exc.reason
        report.location = str(exc.span) if exc.span else ""
    finally:
        report.interference_count = len(iset)
        report.interferences = [i.render() for i in iset]
        report.phase_shares = dict(ctx.timer.shares)
        report.total_time = time.monotonic() - t0
        report.smt_queries = ctx.smt.stats.queries
        futeng_total = sum(getattr(p.futures, "candidates_resolved", 0) for p in provers.values())
        report.futures_resolved = futeng_total
        if config.dump_proof:
            _dump_proofs(config.dump_proof, provers)
        ctx.smt.close()
    return report


def _audit_interference_freedom(ctx, provers, iset: InterferenceSet) -> bool:
    """Every accepted proof's final state must be a fixed point of the
    interference application (stability of the recorded outline)."""
    for prover in provers.values():
        try:
            final = prover.run()
        except VerifyFailure:
            return False
        before = fingerprint(final, live=True)
        apply_interference(final, iset)
        after = fingerprint(final, live=True)
        if before != after:
            return False
    return True


def _dump_proofs(directory: str, provers: dict) -> None:
    import os

    os.makedirs(directory, exist_ok=True)
    for name, prover in provers.items():
        with open(os.path.join(directory, f"{name}.outline"), "w") as fh:
            for where, rendered in prover.trace:
                fh.write(f"--- {where}\n{rendered}\n")
