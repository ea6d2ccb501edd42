"""External solver sessions over SMT-LIB 2 standard streams."""

from __future__ import annotations

import hashlib
import os
import select
import shlex
import subprocess
import sys
import time
from dataclasses import dataclass, field

from .encode import Script, encode_entailment, encode_sat
from .. import terms as T


def default_solver_cmd(timeout_s: float) -> list[str]:
    """The bundled fragment solver, launched as a separate process."""
    return [sys.executable, "-m", "linset.smtsolver.main", "--timeout", str(timeout_s)]


class SolverCrash(Exception):
    pass


class SolverSession:
    """One solver process; one query in flight at a time; never shared."""

    def __init__(self, cmd: list[str], timeout_s: float = 10.0):
        self.cmd = cmd
        self.timeout_s = timeout_s
        self.proc: subprocess.Popen | None = None
        self.queries = 0
        self._buf = b""
        self._spawn()

    def _spawn(self):
        self.proc = subprocess.Popen(
            self.cmd,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
        )
        self._buf = b""

    def close(self):
        if self.proc and self.proc.poll() is None:
            try:
                self.proc.stdin.write(b"(exit)\n")
                self.proc.stdin.flush()
            except (BrokenPipeError, OSError):
                pass
            try:
                self.proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self.proc.kill()
        self.proc = None

    def _restart(self):
        try:
            if self.proc and self.proc.poll() is None:
                self.proc.kill()
        finally:
            self._spawn()

    def _readline(self, deadline: float) -> str | None:
        """One decoded line, or None on timeout. Raw reads: select-safe."""
        fd = self.proc.stdout.fileno()
        while b"\n" not in self._buf:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                return None
            chunk = os.read(fd, 65536)
            if not chunk:
                raise SolverCrash("solver process closed its output")
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return line.decode("utf-8", "replace").strip()

    def check(self, script: Script) -> str:
        """Run one script; returns sat | unsat | unknown."""
        self.queries += 1
        marker = f"q{self.queries}-done"
        payload = f"(push 1)\n{script.text}(pop 1)\n(echo \"{marker}\")\n"
        deadline = time.monotonic() + self.timeout_s + 2.0
        try:
            self.proc.stdin.write(payload.encode())
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError):
            self._restart()
            raise SolverCrash("solver process died while writing")
        verdict = "unknown"
        while True:
            line = self._readline(deadline)
            if line is None:
                self._restart()
                return "unknown"
            if line == marker:
                return verdict
            if line in ("sat", "unsat", "unknown"):
                verdict = line


@dataclass
class SmtStats:
    queries: int = 0
    cache_hits: int = 0
    by_verdict: dict = field(default_factory=lambda: {"sat": 0, "unsat": 0, "unknown": 0})
    wall_time: float = 0.0


class SmtBackend:
    """Entailment/satisfiability facade with per-task session and query cache.

    `unknown` never upgrades to success: callers treat everything that is not
    a definite `unsat` of the negated goal as a failed entailment.
    """

    def __init__(
        self,
        solver_cmd: list[str] | str | None = None,
        timeout_s: float = 10.0,
        mode: str = "uflia",
        dump_dir: str | None = None,
    ):
        if isinstance(solver_cmd, str):
            solver_cmd = shlex.split(solver_cmd)
        self.solver_cmd = solver_cmd or default_solver_cmd(timeout_s)
        self.timeout_s = timeout_s
        self.mode = mode
        self.dump_dir = dump_dir
        self.session = SolverSession(self.solver_cmd, timeout_s)
        self.cache: dict[str, str] = {}
        self.stats = SmtStats()
        self._dumped = 0

    def close(self):
        self.session.close()

    def _run(self, script: Script) -> str:
        digest = hashlib.sha256(script.text.encode()).hexdigest()
        if digest in self.cache:
            self.stats.cache_hits += 1
            return self.cache[digest]
        t0 = time.monotonic()
        try:
            verdict = self.session.check(script)
        except SolverCrash:
            try:
                verdict = self.session.check(script)
            except SolverCrash:
                verdict = "unknown"
        self.stats.wall_time += time.monotonic() - t0
        self.stats.queries += 1
        self.stats.by_verdict[verdict] = self.stats.by_verdict.get(verdict, 0) + 1
        self.cache[digest] = verdict
        return verdict

    def entails(self, hyps: list[T.Formula], goal: T.Formula) -> str:
        """yes | no | unknown; `yes` only on a definite unsat of hyps & !goal."""
        script = encode_entailment(hyps, goal, self.mode)
        verdict = self._run(script)
        if verdict == "unsat":
            return "yes"
        result = "no" if verdict == "sat" else "unknown"
        self._maybe_dump(script)
        return result

    def satisfiable(self, hyps: list[T.Formula]) -> str:
        script = encode_sat(hyps, self.mode)
        verdict = self._run(script)
        return verdict

    def _maybe_dump(self, script: Script):
        if not self.dump_dir:
            return
        os.makedirs(self.dump_dir, exist_ok=True)
        self._dumped += 1
        path = os.path.join(self.dump_dir, f"{self._dumped:03d}.smt2")
        with open(path, "w") as fh:
            fh.write(script.text)
