import pathlib

import pytest

from linset.lang import ast as A
from linset.lang import parse, desugar, pretty_program, ParseError, DesugarError
from linset.lang.ast import (
    Assume, AssignSelVar, AssignVarOp, AtomicBlock, Choice, Com, Loop, Seq, Skip,
)

BENCH = pathlib.Path(__file__).resolve().parent.parent / "benchmarks"


def parse_snippet(body: str, header: str = "struct N { key: K; next: N; mark: Bool }\n"):
    return parse(header + body, "<test>")


def test_skip_body():
    prog = parse_snippet("procedure p() { skip }")
    core = desugar(prog)
    assert core.proc("p").body == Com(Skip(core.proc("p").body.command.span))


def test_if_desugars_to_choice():
    prog = parse_snippet("procedure p(b: Bool) { if (b) skip else skip }")
    body = desugar(prog).proc("p").body
    assert isinstance(body, Choice)
    left, right = body.left, body.right
    assert isinstance(left.first.command, Assume)
    assert isinstance(right.first.command, Assume)
    assert repr(right.first.command) == "assume(!(b))"


def test_cas_desugars_to_two_branch_choice():
    prog = parse_snippet(
        "procedure p(x: N, o: N, n: N) { if (CAS(x.next, o, n)) skip else skip }"
    )
    body = desugar(prog).proc("p").body
    assert isinstance(body, Choice)

    def head_cmd(s):
        while isinstance(s, Seq):
            s = s.first
        return s.command

    succ = head_cmd(body.left)
    fail = head_cmd(body.right)
    assert isinstance(succ, AtomicBlock) and succ.cas_site
    assert isinstance(succ.commands[0], Assume)
    assert isinstance(succ.commands[1], AssignSelVar)
    assert isinstance(fail, AtomicBlock) and len(fail.commands) == 1


def test_paired_atomic_read():
    prog = parse_snippet("procedure p(t: N) { val tn, tm = atomic { t.next, t.mark } }")
    body = desugar(prog).proc("p").body
    assert isinstance(body, Com) and isinstance(body.command, AtomicBlock)
    assert len(body.command.commands) == 2


def test_mark_only_cas_not_a_candidate():
    prog = parse_snippet(
        "procedure p(t: N, tn: N) { if (CAS(<t.next, t.mark>, <tn, false>, <tn, true>)) skip else skip }"
    )
    core = desugar(prog)
    assert core.cas_candidates == ()


def test_fresh_node_cas_not_a_candidate():
    prog = parse_snippet(
        "procedure p(l: N, r: N, k: K) {\n"
        "  val e = new N { key = k, next = r, mark = false }\n"
        "  if (CAS(<l.next, l.mark>, <r, false>, <e, false>)) skip else skip\n"
        "}"
    )
    assert desugar(prog).cas_candidates == ()


def test_pointer_swing_is_a_candidate():
    prog = parse_snippet(
        "procedure p(l: N, o: N, n: N) { if (CAS(l.next, o, n)) skip else skip }"
    )
    cands = desugar(prog).cas_candidates
    assert len(cands) == 1 and cands[0][2] == "pointer-swing"


def test_lock_is_a_candidate_and_spins():
    header = "struct N { key: K; next: N; lock: Owner }\n"
    prog = parse_snippet("procedure p(x: N) { lock(x) unlock(x) }", header)
    core = desugar(prog)
    assert len(core.cas_candidates) == 1
    assert core.cas_candidates[0][2] == "lock-acquire"
    body = core.proc("p").body
    # spin loop of failed attempts, then the successful acquire
    text = repr(body)
    assert text.index("loop") < text.index("x.lock := me") < text.index("x.lock := nobody")


def test_tail_recursion_becomes_loop():
    prog = parse_snippet(
        "procedure walk(t: N): N {\n"
        "  val tn = t.next\n"
        "  if (t.key < 5) { return walk(tn) } else { return t }\n"
        "}"
    )
    body = desugar(prog).proc("walk").body
    # done := false; loop { assume !done; ... }; assume done
    assert isinstance(body, Seq)
    assert isinstance(body.first.command, AssignVarOp)
    assert isinstance(body.second.first, Loop)


def test_non_tail_recursion_rejected():
    prog = parse_snippet(
        "procedure bad(t: N): N {\n"
        "  val u = bad(t)\n"
        "  return u\n"
        "}"
    )
    with pytest.raises(DesugarError):
        desugar(prog)


def test_unknown_field_rejected():
    prog = parse_snippet("procedure p(t: N) { val v = t.nope }")
    with pytest.raises(DesugarError):
        desugar(prog)


def test_duplicate_procedure_rejected():
    with pytest.raises(ParseError):
        parse_snippet("procedure p() { skip } procedure p() { skip }")


def test_syntax_error_has_position():
    with pytest.raises(ParseError) as exc:
        parse("struct N { key: K }\nprocedure p( {", "bad.spl")
    assert "bad.spl:2" in str(exc.value)


def test_atomic_block_size_bound_on_corpus():
    """Every atomic block in desugared corpus programs stays small."""
    for path in sorted(BENCH.glob("*.spl")):
        core = desugar(parse(path.read_text(), str(path)))

        def walk(s):
            if isinstance(s, Com):
                if isinstance(s.command, AtomicBlock):
                    assert len(s.command.commands) <= 3, (path.name, s.command)
            elif isinstance(s, Seq):
                walk(s.first)
                walk(s.second)
            elif isinstance(s, Choice):
                walk(s.left)
                walk(s.right)
            elif isinstance(s, Loop):
                walk(s.body)

        for proc in core.procedures:
            walk(proc.body)


def test_parse_pretty_roundtrip_on_corpus():
    for path in sorted(BENCH.glob("*.spl")):
        text = path.read_text()
        ast1 = parse(text, str(path))
        printed = pretty_program(ast1)
        ast2 = parse(printed, str(path))
        assert _strip_spans(ast1) == _strip_spans(ast2), path.name


def test_harris_candidates():
    core = desugar(parse((BENCH / "harris.spl").read_text(), "harris.spl"))
    kinds = [k for (_p, _s, k) in core.cas_candidates]
    assert kinds.count("pointer-swing") == 2
    assert len(core.cas_candidates) == 2


def test_harris_traverse_shape():
    prog = parse((BENCH / "harris.spl").read_text(), "harris.spl")
    trav = prog.proc("traverse")
    # one atomic read, a three-way conditional, two tail self-calls, one return
    assert isinstance(trav.body.stmts[0], A.SAtomicRead)
    cond = trav.body.stmts[1]
    assert isinstance(cond, A.SIf) and isinstance(cond.els, A.SIf)


def _strip_spans(x):
    if isinstance(x, (list, tuple)):
        return tuple(_strip_spans(v) for v in x)
    if hasattr(x, "__dataclass_fields__"):
        vals = []
        for f in x.__dataclass_fields__:
            if f in ("span", "source"):
                continue
            vals.append(_strip_spans(getattr(x, f)))
        return (type(x).__name__, tuple(vals))
    return x
