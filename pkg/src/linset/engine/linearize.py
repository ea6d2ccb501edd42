"""Linearizability tokens: contents-change accounting at commands (rules
lin-none / lin-now) and retrospective linearization at returns (lin-past).

A command that provably leaves the structure's contents unchanged needs no
token transition.  A contents-changing command must trade OBL for FUL right
there, with the change matching the operation's UP relation; the localization
lemma reduces the global-contents side conditions to the decisive node whose
keyset contains the operation key.  Pure operations linearize in hindsight at
the return: some recorded moment certifies the specification, searched over
snapshots with a one-level case split on unknown mark bits.
"""

from __future__ import annotations

from .. import terms as T
from ..logic.assertion import FUL, NodeAtom, PastAtom
from ..specs import SPECS, pure_case_goal
from .context import VerifyFailure
from .flowcheck import WriteReport
from .state import SymState


def handle_contents_events(state: SymState, report: WriteReport, pre_atoms: dict, span) -> None:
    """lin-none / lin-now for the events of one atomic step."""
    if not report.contents_events:
        return
    ctx = state.ctx
    inv = ctx.invariant
    tok = state.a.token
    changes = []
    for obj, event in report.contents_events:
        pre = pre_atoms.get(obj)
        post = state.a.atom(obj)
        kind = _classify(state, pre, post, event)
        if kind != "none":
            changes.append((obj, kind, pre, post))
    if not changes:
        return  # lin-none: the contents are untouched
    if tok.kind == "ful":
        raise VerifyFailure("second linearization point on one path", span)
    if tok.kind != "obl":
        raise VerifyFailure("contents change without an update obligation", span)
    if len(changes) > 1:
        raise VerifyFailure("one command changes contents at several nodes", span)
    obj, kind, pre, post = changes[0]
    op = tok.spec
    k = tok.key
    with ctx.timer.phase("hist"):
        if op == "delete" and kind == "remove":
            _prove_remove(state, pre, k, span)
            state.a.token = FUL(op, k, T.TRUE)
            return
        if op == "insert" and kind == "add":
            _prove_add(state, pre, post, k, span)
            state.a.token = FUL(op, k, T.TRUE)
            return
        if op == "inc" and kind == "bump":
            state.a.token = FUL(op, k, T.TRUE)
            return
    raise VerifyFailure(
        f"contents change ({kind} at {obj}) does not match the {op} specification", span
    )


def _classify(state: SymState, pre: NodeAtom | None, post: NodeAtom | None, event: str) -> str:
    """What happened to this node's contents?"""
    inv = state.ctx.invariant
    if event == "publish":
        if post is None:
            return "none"
        mark = post.fields.get("mark")
        if mark is not None and mark == T.TRUE:
            return "none"
        return "add"
    if event.startswith("bump"):
        return "bump"
    if pre is None or post is None:
        return "none"
    if "mark" in pre.fields and pre.fields.get("mark") != post.fields.get("mark"):
        new_mark = post.fields["mark"]
        if new_mark == T.TRUE:
            return "remove"
        if new_mark == T.FALSE:
            return "add"
    for sel in pre.fields:
        if state.ctx.field_kinds.get(sel) == "int" and pre.fields[sel] != post.fields[sel]:
            return "bump"
    return "none"


def _prove_remove(state: SymState, pre: NodeAtom, k: T.Term, span) -> None:
    """Marking the decisive node removes exactly k: pre-state had
    !mark(x), key(x) = k, and k in KS(x)."""
    inv = state.ctx.invariant
    hyps = state.hyps()
    checks = [
        T.BoolIs(pre.fields["mark"], False),
        T.eq(pre.fields["key"], k),
        inv.keyset_formula(pre, k),
    ]
    for goal in checks:
        if state.ctx.entails(hyps, goal) != "yes":
            raise VerifyFailure(f"cannot certify removal of the key: {goal}", span)


def _prove_add(state: SymState, pre: NodeAtom | None, post: NodeAtom, k: T.Term, span) -> None:
    """Publishing/unmarking node x adds exactly k: key(x) = k, x unmarked
    after, and k was absent before (via a pre-state decisive node)."""
    inv = state.ctx.invariant
    hyps = state.hyps()
    if state.ctx.entails(hyps, T.eq(post.fields["key"], k)) != "yes":
        raise VerifyFailure("inserted node does not hold the operation key", span)
    if "mark" in post.fields:
        if state.ctx.entails(hyps, T.BoolIs(post.fields["mark"], False)) != "yes":
            raise VerifyFailure("inserted node is not live", span)
    # absence before: some decisive node had k in its keyset but not contents
    if pre is not None and "mark" in pre.fields and pre.fields.get("mark") == T.TRUE:
        # unmark-revival: the node itself was the decisive (marked) node
        goal = T.conj([inv.keyset_formula(pre, k), T.BoolIs(pre.fields["mark"], True)])
        if state.ctx.entails(hyps, goal) == "yes":
            return
    for atom in state.a.atoms.values():
        if not atom.boxed or atom.flow is None or atom.addr == post.addr:
            continue
        goal = T.conj(
            [inv.keyset_formula(atom, k), T.Not(inv.contents_formula(atom, k))]
        )
        if state.ctx.entails(hyps, goal) == "yes":
            return
    raise VerifyFailure("cannot certify the key was absent before insertion", span)


# ---------------------------------------------------------------------------
# lin-past at returns
# ---------------------------------------------------------------------------


def finalize_return(state: SymState, ret_terms: dict[str, T.Term], span) -> None:
    tok = state.a.token
    if tok.kind == "none":
        return
    ctx = state.ctx
    op = tok.spec
    if op == "copy":
        _finalize_copy(state, ret_terms, span)
        return
    ret = _bool_return(state, ret_terms, span)
    if tok.kind == "ful":
        same = T.Iff(T.BoolIs(tok.value), T.BoolIs(ret))
        if not state.proves(same):
            raise VerifyFailure("returned value differs from the linearized one", span)
        return
    # still obliged: pure case, linearize in hindsight
    with ctx.timer.phase("hist"):
        if op == "inc":
            # out-of-range increments leave the array untouched
            slots = ctx.invariant.slots
            goal = T.conj(
                [T.BoolIs(ret, False)]
                + [T.ne(tok.key, T.KeyLit(i)) for i in range(len(slots))]
            )
            if state.proves(goal):
                state.a.token = FUL(op, tok.key, ret)
                return
        elif _lin_past(state, op, tok.key, ret, span):
            state.a.token = FUL(op, tok.key, ret)
            return
    raise VerifyFailure(f"no linearization point found for {op} at return", span)


def _bool_return(state: SymState, ret_terms: dict[str, T.Term], span) -> T.Term:
    for _name, term in ret_terms.items():
        if term.sort == T.BOOL:
            return term
    raise VerifyFailure("operation returns no boolean result", span)


def _candidate_moments(state: SymState):
    """(guard, snapshot atoms, sid) candidates: now + every recorded past."""
    needs_flow = state.ctx.invariant.flow_kind == "keyset"
    now_atoms = tuple(
        a.clone()
        for a in state.a.atoms.values()
        if a.boxed and (a.flow is not None or not needs_flow)
    )
    yield (), now_atoms, "now"
    for p in reversed(state.a.pasts):
        yield p.guard, p.atoms, f"sid{p.sid}"


def _lin_past(state: SymState, op: str, k: T.Term, ret: T.Term, span) -> bool:
    inv = state.ctx.invariant
    hyps = state.hyps()
    if _search_moments(state, hyps, op, k, ret):
        return True
    # one-level case split on unknown mark bits of candidate decisive nodes
    split_vars: list[T.Term] = []
    for _guard, atoms, _sid in _candidate_moments(state):
        for atom in atoms:
            m = atom.fields.get("mark")
            if isinstance(m, T.Var) and m not in split_vars:
                split_vars.append(m)
    for m in split_vars[:8]:
        pos = hyps + [T.BoolIs(m)]
        neg = hyps + [T.Not(T.BoolIs(m))]
        if _search_moments(state, pos, op, k, ret) and _search_moments(
            state, neg, op, k, ret
        ):
            return True
    return False


def _search_moments(state: SymState, hyps, op: str, k: T.Term, ret: T.Term) -> bool:
    inv = state.ctx.invariant
    for guard, atoms, _sid in _candidate_moments(state):
        guard_f = T.conj(guard) if guard else T.F_TRUE
        if guard and state.ctx.entails(hyps, guard_f) != "yes":
            continue
        for atom in atoms:
            goal = pure_case_goal(op, inv, atom, k, ret)
            if state.ctx.entails(hyps, goal) == "yes":
                return True
    return False


def _finalize_copy(state: SymState, ret_terms: dict[str, T.Term], span) -> None:
    """copy(): the returned slots must equal the array's slots at one moment."""
    inv = state.ctx.invariant
    slots = inv.slots
    res_term = next(iter(ret_terms.values()), None)
    if res_term is None:
        raise VerifyFailure("copy returns nothing", span)
    res_atom = state.a.atom(res_term)
    if res_atom is None:
        raise VerifyFailure("copy must return an owned snapshot node", span)
    hyps = state.hyps()
    for guard, atoms, _sid in _candidate_moments(state):
        guard_f = T.conj(guard) if guard else T.F_TRUE
        if guard and state.ctx.entails(hyps, guard_f) != "yes":
            continue
        for atom in atoms:
            if atom.addr == res_term:
                continue
            goals = [
                T.eq(res_atom.fields[s], atom.fields[s])
                for s in slots
                if s in atom.fields and s in res_atom.fields
            ]
            if goals and all(state.ctx.entails(hyps, g) == "yes" for g in goals):
                state.a.token = FUL("copy", T.NULL, res_term)
                return
    raise VerifyFailure("no moment matches the returned snapshot", span)
