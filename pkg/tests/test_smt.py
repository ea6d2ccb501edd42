"""SMT encoding and solver sessions, including the worked entailment examples."""

import sys

import pytest

from linset import terms as T
from linset.smt import SmtBackend, encode_entailment
from linset.smtsolver import sexpr

K = lambda n: T.KeyLit(n)


@pytest.fixture(scope="module", params=["uflia", "all"])
def backend(request):
    b = SmtBackend(mode=request.param, timeout_s=10.0)
    yield b
    b.close()


def test_true_entails_true(backend):
    assert backend.entails([], T.F_TRUE) == "yes"


def test_false_is_unsat(backend):
    assert backend.satisfiable([T.F_FALSE]) == "unsat"
    assert backend.satisfiable([T.F_TRUE]) == "sat"


def test_interval_intersection(backend):
    # (3,inf] `inter` (-inf,5] = (3,5]
    k = T.Var("k", T.KEY)
    lhs = T.ks_inter(T.KsInterval(K(3), T.INF), T.KsInterval(T.NEG_INF, K(5), False, False))
    rhs = T.KsInterval(K(3), K(5))
    assert backend.entails([T.InKs(k, lhs)], T.InKs(k, rhs)) == "yes"
    assert backend.entails([T.InKs(k, rhs)], T.InKs(k, lhs)) == "yes"
    # sanity: oracle agreement over integer samples 0..10
    from linset.intervals import IntervalUnion

    a = IntervalUnion.above(3).inter(IntervalUnion.interval(-(10**6), 5))
    b = IntervalUnion.interval(3, 5, lo_open=True)
    assert all(a.contains(i) == b.contains(i) for i in range(0, 11))


def test_keyset_membership_from_hindsight_step(backend):
    # k in (key_l, inf] and k <= key_r entails k in KS(r) for
    # KS(r) = (key_l, inf] \ (key_r, inf]
    k = T.Var("k", T.KEY)
    key_l = T.Var("key_l", T.KEY)
    key_r = T.Var("key_r", T.KEY)
    ks_r = T.KsMinus(T.KsInterval(key_l, T.INF), T.KsInterval(key_r, T.INF))
    hyps = [T.InKs(k, T.KsInterval(key_l, T.INF)), T.le(k, key_r)]
    assert backend.entails(hyps, T.InKs(k, ks_r)) == "yes"
    # dropping k <= key_r breaks it
    assert backend.entails(hyps[:1], T.InKs(k, ks_r)) != "yes"


def test_set_variable_subset(backend):
    # F superset (a, inf] and a < k entails k in F
    f = T.Var("F", T.KSET)
    a = T.Var("a", T.KEY)
    k = T.Var("k", T.KEY)
    hyps = [T.SubKs(T.KsInterval(a, T.INF), f), T.lt(a, k)]
    assert backend.entails(hyps, T.InKs(k, f)) == "yes"
    assert backend.entails(hyps, T.InKs(a, f)) != "yes"


def test_subset_transitivity_with_witness(backend):
    f = T.Var("F", T.KSET)
    g = T.Var("G", T.KSET)
    hyps = [T.SubKs(f, g), T.SubKs(g, T.KsInterval(K(3), T.INF))]
    assert backend.entails(hyps, T.SubKs(f, T.KsInterval(K(2), T.INF))) == "yes"
    assert backend.entails(hyps, T.SubKs(f, T.KsInterval(K(4), T.INF))) != "yes"


def test_infinity_ordering(backend):
    k = T.Var("k", T.KEY)
    assert backend.entails([T.lt(T.NEG_INF, k), T.lt(k, T.INF)], T.ne(k, T.INF)) == "yes"
    assert backend.entails([], T.lt(T.NEG_INF, T.INF)) == "yes"
    assert backend.entails([], T.lt(K(5), T.INF)) == "yes"


def test_node_set_membership(backend):
    x = T.Var("x", T.ADDR)
    y = T.Var("y", T.ADDR)
    n = T.Var("N", T.NSET)
    hyps = [T.InNs(x, n), T.eq(y, x)]
    assert backend.entails(hyps, T.InNs(y, n)) == "yes"
    assert backend.entails([T.InNs(x, n)], T.InNs(y, n)) != "yes"


def test_owner_literals_distinct(backend):
    o = T.Var("o", T.OWNER)
    assert backend.entails([T.eq(o, T.ME)], T.ne(o, T.NOBODY)) == "yes"
    assert backend.entails([T.eq(o, T.OTHER)], T.ne(o, T.ME)) == "yes"


def test_counter_increment(backend):
    i = T.Var("i", T.KEY)
    j = T.Var("j", T.KEY)
    hyps = [T.eq(j, T.KeyPlus(i, 1))]
    assert backend.entails(hyps, T.lt(i, j)) == "yes"
    assert backend.entails(hyps, T.lt(j, i)) == "no"


def test_scripts_deterministic():
    k = T.Var("k", T.KEY)
    f = T.Var("F", T.KSET)
    hyps = [T.InKs(k, f), T.lt(K(1), k)]
    goal = T.InKs(k, T.KsInterval(K(0), T.INF))
    s1 = encode_entailment(hyps, goal)
    s2 = encode_entailment(hyps, goal)
    assert s1.text == s2.text


def test_script_linter_no_deep_quantifiers():
    """Audit: generated scripts stay quantifier-free (well within forall-exists)."""
    k = T.Var("k", T.KEY)
    f = T.Var("F", T.KSET)
    g = T.Var("G", T.KSET)
    script = encode_entailment(
        [T.SubKs(f, g), T.InKs(k, f), T.Not(T.SubKs(g, f))], T.InKs(k, g)
    )
    exprs = sexpr.parse_all(script.text)

    def depth(e, inside=""):
        if not isinstance(e, list):
            return 0
        if e and e[0] in ("forall", "exists"):
            kind = "A" if e[0] == "forall" else "E"
            add = 1 if (inside and inside[-1] != kind) or not inside else 0
            return add + max((depth(x, inside + kind) for x in e[1:]), default=0)
        return max((depth(x, inside) for x in e), default=0)

    assert all(depth(e) <= 2 for e in exprs)


def test_stub_solver_always_unknown():
    b = SmtBackend(
        solver_cmd=[sys.executable, "-m", "linset.smtsolver.main", "--always-unknown"],
        timeout_s=5.0,
    )
    try:
        assert b.entails([], T.F_TRUE) == "unknown"
        assert b.satisfiable([T.F_FALSE]) == "unknown"
    finally:
        b.close()


def test_failed_query_dump(tmp_path):
    b = SmtBackend(dump_dir=str(tmp_path / "queries"))
    try:
        k = T.Var("k", T.KEY)
        assert b.entails([], T.lt(k, T.INF)) != "yes"  # k may be inf
    finally:
        b.close()
    dumps = list((tmp_path / "queries").glob("*.smt2"))
    assert len(dumps) == 1
    assert "(check-sat)" in dumps[0].read_text()


def test_session_survives_crash():
    b = SmtBackend()
    try:
        b.session.proc.kill()
        b.session.proc.wait()
        assert b.entails([], T.F_TRUE) == "yes"
    finally:
        b.close()
