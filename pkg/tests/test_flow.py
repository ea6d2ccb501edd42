"""Flow-constraint machinery against the worked path-count and key-set examples."""

import pytest

from linset.flow import (
    EConst,
    EStripBelow,
    FlowConstraint,
    IDENTITY,
    KeySet,
    OMEGA,
    PathCount,
    apply_update,
    compose,
    solve,
    transformer_eq,
)
from linset.intervals import IntervalUnion, MINUS_INF, PLUS_INF

PC = PathCount()
KS = KeySet()


def pc_c1():
    # X = {x,y,z}; inflow r->x:1, r->y:1, v->z:omega; identity edges x->y, x->z, z->u
    return FlowConstraint.make(
        ["x", "y", "z"],
        edges={("x", "y"): IDENTITY, ("x", "z"): IDENTITY, ("z", "u"): IDENTITY},
        inflow={("r", "x"): 1, ("r", "y"): 1, ("v", "z"): OMEGA},
    )


def pc_c2():
    # X = {r,u,v}; inflow z->u:omega; edges r->x:const1, r->y:const1, u->v:id, v->z:id
    return FlowConstraint.make(
        ["r", "u", "v"],
        edges={
            ("r", "x"): EConst(1),
            ("r", "y"): EConst(1),
            ("u", "v"): IDENTITY,
            ("v", "z"): IDENTITY,
        },
        inflow={("z", "u"): OMEGA},
    )


def test_path_count_flow_c1():
    sol = solve(pc_c1(), PC)
    assert sol.flow == {"x": 1, "y": 2, "z": OMEGA}
    assert sol.out[("z", "u")] == OMEGA


def test_empty_constraint():
    sol = solve(FlowConstraint.make([]), PC)
    assert sol.flow == {} and sol.out == {}


def test_path_count_composition():
    joined = compose(pc_c1(), pc_c2(), PC)
    assert joined is not None
    sol = solve(joined, PC)
    assert sol.flow == {"x": 1, "y": 2, "z": OMEGA, "r": 0, "u": OMEGA, "v": OMEGA}


def test_compose_unit():
    c1 = pc_c1()
    joined = compose(c1, FlowConstraint.make([]), PC)
    assert joined is not None
    assert joined.nodes == c1.nodes
    assert solve(joined, PC).flow == solve(c1, PC).flow


def test_fake_flow_rejected():
    # removing edge (x,z) turns the omega cycle z,u,v into a fake flow
    c1 = pc_c1()
    edges = {k: v for k, v in c1.edges.items() if k != ("x", "z")}
    c1_cut = FlowConstraint.make(c1.nodes, edges, dict(c1.inflow))
    assert compose(c1_cut, pc_c2(), PC) is None


def above(k):
    return IntervalUnion.above(k)


def ks_c1():
    # in(u,l)=(3,inf]; edges l->t: strip6, t->r: strip(-inf), r->v: strip8
    return FlowConstraint.make(
        ["l", "t", "r"],
        edges={
            ("l", "t"): EStripBelow(6),
            ("t", "r"): EStripBelow(MINUS_INF),
            ("r", "v"): EStripBelow(8),
        },
        inflow={("u", "l"): above(3)},
    )


def ks_c2():
    # unlink of marked t: l's edge now goes to r directly
    return FlowConstraint.make(
        ["l", "t", "r"],
        edges={
            ("l", "r"): EStripBelow(6),
            ("t", "r"): EStripBelow(MINUS_INF),
            ("r", "v"): EStripBelow(8),
        },
        inflow={("u", "l"): above(3)},
    )


def test_keyset_flow_c1():
    sol = solve(ks_c1(), KS)
    assert sol.flow["l"] == above(3)
    assert sol.flow["t"] == above(6)
    assert sol.flow["r"] == above(6)
    assert sol.out[("r", "v")] == above(8)


def test_keyset_flow_after_unlink():
    sol = solve(ks_c2(), KS)
    assert sol.flow["t"].is_empty()
    assert sol.flow["r"] == above(6)
    assert sol.out[("r", "v")] == above(8)


def test_transformer_eq_unlink():
    c1, c2 = ks_c1(), ks_c2()
    assert transformer_eq(c1, c2, dict(c1.inflow), KS) == "yes"


def test_transformer_eq_reflexive():
    c1 = ks_c1()
    assert transformer_eq(c1, c1, dict(c1.inflow), KS) == "yes"


def test_transformer_eq_detects_change():
    c1 = ks_c1()
    changed = c1.with_edges({("l", "t"): EStripBelow(9)})
    # brute force over singleton inflows {k} for k in 4..10 shows the difference
    def brute(c, k):
        c_k = c.with_inflow({("u", "l"): IntervalUnion.singleton(k)})
        return solve(c_k, KS).out.get(("r", "v"), IntervalUnion.empty())

    diffs = [k for k in range(4, 11) if brute(c1, k) != brute(changed, k)]
    assert diffs  # the oracle sees a difference...
    assert transformer_eq(c1, changed, dict(c1.inflow), KS) == "no"  # ...and so do we


def test_apply_update_matches_figure():
    c1 = ks_c1()
    up = {("l", "t"): EConst(IntervalUnion.empty()), ("l", "r"): EStripBelow(6)}
    c2 = apply_update(c1, up, KS)
    assert c2 is not None
    sol = solve(c2, KS)
    assert sol.flow["t"].is_empty()
    assert sol.flow["r"] == above(6)


def test_apply_update_identity():
    c1 = ks_c1()
    c2 = apply_update(c1, {}, KS)
    assert c2 is not None and c2.edges == c1.edges


def test_apply_update_outside_domain_aborts():
    c1 = ks_c1()
    assert apply_update(c1, {("nope", "t"): EStripBelow(1)}, KS) is None


def test_apply_update_transformer_change_aborts():
    c1 = ks_c1()
    # rerouting l past r changes the outflow to v
    assert apply_update(c1, {("l", "v"): EStripBelow(6)}, KS) is None
