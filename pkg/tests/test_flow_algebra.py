"""Separation-algebra laws of flow-constraint composition on random instances.

Instances are generated from a shared "world" graph that is split into
components whose interfaces are derived from the world's flow, so a healthy
fraction of the pairs actually compose.
"""

import random

import pytest

from linset.flow import (
    EConst,
    FlowConstraint,
    IDENTITY,
    OMEGA,
    PathCount,
    compose,
    solve,
    transformer_eq,
)

PC = PathCount()

N_PAIRS = 1000
N_TRANSFORMER = 200


def random_world(rng, n_nodes):
    nodes = [f"n{i}" for i in range(n_nodes)]
    outside = ["o0", "o1"]
    edges = {}
    for x in nodes:
        for y in nodes + outside:
            if x == y:
                continue
            r = rng.random()
            if r < 0.18:
                edges[(x, y)] = IDENTITY
            elif r < 0.26:
                edges[(x, y)] = EConst(rng.choice([1, 2]))
    inflow = {}
    for x in nodes:
        if rng.random() < 0.5:
            inflow[("src", x)] = rng.choice([1, 2, 3, OMEGA])
    return FlowConstraint.make(nodes, edges, inflow)


def split_world(rng, world, parts=2):
    """Split the world's nodes; derive each part's inflow from the world flow."""
    sol = solve(world, PC)
    buckets = [[] for _ in range(parts)]
    for x in sorted(world.nodes, key=str):
        buckets[rng.randrange(parts)].append(x)
    out = []
    for bucket in buckets:
        part_nodes = set(bucket)
        edges = {k: v for k, v in world.edges.items() if k[0] in part_nodes}
        inflow = {k: v for k, v in world.inflow.items() if k[1] in part_nodes}
        for (y, x), f in world.edges.items():
            if x in part_nodes and y in world.nodes and y not in part_nodes:
                val = f.apply(PC, sol.flow[y])
                if val != 0:
                    inflow[(y, x)] = val
        out.append(FlowConstraint.make(part_nodes, edges, inflow))
    return out


def eq_constraints(a, b):
    return a.nodes == b.nodes and dict(a.edges) == dict(b.edges) and dict(a.inflow) == dict(b.inflow)


def test_composition_laws():
    rng = random.Random(20240813)
    composed = 0
    for _ in range(N_PAIRS):
        world = random_world(rng, rng.randint(2, 6))
        a, b = split_world(rng, world, 2)
        ab = compose(a, b, PC)
        ba = compose(b, a, PC)
        # commutativity (including definedness)
        assert (ab is None) == (ba is None)
        if ab is None:
            continue
        composed += 1
        assert eq_constraints(ab, ba)
        # unit
        unit = compose(a, FlowConstraint.make([]), PC)
        assert unit is not None and eq_constraints(unit, a)
        # flow restriction: flow(a*b) on a.X equals flow(a)
        sol_ab, sol_a = solve(ab, PC), solve(a, PC)
        for x in a.nodes:
            assert sol_ab.flow[x] == sol_a.flow[x]
    # the generator must actually exercise defined compositions
    assert composed > N_PAIRS // 3


def test_associativity_with_definedness():
    rng = random.Random(99173)
    checked = 0
    for _ in range(N_PAIRS // 2):
        world = random_world(rng, rng.randint(3, 6))
        a, b, c = split_world(rng, world, 3)
        bc = compose(b, c, PC)
        if bc is None:
            continue
        a_bc = compose(a, bc, PC)
        if a_bc is None:
            continue
        ab = compose(a, b, PC)
        assert ab is not None, "a#(b*c) and b#c must imply a#b"
        ab_c = compose(ab, c, PC)
        assert ab_c is not None
        assert eq_constraints(a_bc, ab_c)
        checked += 1
    assert checked > 20


def mutate(rng, c):
    """Random edge mutation; may or may not preserve the transformer."""
    edges = dict(c.edges)
    keys = sorted(edges, key=str)
    op = rng.random()
    nodes = sorted(c.nodes, key=str)
    if op < 0.4 and keys:
        k = keys[rng.randrange(len(keys))]
        edges[k] = rng.choice([IDENTITY, EConst(rng.choice([0, 1, 2]))])
    elif op < 0.7 and keys:
        del edges[keys[rng.randrange(len(keys))]]
    else:
        x = nodes[rng.randrange(len(nodes))]
        y = rng.choice(nodes + ["o0", "o1"])
        if x != y:
            edges[(x, y)] = rng.choice([IDENTITY, EConst(1)])
    return FlowConstraint.make(c.nodes, edges, dict(c.inflow))


def brute_force_transformer_eq(c1, c2, bound):
    """Enumerate all inflows <= bound entrywise (small worlds only)."""
    entries = sorted(set(bound), key=str)
    targets = sorted(c1.targets_outside() | c2.targets_outside(), key=str)

    def outs(c, infl):
        sol = solve(c.with_inflow(infl), PC)
        return {
            (x, y): sol.out.get((x, y), 0)
            for x in c.nodes
            for y in targets
        }

    import itertools

    per_entry = []
    for e in entries:
        b = bound[e]
        vals = [0, 1, 2, 3, OMEGA] if b is OMEGA else list(range(b + 1))
        per_entry.append([(e, v) for v in vals])
    for combo in itertools.product(*per_entry) if per_entry else [()]:
        infl = dict(combo)
        if outs(c1, infl) != outs(c2, infl):
            return False
    return True


def test_transformer_lemma():
    """transformer_eq(c1,c2) and c1#c imply c2#c with equal composed transformers."""
    rng = random.Random(7351)
    found = 0
    attempts = 0
    while found < N_TRANSFORMER and attempts < N_TRANSFORMER * 60:
        attempts += 1
        world = random_world(rng, rng.randint(2, 5))
        c1, c = split_world(rng, world, 2)
        if len(c1.nodes) == 0 or len(c.nodes) == 0:
            continue
        if compose(c1, c, PC) is None:
            continue
        c2 = mutate(rng, c1) if rng.random() < 0.8 else c1
        bound = dict(c1.inflow)
        if sum(3 if v is OMEGA else v for v in bound.values()) > 8:
            continue
        if not brute_force_transformer_eq(c1, c2, bound):
            continue
        found += 1
        # conclusion (i): c2 composes with the same frame
        c2c = compose(c2, c, PC)
        assert c2c is not None, "transformer-equal region failed to compose with frame"
        # conclusion (ii): the composed transformers agree
        c1c = compose(c1, c, PC)
        assert brute_force_transformer_eq(c1c, c2c, dict(c1c.inflow))
    assert found == N_TRANSFORMER, f"only {found} premise-true triples generated"


def test_transformer_eq_agrees_with_brute_force():
    rng = random.Random(5150)
    agree = 0
    for _ in range(150):
        world = random_world(rng, rng.randint(2, 4))
        c1, _ = split_world(rng, world, 2)
        if not c1.nodes:
            continue
        c2 = mutate(rng, c1)
        bound = dict(c1.inflow)
        if sum(3 if v is OMEGA else v for v in bound.values()) > 6:
            continue
        oracle = brute_force_transformer_eq(c1, c2, bound)
        verdict = transformer_eq(c1, c2, bound, PC)
        if verdict == "unknown":
            continue
        assert (verdict == "yes") == oracle
        agree += 1
    assert agree > 60
