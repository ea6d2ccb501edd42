"""Explicit-heap keyset oracle: insets via the flow fixpoint make keysets
disjoint, contents stay inside keysets, and localization agrees with
brute-force membership, on all corpus-shaped small heaps."""

import itertools

import pytest

from linset.flow import harris_generator, bst_generator, HeapGraph
from linset.intervals import IntervalUnion, MINUS_INF, PLUS_INF
from linset.specs import ExplicitHeap

FULL = IntervalUnion.full()


def list_heap(chain, marked=(), extra=()):
    """chain: [(name, key)] linked in order, tail self-linked; extra: (x, next)."""
    dval, pval = {}, {}
    for i, (name, key) in enumerate(chain):
        dval[name] = {"key": key, "mark": name in marked}
        nxt = chain[i + 1][0] if i + 1 < len(chain) else name
        pval[name] = {"next": nxt}
    for x, nxt in extra:
        pval[x] = {"next": nxt}
    return ExplicitHeap(HeapGraph(dval, pval), chain[0][0], harris_generator, FULL)


def fig_state_3_9():
    """The running-example state holding {3, 9} with a marked segment."""
    return list_heap(
        [("head", MINUS_INF), ("n3", 3), ("n4", 4), ("n6", 6), ("n7", 7), ("n9", 9), ("tail", PLUS_INF)],
        marked={"n4", "n6", "n7"},
    )


def hindsight_states():
    """States from the two interleaved search(5) executions ({2,5} initially)."""
    base = [("n1", MINUS_INF), ("n2", 2), ("n3", 5), ("n4", PLUS_INF)]
    s1 = list_heap(base)
    s2_marked = list_heap(base, marked={"n3"})
    # n3 unlinked: n2 -> n4 directly, n3 still points at n4
    s3 = list_heap(
        [("n1", MINUS_INF), ("n2", 2), ("n4", PLUS_INF)],
        extra=[("n3", "n4")],
    )
    s3.heap.dval["n3"] = {"key": 5, "mark": True}
    return [s1, s2_marked, s3]


def unlink_mid_states():
    """Marked-segment shapes as seen mid-traversal."""
    out = []
    for seg in range(0, 3):
        chain = [("head", MINUS_INF), ("l", 2)]
        marked = set()
        for i in range(seg):
            chain.append((f"m{i}", 3 + i))
            marked.add(f"m{i}")
        chain += [("r", 8), ("tail", PLUS_INF)]
        out.append(list_heap(chain, marked))
    return out


ALL_HEAPS = [fig_state_3_9()] + hindsight_states() + unlink_mid_states()
PROBES = [MINUS_INF, PLUS_INF] + list(range(0, 11))


@pytest.mark.parametrize("h", ALL_HEAPS, ids=lambda h: ",".join(sorted(map(str, h.heap.nodes))))
def test_keyset_invariants(h):
    assert h.check_keyset_invariants(PROBES) == []


@pytest.mark.parametrize("h", ALL_HEAPS, ids=lambda h: ",".join(sorted(map(str, h.heap.nodes))))
def test_keysets_partition_operation_keys(h):
    # every finite operation key is in exactly one keyset
    for k in range(0, 11):
        owners = [x for x in h.heap.nodes if h.keyset(x).contains(k)]
        assert len(owners) == 1, (k, owners)


@pytest.mark.parametrize("h", ALL_HEAPS, ids=lambda h: ",".join(sorted(map(str, h.heap.nodes))))
def test_localize_agrees_with_brute_force(h):
    contents = h.global_contents()
    for k in range(0, 11):
        local = h.localize(k)
        assert local is not None
        assert local == (k in contents), (k, contents)


def test_fig_state_keysets():
    h = fig_state_3_9()
    # marked nodes that are still linked keep keyset slices but empty contents
    assert h.keyset("n3") == IntervalUnion.interval(MINUS_INF, 3, lo_open=True)
    assert h.keyset("n9") == IntervalUnion.interval(8, 9)
    for marked in ("n4", "n6", "n7"):
        assert not h.keyset(marked).is_empty()
        assert h.contents(marked).is_empty()
    assert h.global_contents() == {3, 9}


def test_unlinked_node_keeps_empty_keyset():
    h = hindsight_states()[2]
    assert h.insets()["n3"].is_empty()
    assert h.keyset("n3").is_empty()
    assert h.keyset("n4") == IntervalUnion.interval(2, PLUS_INF, lo_open=True)


def test_explicit_bst_oracle():
    """FEMRS-shaped tree: left/right cuts also partition the keys."""
    dval = {
        "root": {"key": 5, "mark": False},
        "a": {"key": 2, "mark": False},
        "b": {"key": 8, "mark": True},
        "c": {"key": 3, "mark": False},
    }
    pval = {"root": {"left": "a", "right": "b"}, "a": {"right": "c"}}
    h = ExplicitHeap(HeapGraph(dval, pval), "root", bst_generator, FULL)
    assert h.check_keyset_invariants(PROBES) == []
    for k in range(0, 11):
        owners = [x for x in h.heap.nodes if h.keyset(x).contains(k)]
        assert len(owners) == 1, (k, owners)
        assert h.localize(k) == (k in h.global_contents())
    assert h.global_contents() == {5, 2, 3}
