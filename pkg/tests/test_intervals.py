from hypothesis import given, strategies as st

from linset.intervals import IntervalUnion, MINUS_INF, PLUS_INF


def test_interval_merge_adjacent():
    a = IntervalUnion.interval(3, 5, lo_open=True)  # (3,5] == [4,5]
    b = IntervalUnion.interval(6, 8)
    assert a.union(b) == IntervalUnion.interval(4, 8)


def test_open_bounds_only_at_infinity():
    u = IntervalUnion.interval(MINUS_INF, 5, lo_open=True)
    assert not u.contains(MINUS_INF)
    assert u.contains(-100) and u.contains(5) and not u.contains(6)


def test_strip_below():
    u = IntervalUnion.interval(MINUS_INF, PLUS_INF)
    assert u.strip_below(3) == IntervalUnion.above(3)
    assert IntervalUnion.above(3).strip_below(8) == IntervalUnion.above(8)
    assert IntervalUnion.above(3).strip_below(PLUS_INF).is_empty()


def test_minus_and_subset():
    full = IntervalUnion.full()
    lo = IntervalUnion.interval(MINUS_INF, 4)
    hi = full.minus(lo)
    assert hi == IntervalUnion.above(4)
    assert hi.subset(full) and not full.subset(hi)


def test_singleton_gap_not_merged():
    a = IntervalUnion.interval(MINUS_INF, MINUS_INF)
    b = IntervalUnion.singleton(5)
    u = a.union(b)
    assert len(u.spans) == 2
    assert not u.contains(0)


spans_st = st.lists(
    st.tuples(st.integers(-8, 8), st.integers(-8, 8)).map(lambda p: (min(p), max(p))),
    max_size=4,
)


@given(spans_st, spans_st)
def test_normal_form_is_canonical(raw_a, raw_b):
    a = IntervalUnion.of(raw_a)
    b = IntervalUnion.of(raw_b)
    # pointwise equality over a probe range decides structural equality
    probes = list(range(-10, 11)) + [MINUS_INF, PLUS_INF]
    pointwise_equal = all(a.contains(p) == b.contains(p) for p in probes)
    assert pointwise_equal == (a == b)


@given(spans_st, spans_st)
def test_union_inter_roundtrip(raw_a, raw_b):
    a = IntervalUnion.of(raw_a)
    b = IntervalUnion.of(raw_b)
    assert a.union(b).inter(a) == a
    assert a.minus(b).union(a.inter(b)) == a


@given(spans_st)
def test_normalize_idempotent(raw):
    a = IntervalUnion.of(raw)
    again = IntervalUnion.empty()
    for s in a.spans:
        again = again.union(IntervalUnion((s,)))
    assert again == a
