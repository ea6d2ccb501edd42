"""Integer difference-logic consistency with conflict cores.

Constraints have the form x - y <= c (x, y variable ids, c int).  A set of
such constraints is satisfiable over the integers iff the graph with an edge
y -> x of weight c per constraint has no negative cycle.
"""

from __future__ import annotations


def check(constraints: list[tuple[int, int, int, object]]) -> list | None:
    """Each constraint is (x, y, c, tag) meaning x - y <= c.

    Returns None when satisfiable, otherwise the list of tags on a negative
    cycle (a minimal-ish unsat core).
    """
    nodes: set[int] = set()
    for x, y, _c, _t in constraints:
        nodes.add(x)
        nodes.add(y)
    if not nodes:
        return None
    # Bellman-Ford from a virtual source connected to all nodes with weight 0.
    dist = {v: 0 for v in nodes}
    pred: dict[int, tuple[int, object]] = {}
    last_changed = None
    for _ in range(len(nodes)):
        last_changed = None
        for x, y, c, tag in constraints:
            if dist[y] + c < dist[x]:
                dist[x] = dist[y] + c
                pred[x] = (y, tag)
                last_changed = x
        if last_changed is None:
            return None
    # negative cycle: walk predecessors from last_changed n times to land on it
    v = last_changed
    for _ in range(len(nodes)):
        v = pred[v][0]
    core = []
    u = v
    while True:
        y, tag = pred[u]
        core.append(tag)
        u = y
        if u == v:
            break
    return core
