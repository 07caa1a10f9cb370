"""Dinic maximum flow over adjacency lists.

Capacities may be floats or exact rationals; the algorithm only adds,
subtracts and compares them, so `fractions.Fraction` networks solve
exactly.  Returns the flow value and the source side of a minimum cut
(residual reachability after termination).
"""
from __future__ import annotations

from collections import deque
from typing import Sequence


def dinic_max_flow(num_nodes: int, edges: Sequence[tuple[int, int, object]],
                   source: int, sink: int):
    """Max flow for directed `edges` of (u, v, capacity).

    Returns (flow_value, edge_flows, source_side) where edge_flows aligns
    with the input edge order and source_side is the set of nodes reachable
    from the source in the final residual graph.
    """
    to: list[int] = []
    cap: list = []
    adj: list[list[int]] = [[] for _ in range(num_nodes)]
    for u, v, c in edges:
        if c < 0:
            raise ValueError("negative capacity")
        adj[u].append(len(to)); to.append(v); cap.append(c)
        adj[v].append(len(to)); to.append(u); cap.append(c * 0)

    total = cap[0] * 0 if cap else 0  # zero of the capacity type
    level = [0] * num_nodes
    it = [0] * num_nodes

    def bfs() -> bool:
        for i in range(num_nodes):
            level[i] = -1
        level[source] = 0
        dq = deque([source])
        while dq:
            u = dq.popleft()
            for eid in adj[u]:
                v = to[eid]
                if cap[eid] > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    dq.append(v)
        return level[sink] >= 0

    def dfs(u, pushed):
        if u == sink:
            return pushed
        while it[u] < len(adj[u]):
            eid = adj[u][it[u]]
            v = to[eid]
            if cap[eid] > 0 and level[v] == level[u] + 1:
                d = dfs(v, min(pushed, cap[eid]))
                if d > 0:
                    cap[eid] -= d
                    cap[eid ^ 1] += d
                    return d
            it[u] += 1
        return pushed * 0

    bottleneck_bound = _infinity_like([cap[2 * i] for i in range(len(edges))])
    flow = total
    while bfs():
        it = [0] * num_nodes
        while True:
            pushed = dfs(source, bottleneck_bound)
            if pushed <= 0:
                break
            flow = flow + pushed

    # residual reachability gives the source side of a minimum cut
    seen = [False] * num_nodes
    seen[source] = True
    dq = deque([source])
    while dq:
        u = dq.popleft()
        for eid in adj[u]:
            v = to[eid]
            if cap[eid] > 0 and not seen[v]:
                seen[v] = True
                dq.append(v)
    source_side = {i for i, s in enumerate(seen) if s}

    edge_flows = [cap[2 * i + 1] for i in range(len(edges))]
    return flow, edge_flows, source_side


def _infinity_like(caps: list):
    """An upper bound on any augmenting-path bottleneck."""
    bound = None
    for c in caps:
        bound = c if bound is None else bound + c
    if bound is None:
        return 1
    return bound + 1
