"""Exact reach probabilities on small graphs by enumerating every activation
pattern of the nodes allowed to relay.

Independent of the simulation kernels: reachability here is computed by
repeated boolean propagation over the adjacency matrix, batched over
patterns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from codedgossip.engine import CodingConfig
from codedgossip.graph import Graph
from codedgossip.tree_analytics import binomial_tail

MAX_ORACLE_NODES = 20
_CHUNK = 1 << 15


@dataclass(frozen=True)
class ReachProfile:
    """``q[v]``: probability that node ``v`` receives a given packet."""

    q: np.ndarray
    p: float
    source: int


def exact_reach_probabilities(g: Graph, source: int, p: float, max_nodes: int = MAX_ORACLE_NODES) -> ReachProfile:
    if g.node_count > max_nodes:
        raise ValueError(f"graph has {g.node_count} nodes; exact enumeration capped at {max_nodes}")
    if not 0 <= source < g.node_count:
        raise ValueError(f"source {source} out of range")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    N = g.node_count
    adj = np.zeros((N, N), dtype=np.float32)
    for u, v in g.edges():
        adj[u, v] = adj[v, u] = 1.0
    relays = [v for v in range(N) if v != source and g.forward_mask[v]]
    m = len(relays)

    start = np.zeros(N, dtype=bool)
    start[source] = True
    start[list(g.adjacency[source])] = True

    q = np.zeros(N)
    bits = np.arange(m)
    for lo in range(0, 1 << m, _CHUNK):
        codes = np.arange(lo, min(lo + _CHUNK, 1 << m))
        on = ((codes[:, None] >> bits) & 1).astype(bool)
        active = np.zeros((codes.size, N), dtype=bool)
        active[:, relays] = on
        ones = on.sum(axis=1)
        weight = p**ones * (1.0 - p) ** (m - ones)

        reached = np.broadcast_to(start, active.shape).copy()
        while True:
            relaying = (reached & active).astype(np.float32)
            grown = reached | (relaying @ adj > 0)
            if np.array_equal(grown, reached):
                break
            reached = grown
        q += weight @ reached
    q[source] = 1.0
    return ReachProfile(q=np.clip(q, 0.0, 1.0), p=p, source=source)


def exact_expectations(profile: ReachProfile, coding: CodingConfig, g: Graph) -> tuple[float, float]:
    """Exact E[R] and E[T].

    Packets are independent, so node ``v`` holds ``Binomial(n, q_v)`` packets;
    a relay's own decision is independent of whether it was reached.
    """
    expected_receivers = sum(binomial_tail(coding.n, float(qv), coding.k) for qv in profile.q)
    relay_reach = sum(
        float(profile.q[v]) for v in range(g.node_count) if v != profile.source and g.forward_mask[v]
    )
    expected_transmissions = coding.n * (1.0 + profile.p * relay_reach)
    return float(expected_receivers), float(expected_transmissions)


def exact_coverage(g: Graph, coding: CodingConfig, source: int, p: float) -> float:
    er, _ = exact_expectations(exact_reach_probabilities(g, source, p), coding, g)
    return er / g.node_count


def exact_min_p(g: Graph, coding: CodingConfig, source: int, delta: float, tol: float = 1e-6) -> float | None:
    """Least ``p`` with exact coverage >= 1 - delta, or None if unreachable."""
    target = 1.0 - delta
    if exact_coverage(g, coding, source, 1.0) < target:
        return None
    if exact_coverage(g, coding, source, 0.0) >= target:
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if exact_coverage(g, coding, source, mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi
