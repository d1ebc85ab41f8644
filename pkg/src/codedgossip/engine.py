"""One trial of probabilistic forwarding of ``n`` coded packets.

Each non-source node makes one Bernoulli(p) forwarding decision per packet,
independent of when (or from whom) the packet first arrives. A trial is thus
a site percolation per packet: node ``v`` is *active* for packet ``j`` when
``u[j, v] <= p``, and a node receives packet ``j`` when a path of active,
forward-permitted relays links it to the source. The source sends all ``n``
packets unconditionally.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from codedgossip import _kernels
from codedgossip.graph import Graph


@dataclass(frozen=True)
class CodingConfig:
    """``n`` coded packets of which any ``k`` recover the message."""

    k: int
    n: int

    def __post_init__(self) -> None:
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")

    @property
    def rho(self) -> float:
        return (self.n - self.k) / self.k

    @classmethod
    def from_redundancy(cls, k: int, rho: float) -> "CodingConfig":
        if rho < 0:
            raise ValueError("redundancy must be non-negative")
        return cls(k, coded_count(k, rho))


def coded_count(k: int, rho: float) -> int:
    """``round(k * (1 + rho))`` with halves rounded up."""
    # 1e-9 absorbs float noise such as 100 * 1.7 == 169.99999999999997
    return int(math.floor(k * (1.0 + rho) + 0.5 + 1e-9))


@dataclass(frozen=True)
class ProtocolParams:
    p: float
    source: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"forwarding probability must lie in [0, 1], got {self.p}")
        if self.source < 0:
            raise ValueError("source id must be non-negative")


class TrialOutcome(NamedTuple):
    receivers: int
    transmissions: int


def trial_uniforms(seed: int, trial: int, n_packets: int, n_nodes: int) -> np.ndarray:
    """Uniforms for one trial, row ``j`` belonging to packet ``j``.

    The stream is keyed by ``(seed, trial)`` and filled row by row, so the
    first ``m`` rows do not depend on ``n_packets``.
    """
    rng = np.random.default_rng([seed, trial])
    return rng.random((n_packets, n_nodes))


def packet_reach(g: Graph, source: int, active: Sequence[bool]) -> set[int]:
    """Nodes reached by one packet under a fixed activation pattern.

    The source always transmits; other nodes relay only if active and
    forward-permitted.
    """
    if len(active) != g.node_count:
        raise ValueError("activation vector length must equal node count")
    reached = {source}
    queue = deque([source])
    while queue:
        w = queue.popleft()
        if w != source and not (active[w] and g.forward_mask[w]):
            continue
        for x in g.adjacency[w]:
            if x not in reached:
                reached.add(x)
                queue.append(x)
    return reached


def _check(g: Graph, coding: CodingConfig, source: int) -> None:
    if not 0 <= source < g.node_count:
        raise ValueError(f"source {source} out of range for {g.node_count} nodes")


def run_trial(
    g: Graph,
    coding: CodingConfig,
    proto: ProtocolParams,
    uniforms: np.ndarray | None = None,
    seed: int = 0,
    trial: int = 0,
) -> TrialOutcome:
    """Simulate one trial packet by packet.

    ``uniforms`` (shape ``(n, N)``) drives the activations; when omitted it is
    drawn with :func:`trial_uniforms`.
    """
    _check(g, coding, proto.source)
    if uniforms is None:
        uniforms = trial_uniforms(seed, trial, coding.n, g.node_count)
    counts = np.zeros(g.node_count, dtype=np.int64)
    transmissions = 0
    for j in range(coding.n):
        active = uniforms[j] <= proto.p
        reach = packet_reach(g, proto.source, active)
        counts[list(reach)] += 1
        transmissions += 1 + sum(
            1 for v in reach if v != proto.source and active[v] and g.forward_mask[v]
        )
    return TrialOutcome(int((counts >= coding.k).sum()), transmissions)


def trial_counts(
    g: Graph,
    source: int,
    k: int,
    packet_counts: Sequence[int],
    p_grid: Sequence[float],
    uniforms: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Coupled receiver/transmission counts for several ``n`` and ``p`` at once.

    Returns two ``(len(packet_counts), len(p_grid))`` integer arrays; entry
    ``[i, g]`` is the count with the first ``packet_counts[i]`` packets at
    forwarding probability ``p_grid[g]``. All entries share ``uniforms``.
    """
    ns = np.asarray(packet_counts, dtype=np.int64)
    grid = np.asarray(p_grid, dtype=np.float64)
    if ns.size == 0 or grid.size == 0:
        raise ValueError("need at least one packet count and one probability")
    if np.any(np.diff(ns) < 0) or np.any(np.diff(grid) < 0):
        raise ValueError("packet counts and probabilities must be ascending")
    if k < 1 or ns[0] < k:
        raise ValueError("every packet count must be >= k >= 1")
    if uniforms.shape[0] < ns[-1] or uniforms.shape[1] != g.node_count:
        raise ValueError("uniforms array too small for the requested packets")
    indptr, indices = g.csr
    return _kernels.trial_counts(
        indptr, indices, g.mask_array, source, np.ascontiguousarray(uniforms, dtype=np.float64), k, ns, grid
    )


def run_trial_coupled(
    g: Graph,
    coding: CodingConfig,
    source: int,
    p_list: Sequence[float],
    uniforms: np.ndarray | None = None,
    seed: int = 0,
    trial: int = 0,
) -> list[TrialOutcome]:
    """One trial evaluated at every ``p`` in ascending ``p_list`` from the
    same uniforms, so receivers and transmissions are monotone in ``p``."""
    _check(g, coding, source)
    if uniforms is None:
        uniforms = trial_uniforms(seed, trial, coding.n, g.node_count)
    receivers, transmissions = trial_counts(g, source, coding.k, [coding.n], p_list, uniforms)
    return [TrialOutcome(int(r), int(t)) for r, t in zip(receivers[0], transmissions[0])]
