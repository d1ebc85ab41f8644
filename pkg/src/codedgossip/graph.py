"""Graph container and the topology generators used in the experiments.

Node ids are dense integers ``0..N-1``: row-major for grids, level-order for
trees, draw order for random geometric graphs.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph with a per-node forwarding permission mask.

    ``forward_mask[v]`` is False for nodes that never relay a packet (tree
    leaves). Such nodes still receive packets.
    """

    node_count: int
    adjacency: tuple[tuple[int, ...], ...]
    forward_mask: tuple[bool, ...]
    positions: tuple[tuple[float, float], ...] | None = None
    meta: Mapping[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.node_count < 1:
            raise ValueError("graph needs at least one node")
        if len(self.adjacency) != self.node_count:
            raise ValueError("adjacency length does not match node_count")
        if len(self.forward_mask) != self.node_count:
            raise ValueError("forward_mask length does not match node_count")
        if self.positions is not None and len(self.positions) != self.node_count:
            raise ValueError("positions length does not match node_count")
        for v, nbrs in enumerate(self.adjacency):
            if list(nbrs) != sorted(set(nbrs)):
                raise ValueError(f"neighbors of {v} must be sorted and unique")
            for u in nbrs:
                if u == v:
                    raise ValueError(f"self-loop at node {v}")
                if not 0 <= u < self.node_count:
                    raise ValueError(f"neighbor id {u} out of range")
                if v not in self.adjacency[u]:
                    raise ValueError(f"edge ({v}, {u}) is not symmetric")

    @classmethod
    def from_edges(
        cls,
        node_count: int,
        edges: Iterable[Sequence[int]],
        forward_mask: Sequence[bool] | None = None,
        positions: Sequence[Sequence[float]] | None = None,
        meta: Mapping[str, object] | None = None,
    ) -> "Graph":
        nbrs: list[set[int]] = [set() for _ in range(node_count)]
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            nbrs[u].add(v)
            nbrs[v].add(u)
        mask = [True] * node_count if forward_mask is None else [bool(b) for b in forward_mask]
        pos = None
        if positions is not None:
            pos = tuple((float(x), float(y)) for x, y in positions)
        return cls(
            node_count=node_count,
            adjacency=tuple(tuple(sorted(s)) for s in nbrs),
            forward_mask=tuple(mask),
            positions=pos,
            meta=dict(meta or {}),
        )

    @property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, nbrs in enumerate(self.adjacency) for v in nbrs if u < v]

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) arrays for the compiled kernels."""
        indptr = np.zeros(self.node_count + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(a) for a in self.adjacency])
        indices = np.fromiter(
            (u for a in self.adjacency for u in a), dtype=np.int64, count=int(indptr[-1])
        )
        return indptr, indices

    @cached_property
    def mask_array(self) -> np.ndarray:
        return np.array(self.forward_mask, dtype=np.bool_)

    def to_json(self) -> dict:
        doc: dict = {
            "nodes": self.node_count,
            "edges": [list(e) for e in self.edges()],
            "forward_mask": list(self.forward_mask),
        }
        if self.positions is not None:
            doc["positions"] = [list(p) for p in self.positions]
        if self.meta:
            doc["topology"] = dict(self.meta)
        return doc

    @classmethod
    def from_json(cls, doc: Mapping) -> "Graph":
        return cls.from_edges(
            int(doc["nodes"]),
            doc["edges"],
            forward_mask=doc.get("forward_mask"),
            positions=doc.get("positions"),
            meta=doc.get("topology"),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Graph":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class GridSpec:
    rows: int
    cols: int
    horizontal_row_period: int | None = None

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid needs rows, cols >= 1")
        q = self.horizontal_row_period
        if q is not None and not 1 <= q <= max(self.rows - 1, 1):
            raise ValueError(f"row period must lie in [1, rows-1], got {q}")


@dataclass(frozen=True)
class RggSpec:
    node_count: int
    width: float
    height: float
    radius: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.node_count < 1:
            raise ValueError("node_count must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("deployment region must have positive width and height")
        if self.radius < 0:
            raise ValueError("radius must be non-negative")


@dataclass(frozen=True)
class TreeSpec:
    degree: int = 2
    height: int = 1

    def __post_init__(self) -> None:
        if self.degree < 2:
            raise ValueError("tree degree must be >= 2")
        if self.height < 1:
            raise ValueError("tree height must be >= 1")

    @property
    def node_count(self) -> int:
        return sum(self.degree**level for level in range(self.height + 1))


def gen_grid(spec: GridSpec) -> Graph:
    """Rectangular grid; with a row period ``q`` only rows ``j % q == 0`` keep
    their horizontal edges (vertical edges are always present)."""
    rows, cols, q = spec.rows, spec.cols, spec.horizontal_row_period
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if r + 1 < rows:
                edges.append((v, v + cols))
            if c + 1 < cols and (q is None or r % q == 0):
                edges.append((v, v + 1))
    meta = {"kind": "grid", "rows": rows, "cols": cols}
    if q is not None:
        meta["row_period"] = q
    return Graph.from_edges(rows * cols, edges, meta=meta)


def grid_center(rows: int, cols: int) -> int:
    return (rows // 2) * cols + cols // 2


def gen_rgg(spec: RggSpec) -> Graph:
    rng = np.random.default_rng(spec.seed)
    xy = np.column_stack(
        [rng.uniform(0.0, spec.width, spec.node_count), rng.uniform(0.0, spec.height, spec.node_count)]
    )
    diff = xy[:, None, :] - xy[None, :, :]
    close = np.einsum("ijk,ijk->ij", diff, diff) <= spec.radius**2
    np.fill_diagonal(close, False)
    us, vs = np.nonzero(np.triu(close))
    meta = {
        "kind": "rgg",
        "width": spec.width,
        "height": spec.height,
        "radius": spec.radius,
        "seed": spec.seed,
    }
    return Graph.from_edges(spec.node_count, zip(us.tolist(), vs.tolist()), positions=xy.tolist(), meta=meta)


def gen_tree(spec: TreeSpec) -> Graph:
    """Complete ``d``-ary tree in level order; root is node 0 and leaves
    (level ``H``) are barred from forwarding."""
    d, n = spec.degree, spec.node_count
    first_leaf = n - d**spec.height
    edges = [(v, d * v + i) for v in range(first_leaf) for i in range(1, d + 1)]
    mask = [v < first_leaf for v in range(n)]
    return Graph.from_edges(n, edges, forward_mask=mask, meta={"kind": "tree", "degree": d, "height": spec.height})


def tree_levels(spec: TreeSpec) -> list[int]:
    """Level of every node of ``gen_tree(spec)``."""
    levels = []
    for level in range(spec.height + 1):
        levels.extend([level] * spec.degree**level)
    return levels


def largest_component(g: Graph, source: int) -> tuple[int, frozenset[int]]:
    """Size and members of the connected component containing ``source``."""
    if not 0 <= source < g.node_count:
        raise ValueError(f"source {source} out of range")
    seen = {source}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for u in g.adjacency[v]:
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return len(seen), frozenset(seen)


def default_source(g: Graph, seed: int = 0) -> int:
    """Center node for grids, the root for trees, a seeded-random node otherwise."""
    kind = g.meta.get("kind")
    if kind == "grid":
        return grid_center(int(g.meta["rows"]), int(g.meta["cols"]))
    if kind == "tree":
        return 0
    return int(np.random.default_rng(seed).integers(g.node_count))
