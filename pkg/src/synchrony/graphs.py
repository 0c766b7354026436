"""Interaction graphs: undirected binary adjacency with zero diagonal."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GraphSpec:
    """A group interaction pattern.

    adjacency[i, j] == 1.0 means node j influences node i.  Entries are 0/1
    floats (float64 keeps the integration kernels branch-free) and the
    diagonal is zero.
    """

    n: int
    adjacency: np.ndarray = field(repr=False)

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=np.float64)
        if adj.shape != (self.n, self.n):
            raise ValueError(f"adjacency shape {adj.shape} != ({self.n}, {self.n})")
        if np.any(np.diag(adj) != 0.0):
            raise ValueError("adjacency diagonal must be zero")
        if not np.all((adj == 0.0) | (adj == 1.0)):
            raise ValueError("adjacency entries must be 0 or 1")
        object.__setattr__(self, "adjacency", adj)

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.adjacency, self.adjacency.T))

    def to_lists(self) -> list[list[int]]:
        return [[int(v) for v in row] for row in self.adjacency]

    @classmethod
    def from_lists(cls, rows: list[list[int]]) -> "GraphSpec":
        arr = np.asarray(rows, dtype=np.float64)
        return cls(n=arr.shape[0], adjacency=arr)


def make_ring_graph(n: int) -> GraphSpec:
    """Cycle graph: node i linked to (i-1) mod n and (i+1) mod n."""
    if n < 3:
        raise ValueError(f"a ring needs at least 3 nodes, got {n}")
    adj = np.zeros((n, n))
    idx = np.arange(n)
    adj[idx, (idx + 1) % n] = 1.0
    adj[idx, (idx - 1) % n] = 1.0
    return GraphSpec(n=n, adjacency=adj)


def make_complete_graph(n: int) -> GraphSpec:
    """All-to-all graph without self loops."""
    if n < 2:
        raise ValueError(f"a complete graph needs at least 2 nodes, got {n}")
    adj = np.ones((n, n)) - np.eye(n)
    return GraphSpec(n=n, adjacency=adj)


def attach_avatar(graph: GraphSpec, neighbor_set) -> GraphSpec:
    """Append one node, bidirectionally linked to `neighbor_set`.

    The new node gets index graph.n; existing edges are untouched.
    """
    neighbors = sorted(set(int(i) for i in neighbor_set))
    if not neighbors:
        raise ValueError("neighbor_set must be nonempty")
    if neighbors[0] < 0 or neighbors[-1] >= graph.n:
        raise ValueError(f"neighbor_set {neighbors} out of range for n={graph.n}")
    n = graph.n + 1
    adj = np.zeros((n, n))
    adj[: graph.n, : graph.n] = graph.adjacency
    for i in neighbors:
        adj[i, n - 1] = 1.0
        adj[n - 1, i] = 1.0
    return GraphSpec(n=n, adjacency=adj)


def replace_node_with_avatar(graph: GraphSpec, node: int) -> tuple[GraphSpec, int]:
    """Hand a node's slot (all of its edges) to an avatar.

    The topology is unchanged; the returned graph is identical and the second
    value is the index now considered the avatar.  Kept explicit so callers
    document the replacement rather than silently reusing indices.
    """
    if not 0 <= node < graph.n:
        raise ValueError(f"node {node} out of range for n={graph.n}")
    return GraphSpec(n=graph.n, adjacency=graph.adjacency.copy()), node
