"""Undirected labeled graphs: the unit every stage of the pipeline operates on."""

from dataclasses import dataclass, field

import numpy as np


@dataclass(eq=False)
class LabeledGraph:
    """Undirected graph with integer node labels.

    Edges are canonicalized on construction: endpoints sorted within each pair,
    pairs sorted lexicographically, duplicates removed. Self-loops and
    out-of-range endpoints are rejected. Instances are treated as immutable
    after construction.
    """

    num_nodes: int
    edges: np.ndarray  # (E, 2) int64, u < v, lexicographically sorted
    node_labels: np.ndarray  # (num_nodes,) int64
    _adjacency: list | None = field(default=None, repr=False, compare=False)

    def __init__(self, num_nodes, edges, node_labels):
        if num_nodes < 1:
            raise ValueError("graph must have at least one node")
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        labels = np.asarray(node_labels, dtype=np.int64)
        if labels.shape != (num_nodes,):
            raise ValueError(f"expected {num_nodes} node labels, got {labels.shape}")
        if edges.size:
            if edges.min() < 0 or edges.max() >= num_nodes:
                raise ValueError("edge endpoint out of range")
            if (edges[:, 0] == edges[:, 1]).any():
                raise ValueError("self-loops are not allowed")
            edges = np.sort(edges, axis=1)
            edges = np.unique(edges, axis=0)
        self.num_nodes = int(num_nodes)
        self.edges = edges
        self.node_labels = labels
        self._adjacency = None
        self.edges.setflags(write=False)
        self.node_labels.setflags(write=False)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.num_nodes).astype(np.int64)

    def adjacency(self) -> list:
        """Sorted neighbor array per node (built once, cached)."""
        if self._adjacency is None:
            adj = [[] for _ in range(self.num_nodes)]
            for u, v in self.edges:
                adj[u].append(v)
                adj[v].append(u)
            self._adjacency = [np.array(sorted(a), dtype=np.int64) for a in adj]
        return self._adjacency

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledGraph):
            return NotImplemented
        return (
            self.num_nodes == other.num_nodes
            and self.edges.shape == other.edges.shape
            and bool(np.array_equal(self.edges, other.edges))
            and bool(np.array_equal(self.node_labels, other.node_labels))
        )


def induced_subgraph(g: LabeledGraph, nodes) -> LabeledGraph:
    """Subgraph on ``nodes`` (reindexed 0..k-1 in ascending node order),
    keeping exactly the edges of ``g`` internal to the set."""
    nodes = sorted(set(int(n) for n in nodes))
    if not nodes:
        raise ValueError("node set must be non-empty")
    if nodes[0] < 0 or nodes[-1] >= g.num_nodes:
        raise ValueError("node index out of range")
    index = np.full(g.num_nodes, -1, dtype=np.int64)
    node_arr = np.array(nodes, dtype=np.int64)
    index[node_arr] = np.arange(len(nodes))
    if g.num_edges:
        keep = (index[g.edges[:, 0]] >= 0) & (index[g.edges[:, 1]] >= 0)
        sub_edges = index[g.edges[keep]]
    else:
        sub_edges = np.empty((0, 2), dtype=np.int64)
    return LabeledGraph(len(nodes), sub_edges, g.node_labels[node_arr])
