"""Louvain modularity clustering used as the patch sampler.

Patches are the induced subgraphs of the communities found on each input
graph. The implementation is deterministic for a fixed seed: node visit order
is a seeded shuffle (reshuffled every pass), equal-gain moves keep the current
community, and remaining ties go to the lowest community id.
"""

from dataclasses import dataclass

import numpy as np

from .graphs import LabeledGraph, induced_subgraph

GAIN_TOLERANCE = 1e-7


class ModularityUndefinedError(ValueError):
    """Modularity is undefined for an edgeless graph."""


@dataclass
class Partition:
    """Community assignment (contiguous 0-based ids) plus its modularity."""

    community_of: np.ndarray
    modularity: float

    @property
    def num_communities(self) -> int:
        return int(self.community_of.max()) + 1 if len(self.community_of) else 0


def _assignment_modularity(g: LabeledGraph, community_of) -> float:
    community_of = np.asarray(community_of, dtype=np.int64)
    m = g.num_edges
    num_comms = int(community_of.max()) + 1
    internal = np.zeros(num_comms)
    cu = community_of[g.edges[:, 0]]
    cv = community_of[g.edges[:, 1]]
    np.add.at(internal, cu[cu == cv], 1.0)
    degree_sum = np.zeros(num_comms)
    np.add.at(degree_sum, community_of, g.degrees().astype(float))
    return float(np.sum(internal / m - (degree_sum / (2.0 * m)) ** 2))


def modularity(g: LabeledGraph, part: Partition) -> float:
    """Newman modularity of ``part`` on ``g`` with unit edge weights."""
    if g.num_edges == 0:
        raise ModularityUndefinedError("modularity is undefined for an edgeless graph")
    if len(part.community_of) != g.num_nodes:
        raise ValueError("partition size does not match graph")
    return _assignment_modularity(g, part.community_of)


class _LevelGraph:
    """Weighted graph for one Louvain level.

    ``adj[i][j]`` holds the off-diagonal weight A_ij; ``loops[i]`` holds the
    diagonal A_ii with internal weight counted twice, so that row sums give
    degrees and aggregation preserves modularity exactly.
    """

    def __init__(self, adj, loops):
        self.adj = adj
        self.loops = loops
        self.n = len(adj)
        self.degrees = np.array(
            [loops[i] + sum(adj[i].values()) for i in range(self.n)], dtype=float
        )
        self.total_weight = float(self.degrees.sum())  # equals 2m

    @classmethod
    def from_graph(cls, g: LabeledGraph):
        adj = [dict() for _ in range(g.num_nodes)]
        for u, v in g.edges:
            adj[u][v] = adj[u].get(v, 0.0) + 1.0
            adj[v][u] = adj[v].get(u, 0.0) + 1.0
        return cls(adj, np.zeros(g.num_nodes))

    def singleton_modularity(self) -> float:
        two_m = self.total_weight
        return float(np.sum(self.loops / two_m - (self.degrees / two_m) ** 2))

    def aggregate(self, community_of, num_comms):
        adj = [dict() for _ in range(num_comms)]
        loops = np.zeros(num_comms)
        for i in range(self.n):
            ci = community_of[i]
            loops[ci] += self.loops[i]
            for j, w in self.adj[i].items():
                cj = community_of[j]
                if ci == cj:
                    loops[ci] += w  # ordered sum counts each internal pair twice
                else:
                    adj[ci][cj] = adj[ci].get(cj, 0.0) + w
        return _LevelGraph(adj, loops)


def _local_moves(level: _LevelGraph, rng) -> np.ndarray:
    """One Louvain phase: greedy node moves until no move beats the tolerance."""
    n = level.n
    comm = np.arange(n, dtype=np.int64)
    comm_tot = level.degrees.copy()
    two_m = level.total_weight
    m = two_m / 2.0

    improved = True
    while improved:
        improved = False
        for i in rng.permutation(n):
            ci = int(comm[i])
            ki = level.degrees[i]
            comm_tot[ci] -= ki
            weight_to = {ci: 0.0}
            for j, w in level.adj[i].items():
                weight_to.setdefault(int(comm[j]), 0.0)
                weight_to[int(comm[j])] += w
            # score(c) differs from the modularity gain by the constant 1/m
            stay_score = weight_to[ci] - comm_tot[ci] * ki / two_m
            best_comm, best_score = ci, stay_score
            for c in sorted(weight_to):
                if c == ci:
                    continue
                score = weight_to[c] - comm_tot[c] * ki / two_m
                if score > best_score:
                    best_comm, best_score = c, score
            if best_comm != ci and (best_score - stay_score) / m > GAIN_TOLERANCE:
                comm[i] = best_comm
                comm_tot[best_comm] += ki
                improved = True
            else:
                comm_tot[ci] += ki
    return comm


def _contiguize(values: np.ndarray) -> tuple:
    """Renumber ids by first occurrence; returns (renumbered, count)."""
    mapping = {}
    out = np.empty(len(values), dtype=np.int64)
    for i, v in enumerate(values):
        v = int(v)
        if v not in mapping:
            mapping[v] = len(mapping)
        out[i] = mapping[v]
    return out, len(mapping)


@dataclass
class LouvainLevel:
    """Flat community assignment after one level, with modularity bookkeeping."""

    community_of: np.ndarray
    modularity: float
    aggregated_modularity: float  # singleton modularity of the supergraph


def louvain_levels(g: LabeledGraph, seed: int) -> list:
    """All Louvain levels on ``g``; empty for an edgeless graph."""
    if g.num_edges == 0:
        return []
    rng = np.random.default_rng(seed)
    level = _LevelGraph.from_graph(g)
    flat = np.arange(g.num_nodes, dtype=np.int64)
    q_prev = _assignment_modularity(g, flat)
    levels = []
    while True:
        comm = _local_moves(level, rng)
        comm, num_comms = _contiguize(comm)
        flat = comm[flat]
        q_new = _assignment_modularity(g, flat)
        level = level.aggregate(comm, num_comms)
        levels.append(LouvainLevel(flat.copy(), q_new, level.singleton_modularity()))
        if q_new - q_prev <= GAIN_TOLERANCE:
            break
        q_prev = q_new
    return levels


def louvain(g: LabeledGraph, seed: int) -> Partition:
    """Two-phase Louvain; deterministic for a fixed seed.

    Edgeless graphs return all-singleton communities with modularity defined
    as 0; isolated nodes always end up as singletons.
    """
    if g.num_edges == 0:
        return Partition(np.arange(g.num_nodes, dtype=np.int64), 0.0)
    levels = louvain_levels(g, seed)
    last = levels[-1]
    return Partition(last.community_of, last.modularity)


def community_node_sets(part: Partition) -> list:
    """Node sets per community, ordered by descending size then by the
    smallest member node index (the patch order contract)."""
    groups = {}
    for node, c in enumerate(part.community_of):
        groups.setdefault(int(c), []).append(node)
    return sorted(groups.values(), key=lambda nodes: (-len(nodes), nodes[0]))


def extract_patches(g: LabeledGraph, seed: int) -> list:
    """Induced subgraphs of the Louvain communities of ``g`` (deterministic
    order: descending community size, then ascending smallest member)."""
    part = louvain(g, seed)
    return [induced_subgraph(g, nodes) for nodes in community_node_sets(part)]


def write_community_csv(part: Partition, path) -> None:
    """Debug dump of a community assignment as ``node_id,community_id``."""
    with open(path, "w") as fh:
        fh.write("node_id,community_id\n")
        for node, c in enumerate(part.community_of):
            fh.write(f"{node},{int(c)}\n")
