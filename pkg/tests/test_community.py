import itertools

import numpy as np
import pytest

from kcnn.community import (
    ModularityUndefinedError,
    Partition,
    community_node_sets,
    extract_patches,
    louvain,
    louvain_levels,
    modularity,
    write_community_csv,
)
from kcnn.graphs import LabeledGraph

from oracles import modularity_double_sum, random_labeled_graph


def two_triangles():
    return LabeledGraph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)], [0] * 6)


def two_cliques_bridged(k=5):
    edges = [(u, v) for u in range(k) for v in range(u + 1, k)]
    edges += [(u + k, v + k) for u in range(k) for v in range(u + 1, k)]
    edges.append((0, k))
    return LabeledGraph(2 * k, edges, [0] * (2 * k))


def complete_graph(n):
    return LabeledGraph(n, [(u, v) for u in range(n) for v in range(u + 1, n)], [0] * n)


def test_modularity_two_triangles_split():
    part = Partition(np.array([0, 0, 0, 1, 1, 1]), 0.0)
    assert modularity(two_triangles(), part) == pytest.approx(0.5)


def test_modularity_single_community_is_zero():
    g = random_labeled_graph(np.random.default_rng(0), max_nodes=10)
    while g.num_edges == 0:
        g = random_labeled_graph(np.random.default_rng(1), max_nodes=10)
    part = Partition(np.zeros(g.num_nodes, dtype=np.int64), 0.0)
    assert modularity(g, part) == pytest.approx(0.0, abs=1e-12)


def test_modularity_matches_double_sum_oracle():
    rng = np.random.default_rng(7)
    for _ in range(25):
        g = random_labeled_graph(rng, max_nodes=10)
        if g.num_edges == 0:
            continue
        comm = rng.integers(0, 3, g.num_nodes)
        comm = comm - comm.min()
        # make ids contiguous
        _, comm = np.unique(comm, return_inverse=True)
        part = Partition(comm.astype(np.int64), 0.0)
        assert modularity(g, part) == pytest.approx(modularity_double_sum(g, comm), abs=1e-12)


def test_triangle_bipartition_is_optimal_two_block():
    g = two_triangles()
    best = -1.0
    for assignment in itertools.product([0, 1], repeat=5):
        comm = np.array([0] + list(assignment), dtype=np.int64)
        if comm.max() == 0:
            continue
        q = modularity_double_sum(g, comm)
        best = max(best, q)
        assert q <= 0.5 + 1e-12
    assert best == pytest.approx(0.5)
    # and any split of one triangle is strictly worse
    split = Partition(np.array([0, 0, 1, 1, 1, 1]), 0.0)
    assert modularity(g, split) < 0.5


def test_modularity_edgeless_rejected():
    g = LabeledGraph(3, [], [0, 0, 0])
    with pytest.raises(ModularityUndefinedError):
        modularity(g, Partition(np.zeros(3, dtype=np.int64), 0.0))


def exhaustive_best_modularity(g, max_blocks):
    # node 0 fixed in block 0 (relabeling symmetry)
    best = -1.0
    n = g.num_nodes
    for assignment in itertools.product(range(max_blocks), repeat=n - 1):
        arr = np.array((0,) + assignment)
        best = max(best, modularity_double_sum(g, arr))
    return best


def test_louvain_two_bridged_cliques():
    g = two_cliques_bridged(5)
    part = louvain(g, seed=1)
    assert part.num_communities == 2
    sets = [sorted(s) for s in community_node_sets(part)]
    assert sets == [[0, 1, 2, 3, 4], [5, 6, 7, 8, 9]]
    # exhaustive: that bipartition maximizes Q among all <=3-block partitions
    assert part.modularity == pytest.approx(exhaustive_best_modularity(g, 3))


def test_louvain_single_clique():
    part = louvain(complete_graph(5), seed=0)
    assert part.num_communities == 1


def test_louvain_edgeless_and_isolated():
    g = LabeledGraph(4, [], [0] * 4)
    part = louvain(g, seed=0)
    assert part.num_communities == 4
    assert part.modularity == 0.0
    g2 = LabeledGraph(4, [(0, 1)], [0] * 4)  # nodes 2, 3 isolated
    part2 = louvain(g2, seed=0)
    sets = community_node_sets(part2)
    assert [2] in sets and [3] in sets


def test_louvain_deterministic():
    rng = np.random.default_rng(5)
    for _ in range(5):
        g = random_labeled_graph(rng, max_nodes=30, p=0.2)
        a = louvain(g, seed=42)
        b = louvain(g, seed=42)
        assert np.array_equal(a.community_of, b.community_of)
        assert a.modularity == b.modularity


def test_louvain_partition_recomputable():
    g = two_cliques_bridged(4)
    part = louvain(g, seed=3)
    assert part.modularity == pytest.approx(modularity(g, part))


def test_levels_monotone_and_aggregation_invariant():
    rng = np.random.default_rng(11)
    for _ in range(30):
        g = random_labeled_graph(rng, max_nodes=25, p=0.2)
        if g.num_edges == 0:
            continue
        levels = louvain_levels(g, seed=7)
        assert levels
        prev = -1.0
        for level in levels:
            assert level.modularity >= prev - 1e-12
            assert level.aggregated_modularity == pytest.approx(level.modularity, abs=1e-9)
            prev = level.modularity


def test_extract_patches_partition_and_order():
    g = two_triangles()
    patches = extract_patches(g, seed=0)
    assert len(patches) == 2
    for p in patches:
        assert p.num_nodes == 3
        assert p.num_edges == 3
    big = complete_graph(5)
    assert len(extract_patches(big, seed=0)) == 1
    # patches partition the node set
    rng = np.random.default_rng(13)
    for _ in range(10):
        rg = random_labeled_graph(rng, max_nodes=20, p=0.25)
        part = louvain(rg, seed=9)
        sets = community_node_sets(part)
        all_nodes = sorted(n for s in sets for n in s)
        assert all_nodes == list(range(rg.num_nodes))
        sizes = [len(s) for s in sets]
        assert sizes == sorted(sizes, reverse=True)


def test_community_csv(tmp_path):
    part = louvain(two_triangles(), seed=0)
    path = tmp_path / "comm.csv"
    write_community_csv(part, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "node_id,community_id"
    assert len(lines) == 7
