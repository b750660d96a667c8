import numpy as np
import pytest

from kcnn.datasets import (
    DatasetFormatError,
    DatasetLoadError,
    GraphDataset,
    generate_synthetic,
    infer_tu_name,
    load_tu_dataset,
    save_tu_dataset,
)
from kcnn.graphs import LabeledGraph, induced_subgraph


def write_two_triangles(directory, name="TOY"):
    """Smallest well-formed TU fixture: two labeled triangles."""
    (directory / f"{name}_A.txt").write_text(
        "1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n4, 5\n5, 4\n5, 6\n6, 5\n4, 6\n6, 4\n"
    )
    (directory / f"{name}_graph_indicator.txt").write_text("1\n1\n1\n2\n2\n2\n")
    (directory / f"{name}_graph_labels.txt").write_text("1\n-1\n")
    (directory / f"{name}_node_labels.txt").write_text("0\n1\n2\n0\n1\n2\n")


def test_load_two_triangles(tmp_path):
    write_two_triangles(tmp_path)
    ds = load_tu_dataset(tmp_path, "TOY")
    assert len(ds) == 2
    assert ds.num_classes == 2
    assert ds.class_labels.tolist() == [1, 0]  # remapped: -1 -> 0, 1 -> 1
    for g in ds.graphs:
        assert g.num_nodes == 3
        assert g.num_edges == 3
    assert ds.graphs[0].node_labels.tolist() == [0, 1, 2]
    assert ds.label_source == "file"


def test_missing_file_names_it(tmp_path):
    write_two_triangles(tmp_path)
    (tmp_path / "TOY_graph_labels.txt").unlink()
    with pytest.raises(DatasetLoadError, match="TOY_graph_labels.txt"):
        load_tu_dataset(tmp_path, "TOY")


def test_node_index_zero_is_format_error(tmp_path):
    write_two_triangles(tmp_path)
    (tmp_path / "TOY_A.txt").write_text("0, 1\n")
    with pytest.raises(DatasetFormatError) as err:
        load_tu_dataset(tmp_path, "TOY")
    assert err.value.line_number == 1


def test_node_index_out_of_range_reports_line(tmp_path):
    write_two_triangles(tmp_path)
    (tmp_path / "TOY_A.txt").write_text("1, 2\n2, 7\n")
    with pytest.raises(DatasetFormatError) as err:
        load_tu_dataset(tmp_path, "TOY")
    assert err.value.line_number == 2


def test_dangling_node_becomes_isolated(tmp_path):
    write_two_triangles(tmp_path)
    # third node of graph 2 appears in no edge
    (tmp_path / "TOY_A.txt").write_text("1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n4, 5\n5, 4\n")
    ds = load_tu_dataset(tmp_path, "TOY")
    assert ds.graphs[1].num_nodes == 3
    assert ds.graphs[1].degrees().tolist() == [1, 1, 0]


def test_degree_labels_when_node_labels_absent(tmp_path):
    write_two_triangles(tmp_path)
    (tmp_path / "TOY_node_labels.txt").unlink()
    ds = load_tu_dataset(tmp_path, "TOY")
    assert ds.label_source == "degree"
    assert ds.graphs[0].node_labels.tolist() == [2, 2, 2]


def test_round_trip(tmp_path):
    ds = generate_synthetic(6, seed=11)
    out = tmp_path / "synth"
    save_tu_dataset(ds, out)
    again = load_tu_dataset(out, "SYNTHETIC")
    assert again == ds
    assert again.name == ds.name
    # a second write is byte-identical
    out2 = tmp_path / "synth2"
    save_tu_dataset(again, out2)
    for f in out.iterdir():
        assert (out2 / f.name).read_bytes() == f.read_bytes()


def test_infer_tu_name(tmp_path):
    write_two_triangles(tmp_path)
    assert infer_tu_name(tmp_path) == "TOY"
    (tmp_path / "OTHER_A.txt").write_text("")
    with pytest.raises(DatasetLoadError):
        infer_tu_name(tmp_path)


def test_synthetic_counts_and_ranges():
    ds = generate_synthetic(40, seed=5)
    assert len(ds) == 40
    assert np.bincount(ds.class_labels).tolist() == [20, 20]
    for g in ds.graphs:
        assert 110 <= g.num_nodes <= 210
    assert ds.label_source == "uniform"
    assert all(g.node_labels.max() == 0 for g in ds.graphs)


def test_synthetic_planted_clique_is_complete():
    ds = generate_synthetic(2, seed=9)
    assert ds.class_labels.tolist() == [0, 1]
    clique_graph = ds.graphs[0]
    planted = range(clique_graph.num_nodes - 10, clique_graph.num_nodes)
    k10 = induced_subgraph(clique_graph, planted)
    assert k10.num_edges == 45  # complete graph on 10 nodes
    star_graph = ds.graphs[1]
    planted = range(star_graph.num_nodes - 10, star_graph.num_nodes)
    star = induced_subgraph(star_graph, planted)
    assert star.num_edges == 9
    assert sorted(star.degrees()) == [1] * 9 + [9]


def test_synthetic_deterministic():
    a = generate_synthetic(10, seed=123)
    b = generate_synthetic(10, seed=123)
    assert a == b
    c = generate_synthetic(10, seed=124)
    assert a != c


def test_synthetic_rejects_odd_count():
    with pytest.raises(ValueError):
        generate_synthetic(11, seed=0)


def test_synthetic_er_density_concentrates():
    ds = generate_synthetic(1000, seed=2)
    densities = []
    for g in ds.graphs:
        n = g.num_nodes - 10
        er_edges = int((g.edges.max(axis=1) < n).sum())
        densities.append(er_edges / (n * (n - 1) / 2))
    assert abs(np.mean(densities) - 0.1) < 0.01


def test_dataset_validation():
    g = LabeledGraph(2, [(0, 1)], [0, 0])
    with pytest.raises(ValueError):
        GraphDataset([g, g], [0, 2], name="bad")
    with pytest.raises(ValueError):
        GraphDataset([g], [0, 1], name="bad")
