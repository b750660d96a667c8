"""Dataset handling: the TU benchmark text format and the synthetic
clique-vs-star generator."""

import os
from dataclasses import dataclass, field

import numpy as np

from .graphs import LabeledGraph


class DatasetLoadError(Exception):
    """A mandatory dataset file is missing or unreadable."""


class DatasetFormatError(Exception):
    """A dataset file has invalid content; carries the file and line number."""

    def __init__(self, path, line_number, message):
        super().__init__(f"{path}:{line_number}: {message}")
        self.path = str(path)
        self.line_number = line_number


@dataclass(eq=False)
class GraphDataset:
    """A collection of labeled graphs with per-graph class labels.

    ``class_labels`` are contiguous in ``[0, num_classes)`` and every class
    occurs at least once. ``label_source`` records how node labels were
    obtained (``file``, ``degree`` or ``uniform``).
    """

    graphs: list
    class_labels: np.ndarray
    name: str
    rng_seed: int = 0
    label_source: str = "file"
    num_classes: int = field(init=False)

    def __post_init__(self):
        self.class_labels = np.asarray(self.class_labels, dtype=np.int64)
        if len(self.class_labels) != len(self.graphs):
            raise ValueError("one class label per graph required")
        if len(self.graphs) == 0:
            raise ValueError("dataset must contain at least one graph")
        classes = np.unique(self.class_labels)
        if classes[0] != 0 or not np.array_equal(classes, np.arange(len(classes))):
            raise ValueError("class labels must be contiguous from 0 and all present")
        self.num_classes = int(len(classes))

    def __len__(self) -> int:
        return len(self.graphs)

    def __eq__(self, other) -> bool:
        # Content identity: graphs and class labels (name/seed are provenance).
        if not isinstance(other, GraphDataset):
            return NotImplemented
        return (
            len(self.graphs) == len(other.graphs)
            and bool(np.array_equal(self.class_labels, other.class_labels))
            and all(a == b for a, b in zip(self.graphs, other.graphs))
        )


def _read_lines(directory, name, suffix, required):
    path = os.path.join(directory, f"{name}_{suffix}.txt")
    if not os.path.isfile(path):
        if required:
            raise DatasetLoadError(f"missing dataset file: {path}")
        return None, path
    with open(path) as fh:
        return [line.strip() for line in fh], path


def _parse_int(text, path, lineno, what):
    try:
        return int(text)
    except ValueError:
        raise DatasetFormatError(path, lineno, f"invalid {what}: {text!r}") from None


def load_tu_dataset(directory, name: str) -> GraphDataset:
    """Load a dataset in the TU text format (1-based indices, one record per
    line).

    Requires ``{name}_A.txt``, ``{name}_graph_indicator.txt`` and
    ``{name}_graph_labels.txt``; ``{name}_node_labels.txt`` is optional. When
    node labels are absent every node is labeled with its degree. Graph class
    labels are remapped to contiguous ``[0, num_classes)``. Nodes that appear
    in the indicator but in no edge become isolated nodes.
    """
    indicator, ind_path = _read_lines(directory, name, "graph_indicator", required=True)
    node_graph = np.empty(len([l for l in indicator if l]), dtype=np.int64)
    n_total = 0
    for lineno, line in enumerate(indicator, start=1):
        if not line:
            continue
        gid = _parse_int(line, ind_path, lineno, "graph id")
        if gid < 1:
            raise DatasetFormatError(ind_path, lineno, f"graph ids are 1-based, got {gid}")
        node_graph[n_total] = gid - 1
        n_total += 1
    node_graph = node_graph[:n_total]
    if n_total == 0:
        raise DatasetFormatError(ind_path, 1, "empty graph indicator")
    num_graphs = int(node_graph.max()) + 1

    # Local node index within each graph, in node-id order.
    local_index = np.empty(n_total, dtype=np.int64)
    sizes = np.zeros(num_graphs, dtype=np.int64)
    for i, g in enumerate(node_graph):
        local_index[i] = sizes[g]
        sizes[g] += 1
    if (sizes == 0).any():
        empty = int(np.flatnonzero(sizes == 0)[0]) + 1
        raise DatasetFormatError(ind_path, 1, f"graph {empty} has no nodes")

    edges_per_graph = [[] for _ in range(num_graphs)]
    edge_lines, a_path = _read_lines(directory, name, "A", required=True)
    for lineno, line in enumerate(edge_lines, start=1):
        if not line:
            continue
        parts = line.replace(" ", "").split(",")
        if len(parts) != 2:
            raise DatasetFormatError(a_path, lineno, f"expected 'i, j', got {line!r}")
        u = _parse_int(parts[0], a_path, lineno, "node index")
        v = _parse_int(parts[1], a_path, lineno, "node index")
        if not (1 <= u <= n_total) or not (1 <= v <= n_total):
            raise DatasetFormatError(a_path, lineno, f"node index out of range: {line!r}")
        gu, gv = node_graph[u - 1], node_graph[v - 1]
        if gu != gv:
            raise DatasetFormatError(a_path, lineno, f"edge spans two graphs: {line!r}")
        edges_per_graph[gu].append((local_index[u - 1], local_index[v - 1]))

    label_lines, gl_path = _read_lines(directory, name, "graph_labels", required=True)
    raw_labels = []
    for lineno, line in enumerate(label_lines, start=1):
        if not line:
            continue
        raw_labels.append(_parse_int(line, gl_path, lineno, "graph label"))
    if len(raw_labels) != num_graphs:
        raise DatasetFormatError(gl_path, len(raw_labels) + 1, f"expected {num_graphs} graph labels, got {len(raw_labels)}")
    raw_labels = np.array(raw_labels, dtype=np.int64)
    remap = {v: i for i, v in enumerate(sorted(set(raw_labels.tolist())))}
    class_labels = np.array([remap[v] for v in raw_labels.tolist()], dtype=np.int64)

    node_label_lines, nl_path = _read_lines(directory, name, "node_labels", required=False)
    node_labels = None
    if node_label_lines is not None:
        node_labels = np.empty(n_total, dtype=np.int64)
        count = 0
        for lineno, line in enumerate(node_label_lines, start=1):
            if not line:
                continue
            if count >= n_total:
                raise DatasetFormatError(nl_path, lineno, "more node labels than nodes")
            node_labels[count] = _parse_int(line, nl_path, lineno, "node label")
            count += 1
        if count != n_total:
            raise DatasetFormatError(nl_path, count + 1, f"expected {n_total} node labels, got {count}")

    graphs = []
    for g in range(num_graphs):
        n = int(sizes[g])
        edges = np.array(edges_per_graph[g], dtype=np.int64).reshape(-1, 2)
        if node_labels is not None:
            labels = node_labels[node_graph == g]
        else:
            labels = np.zeros(n, dtype=np.int64)
        graph = LabeledGraph(n, edges, labels)
        if node_labels is None:
            graph = LabeledGraph(n, edges, graph.degrees())
        graphs.append(graph)

    return GraphDataset(
        graphs=graphs,
        class_labels=class_labels,
        name=name,
        rng_seed=0,
        label_source="file" if node_labels is not None else "degree",
    )


def save_tu_dataset(dataset: GraphDataset, directory) -> None:
    """Write a dataset in the TU text format (both edge directions, 1-based)."""
    os.makedirs(directory, exist_ok=True)
    name = dataset.name
    offsets = np.cumsum([0] + [g.num_nodes for g in dataset.graphs])

    with open(os.path.join(directory, f"{name}_A.txt"), "w") as fh:
        for gi, g in enumerate(dataset.graphs):
            base = offsets[gi] + 1
            directed = []
            for u, v in g.edges:
                directed.append((base + u, base + v))
                directed.append((base + v, base + u))
            for u, v in sorted(directed):
                fh.write(f"{u}, {v}\n")

    with open(os.path.join(directory, f"{name}_graph_indicator.txt"), "w") as fh:
        for gi, g in enumerate(dataset.graphs):
            fh.writelines(f"{gi + 1}\n" for _ in range(g.num_nodes))

    with open(os.path.join(directory, f"{name}_graph_labels.txt"), "w") as fh:
        fh.writelines(f"{int(c)}\n" for c in dataset.class_labels)

    with open(os.path.join(directory, f"{name}_node_labels.txt"), "w") as fh:
        for g in dataset.graphs:
            fh.writelines(f"{int(l)}\n" for l in g.node_labels)


def infer_tu_name(directory) -> str:
    """Dataset name from the unique ``*_A.txt`` file in ``directory``."""
    candidates = [f[:-6] for f in sorted(os.listdir(directory)) if f.endswith("_A.txt")]
    if len(candidates) != 1:
        raise DatasetLoadError(
            f"{directory}: expected exactly one *_A.txt file, found {len(candidates)}"
        )
    return candidates[0]


def generate_synthetic(count: int, seed: int) -> GraphDataset:
    """Generate the clique-vs-star benchmark.

    Each graph is Erdos-Renyi G(n, 0.1) with n uniform in [100, 200], plus ten
    planted nodes appended as the last ten indices: a 10-clique (class 0) or a
    10-star (class 1, first planted node is the center). Every
    (planted, original) node pair is connected independently with probability
    0.1. Classes alternate so the two classes have ``count/2`` graphs each.
    All node labels are 0. Deterministic for a fixed seed (PCG64).
    """
    if count < 2 or count % 2 != 0:
        raise ValueError("count must be even and >= 2")
    rng = np.random.default_rng(seed)
    graphs = []
    labels = np.empty(count, dtype=np.int64)
    for i in range(count):
        cls = i % 2
        n = int(rng.integers(100, 201))
        iu, iv = np.triu_indices(n, k=1)
        mask = rng.random(len(iu)) < 0.1
        er_edges = np.stack([iu[mask], iv[mask]], axis=1)

        planted = np.arange(n, n + 10)
        if cls == 0:
            pu, pv = np.triu_indices(10, k=1)
            planted_edges = np.stack([planted[pu], planted[pv]], axis=1)
        else:
            planted_edges = np.stack([np.full(9, planted[0]), planted[1:]], axis=1)

        au = np.repeat(planted, n)
        av = np.tile(np.arange(n), 10)
        amask = rng.random(10 * n) < 0.1
        attach_edges = np.stack([au[amask], av[amask]], axis=1)

        edges = np.concatenate([er_edges, planted_edges, attach_edges])
        graphs.append(LabeledGraph(n + 10, edges, np.zeros(n + 10, dtype=np.int64)))
        labels[i] = cls
    return GraphDataset(graphs, labels, name="SYNTHETIC", rng_seed=seed, label_source="uniform")
