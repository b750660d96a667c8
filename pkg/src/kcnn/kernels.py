"""Explicit feature maps for the shortest-path and Weisfeiler-Lehman subtree
kernels, plus Gram-matrix assembly over patch sets.

Both kernels are computed as sparse histograms ("feature maps") so that a
P x P Gram matrix costs one pass over the patches plus a sparse matrix
product, instead of P^2 pairwise comparisons. Internally every feature key is
packed into a single int64 code; the dict-of-tuples view is derived from the
codes on demand.
"""

import threading
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import shortest_path

from .graphs import LabeledGraph
from .parallel import parallel_map

KERNEL_KINDS = ("shortest_path", "weisfeiler_lehman")

# Bit layout of packed feature codes. SP keys are (label_min, label_max,
# distance) with each component below 2^20; WL keys are (iteration, label id).
_SP_BITS = 20
_WL_ITER_SHIFT = 48


@dataclass(frozen=True)
class KernelSpec:
    """Which graph kernel to use; ``wl_iterations`` is the WL depth h."""

    kind: str
    wl_iterations: int = 0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {KERNEL_KINDS}")
        if self.kind == "weisfeiler_lehman" and self.wl_iterations < 0:
            raise ValueError("wl_iterations must be >= 0")

    @property
    def short_name(self) -> str:
        return "sp" if self.kind == "shortest_path" else f"wl{self.wl_iterations}"


@dataclass
class FeatureMap:
    """Sparse histogram over kernel-specific feature keys (no zero counts)."""

    counts: dict

    def dot(self, other: "FeatureMap") -> int:
        a, b = self.counts, other.counts
        if len(b) < len(a):
            a, b = b, a
        return sum(c * b[k] for k, c in a.items() if k in b)

    def total(self) -> int:
        return sum(self.counts.values())


class WLRelabelTable:
    """Shared injective compression table for WL relabeling.

    Maps base labels and (label, sorted neighbor-label multiset) keys to fresh
    integer ids. Get-or-insert is lock-protected so concurrent feature-map
    computation always resolves a key to the same id within one table; Gram
    values are independent of insertion order because the mapping is
    injective.
    """

    def __init__(self):
        self._base = {}
        self._refine = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._base) + len(self._refine)

    def intern_base(self, label: int) -> int:
        with self._lock:
            out = self._base.get(label)
            if out is None:
                out = len(self._base) + len(self._refine)
                self._base[label] = out
            return out

    def intern(self, label_id: int, neighbor_ids: tuple) -> int:
        key = (label_id, neighbor_ids)
        with self._lock:
            out = self._refine.get(key)
            if out is None:
                out = len(self._base) + len(self._refine)
                self._refine[key] = out
            return out

    def export_arrays(self) -> dict:
        """Flat-array encoding used by the embedding persistence format."""
        size = len(self)
        kinds = np.zeros(size, dtype=np.uint8)
        payload = []
        offsets = np.zeros(size + 1, dtype=np.int64)
        items = [None] * size
        for label, idx in self._base.items():
            items[idx] = (0, (int(label),))
        for (lab, nbrs), idx in self._refine.items():
            items[idx] = (1, (int(lab), *map(int, nbrs)))
        for idx, (kind, vals) in enumerate(items):
            kinds[idx] = kind
            payload.extend(vals)
            offsets[idx + 1] = len(payload)
        return {
            "wl_table_kinds": kinds,
            "wl_table_offsets": offsets,
            "wl_table_payload": np.array(payload, dtype=np.int64),
        }

    @classmethod
    def from_arrays(cls, arrays: dict) -> "WLRelabelTable":
        table = cls()
        kinds = arrays["wl_table_kinds"]
        offsets = arrays["wl_table_offsets"]
        payload = arrays["wl_table_payload"]
        for idx in range(len(kinds)):
            vals = payload[offsets[idx] : offsets[idx + 1]]
            if kinds[idx] == 0:
                table._base[int(vals[0])] = idx
            else:
                table._refine[(int(vals[0]), tuple(int(v) for v in vals[1:]))] = idx
        return table


def _pack_sp(lmin, lmax, dist):
    return (lmin.astype(np.int64) << (2 * _SP_BITS)) | (lmax.astype(np.int64) << _SP_BITS) | dist.astype(np.int64)


def _unpack_sp(code: int) -> tuple:
    mask = (1 << _SP_BITS) - 1
    return (int(code) >> (2 * _SP_BITS)) & mask, (int(code) >> _SP_BITS) & mask, int(code) & mask


def _unpack_wl(code: int) -> tuple:
    return int(code) >> _WL_ITER_SHIFT, int(code) & ((1 << _WL_ITER_SHIFT) - 1)


def unpack_code(spec: KernelSpec, code: int) -> tuple:
    return _unpack_sp(code) if spec.kind == "shortest_path" else _unpack_wl(code)


def sp_feature_codes(g: LabeledGraph):
    """Packed-code histogram of the SP kernel features of ``g``.

    One count per unordered vertex pair in the same connected component, keyed
    by (sorted endpoint labels, BFS distance). Returns sorted unique codes and
    their counts.
    """
    n = g.num_nodes
    if n < 2:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    labels = g.node_labels
    if labels.max(initial=0) >= (1 << _SP_BITS) or labels.min(initial=0) < 0:
        raise ValueError(f"node labels must be in [0, 2^{_SP_BITS}) for the SP kernel")
    if g.num_edges:
        row = np.concatenate([g.edges[:, 0], g.edges[:, 1]])
        col = np.concatenate([g.edges[:, 1], g.edges[:, 0]])
        adj = sp.csr_matrix((np.ones(len(row)), (row, col)), shape=(n, n))
        dist = shortest_path(adj, method="D", directed=False, unweighted=True)
    else:
        dist = np.full((n, n), np.inf)
        np.fill_diagonal(dist, 0.0)
    iu, iv = np.triu_indices(n, k=1)
    d = dist[iu, iv]
    reachable = np.isfinite(d)
    if not reachable.any():
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    lu = labels[iu[reachable]]
    lv = labels[iv[reachable]]
    codes = _pack_sp(np.minimum(lu, lv), np.maximum(lu, lv), d[reachable].astype(np.int64))
    return np.unique(codes, return_counts=True)


def wl_feature_codes(g: LabeledGraph, h: int, table: WLRelabelTable):
    """Packed-code histogram of WL subtree features across iterations 0..h.

    Iteration 0 is the histogram of (interned) original labels; iteration t
    replaces every label with the table id of (label, sorted neighbor labels)
    and contributes the new histogram. Keys are namespaced by iteration.
    """
    if h < 0:
        raise ValueError("h must be >= 0")
    ids = [table.intern_base(int(l)) for l in g.node_labels]
    all_codes = [np.array(ids, dtype=np.int64)]
    if h > 0:
        nbrs = g.adjacency()
        for t in range(1, h + 1):
            ids = [
                table.intern(ids[v], tuple(sorted(ids[u] for u in nbrs[v])))
                for v in range(g.num_nodes)
            ]
            all_codes.append((np.int64(t) << _WL_ITER_SHIFT) | np.array(ids, dtype=np.int64))
    return np.unique(np.concatenate(all_codes), return_counts=True)


def _map_from_codes(spec: KernelSpec, codes, counts) -> FeatureMap:
    return FeatureMap({unpack_code(spec, c): int(n) for c, n in zip(codes, counts)})


def sp_feature_map(g: LabeledGraph) -> FeatureMap:
    """SP feature map with (label_min, label_max, distance) keys."""
    spec = KernelSpec("shortest_path")
    return _map_from_codes(spec, *sp_feature_codes(g))


def wl_feature_map(g: LabeledGraph, h: int, relabel_table: WLRelabelTable) -> FeatureMap:
    """WL feature map with (iteration, compressed label id) keys; the table
    must be shared by every graph in one Gram computation."""
    spec = KernelSpec("weisfeiler_lehman", h)
    return _map_from_codes(spec, *wl_feature_codes(g, h, relabel_table))


def feature_codes(spec: KernelSpec, g: LabeledGraph, table: WLRelabelTable | None = None):
    if spec.kind == "shortest_path":
        return sp_feature_codes(g)
    return wl_feature_codes(g, spec.wl_iterations, table)


def compute_feature_codes(spec, patches, table=None, threads: int = 1) -> list:
    """Packed-code histograms for a patch list.

    SP maps are independent and run on the worker pool; WL maps run
    sequentially so table ids are reproducible byte-for-byte across runs.
    """
    if spec.kind == "shortest_path":
        return parallel_map(sp_feature_codes, patches, threads)
    if table is None:
        raise ValueError("WL feature maps need a shared relabel table")
    return [wl_feature_codes(g, spec.wl_iterations, table) for g in patches]


def kernel_value(spec: KernelSpec, a: FeatureMap, b: FeatureMap) -> int:
    """Sparse dot product of two feature maps (both built under ``spec``)."""
    return a.dot(b)


class FeatureSpace:
    """Column index over the packed feature codes seen in a patch collection."""

    def __init__(self, codes: np.ndarray):
        self.codes = np.asarray(codes, dtype=np.int64)

    @classmethod
    def from_code_lists(cls, code_lists) -> "FeatureSpace":
        if code_lists:
            all_codes = np.concatenate([c for c, _ in code_lists])
        else:
            all_codes = np.empty(0, dtype=np.int64)
        return cls(np.unique(all_codes))

    @property
    def dim(self) -> int:
        return len(self.codes)

    def matrix(self, code_lists) -> sp.csr_matrix:
        """CSR matrix (one row per patch). Codes outside the space are
        dropped; training spaces contain all their own codes by construction."""
        indptr = np.zeros(len(code_lists) + 1, dtype=np.int64)
        index_chunks = []
        data_chunks = []
        for i, (codes, counts) in enumerate(code_lists):
            pos = np.searchsorted(self.codes, codes)
            pos_clipped = np.minimum(pos, max(self.dim - 1, 0))
            known = (self.dim > 0) & (self.codes[pos_clipped] == codes)
            index_chunks.append(pos_clipped[known])
            data_chunks.append(counts[known])
            indptr[i + 1] = indptr[i] + int(known.sum())
        indices = np.concatenate(index_chunks) if index_chunks else np.empty(0, dtype=np.int64)
        data = np.concatenate(data_chunks) if data_chunks else np.empty(0, dtype=np.int64)
        return sp.csr_matrix((data.astype(np.float64), indices, indptr), shape=(len(code_lists), self.dim))


@dataclass
class GramMatrix:
    """Symmetric PSD kernel matrix over a patch set."""

    values: np.ndarray
    subgraph_index: list = field(default_factory=list)


def gram_matrix(spec: KernelSpec, patches, index=None, threads: int = 1) -> GramMatrix:
    """Gram matrix over ``patches`` with feature maps computed once per patch.

    ``index`` optionally maps each row to a (graph id, patch id) pair;
    defaults to (-1, row).
    """
    if not patches:
        raise ValueError("patches must be non-empty")
    table = WLRelabelTable() if spec.kind == "weisfeiler_lehman" else None
    code_lists = compute_feature_codes(spec, patches, table, threads)
    space = FeatureSpace.from_code_lists(code_lists)
    phi = space.matrix(code_lists)
    values = (phi @ phi.T).toarray()
    if index is None:
        index = [(-1, r) for r in range(len(patches))]
    return GramMatrix(values, list(index))


def save_gram(gram: GramMatrix, spec: KernelSpec, path) -> None:
    """Persist a Gram matrix (binary header + row-major float64) and write a
    sidecar CSV mapping rows to (graph, patch)."""
    from .serialize import save_arrays

    meta = {"P": len(gram.values), "kind": spec.kind, "h": spec.wl_iterations}
    save_arrays(path, {"values": gram.values.astype(np.float64)}, meta)
    with open(str(path) + ".index.csv", "w") as fh:
        fh.write("row,graph,patch\n")
        for r, (g, j) in enumerate(gram.subgraph_index):
            fh.write(f"{r},{g},{j}\n")


def load_gram(path) -> tuple:
    """Load a Gram matrix saved by :func:`save_gram`; returns (gram, spec)."""
    from .serialize import load_arrays

    arrays, meta = load_arrays(path)
    index = []
    with open(str(path) + ".index.csv") as fh:
        next(fh)
        for line in fh:
            _, g, j = line.strip().split(",")
            index.append((int(g), int(j)))
    return GramMatrix(arrays["values"], index), KernelSpec(meta["kind"], meta["h"])
