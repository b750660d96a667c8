"""Nystrom factorization of the patch kernel matrix and test-time projection.

Fitting samples p landmark patches, eigendecomposes the landmark block
W = K[L, L] and maps every training patch to a row of Q = K[:, L] U L^{-1/2},
so that QQ^T approximates K (exactly at full rank). Unseen subgraphs are
projected onto the same coordinates through the pseudoinverse of Q applied to
their kernel values against all training patches.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .kernels import FeatureSpace, KernelSpec, WLRelabelTable, compute_feature_codes, feature_codes
from .serialize import load_arrays, save_arrays

EIG_FLOOR_REL = 1e-8  # eigenvalues <= floor * lambda_max are discarded
PINV_RCOND = 1e-10  # singular values <= rcond * sigma_max are zeroed
_EXACT_ERROR_MAX_P = 600
_ERROR_SAMPLE_ROWS = 256


class DegenerateKernelError(RuntimeError):
    """The landmark kernel block is numerically zero; no embedding exists."""


@dataclass(eq=False)
class PatchEmbedding:
    """Fitted Nystrom embedding of a training patch collection.

    ``q`` holds the normalized patches (one row each). ``eigen_basis`` and
    ``eigenvalues`` are the landmark-block eigendecomposition in descending
    order; directions past ``kept`` were below the eigenvalue floor and the
    corresponding Q columns are zero so that ``p`` stays shape-stable.
    """

    spec: KernelSpec
    p: int
    q: np.ndarray
    landmarks: np.ndarray
    eigenvalues: np.ndarray
    eigen_basis: np.ndarray
    kept: int
    train_codes: list
    space: FeatureSpace
    phi: sp.csr_matrix
    wl_table: WLRelabelTable | None
    approx_error: float
    approx_error_kind: str
    row_index: list
    _pinv: np.ndarray | None = field(default=None, repr=False)

    @property
    def num_patches(self) -> int:
        return self.q.shape[0]

    @property
    def pinv_q(self) -> np.ndarray:
        """p x P pseudoinverse of Q (materialized on first use)."""
        if self._pinv is None:
            self._pinv = np.linalg.pinv(self.q, rcond=PINV_RCOND)
        return self._pinv

    def kernel_vector_rows(self, code_lists) -> np.ndarray:
        """Kernel values of the given (packed) feature maps against every
        training patch: one row per input map."""
        test_phi = self.space.matrix(code_lists)
        return (test_phi @ self.phi.T).toarray().astype(np.float64)

    def project_kernel_vectors(self, v: np.ndarray, mode: str = "pinv") -> np.ndarray:
        """Map kernel-value rows v (n x P) to embedding coordinates (n x p)."""
        v = np.atleast_2d(np.asarray(v, dtype=np.float64))
        if v.shape[1] != self.num_patches:
            raise ValueError(f"expected kernel vectors of length {self.num_patches}")
        if mode == "pinv":
            return v @ self.pinv_q.T
        if mode == "landmark":
            k = self.kept
            basis = self.eigen_basis[:, :k] / np.sqrt(self.eigenvalues[:k])
            out = np.zeros((v.shape[0], self.p))
            out[:, :k] = v[:, self.landmarks] @ basis
            return out
        raise ValueError(f"unknown projection mode {mode!r}")


def nystrom_fit(
    patches,
    spec: KernelSpec,
    p: int,
    seed: int,
    threads: int = 1,
    index=None,
    precomputed=None,
) -> PatchEmbedding:
    """Fit a Nystrom embedding on a training patch collection.

    Landmarks are sampled uniformly without replacement (seeded). Eigenvalues
    of the landmark block at or below ``EIG_FLOOR_REL * lambda_max`` are
    discarded and their Q columns zero-padded. The relative Frobenius error of
    QQ^T against K is computed exactly for small collections and estimated on
    a seeded row sample otherwise.

    ``precomputed`` optionally supplies (code_lists, space, wl_table) so the
    caller can reuse cached feature maps; values are identical either way.
    """
    P = len(patches) if patches is not None else len(precomputed[0])
    if P == 0:
        raise ValueError("patch collection must be non-empty")
    if not 1 <= p <= P:
        raise ValueError(f"p must be in [1, {P}], got {p}")

    if precomputed is not None:
        code_lists, space, wl_table = precomputed
        if space is None:
            space = FeatureSpace.from_code_lists(code_lists)
    else:
        wl_table = WLRelabelTable() if spec.kind == "weisfeiler_lehman" else None
        code_lists = compute_feature_codes(spec, patches, wl_table, threads)
        space = FeatureSpace.from_code_lists(code_lists)
    phi = space.matrix(code_lists)

    rng = np.random.default_rng(seed)
    landmarks = np.sort(rng.choice(P, size=p, replace=False))

    c = (phi @ phi[landmarks].T).toarray().astype(np.float64)
    w = c[landmarks]
    w = (w + w.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(w)
    eigvals, eigvecs = eigvals[::-1], eigvecs[:, ::-1]
    lam_max = eigvals[0]
    if lam_max <= 0.0:
        raise DegenerateKernelError(
            "landmark kernel block is numerically zero (all eigenvalues discarded)"
        )
    kept = int((eigvals > EIG_FLOOR_REL * lam_max).sum())
    if kept == 0:
        raise DegenerateKernelError("all eigenvalues fell below the floor")

    q = np.zeros((P, p))
    q[:, :kept] = c @ (eigvecs[:, :kept] / np.sqrt(eigvals[:kept]))

    if P <= _EXACT_ERROR_MAX_P:
        k_full = (phi @ phi.T).toarray().astype(np.float64)
        err = np.linalg.norm(q @ q.T - k_full) / max(np.linalg.norm(k_full), 1e-300)
        err_kind = "exact"
    else:
        probe_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        rows = np.sort(probe_rng.choice(P, size=min(_ERROR_SAMPLE_ROWS, P), replace=False))
        k_rows = (phi[rows] @ phi.T).toarray().astype(np.float64)
        approx_rows = q[rows] @ q.T
        err = np.linalg.norm(approx_rows - k_rows) / max(np.linalg.norm(k_rows), 1e-300)
        err_kind = "sampled"

    if index is None:
        index = [(-1, r) for r in range(P)]
    return PatchEmbedding(
        spec=spec,
        p=p,
        q=q,
        landmarks=landmarks.astype(np.int64),
        eigenvalues=eigvals,
        eigen_basis=eigvecs,
        kept=kept,
        train_codes=code_lists,
        space=space,
        phi=phi,
        wl_table=wl_table,
        approx_error=float(err),
        approx_error_kind=err_kind,
        row_index=list(index),
    )


def project(emb: PatchEmbedding, s, mode: str = "pinv") -> np.ndarray:
    """Embedding coordinates of an unseen subgraph: z = Q^+ v with v the
    kernel values of ``s`` against all training patches (an all-zero v yields
    the zero vector)."""
    codes = feature_codes(emb.spec, s, emb.wl_table)
    v = emb.kernel_vector_rows([codes])
    return emb.project_kernel_vectors(v, mode=mode)[0]


def embed_dataset(patch_lists, embeddings, training_rows=None, mode: str = "pinv"):
    """Per-graph stacks of C x p patch vectors, one channel per embedding.

    For training graphs pass ``training_rows`` (per-graph row indices into Q);
    test graphs are projected. Returns (list of (P_i, C, p) arrays, P_max).
    """
    if not embeddings:
        raise ValueError("at least one channel embedding required")
    p = embeddings[0].p
    P = embeddings[0].num_patches
    for emb in embeddings[1:]:
        if emb.p != p or emb.num_patches != P:
            raise ValueError("channel embeddings disagree on patch set or p")

    counts = [len(patches) for patches in patch_lists]
    if any(c == 0 for c in counts):
        raise ValueError("every graph must contribute at least one patch")

    if training_rows is not None:
        if len(training_rows) != len(patch_lists):
            raise ValueError("training_rows must align with patch_lists")
        per_channel = [
            [emb.q[np.asarray(rows, dtype=np.int64)] for rows in training_rows]
            for emb in embeddings
        ]
    else:
        flat = [g for patches in patch_lists for g in patches]
        boundaries = np.cumsum([0] + counts)
        per_channel = []
        for emb in embeddings:
            table = emb.wl_table
            code_lists = [feature_codes(emb.spec, g, table) for g in flat]
            z = emb.project_kernel_vectors(emb.kernel_vector_rows(code_lists), mode=mode)
            per_channel.append([z[boundaries[i] : boundaries[i + 1]] for i in range(len(patch_lists))])

    stacked = [
        np.stack([per_channel[c][i] for c in range(len(embeddings))], axis=1)
        for i in range(len(patch_lists))
    ]
    return stacked, max(counts)


def save_embedding(emb: PatchEmbedding, path) -> None:
    """Persist an embedding (Q, landmarks, eigen data, training feature maps
    and, for WL, the relabel table) to a deterministic binary file."""
    codes_flat = np.concatenate([c for c, _ in emb.train_codes]) if emb.train_codes else np.empty(0, np.int64)
    counts_flat = np.concatenate([n for _, n in emb.train_codes]) if emb.train_codes else np.empty(0, np.int64)
    indptr = np.cumsum([0] + [len(c) for c, _ in emb.train_codes]).astype(np.int64)
    arrays = {
        "q": emb.q,
        "landmarks": emb.landmarks,
        "eigenvalues": emb.eigenvalues,
        "eigen_basis": emb.eigen_basis,
        "space_codes": emb.space.codes,
        "codes_flat": codes_flat.astype(np.int64),
        "counts_flat": counts_flat.astype(np.int64),
        "codes_indptr": indptr,
        "row_index": np.array(emb.row_index, dtype=np.int64).reshape(-1, 2),
    }
    if emb.wl_table is not None:
        arrays.update(emb.wl_table.export_arrays())
    meta = {
        "format": "kcnn-embedding-v1",
        "kind": emb.spec.kind,
        "wl_iterations": emb.spec.wl_iterations,
        "p": emb.p,
        "num_patches": emb.num_patches,
        "kept": emb.kept,
        "approx_error": emb.approx_error,
        "approx_error_kind": emb.approx_error_kind,
    }
    save_arrays(path, arrays, meta)


def load_embedding(path) -> PatchEmbedding:
    arrays, meta = load_arrays(path)
    if meta.get("format") != "kcnn-embedding-v1":
        raise ValueError(f"{path}: not an embedding file")
    spec = KernelSpec(meta["kind"], meta["wl_iterations"])
    indptr = arrays["codes_indptr"]
    code_lists = [
        (arrays["codes_flat"][indptr[i] : indptr[i + 1]], arrays["counts_flat"][indptr[i] : indptr[i + 1]])
        for i in range(len(indptr) - 1)
    ]
    space = FeatureSpace(arrays["space_codes"])
    wl_table = WLRelabelTable.from_arrays(arrays) if "wl_table_kinds" in arrays else None
    return PatchEmbedding(
        spec=spec,
        p=meta["p"],
        q=arrays["q"],
        landmarks=arrays["landmarks"],
        eigenvalues=arrays["eigenvalues"],
        eigen_basis=arrays["eigen_basis"],
        kept=meta["kept"],
        train_codes=code_lists,
        space=space,
        phi=space.matrix(code_lists),
        wl_table=wl_table,
        approx_error=meta["approx_error"],
        approx_error_kind=meta["approx_error_kind"],
        row_index=[tuple(r) for r in arrays["row_index"].tolist()],
    )
