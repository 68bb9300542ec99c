"""Node feature assembly for the encoder.

Gene features come from a similarity/feature table; phenotype nodes (which
have no measured features) get one-hot codes.  Both blocks are mapped into a
common input width: identity-padded when narrow enough, otherwise pushed
through a seeded random orthonormal projection, which approximately preserves
pairwise geometry and is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import check_finite_array


@dataclass(frozen=True)
class NodeFeatures:
    """Assembled (num_nodes x input_dim) features plus the gene-row projection."""

    values: np.ndarray
    gene_projection: np.ndarray  # raw gene feature dim x input_dim

    @property
    def input_dim(self):
        return self.values.shape[1]


def projection_matrix(dim_in, dim_out, seed_sequence):
    """dim_in x dim_out map: identity-pad if dim_in <= dim_out, else random orthonormal columns."""
    if dim_in <= dim_out:
        return np.eye(dim_in, dim_out, dtype=np.float64)
    rng = np.random.default_rng(seed_sequence)
    gauss = rng.standard_normal((dim_in, dim_out))
    q, _ = np.linalg.qr(gauss)
    return q


def build_node_features(graph, feature_matrix=None, input_dim=64, rng_seed=0):
    """Assemble encoder-ready features for all nodes of a graph.

    Genes use `feature_matrix` rows (or one-hot codes when none is supplied);
    phenotypes always use one-hot codes.  Both are brought to `input_dim`.
    """
    n, m = graph.num_genes, graph.num_phenotypes
    if feature_matrix is not None:
        if tuple(feature_matrix.labels) != graph.gene_labels:
            raise ValueError("feature matrix rows are not aligned with the graph's genes")
        raw = check_finite_array(feature_matrix.values, "gene features")
    else:
        raw = np.eye(n, dtype=np.float64)
    gene_ss, phen_ss = np.random.SeedSequence(rng_seed).spawn(2)
    gene_proj = projection_matrix(raw.shape[1], input_dim, gene_ss)
    phen_proj = projection_matrix(m, input_dim, phen_ss)
    values = np.vstack([raw @ gene_proj, np.eye(m, dtype=np.float64) @ phen_proj])
    return NodeFeatures(values=values, gene_projection=gene_proj)


def project_gene_rows(raw_rows, gene_projection):
    """Map raw gene feature rows through the projection fitted at training time."""
    raw = check_finite_array(raw_rows, "gene features")
    if raw.ndim == 1:
        raw = raw[None, :]
    if raw.shape[1] != gene_projection.shape[0]:
        raise ValueError(
            f"gene feature width {raw.shape[1]} does not match the fitted "
            f"projection input width {gene_projection.shape[0]}"
        )
    return raw @ gene_projection
