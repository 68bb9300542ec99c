"""Signed bipartite graph data model, TSV ingestion and adjacency construction.

Gene and phenotype nodes live in one global index space, genes first.  Graphs
are immutable values: every perturbation or subsetting operation returns a new
graph over the same (or a restated) node universe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    ConflictingSignError,
    GraphFormatError,
    IsolatedNodeError,
    NumericalError,
)

EDGE_HEADER = ("gene", "phenotype", "value")


class NodeKind(Enum):
    GENE = "gene"
    PHENOTYPE = "phenotype"


class SignRule(Enum):
    """How the `value` column of an edge list is interpreted."""

    SIGN_COLUMN = "sign"  # value must be +1 / -1, weight 1.0
    ZSCORE_SIGN = "zscore"  # sign(value), weight 1.0; value 0 rejected
    SIGNED_WEIGHT = "weighted"  # sign(value), weight |value|; used for diffusion graphs


@dataclass(frozen=True)
class NodeId:
    index: int
    kind: NodeKind
    label: str

    def __post_init__(self):
        if self.index < 0:
            raise GraphFormatError(f"node index must be non-negative, got {self.index}")
        if not self.label:
            raise GraphFormatError("node label must be non-empty")


@dataclass(frozen=True)
class SignedEdge:
    gene: NodeId
    phenotype: NodeId
    sign: int
    weight: float = 1.0

    def __post_init__(self):
        if self.gene.kind is not NodeKind.GENE or self.phenotype.kind is not NodeKind.PHENOTYPE:
            raise GraphFormatError(
                f"edge endpoints must be (gene, phenotype), got "
                f"({self.gene.kind.value}, {self.phenotype.kind.value})"
            )
        if self.sign not in (-1, 1):
            raise GraphFormatError(f"edge sign must be +1 or -1, got {self.sign}")
        if not (math.isfinite(self.weight) and self.weight > 0):
            raise GraphFormatError(f"edge weight must be finite and > 0, got {self.weight}")


@dataclass(frozen=True)
class SignedBipartiteGraph:
    genes: tuple
    phenotypes: tuple
    edges: tuple

    def __post_init__(self):
        for kind, nodes in ((NodeKind.GENE, self.genes), (NodeKind.PHENOTYPE, self.phenotypes)):
            labels = [n.label for n in nodes]
            if len(set(labels)) != len(labels):
                raise GraphFormatError(f"duplicate {kind.value} labels")
            for i, node in enumerate(nodes):
                if node.index != i or node.kind is not kind:
                    raise GraphFormatError(f"{kind.value} node {node.label} is mis-indexed")
        seen = set()
        for e in self.edges:
            if e.gene.index >= len(self.genes) or self.genes[e.gene.index] != e.gene:
                raise GraphFormatError(f"edge references unknown gene {e.gene.label}")
            if e.phenotype.index >= len(self.phenotypes) or self.phenotypes[e.phenotype.index] != e.phenotype:
                raise GraphFormatError(f"edge references unknown phenotype {e.phenotype.label}")
            key = (e.gene.index, e.phenotype.index)
            if key in seen:
                raise GraphFormatError(
                    f"duplicate edge ({e.gene.label}, {e.phenotype.label})"
                )
            seen.add(key)

    # -- basic shape ---------------------------------------------------------

    @property
    def num_genes(self):
        return len(self.genes)

    @property
    def num_phenotypes(self):
        return len(self.phenotypes)

    @property
    def num_nodes(self):
        return len(self.genes) + len(self.phenotypes)

    @property
    def num_edges(self):
        return len(self.edges)

    @cached_property
    def gene_labels(self):
        return tuple(n.label for n in self.genes)

    @cached_property
    def phenotype_labels(self):
        return tuple(n.label for n in self.phenotypes)

    @cached_property
    def edge_arrays(self):
        """Return (gene_idx, phen_idx, signs, weights) as parallel numpy arrays."""
        if not self.edges:
            z = np.zeros(0, dtype=np.int64)
            return z, z.copy(), z.copy(), np.zeros(0, dtype=np.float64)
        gi = np.array([e.gene.index for e in self.edges], dtype=np.int64)
        pi = np.array([e.phenotype.index for e in self.edges], dtype=np.int64)
        sg = np.array([e.sign for e in self.edges], dtype=np.int64)
        wt = np.array([e.weight for e in self.edges], dtype=np.float64)
        return gi, pi, sg, wt

    @cached_property
    def twas_gene_mask(self):
        """Boolean vector over genes: True iff the gene has at least one edge."""
        mask = np.zeros(self.num_genes, dtype=bool)
        gi = self.edge_arrays[0]
        mask[gi] = True
        return mask

    def positive_edge_count(self):
        return int(np.count_nonzero(self.edge_arrays[2] > 0))

    def negative_edge_count(self):
        return int(np.count_nonzero(self.edge_arrays[2] < 0))

    def edge_pairs(self):
        """Set of (gene_index, phenotype_index) pairs."""
        gi, pi, _, _ = self.edge_arrays
        return set(zip(gi.tolist(), pi.tolist()))

    def same_node_universe(self, other):
        return (
            self.gene_labels == other.gene_labels
            and self.phenotype_labels == other.phenotype_labels
        )

    # -- derivation ----------------------------------------------------------

    def with_edges(self, gene_idx, phen_idx, signs, weights=None):
        """New graph over the same node universe with the given edge arrays."""
        gene_idx = np.asarray(gene_idx, dtype=np.int64)
        phen_idx = np.asarray(phen_idx, dtype=np.int64)
        signs = np.asarray(signs, dtype=np.int64)
        if weights is None:
            weights = np.ones(len(gene_idx), dtype=np.float64)
        weights = np.asarray(weights, dtype=np.float64)
        order = np.lexsort((phen_idx, gene_idx))
        edges = tuple(
            SignedEdge(self.genes[int(gene_idx[k])], self.phenotypes[int(phen_idx[k])],
                       int(signs[k]), float(weights[k]))
            for k in order
        )
        return SignedBipartiteGraph(self.genes, self.phenotypes, edges)

    @staticmethod
    def build(gene_labels, phenotype_labels, edge_rows):
        """Construct a graph from label lists and (gene, phenotype, sign, weight) rows."""
        genes = tuple(NodeId(i, NodeKind.GENE, str(lab)) for i, lab in enumerate(gene_labels))
        phens = tuple(NodeId(j, NodeKind.PHENOTYPE, str(lab)) for j, lab in enumerate(phenotype_labels))
        gpos = {n.label: n for n in genes}
        ppos = {n.label: n for n in phens}
        rows = []
        for row in edge_rows:
            g, p, s = row[0], row[1], int(row[2])
            w = float(row[3]) if len(row) > 3 else 1.0
            rows.append(SignedEdge(gpos[str(g)], ppos[str(p)], s, w))
        rows.sort(key=lambda e: (e.gene.index, e.phenotype.index))
        return SignedBipartiteGraph(genes, phens, tuple(rows))


# -- file ingestion ------------------------------------------------------------


def _parse_sign(raw, rule, line):
    try:
        value = float(raw)
    except ValueError:
        raise GraphFormatError(f"value column {raw!r} is not numeric", line=line) from None
    if not math.isfinite(value):
        raise GraphFormatError(f"value column must be finite, got {raw!r}", line=line)
    if rule is SignRule.SIGN_COLUMN:
        if value not in (1.0, -1.0):
            raise GraphFormatError(
                f"value column must be +1 or -1 under sign rule, got {raw!r}", line=line
            )
        return int(value), 1.0
    if value == 0.0:
        raise GraphFormatError("zero value cannot be assigned a sign; row rejected", line=line)
    if rule is SignRule.ZSCORE_SIGN:
        return (1 if value > 0 else -1), 1.0
    return (1 if value > 0 else -1), abs(value)


def load_edge_list(path, sign_rule=SignRule.SIGN_COLUMN):
    """Load a signed edge list from a `gene<TAB>phenotype<TAB>value` TSV.

    Node indexing is label-sorted, so the resulting graph is invariant under
    row permutation of the input file.  Duplicate rows for the same pair are
    collapsed; the same pair with opposite signs is an error.
    """
    path = Path(path)
    pair_sign = {}
    pair_weight = {}
    pair_line = {}
    header_seen = False
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if not header_seen:
                if tuple(c.strip().lower() for c in cols[:3]) != EDGE_HEADER:
                    raise GraphFormatError(
                        f"expected header {'<TAB>'.join(EDGE_HEADER)!r}, got {line!r}",
                        line=lineno,
                    )
                header_seen = True
                continue
            if len(cols) < 3:
                raise GraphFormatError(
                    f"expected at least 3 tab-separated columns, got {len(cols)}", line=lineno
                )
            gene, phen = cols[0].strip(), cols[1].strip()
            if not gene or not phen:
                raise GraphFormatError("empty gene or phenotype label", line=lineno)
            sign, weight = _parse_sign(cols[2].strip(), sign_rule, lineno)
            key = (gene, phen)
            if key in pair_sign and pair_sign[key] != sign:
                raise ConflictingSignError(
                    f"pair ({gene}, {phen}) appears with conflicting signs "
                    f"(lines {pair_line[key]} and {lineno})"
                )
            pair_sign[key] = sign
            pair_weight[key] = weight
            pair_line.setdefault(key, lineno)
    if not header_seen:
        raise GraphFormatError(f"{path}: no header row found")
    gene_labels = sorted({g for g, _ in pair_sign})
    phen_labels = sorted({p for _, p in pair_sign})
    rows = [(g, p, pair_sign[(g, p)], pair_weight[(g, p)]) for (g, p) in pair_sign]
    return SignedBipartiteGraph.build(gene_labels, phen_labels, rows)


def save_edge_list(graph, path):
    """Write the graph as an edge-list TSV, rows ordered by (gene, phenotype) index.

    The value column is sign * weight with full float precision, so a
    save/load round trip under SIGNED_WEIGHT reproduces edges bit-exactly.
    """
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("\t".join(EDGE_HEADER) + "\n")
        for e in graph.edges:  # already sorted by construction
            fh.write(f"{e.gene.label}\t{e.phenotype.label}\t{repr(e.sign * e.weight)}\n")
    return path


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense per-gene feature rows aligned with a graph's gene indexing."""

    labels: tuple
    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[0] != len(self.labels):
            raise GraphFormatError(
                f"feature matrix shape {self.values.shape} does not match "
                f"{len(self.labels)} labels"
            )
        if not np.all(np.isfinite(self.values)):
            raise NumericalError("feature matrix contains non-finite values")

    @property
    def dim(self):
        return self.values.shape[1]


def load_feature_table(path):
    """Read a `label<TAB>float...` table; returns (labels, n x f float64 array)."""
    path = Path(path)
    labels, rows = [], []
    width = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) < 2:
                raise GraphFormatError("feature row needs a label and at least one value", line=lineno)
            try:
                vals = [float(c) for c in cols[1:]]
            except ValueError:
                raise GraphFormatError(f"non-numeric feature value in row {cols[0]!r}", line=lineno) from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise GraphFormatError(
                    f"inconsistent feature width: expected {width}, got {len(vals)}", line=lineno
                )
            labels.append(cols[0].strip())
            rows.append(vals)
    if not rows:
        raise GraphFormatError(f"{path}: no feature rows found")
    if len(set(labels)) != len(labels):
        raise GraphFormatError(f"{path}: duplicate feature row labels")
    return labels, np.asarray(rows, dtype=np.float64)


def load_feature_matrix(path, graph, self_similarity=False):
    """Load gene features and reorder rows to the graph's gene indexing.

    Rows for genes absent from the graph are dropped (they belong to the
    transfer head's input, not to the encoder).  With self_similarity=True the
    raw table must be square (a gene-by-gene similarity matrix).
    """
    labels, values = load_feature_table(path)
    if self_similarity and values.shape[0] != values.shape[1]:
        raise GraphFormatError(
            f"similarity matrix must be square, got {values.shape[0]}x{values.shape[1]}"
        )
    pos = {lab: i for i, lab in enumerate(labels)}
    missing = [lab for lab in graph.gene_labels if lab not in pos]
    if missing:
        raise GraphFormatError(
            f"feature file is missing rows for {len(missing)} gene(s): "
            + ", ".join(missing[:10])
            + ("..." if len(missing) > 10 else "")
        )
    order = [pos[lab] for lab in graph.gene_labels]
    return FeatureMatrix(graph.gene_labels, values[order])


# -- matrix views --------------------------------------------------------------


def adjacency(graph):
    """Signed symmetric adjacency over genes (+) phenotypes, entry = sign * weight."""
    n, m = graph.num_genes, graph.num_phenotypes
    a = np.zeros((n + m, n + m), dtype=np.float64)
    gi, pi, sg, wt = graph.edge_arrays
    vals = sg * wt
    a[gi, n + pi] = vals
    a[n + pi, gi] = vals
    return a


def semi_row_normalize(a, dangling="error"):
    """Split the degree-normalized matrix D^-1 A into positive/negative parts.

    D_ii = sum_j |A|_ij.  Returns (a_plus, a_minus), both non-negative with
    disjoint supports and a_plus - a_minus = D^-1 A.  Rows with zero degree
    either raise (dangling="error") or stay all-zero (dangling="keep").
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NumericalError(f"adjacency must be square, got shape {a.shape}")
    deg = np.abs(a).sum(axis=1)
    zero_rows = np.flatnonzero(deg == 0)
    if zero_rows.size and dangling == "error":
        raise IsolatedNodeError(
            f"node index {int(zero_rows[0])} has degree 0 "
            f"({zero_rows.size} isolated node(s) total)"
        )
    safe = np.where(deg == 0, 1.0, deg)
    norm = a / safe[:, None]
    return np.maximum(norm, 0.0), np.maximum(-norm, 0.0)


def dangling_nodes(graph):
    """Indices (global) of nodes with no incident edges."""
    a = adjacency(graph)
    return np.flatnonzero(np.abs(a).sum(axis=1) == 0)
